//! Critical values for the aggregation tests.
//!
//! Two routes are provided. The closed form gives one constant threshold for
//! every stage from the number of classes, the grid and a confidence level.
//! The Monte-Carlo route simulates pure-noise Bernoulli(1/2) labels on the
//! actual design, fixes the thresholds stage by stage so that a noise-only
//! replicate that survived the earlier stages is rejected at the current one
//! with probability at most `δ/K`, and then rescales them by a factor `c`
//! chosen by leave-one-out error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{MssaError, Result};
use crate::estimator::{phi, GridWeights, ScaleGrid, StackEstimator};
use crate::evaluation::{loo_estimates, report_from_predictions, EvalReport};
use crate::kernels::Kernel;
use crate::mssa::{aggregate_point, kl, predict_label, CriticalValues};
use crate::neighbors::NeighborIndex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub delta: f64,
    /// Monte-Carlo replicates of the noise-only label set.
    pub n_mc: usize,
    /// Candidate multipliers for the simulated thresholds.
    pub c_grid: Vec<f64>,
    pub seed: u64,
    /// Fewest surviving replicates from which a stage quantile is taken.
    pub min_survivors: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            n_mc: 1000,
            c_grid: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            seed: 0,
            min_survivors: 20,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if self.n_mc < 100 {
            return Err(MssaError::Config(format!(
                "n_mc must be at least 100, got {}",
                self.n_mc
            )));
        }
        if self.c_grid.is_empty() {
            return Err(MssaError::Config("c_grid is empty".into()));
        }
        if let Some(c) = self.c_grid.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(MssaError::Config(format!(
                "c_grid entries must be positive, got {c}"
            )));
        }
        if self.min_survivors == 0 {
            return Err(MssaError::Config("min_survivors must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(MssaError::domain(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok(())
}

/// `z_k = (8M²/u₀)·ln(12KM/δ)` at every stage, with `u₀` the grid's
/// effective ratio constant.
pub fn theoretical_critical_values(
    m_classes: usize,
    grid: &ScaleGrid,
    delta: f64,
) -> Result<CriticalValues> {
    check_delta(delta)?;
    if m_classes < 2 {
        return Err(MssaError::domain("need at least 2 classes"));
    }
    let m = m_classes as f64;
    let k = grid.len() as f64;
    let z = 8.0 * m * m / grid.u0_effective() * (12.0 * k * m / delta).ln();
    CriticalValues::constant(z, grid.len())
}

/// Coordinate-wise median of a row-major point set.
pub fn coordinate_median(features: &[f64], dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|j| {
            let mut col: Vec<f64> = features.iter().skip(j).step_by(dim).copied().collect();
            col.sort_by(f64::total_cmp);
            let n = col.len();
            if n % 2 == 1 {
                col[n / 2]
            } else {
                0.5 * (col[n / 2 - 1] + col[n / 2])
            }
        })
        .collect()
}

/// Outcome of the Monte-Carlo threshold simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Propagation {
    /// Preliminary thresholds; entry 0 is an unused placeholder.
    pub z_tilde: CriticalValues,
    /// For each stage `2..=K`, the statistic of every replicate that passed
    /// all earlier stages, in replicate order.
    pub stage_statistics: Vec<Vec<f64>>,
}

/// Random noise-only labels for replicate `replicate`, one per training point.
pub(crate) fn noise_labels(seed: u64, replicate: u64, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    (0..n).map(|_| rng.random_bool(0.5) as usize).collect()
}

/// Position (1-based) of the `(1 − level)` empirical quantile among `s`
/// sorted values: `⌈(1 − level)·s⌉`.
fn upper_quantile_rank(s: usize, level: f64) -> usize {
    let rejected = (s as f64 * level + 1e-9).floor() as usize;
    (s - rejected.min(s)).max(1)
}

/// Simulates noise-only label sets on `features` and fixes the stage
/// thresholds one after another at the query point `x`.
pub fn propagation_calibrate(
    features: &[f64],
    dim: usize,
    x: &[f64],
    grid: &ScaleGrid,
    kernel: Kernel,
    config: &CalibrationConfig,
) -> Result<Propagation> {
    config.validate()?;
    let index = NeighborIndex::build(features.to_vec(), dim)?;
    grid.check_fits(index.len())?;
    let k_scales = grid.len();
    let mut z = vec![0.0; k_scales];
    if k_scales == 1 {
        return Ok(Propagation {
            z_tilde: CriticalValues::new(z)?,
            stage_statistics: Vec::new(),
        });
    }
    let level = config.delta / k_scales as f64;
    if (config.n_mc as f64) * level < 1.0 {
        return Err(MssaError::Config(format!(
            "n_mc = {} is too small for a {:.3e} tail quantile; need at least {}",
            config.n_mc,
            level,
            (1.0 / level).ceil()
        )));
    }

    let neighbors = index.query(x, grid.largest(), None)?;
    let weights = GridWeights::new(&neighbors, grid, kernel)?;
    let n = index.len();
    // Truncated estimate of the class-1 probability per replicate and scale.
    let theta: Vec<Vec<f64>> = (0..config.n_mc as u64)
        .into_par_iter()
        .map(|r| {
            let labels = noise_labels(config.seed, r, n);
            let nb_labels: Vec<usize> = neighbors.iter().map(|nb| labels[nb.index]).collect();
            let sums = weights.class_sums(&nb_labels, 2);
            sums[1]
                .iter()
                .zip(&weights.masses)
                .map(|(s, m)| phi(s / m, 2))
                .collect()
        })
        .collect();

    let mut aggregate: Vec<f64> = theta.iter().map(|t| t[0]).collect();
    let mut alive = vec![true; config.n_mc];
    let mut stage_statistics = Vec::with_capacity(k_scales - 1);
    for k in 1..k_scales {
        let stats: Vec<(usize, f64)> = (0..config.n_mc)
            .filter(|&r| alive[r])
            .map(|r| (r, weights.masses[k] * kl(theta[r][k], aggregate[r])))
            .collect();
        if stats.len() < config.min_survivors {
            return Err(MssaError::Calibration {
                stage: k + 1,
                survivors: stats.len(),
                required: config.min_survivors,
            });
        }
        let mut sorted: Vec<f64> = stats.iter().map(|(_, t)| *t).collect();
        sorted.sort_by(f64::total_cmp);
        z[k] = sorted[upper_quantile_rank(sorted.len(), level) - 1];
        for &(r, t) in &stats {
            if t <= z[k] {
                aggregate[r] = theta[r][k];
            } else {
                alive[r] = false;
            }
        }
        stage_statistics.push(stats.into_iter().map(|(_, t)| t).collect());
    }
    Ok(Propagation {
        z_tilde: CriticalValues::new(z)?,
        stage_statistics,
    })
}

/// The multiplier `c` with the lowest leave-one-out error and its thresholds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleSelection {
    pub c: f64,
    pub z: CriticalValues,
    pub loo_error: EvalReport,
    /// Leave-one-out error rate of every candidate, in ascending `c`.
    pub candidates: Vec<(f64, f64)>,
}

/// Picks `c` from `config.c_grid` minimising the leave-one-out error of the
/// classifier with thresholds `c·z̃`; ties go to the smaller `c`.
pub fn select_scale_factor(
    dataset: &LabeledDataset,
    grid: &ScaleGrid,
    kernel: Kernel,
    z_tilde: &CriticalValues,
    config: &CalibrationConfig,
) -> Result<ScaleSelection> {
    config.validate()?;
    if z_tilde.len() != grid.len() {
        return Err(MssaError::domain(format!(
            "{} preliminary values for {} scales",
            z_tilde.len(),
            grid.len()
        )));
    }
    let estimator = StackEstimator::new(dataset, grid.clone(), kernel)?;
    let estimates = loo_estimates(&estimator, dataset)?;

    let mut cs = config.c_grid.clone();
    cs.sort_by(f64::total_cmp);
    cs.dedup();
    let mut best: Option<(f64, CriticalValues, EvalReport)> = None;
    let mut candidates = Vec::with_capacity(cs.len());
    for c in cs {
        let z = z_tilde.scaled(c)?;
        let predicted = estimates
            .par_iter()
            .map(|e| aggregate_point(e, &z).map(|t| predict_label(&t)))
            .collect::<Result<Vec<_>>>()?;
        let report = report_from_predictions(dataset.labels(), &predicted, false)?;
        candidates.push((c, report.error_rate));
        let better = match &best {
            None => true,
            Some((_, _, r)) => report.mistakes < r.mistakes,
        };
        if better {
            best = Some((c, z, report));
        }
    }
    let (c, z, loo_error) = best.expect("c_grid is non-empty");
    Ok(ScaleSelection {
        c,
        z,
        loo_error,
        candidates,
    })
}

/// Full calibration of a labeled training set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub calibration_point: Vec<f64>,
    pub z_tilde: CriticalValues,
    pub c: f64,
    pub z: CriticalValues,
    pub loo_error_at_c: EvalReport,
    pub candidates: Vec<(f64, f64)>,
}

/// Simulation at one point (the coordinate-wise median unless given), then
/// the leave-one-out choice of `c`.
pub fn calibrate_dataset(
    dataset: &LabeledDataset,
    grid: &ScaleGrid,
    kernel: Kernel,
    config: &CalibrationConfig,
    point: Option<Vec<f64>>,
) -> Result<Calibration> {
    let point = point.unwrap_or_else(|| coordinate_median(dataset.features(), dataset.dim()));
    let propagation = propagation_calibrate(
        dataset.features(),
        dataset.dim(),
        &point,
        grid,
        kernel,
        config,
    )?;
    let selection = select_scale_factor(dataset, grid, kernel, &propagation.z_tilde, config)?;
    Ok(Calibration {
        calibration_point: point,
        z_tilde: propagation.z_tilde,
        c: selection.c,
        z: selection.z,
        loo_error_at_c: selection.loo_error,
        candidates: selection.candidates,
    })
}
