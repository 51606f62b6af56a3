//! Stagewise aggregation of per-scale estimates and the plug-in prediction.
//!
//! For every class independently the aggregate starts at the smallest scale.
//! Stage `k` compares the scale-`k` estimate with the current aggregate using
//! the statistic `T_k = N_k · KL(θ̃^{(k)}, θ̂^{(k−1)})`; the new estimate is
//! adopted when `T_k ≤ z_k` and the aggregate is kept otherwise. The predicted
//! label is the class with the largest final aggregate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{MssaError, Result};
use crate::estimator::{ScaleEstimates, ScaleGrid, StackEstimator};
use crate::kernels::Kernel;

/// Thresholds `z_1..z_K`. Entry 0 is never read by the aggregation loop; it
/// is stored so that entry `k − 1` lines up with scale `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CriticalValues(Vec<f64>);

impl CriticalValues {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if let Some(bad) = z.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(MssaError::domain(format!(
                "critical values must be finite and non-negative, got {bad}"
            )));
        }
        Ok(Self(z))
    }

    /// The same value at every stage.
    pub fn constant(value: f64, k: usize) -> Result<Self> {
        Self::new(vec![value; k])
    }

    /// Every stage accepts unconditionally.
    pub fn accept_all(k: usize) -> Self {
        Self(vec![f64::MAX; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The thresholds actually used, `z_2..z_K`.
    pub fn stages(&self) -> &[f64] {
        self.0.get(1..).unwrap_or(&[])
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|z| c * z).collect())
    }
}

/// Per-point record of the aggregation. `gamma` and `test_stats` are indexed
/// `[class][stage]` for stages `2..=K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregationTrace {
    pub theta_hat: Vec<f64>,
    pub gamma: Vec<Vec<bool>>,
    pub test_stats: Vec<Vec<f64>>,
}

/// Bernoulli Kullback-Leibler divergence `KL(Ber(a) ‖ Ber(b))`.
pub fn bernoulli_kl(a: f64, b: f64) -> Result<f64> {
    let open = |v: f64| v > 0.0 && v < 1.0;
    if !open(a) || !open(b) {
        return Err(MssaError::domain(format!(
            "Bernoulli KL needs both arguments in (0, 1), got ({a}, {b})"
        )));
    }
    Ok(kl(a, b))
}

/// Writing `a = b(1 + x)` and `1 − a = (1 − b)(1 + y)` turns the divergence
/// into `b·g(x) + (1 − b)·g(y)` with `g(x) = (1 + x)ln(1 + x) − x ≥ 0`, a sum of
/// non-negative terms that vanishes only at `a = b`.
#[inline]
pub(crate) fn kl(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let x = (a - b) / b;
    let y = (b - a) / (1.0 - b);
    b * excess_entropy(x) + (1.0 - b) * excess_entropy(y)
}

/// `(1 + x)ln(1 + x) − x` for `x > −1`.
#[inline]
fn excess_entropy(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        // Σ_{j≥2} (−x)^j / (j(j−1)); seven terms reach full precision here.
        let mut term = x * x;
        let mut sum = 0.0;
        for j in 2..9 {
            sum += term / (j * (j - 1)) as f64;
            term *= -x;
        }
        sum
    } else {
        (1.0 + x) * x.ln_1p() - x
    }
}

/// Runs the stagewise aggregation for every class.
pub fn aggregate_point(estimates: &ScaleEstimates, z: &CriticalValues) -> Result<AggregationTrace> {
    let k_scales = estimates.n_scales();
    if z.len() != k_scales {
        return Err(MssaError::domain(format!(
            "{} critical values for {k_scales} scales",
            z.len()
        )));
    }
    let m_classes = estimates.m_classes();
    let mut theta_hat = Vec::with_capacity(m_classes);
    let mut gamma = Vec::with_capacity(m_classes);
    let mut test_stats = Vec::with_capacity(m_classes);
    for theta in &estimates.theta_tilde {
        let mut current = theta[0];
        let mut flags = Vec::with_capacity(k_scales.saturating_sub(1));
        let mut stats = Vec::with_capacity(k_scales.saturating_sub(1));
        for ((&estimate, &mass), &zk) in theta.iter().zip(&estimates.masses).zip(&z.0).skip(1) {
            let t = mass * kl(estimate, current);
            let accept = t <= zk;
            if accept {
                current = estimate;
            }
            flags.push(accept);
            stats.push(t);
        }
        theta_hat.push(current);
        gamma.push(flags);
        test_stats.push(stats);
    }
    Ok(AggregationTrace {
        theta_hat,
        gamma,
        test_stats,
    })
}

/// Index of the largest aggregate; ties go to the smallest class index.
pub fn predict_label(trace: &AggregationTrace) -> usize {
    argmax(&trace.theta_hat)
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub label: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<AggregationTrace>,
}

/// A fitted classifier: training set, scale grid, kernel and critical values.
#[derive(Clone, Debug)]
pub struct MssaClassifier {
    estimator: StackEstimator,
    z: CriticalValues,
}

impl MssaClassifier {
    pub fn new(
        dataset: &LabeledDataset,
        grid: ScaleGrid,
        kernel: Kernel,
        z: CriticalValues,
    ) -> Result<Self> {
        Self::from_estimator(StackEstimator::new(dataset, grid, kernel)?, z)
    }

    pub fn from_estimator(estimator: StackEstimator, z: CriticalValues) -> Result<Self> {
        if z.len() != estimator.grid().len() {
            return Err(MssaError::domain(format!(
                "{} critical values for {} scales",
                z.len(),
                estimator.grid().len()
            )));
        }
        Ok(Self { estimator, z })
    }

    pub fn estimator(&self) -> &StackEstimator {
        &self.estimator
    }

    pub fn critical_values(&self) -> &CriticalValues {
        &self.z
    }

    pub fn predict_point(
        &self,
        x: &[f64],
        exclude: Option<usize>,
        with_trace: bool,
    ) -> Result<Prediction> {
        let estimates = self.estimator.estimate(x, exclude)?;
        let trace = aggregate_point(&estimates, &self.z)?;
        Ok(Prediction {
            label: predict_label(&trace),
            trace: with_trace.then_some(trace),
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        self.predict_point(x, None, false).map(|p| p.label)
    }

    /// Predicts every row of a row-major buffer, in input order.
    ///
    /// With `loo` set, the rows must be the training points in training order
    /// and row `i` is predicted with training point `i` left out. Work is
    /// spread over the current rayon pool; the output does not depend on the
    /// number of workers.
    pub fn predict_batch(
        &self,
        points: &[f64],
        loo: bool,
        with_traces: bool,
    ) -> Result<Vec<Prediction>> {
        let d = self.estimator.index().dim();
        if !points.len().is_multiple_of(d) {
            return Err(MssaError::domain(format!(
                "batch of {} coordinates is not a multiple of dimension {d}",
                points.len()
            )));
        }
        if loo {
            let index = self.estimator.index();
            if points.len() / d != index.len()
                || points
                    .chunks_exact(d)
                    .enumerate()
                    .any(|(i, p)| p != index.point(i))
            {
                return Err(MssaError::domain(
                    "leave-one-out prediction needs the training points in training order",
                ));
            }
        }
        points
            .par_chunks_exact(d)
            .enumerate()
            .map(|(i, x)| self.predict_point(x, loo.then_some(i), with_traces))
            .collect()
    }
}
