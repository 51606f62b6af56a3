//! Weighted nearest-neighbor class-probability estimates at a grid of scales.
//!
//! For a query point `x` and scale `n_k`, neighbor `i` among the `n_k` nearest
//! gets weight `K(‖X_i − x‖ / h_k)` where `h_k` is the distance to the
//! `n_k`-th neighbor. The raw estimate of class `m` is the weighted fraction
//! of class-`m` neighbors; the truncated estimate clamps it to
//! `[1/(2M), 1 − 1/(2M)]`. A single query at the largest scale serves every
//! scale because sorted neighbor lists are prefix-closed.

use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{MssaError, Result};
use crate::kernels::Kernel;
use crate::neighbors::{NeighborIndex, NeighborList};

/// Increasing neighbor counts `n_1 < … < n_K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    counts: Vec<usize>,
    u0_effective: f64,
    ratio_ok: bool,
}

impl ScaleGrid {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(MssaError::domain("scale grid is empty"));
        }
        if counts[0] == 0 {
            return Err(MssaError::domain("scale grid counts must be at least 1"));
        }
        if let Some(w) = counts.windows(2).find(|w| w[0] >= w[1]) {
            return Err(MssaError::domain(format!(
                "scale grid must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        let ratios = counts.windows(2).map(|w| w[0] as f64 / w[1] as f64);
        let (min_ratio, max_ratio) = ratios.fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
            (lo.min(r), hi.max(r))
        });
        // A single scale has no ratio constraint; take the upper end of (0, 1/2].
        let u0_effective = if counts.len() == 1 {
            0.5
        } else {
            min_ratio / 2.0
        };
        Ok(Self {
            ratio_ok: max_ratio < 0.5,
            u0_effective,
            counts,
        })
    }

    /// `⌊base·growth^k⌋` for `k = 0, 1, …` while the value stays `≤ max`,
    /// with repeated values dropped.
    pub fn geometric(base: f64, growth: f64, max: usize) -> Result<Self> {
        check_geometric(base, growth)?;
        let mut counts = Vec::new();
        for k in 0.. {
            let v = (base * growth.powi(k)).floor();
            if v > max as f64 {
                break;
            }
            push_distinct(&mut counts, v as usize);
        }
        if counts.is_empty() {
            return Err(MssaError::domain(format!(
                "no grid value ⌊{base}·{growth}^k⌋ fits under {max}"
            )));
        }
        Self::new(counts)
    }

    /// `⌊base·growth^k⌋` for `k = 0..=k_max`, with repeated values dropped.
    pub fn geometric_steps(base: f64, growth: f64, k_max: u32) -> Result<Self> {
        check_geometric(base, growth)?;
        let mut counts = Vec::new();
        for k in 0..=k_max as i32 {
            push_distinct(&mut counts, (base * growth.powi(k)).floor() as usize);
        }
        Self::new(counts)
    }

    /// `⌊3·1.25^k⌋` up to `n/2`.
    pub fn default_for(n: usize) -> Result<Self> {
        Self::geometric(3.0, 1.25, n / 2)
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn largest(&self) -> usize {
        *self.counts.last().expect("grid is non-empty")
    }

    /// Half the smallest ratio `n_{k−1}/n_k`.
    pub fn u0_effective(&self) -> f64 {
        self.u0_effective
    }

    /// Whether every consecutive ratio is below 1/2, i.e. each scale more
    /// than doubles the previous one.
    pub fn ratio_ok(&self) -> bool {
        self.ratio_ok
    }

    /// The one-scale grid `[n_k]`.
    pub fn singleton(&self, k: usize) -> Self {
        Self::new(vec![self.counts[k]]).expect("a single positive count is a valid grid")
    }

    pub(crate) fn check_fits(&self, available: usize) -> Result<()> {
        if self.largest() > available {
            return Err(MssaError::domain(format!(
                "largest scale {} exceeds the {available} available neighbors",
                self.largest()
            )));
        }
        Ok(())
    }
}

fn check_geometric(base: f64, growth: f64) -> Result<()> {
    if !(base >= 1.0 && base.is_finite()) {
        return Err(MssaError::domain(format!(
            "grid base must be ≥ 1, got {base}"
        )));
    }
    if !(growth > 1.0 && growth.is_finite()) {
        return Err(MssaError::domain(format!(
            "grid growth must be > 1, got {growth}"
        )));
    }
    Ok(())
}

fn push_distinct(counts: &mut Vec<usize>, v: usize) {
    if counts.last() != Some(&v) {
        counts.push(v);
    }
}

/// Per-class, per-scale estimates at one query point. Matrices are indexed
/// `[class][scale]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleEstimates {
    pub theta_tilde: Vec<Vec<f64>>,
    pub eta_tilde: Vec<Vec<f64>>,
    /// Effective masses `N_k`, the kernel-weight sums.
    pub masses: Vec<f64>,
    /// Distance from the query to its `n_k`-th neighbor.
    pub bandwidths: Vec<f64>,
}

impl ScaleEstimates {
    pub fn m_classes(&self) -> usize {
        self.theta_tilde.len()
    }

    pub fn n_scales(&self) -> usize {
        self.masses.len()
    }
}

/// Clamp to `[1/(2M), 1 − 1/(2M)]`.
pub fn truncate_phi(t: f64, m_classes: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(MssaError::domain(format!(
            "truncation argument {t} outside [0, 1]"
        )));
    }
    if m_classes < 2 {
        return Err(MssaError::domain("truncation needs at least 2 classes"));
    }
    Ok(phi(t, m_classes))
}

#[inline]
pub(crate) fn phi(t: f64, m_classes: usize) -> f64 {
    let lo = 1.0 / (2.0 * m_classes as f64);
    t.max(lo).min(1.0 - lo)
}

/// Kernel weights of the `n_k` nearest neighbors.
pub fn scale_weights(neighbors: &NeighborList, n_k: usize, kernel: Kernel) -> Result<Vec<f64>> {
    if n_k == 0 || n_k > neighbors.len() {
        return Err(MssaError::domain(format!(
            "scale {n_k} needs that many neighbors, have {}",
            neighbors.len()
        )));
    }
    let h = neighbors[n_k - 1].distance;
    Ok(neighbors[..n_k]
        .iter()
        .map(|nb| {
            if h > 0.0 {
                kernel.weight(nb.distance / h)
            } else {
                1.0
            }
        })
        .collect())
}

/// Kernel weights for every scale of a grid, computed from one neighbor list.
#[derive(Clone, Debug)]
pub(crate) struct GridWeights {
    pub per_scale: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
    pub bandwidths: Vec<f64>,
}

impl GridWeights {
    pub fn new(neighbors: &NeighborList, grid: &ScaleGrid, kernel: Kernel) -> Result<Self> {
        let mut per_scale = Vec::with_capacity(grid.len());
        let mut masses = Vec::with_capacity(grid.len());
        let mut bandwidths = Vec::with_capacity(grid.len());
        for &n_k in grid.counts() {
            let w = scale_weights(neighbors, n_k, kernel)?;
            masses.push(w.iter().sum());
            bandwidths.push(neighbors[n_k - 1].distance);
            per_scale.push(w);
        }
        Ok(Self {
            per_scale,
            masses,
            bandwidths,
        })
    }

    /// Weighted class sums `S_m^{(k)}` for the labels of the listed neighbors,
    /// indexed `[class][scale]`.
    pub fn class_sums(&self, neighbor_labels: &[usize], m_classes: usize) -> Vec<Vec<f64>> {
        let mut sums = vec![vec![0.0; self.per_scale.len()]; m_classes];
        for (k, w) in self.per_scale.iter().enumerate() {
            for (wi, &label) in w.iter().zip(neighbor_labels) {
                sums[label][k] += wi;
            }
        }
        sums
    }

    pub fn estimates(&self, neighbor_labels: &[usize], m_classes: usize) -> ScaleEstimates {
        let sums = self.class_sums(neighbor_labels, m_classes);
        let eta_tilde: Vec<Vec<f64>> = sums
            .iter()
            .map(|row| row.iter().zip(&self.masses).map(|(s, n)| s / n).collect())
            .collect();
        let theta_tilde = eta_tilde
            .iter()
            .map(|row| row.iter().map(|&e| phi(e, m_classes)).collect())
            .collect();
        ScaleEstimates {
            theta_tilde,
            eta_tilde,
            masses: self.masses.clone(),
            bandwidths: self.bandwidths.clone(),
        }
    }
}

/// Estimates at `x` for every scale of the grid, optionally leaving one
/// training point out.
pub fn estimate_stack(
    x: &[f64],
    dataset: &LabeledDataset,
    grid: &ScaleGrid,
    kernel: Kernel,
    index: &NeighborIndex,
    exclude: Option<usize>,
) -> Result<ScaleEstimates> {
    let neighbors = index.query(x, grid.largest(), exclude)?;
    let weights = GridWeights::new(&neighbors, grid, kernel)?;
    let labels: Vec<usize> = neighbors
        .iter()
        .map(|nb| dataset.labels()[nb.index])
        .collect();
    Ok(weights.estimates(&labels, dataset.m_classes()))
}

/// Owns the index and labels of a training set so estimates can be computed
/// repeatedly (and concurrently) without re-indexing.
#[derive(Clone, Debug)]
pub struct StackEstimator {
    index: NeighborIndex,
    labels: Vec<usize>,
    m_classes: usize,
    grid: ScaleGrid,
    kernel: Kernel,
}

impl StackEstimator {
    pub fn new(dataset: &LabeledDataset, grid: ScaleGrid, kernel: Kernel) -> Result<Self> {
        grid.check_fits(dataset.len())?;
        Ok(Self {
            index: NeighborIndex::from_dataset(dataset),
            labels: dataset.labels().to_vec(),
            m_classes: dataset.m_classes(),
            grid,
            kernel,
        })
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn m_classes(&self) -> usize {
        self.m_classes
    }

    pub fn index(&self) -> &NeighborIndex {
        &self.index
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn estimate(&self, x: &[f64], exclude: Option<usize>) -> Result<ScaleEstimates> {
        let neighbors = self.index.query(x, self.grid.largest(), exclude)?;
        let weights = GridWeights::new(&neighbors, &self.grid, self.kernel)?;
        let labels: Vec<usize> = neighbors.iter().map(|nb| self.labels[nb.index]).collect();
        Ok(weights.estimates(&labels, self.m_classes))
    }
}
