//! Error rates, leave-one-out cross-validation, fixed-k sweeps and the
//! pointwise deviation bound for the weighted nearest-neighbor estimate.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::LabeledDataset;
use crate::error::{MssaError, Result};
use crate::estimator::{ScaleEstimates, ScaleGrid, StackEstimator};
use crate::kernels::Kernel;
use crate::mssa::{argmax, CriticalValues, MssaClassifier};

/// Misclassification rate with its binomial standard error `√(e(1−e)/n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub error_rate: f64,
    pub std_error: f64,
    #[serde(rename = "n")]
    pub n_evaluated: usize,
    pub mistakes: usize,
    /// `(true label, predicted label)` per evaluated point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_point: Option<Vec<(usize, usize)>>,
}

pub(crate) fn report_from_predictions(
    truth: &[usize],
    predicted: &[usize],
    keep_pairs: bool,
) -> Result<EvalReport> {
    if truth.len() != predicted.len() {
        return Err(MssaError::domain(format!(
            "{} labels for {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(MssaError::domain("nothing to evaluate"));
    }
    let n = truth.len();
    let mistakes = truth.iter().zip(predicted).filter(|(a, b)| a != b).count();
    let e = mistakes as f64 / n as f64;
    Ok(EvalReport {
        error_rate: e,
        std_error: (e * (1.0 - e) / n as f64).sqrt(),
        n_evaluated: n,
        mistakes,
        per_point: keep_pairs.then(|| {
            truth
                .iter()
                .copied()
                .zip(predicted.iter().copied())
                .collect()
        }),
    })
}

/// Estimates at every training point with that point left out.
pub(crate) fn loo_estimates(
    estimator: &StackEstimator,
    dataset: &LabeledDataset,
) -> Result<Vec<ScaleEstimates>> {
    estimator
        .grid()
        .check_fits(dataset.len().saturating_sub(1))?;
    (0..dataset.len())
        .into_par_iter()
        .map(|i| estimator.estimate(dataset.row(i), Some(i)))
        .collect()
}

/// Leave-one-out error of the aggregated classifier; point `i` is excluded
/// from its own neighbor query.
pub fn loo_error(
    dataset: &LabeledDataset,
    grid: &ScaleGrid,
    kernel: Kernel,
    z: &CriticalValues,
) -> Result<EvalReport> {
    grid.check_fits(dataset.len().saturating_sub(1))?;
    let classifier = MssaClassifier::new(dataset, grid.clone(), kernel, z.clone())?;
    let predicted: Vec<usize> = classifier
        .predict_batch(dataset.features(), true, false)?
        .into_iter()
        .map(|p| p.label)
        .collect();
    report_from_predictions(dataset.labels(), &predicted, true)
}

/// Error on a separate test set.
pub fn holdout_error(
    train: &LabeledDataset,
    test: &LabeledDataset,
    grid: &ScaleGrid,
    kernel: Kernel,
    z: &CriticalValues,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(MssaError::domain("test set is empty"));
    }
    if train.dim() != test.dim() {
        return Err(MssaError::domain(format!(
            "train dimension {} differs from test dimension {}",
            train.dim(),
            test.dim()
        )));
    }
    let same_names = match (train.class_names(), test.class_names()) {
        (Some(a), Some(b)) => a == b,
        _ => true,
    };
    if train.m_classes() != test.m_classes() || !same_names {
        return Err(MssaError::domain(
            "train and test sets use different label encodings",
        ));
    }
    let classifier = MssaClassifier::new(train, grid.clone(), kernel, z.clone())?;
    let predicted: Vec<usize> = classifier
        .predict_batch(test.features(), false, false)?
        .into_iter()
        .map(|p| p.label)
        .collect();
    report_from_predictions(test.labels(), &predicted, true)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepEntry {
    pub k: usize,
    pub report: EvalReport,
}

/// Leave-one-out error of the plain `n_k`-nearest-neighbor plug-in rule at
/// every scale of the grid. One neighbor query per point serves all scales.
pub fn knn_sweep(
    dataset: &LabeledDataset,
    grid: &ScaleGrid,
    kernel: Kernel,
) -> Result<Vec<SweepEntry>> {
    let estimator = StackEstimator::new(dataset, grid.clone(), kernel)?;
    let estimates = loo_estimates(&estimator, dataset)?;
    grid.counts()
        .iter()
        .enumerate()
        .map(|(k, &n_k)| {
            let predicted: Vec<usize> = estimates
                .iter()
                .map(|e| {
                    let column: Vec<f64> = e.theta_tilde.iter().map(|row| row[k]).collect();
                    argmax(&column)
                })
                .collect();
            Ok(SweepEntry {
                k: n_k,
                report: report_from_predictions(dataset.labels(), &predicted, false)?,
            })
        })
        .collect()
}

/// Inputs of the pointwise bound on `|η̃(x) − η(x)|` for the weighted
/// `k`-nearest-neighbor estimate under a Hölder condition and a minimal
/// mass condition `P(B(x, r)) ≥ κ·p(x)·r^d` for `r ≤ r0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KnnBoundParams {
    pub k: usize,
    pub n: usize,
    pub delta: f64,
    /// Hölder constant `L`.
    pub lipschitz: f64,
    /// Hölder exponent `α`.
    pub alpha: f64,
    pub dim: usize,
    pub kappa: f64,
    pub density: f64,
    pub r0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KnnBound {
    pub value: f64,
    /// Whether the radius condition `((2k + 4 ln(1/δ))/(nκp))^{α/d} ≤ r0` holds.
    pub in_validity_regime: bool,
}

/// `L·((2k + 4 ln(2/δ))/(nκp))^{α/d} + √(ln(4/δ)/k)`.
pub fn knn_error_bound(p: &KnnBoundParams) -> Result<KnnBound> {
    let positive = [p.lipschitz, p.alpha, p.kappa, p.density, p.r0];
    if p.k == 0 || p.n == 0 || p.dim == 0 || positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(MssaError::domain("bound parameters must be positive"));
    }
    if !(p.delta > 0.0 && p.delta < 1.0) {
        return Err(MssaError::domain(format!(
            "delta must lie in (0, 1), got {}",
            p.delta
        )));
    }
    let k = p.k as f64;
    let mass = p.n as f64 * p.kappa * p.density;
    let exponent = p.alpha / p.dim as f64;
    let bias = p.lipschitz * ((2.0 * k + 4.0 * (2.0 / p.delta).ln()) / mass).powf(exponent);
    let noise = ((4.0 / p.delta).ln() / k).sqrt();
    let radius = ((2.0 * k + 4.0 * (1.0 / p.delta).ln()) / mass).powf(exponent);
    Ok(KnnBound {
        value: bias + noise,
        in_validity_regime: radius <= p.r0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(xs: &[f64], labels: Vec<usize>, m: usize) -> LabeledDataset {
        LabeledDataset::new(xs.iter().map(|&x| vec![x]).collect(), labels, m, None).unwrap()
    }

    fn none() -> CriticalValues {
        CriticalValues::new(vec![0.0]).unwrap()
    }

    #[test]
    fn two_cluster_loo() {
        let ds = line(&[0.0, 1.0, 10.0, 11.0], vec![0, 0, 1, 1], 2);
        let grid = ScaleGrid::new(vec![1]).unwrap();
        let r = loo_error(&ds, &grid, Kernel::Rectangular, &none()).unwrap();
        assert_eq!(r.error_rate, 0.0);
        assert_eq!(r.std_error, 0.0);
        let sweep = knn_sweep(&ds, &grid, Kernel::Rectangular).unwrap();
        assert_eq!(sweep.len(), 1);
        assert_eq!(sweep[0].report.error_rate, 0.0);
    }

    #[test]
    fn forced_mistakes() {
        let ds = line(&[0.0, 1.0], vec![0, 1], 2);
        let grid = ScaleGrid::new(vec![1]).unwrap();
        let r = loo_error(&ds, &grid, Kernel::Rectangular, &none()).unwrap();
        assert_eq!(r.error_rate, 1.0);
        assert_eq!(r.mistakes, 2);
        let too_big = ScaleGrid::new(vec![2]).unwrap();
        assert!(loo_error(&ds, &too_big, Kernel::Rectangular, &none()).is_err());
    }

    #[test]
    fn holdout_cases() {
        let ds = line(&[0.0, 1.0, 10.0, 11.0], vec![0, 1, 0, 1], 2);
        let grid = ScaleGrid::new(vec![1]).unwrap();
        let r = holdout_error(&ds, &ds, &grid, Kernel::Rectangular, &none()).unwrap();
        assert_eq!(r.error_rate, 0.0);

        let train = line(&[0.0, 0.5, 100.0, 100.5], vec![0, 0, 1, 1], 2);
        let test = line(&[-1.0, 1.0, 99.0, 102.0], vec![0, 0, 1, 1], 2);
        let grid2 = ScaleGrid::new(vec![2]).unwrap();
        let z = CriticalValues::new(vec![0.0]).unwrap();
        let r = holdout_error(&train, &test, &grid2, Kernel::Rectangular, &z).unwrap();
        assert_eq!(r.error_rate, 0.0);

        let three = line(&[0.0, 1.0, 2.0], vec![0, 1, 2], 3);
        assert!(holdout_error(&train, &three, &grid, Kernel::Rectangular, &none()).is_err());
        let wide = LabeledDataset::new(vec![vec![0.0, 1.0]], vec![0], 2, None).unwrap();
        assert!(holdout_error(&train, &wide, &grid, Kernel::Rectangular, &none()).is_err());
    }

    #[test]
    fn bound_fixture() {
        let p = KnnBoundParams {
            k: 100,
            n: 100_000,
            delta: 0.1,
            lipschitz: 1.0,
            alpha: 1.0,
            dim: 2,
            kappa: 1.0,
            density: 1.0,
            r0: 1.0,
        };
        let b = knn_error_bound(&p).unwrap();
        // √((200 + 4 ln 20)/1e5) + √(ln 40 / 100)
        assert!((b.value - 0.23810616217764208).abs() < 1e-12, "{}", b.value);
        assert!(b.in_validity_regime);

        let more = knn_error_bound(&KnnBoundParams { n: 200_000, ..p }).unwrap();
        assert!(more.value < b.value);
        let tiny = knn_error_bound(&KnnBoundParams { delta: 1e-300, ..p }).unwrap();
        assert!(tiny.value > 10.0 * b.value);
        let far = knn_error_bound(&KnnBoundParams { r0: 1e-3, ..p }).unwrap();
        assert!(!far.in_validity_regime);
        assert!(knn_error_bound(&KnnBoundParams { delta: 1.0, ..p }).is_err());
        assert!(knn_error_bound(&KnnBoundParams { k: 0, ..p }).is_err());
    }

    /// Unweighted k-NN by sorting all other points; ties in distance broken by index.
    fn brute_loo(xs: &[Vec<f64>], labels: &[usize], m: usize, k: usize) -> usize {
        (0..xs.len())
            .filter(|&i| {
                let mut others: Vec<(f64, usize)> = (0..xs.len())
                    .filter(|&j| j != i)
                    .map(|j| {
                        (
                            xs[i]
                                .iter()
                                .zip(&xs[j])
                                .map(|(a, b)| (a - b) * (a - b))
                                .sum(),
                            j,
                        )
                    })
                    .collect();
                others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut counts = vec![0usize; m];
                for &(_, j) in &others[..k] {
                    counts[labels[j]] += 1;
                }
                let best = (0..m).fold(0, |b, c| if counts[c] > counts[b] { c } else { b });
                best != labels[i]
            })
            .count()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn loo_matches_brute_force(
            pts in prop::collection::vec((0i32..8, 0i32..8, 0usize..3), 5..60),
            k_raw in 1usize..10,
        ) {
            let xs: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.0 as f64, p.1 as f64]).collect();
            let labels: Vec<usize> = pts.iter().map(|p| p.2).collect();
            let k = k_raw.min(xs.len() - 1);
            let ds = LabeledDataset::new(xs.clone(), labels.clone(), 3, None).unwrap();
            let grid = ScaleGrid::new(vec![k]).unwrap();
            let r = loo_error(&ds, &grid, Kernel::Rectangular, &none()).unwrap();
            prop_assert_eq!(r.mistakes, brute_loo(&xs, &labels, 3, k));
            let sweep = knn_sweep(&ds, &grid, Kernel::Rectangular).unwrap();
            prop_assert_eq!(sweep[0].report.mistakes, r.mistakes);
        }

        #[test]
        fn sweep_matches_singletons(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
            let labels: Vec<usize> = (0..40).map(|_| rng.random_range(0..3)).collect();
            let ds = LabeledDataset::new(xs, labels, 3, None).unwrap();
            let grid = ScaleGrid::new(vec![2, 5, 11, 20]).unwrap();
            let sweep = knn_sweep(&ds, &grid, Kernel::EpanechnikovLike).unwrap();
            prop_assert_eq!(sweep.len(), 4);
            for (k, entry) in sweep.iter().enumerate() {
                let single = loo_error(&ds, &grid.singleton(k), Kernel::EpanechnikovLike, &none()).unwrap();
                prop_assert_eq!(entry.report.mistakes, single.mistakes);
                prop_assert_eq!(entry.k, grid.counts()[k]);
            }
        }

        #[test]
        fn loo_is_order_invariant(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            use rand::seq::SliceRandom;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.random::<f64>()]).collect();
            let labels: Vec<usize> = (0..30).map(|_| rng.random_range(0..2)).collect();
            let mut order: Vec<usize> = (0..30).collect();
            order.shuffle(&mut rng);
            let a = LabeledDataset::new(xs.clone(), labels.clone(), 2, None).unwrap();
            let b = LabeledDataset::new(
                order.iter().map(|&i| xs[i].clone()).collect(),
                order.iter().map(|&i| labels[i]).collect(),
                2,
                None,
            ).unwrap();
            let grid = ScaleGrid::new(vec![3, 7]).unwrap();
            let z = CriticalValues::new(vec![0.0, 0.5]).unwrap();
            let ra = loo_error(&a, &grid, Kernel::Rectangular, &z).unwrap();
            let rb = loo_error(&b, &grid, Kernel::Rectangular, &z).unwrap();
            prop_assert_eq!(ra.mistakes, rb.mistakes);
        }
    }
}
