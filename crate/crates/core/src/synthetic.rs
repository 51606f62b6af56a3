//! Gaussian-mixture generators, the exact Bayes rule and Monte-Carlo Bayes risk.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{MssaError, Result};
use crate::estimator::ScaleGrid;
use crate::kernels::Kernel;
use crate::mssa::argmax;

/// One isotropic Gaussian `N(mean, variance·I)` inside a class density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: f64,
}

/// Class priors and, per class, a Gaussian sub-mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixtureModel {
    priors: Vec<f64>,
    components: Vec<Vec<Component>>,
    dim: usize,
}

impl GaussianMixtureModel {
    pub fn new(priors: Vec<f64>, components: Vec<Vec<Component>>) -> Result<Self> {
        if priors.is_empty() || priors.len() != components.len() {
            return Err(MssaError::domain(format!(
                "{} priors for {} classes",
                priors.len(),
                components.len()
            )));
        }
        if priors.iter().any(|p| !(p.is_finite() && *p >= 0.0))
            || (priors.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(MssaError::domain(
                "priors must be non-negative and sum to 1",
            ));
        }
        let dim = components
            .first()
            .and_then(|c| c.first())
            .map(|c| c.mean.len())
            .unwrap_or(0);
        if dim == 0 {
            return Err(MssaError::domain(
                "every class needs at least one component",
            ));
        }
        for (m, class) in components.iter().enumerate() {
            if class.is_empty() {
                return Err(MssaError::domain(format!("class {m} has no components")));
            }
            if (class.iter().map(|c| c.weight).sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(MssaError::domain(format!(
                    "component weights of class {m} do not sum to 1"
                )));
            }
            for c in class {
                if c.mean.len() != dim || c.mean.iter().any(|v| !v.is_finite()) {
                    return Err(MssaError::domain(format!(
                        "class {m} has a mean of the wrong dimension"
                    )));
                }
                if !(c.weight.is_finite() && c.weight >= 0.0)
                    || !(c.variance.is_finite() && c.variance > 0.0)
                {
                    return Err(MssaError::domain(format!(
                        "class {m} has a negative weight or non-positive variance"
                    )));
                }
            }
        }
        Ok(Self {
            priors,
            components,
            dim,
        })
    }

    /// One Gaussian per class with a shared variance and equal priors.
    pub fn isotropic(means: Vec<Vec<f64>>, variance: f64) -> Result<Self> {
        let m = means.len();
        let components = means
            .into_iter()
            .map(|mean| {
                vec![Component {
                    weight: 1.0,
                    mean,
                    variance,
                }]
            })
            .collect();
        Self::new(vec![1.0 / m as f64; m], components)
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn components(&self) -> &[Vec<Component>] {
        &self.components
    }

    pub fn m_classes(&self) -> usize {
        self.priors.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `log π_m + log p_m(x)` for every class.
    pub fn log_joint(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim as f64;
        self.priors
            .iter()
            .zip(&self.components)
            .map(|(prior, class)| {
                let terms: Vec<f64> = class
                    .iter()
                    .map(|c| {
                        let sq: f64 = x.iter().zip(&c.mean).map(|(a, b)| (a - b) * (a - b)).sum();
                        c.weight.ln()
                            - 0.5 * d * (2.0 * std::f64::consts::PI * c.variance).ln()
                            - sq / (2.0 * c.variance)
                    })
                    .collect();
                prior.ln() + log_sum_exp(&terms)
            })
            .collect()
    }

    /// Marginal density `p(x) = Σ_m π_m p_m(x)`.
    pub fn density(&self, x: &[f64]) -> f64 {
        log_sum_exp(&self.log_joint(x)).exp()
    }

    /// Class posteriors `η_m(x)`.
    pub fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let lj = self.log_joint(x);
        let total = log_sum_exp(&lj);
        lj.iter().map(|l| (l - total).exp()).collect()
    }

    /// `argmax_m π_m p_m(x)`, ties to the smallest index.
    pub fn bayes_label(&self, x: &[f64]) -> usize {
        argmax(&self.log_joint(x))
    }

    /// Draw number `draw` under `seed`; each draw has its own stream.
    pub fn sample_point(&self, seed: u64, draw: u64) -> (Vec<f64>, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(draw);
        let label = pick(&mut rng, self.priors.iter().copied());
        let class = &self.components[label];
        let c = &class[pick(&mut rng, class.iter().map(|c| c.weight))];
        let sd = c.variance.sqrt();
        let x = c
            .mean
            .iter()
            .map(|mu| mu + sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        (x, label)
    }
}

fn pick(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
        }
        acc += w;
        if u < acc && w > 0.0 {
            return i;
        }
    }
    last
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + values.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
}

/// `n` labeled draws from `model`.
pub fn sample_mixture(model: &GaussianMixtureModel, n: usize, seed: u64) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(MssaError::domain("sample size must be at least 1"));
    }
    let draws: Vec<(Vec<f64>, usize)> = (0..n as u64)
        .into_par_iter()
        .map(|i| model.sample_point(seed, i))
        .collect();
    let mut features = Vec::with_capacity(n * model.dim());
    let mut labels = Vec::with_capacity(n);
    for (x, y) in draws {
        features.extend(x);
        labels.push(y);
    }
    LabeledDataset::from_flat(features, n, model.dim(), labels, model.m_classes(), None)
}

/// Fraction of `n_mc` fresh draws misclassified by the Bayes rule, with its
/// binomial standard error.
pub fn bayes_risk(model: &GaussianMixtureModel, n_mc: usize, seed: u64) -> Result<(f64, f64)> {
    if n_mc < 1000 {
        return Err(MssaError::domain(format!(
            "n_mc must be at least 1000, got {n_mc}"
        )));
    }
    let mistakes: usize = (0..n_mc as u64)
        .into_par_iter()
        .filter(|&i| {
            let (x, y) = model.sample_point(seed, i);
            model.bayes_label(&x) != y
        })
        .count();
    let r = mistakes as f64 / n_mc as f64;
    Ok((r, (r * (1.0 - r) / n_mc as f64).sqrt()))
}

/// A built-in synthetic benchmark: model, scale grid and kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub id: u32,
    pub model: GaussianMixtureModel,
    pub grid: ScaleGrid,
    pub kernel: Kernel,
}

pub fn builtin_experiment(id: u32) -> Result<Experiment> {
    let h = 3f64.sqrt() / 2.0;
    let (model, k_max) = match id {
        1 => (
            GaussianMixtureModel::isotropic(
                vec![vec![0.0, -1.0], vec![h, 0.0], vec![-h, 0.0]],
                0.5,
            )?,
            11,
        ),
        2 => (
            GaussianMixtureModel::isotropic(
                vec![
                    vec![1.0, 1.0],
                    vec![1.0, -1.0],
                    vec![-1.0, 1.0],
                    vec![-1.0, -1.0],
                ],
                0.7,
            )?,
            15,
        ),
        3 => {
            let pair = |a: [f64; 2], b: [f64; 2]| {
                vec![
                    Component {
                        weight: 0.5,
                        mean: a.to_vec(),
                        variance: 0.5,
                    },
                    Component {
                        weight: 0.5,
                        mean: b.to_vec(),
                        variance: 0.5,
                    },
                ]
            };
            let model = GaussianMixtureModel::new(
                vec![1.0 / 3.0; 3],
                vec![
                    pair([-1.0, 0.0], [1.0, 0.0]),
                    pair([0.5, h], [-0.5, -h]),
                    pair([-0.5, h], [0.5, -h]),
                ],
            )?;
            (model, 14)
        }
        other => {
            return Err(MssaError::domain(format!(
                "unknown experiment {other}, expected 1, 2 or 3"
            )))
        }
    };
    Ok(Experiment {
        id,
        model,
        grid: ScaleGrid::geometric_steps(3.0, 1.25, k_max)?,
        kernel: Kernel::Rectangular,
    })
}
