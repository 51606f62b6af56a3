//! Localization kernels on `[0, ∞)`.
//!
//! Every built-in kernel equals 1 at the origin, is non-increasing, is at
//! least 1/2 at `t = 1` and vanishes for `t > 1`. The point `t = 1` itself is
//! inside the support, so the farthest of the `k` nearest neighbors always
//! receives positive weight.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{MssaError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kernel {
    /// `1(0 ≤ t ≤ 1)`
    #[serde(rename = "rect")]
    Rectangular,
    /// `(1 − t²/2)·1(0 ≤ t ≤ 1)`
    #[serde(rename = "epan")]
    EpanechnikovLike,
    /// `exp(−t²/2)·1(0 ≤ t ≤ 1)`
    #[serde(rename = "gauss")]
    GaussianLike,
}

impl Kernel {
    pub const ALL: [Kernel; 3] = [
        Kernel::Rectangular,
        Kernel::EpanechnikovLike,
        Kernel::GaussianLike,
    ];

    /// Kernel value at `t`, rejecting negative or non-finite arguments.
    pub fn evaluate(self, t: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(MssaError::domain(format!(
                "kernel argument must be finite and non-negative, got {t}"
            )));
        }
        Ok(self.weight(t))
    }

    /// Unchecked evaluation for callers that already hold a valid distance ratio.
    #[inline]
    pub(crate) fn weight(self, t: f64) -> f64 {
        if t > 1.0 {
            return 0.0;
        }
        match self {
            Kernel::Rectangular => 1.0,
            Kernel::EpanechnikovLike => 1.0 - 0.5 * t * t,
            Kernel::GaussianLike => (-0.5 * t * t).exp(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Rectangular => "rect",
            Kernel::EpanechnikovLike => "epan",
            Kernel::GaussianLike => "gauss",
        }
    }

    /// Scans a uniform grid over `[0, 1.5]` and checks the four kernel
    /// conditions numerically.
    pub fn validate(self, grid_size: usize) -> Result<KernelReport> {
        if grid_size < 2 {
            return Err(MssaError::domain(
                "kernel validation grid needs at least 2 points",
            ));
        }
        let step = 1.5 / (grid_size - 1) as f64;
        let ts: Vec<f64> = (0..grid_size).map(|i| i as f64 * step).collect();
        let vals: Vec<f64> = ts.iter().map(|&t| self.weight(t)).collect();

        let monotone_worst = vals
            .windows(2)
            .map(|w| (w[1] - w[0]).max(0.0))
            .fold(0.0, f64::max);
        let origin_gap = (self.weight(0.0) - 1.0).abs();
        let at_one_gap = (0.5 - self.weight(1.0)).max(0.0);
        let tail_worst = ts
            .iter()
            .zip(&vals)
            .filter(|(t, _)| **t > 1.0)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max);

        let check = |name: &'static str, worst: f64| KernelCheck {
            name,
            passed: worst == 0.0,
            worst_violation: worst,
        };
        Ok(KernelReport {
            kernel: self,
            checks: vec![
                check("non-increasing", monotone_worst),
                check("value at 0 is 1", origin_gap),
                check("value at 1 is at least 1/2", at_one_gap),
                check("zero beyond 1", tail_worst),
            ],
        })
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = MssaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rect" | "rectangular" => Ok(Kernel::Rectangular),
            "epan" | "epanechnikov" => Ok(Kernel::EpanechnikovLike),
            "gauss" | "gaussian" => Ok(Kernel::GaussianLike),
            other => Err(MssaError::domain(format!(
                "unknown kernel {other:?}, expected rect, epan or gauss"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelCheck {
    pub name: &'static str,
    pub passed: bool,
    pub worst_violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelReport {
    pub kernel: Kernel,
    pub checks: Vec<KernelCheck>,
}

impl KernelReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn point_values() {
        assert_eq!(Kernel::Rectangular.evaluate(0.5).unwrap(), 1.0);
        assert_eq!(Kernel::GaussianLike.evaluate(0.0).unwrap(), 1.0);
        let g1 = Kernel::GaussianLike.evaluate(1.0).unwrap();
        assert!((g1 - 0.6065306597126334).abs() < 1e-15);
        assert_eq!(Kernel::EpanechnikovLike.evaluate(1.0).unwrap(), 0.5);
        for k in Kernel::ALL {
            assert_eq!(k.evaluate(1.0 + 1e-12).unwrap(), 0.0);
            assert!(k.evaluate(1.0).unwrap() > 0.0);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        for k in Kernel::ALL {
            assert!(k.evaluate(-0.1).is_err());
            assert!(k.evaluate(f64::NAN).is_err());
            assert!(k.evaluate(f64::INFINITY).is_err());
        }
    }

    #[test]
    fn builtins_validate() {
        for k in Kernel::ALL {
            let report = k.validate(100).unwrap();
            assert!(report.all_passed(), "{report:?}");
            assert_eq!(report.checks.len(), 4);
        }
        assert!(Kernel::Rectangular.validate(1).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("rect".parse::<Kernel>().unwrap(), Kernel::Rectangular);
        assert_eq!("epan".parse::<Kernel>().unwrap(), Kernel::EpanechnikovLike);
        assert_eq!("gauss".parse::<Kernel>().unwrap(), Kernel::GaussianLike);
        assert!("bogus".parse::<Kernel>().is_err());
    }

    proptest! {
        #[test]
        fn non_increasing(a in 0.0f64..3.0, b in 0.0f64..3.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for k in Kernel::ALL {
                prop_assert!(k.evaluate(lo).unwrap() >= k.evaluate(hi).unwrap());
            }
        }

        #[test]
        fn zero_outside_support(t in 1.0f64..1e6) {
            prop_assume!(t > 1.0);
            for k in Kernel::ALL {
                prop_assert_eq!(k.evaluate(t).unwrap(), 0.0);
            }
        }
    }
}
