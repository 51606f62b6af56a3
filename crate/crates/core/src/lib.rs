//! Adaptive multiclass nearest-neighbor classification.
//!
//! Weighted nearest-neighbor class-probability estimates are computed at a
//! geometric grid of neighbor counts and aggregated per query point by a
//! stagewise rule: each larger scale is accepted only while its estimate stays
//! close, in Bernoulli Kullback-Leibler divergence scaled by the effective
//! neighbor mass, to the running aggregate. The thresholds gating each stage
//! are calibrated by Monte-Carlo simulation under pure-noise labels.
//!
//! Module map:
//!
//! * [`data`]: labeled datasets and CSV I/O
//! * [`kernels`]: localization kernels
//! * [`neighbors`]: exact k-nearest-neighbor index
//! * [`estimator`]: per-scale weighted estimates
//! * [`mssa`]: stagewise aggregation and prediction
//! * [`calibration`]: critical values
//! * [`synthetic`]: Gaussian-mixture experiments and the Bayes rule
//! * [`evaluation`]: leave-one-out, hold-out, sweeps and error bounds
//! * [`cli`]: the `mssa` command-line pipeline

pub mod calibration;
pub mod cli;
pub mod data;
pub mod error;
pub mod estimator;
pub mod evaluation;
pub mod kernels;
pub mod mssa;
pub mod neighbors;
pub mod synthetic;

pub use calibration::{CalibrationConfig, Propagation, ScaleSelection};
pub use data::{DatasetSchema, LabelColumn, LabeledDataset};
pub use error::{MssaError, Result};
pub use estimator::{ScaleEstimates, ScaleGrid, StackEstimator};
pub use evaluation::EvalReport;
pub use kernels::Kernel;
pub use mssa::{AggregationTrace, CriticalValues, MssaClassifier, Prediction};
pub use neighbors::{Neighbor, NeighborIndex, NeighborList};
pub use synthetic::GaussianMixtureModel;
