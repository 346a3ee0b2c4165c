//! System identification of layered linear-threshold networks from
//! firing-rate recordings: preprocessing, intrinsic timescales, permutation
//! tests, the fit objective and multi-start fitting.
//!
//! This module works in `f64` only.

pub mod fit;
pub mod model;
pub mod objective;
pub mod preprocess;
pub mod problem;
pub mod stats;
pub mod synthetic;
pub mod timescale;

pub use fit::{fit, FitConfig, FitReport, StartReport, StartStatus};
pub use model::{Block, Bounds, InputKind, InputSpec, MaskEntry, NodeSpec, ParamLayout, RateSeries, Structure};
pub use objective::{objective, objective_of_series, predict, r_squared, ObjectiveValue};
pub use preprocess::{bin_rates, gaussian_smooth, UniformSeries};
pub use problem::SysIdProblem;
pub use stats::randomization_test;
pub use timescale::{autocorr_timescale, fit_exponential, mean_autocorrelation, TimescaleFit};
