//! Estimation of the per-antenna mutual information of a MIMO link under
//! unknown colored interference, from a small number of observed channel
//! uses.
//!
//! The crate provides:
//!
//! * the channel/interference model and reproducible observation sampling
//!   ([`channel`]);
//! * the standard empirical estimator and the consistent G-estimator with
//!   its per-slot fixed-point parameter ([`estimators`]);
//! * deterministic equivalents for the estimator bias and the asymptotic
//!   variances of both estimators ([`detequiv`]);
//! * a Monte Carlo harness for MSE sweeps and the normalized-statistic
//!   histogram with a Kolmogorov-Smirnov check ([`experiments`]);
//! * text formats for matrices, channel directories, configs and CSV
//!   results ([`io`]).

pub mod channel;
pub mod detequiv;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod io;
pub mod matrix;
pub mod rng;

pub use channel::{ChannelSet, ObservationBlock, ScenarioConfig};
pub use error::{Error, Result};
pub use estimators::EstimateReport;
pub use experiments::{ExperimentConfig, HistogramResult, MseCurvePoint, Sweep};
pub use matrix::{ComplexMatrix, HermitianMatrix};
pub use rng::RngStream;
