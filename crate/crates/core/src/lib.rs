//! Reliability estimation with nonhomogeneous Markov chains built from
//! per-stage Gaussian response moments.
//!
//! The response axis is cut into bins ([`state_space`]); consecutive stages are
//! joined by bivariate normal laws whose rectangle probabilities give the
//! one-step transition matrices ([`tpm`]). Propagating the stage-1 bin
//! probabilities through the chain yields response statistics and failure
//! probabilities ([`reliability`]). [`metric`] provides the fidelity-based
//! statistical distance, and [`mc_oracle`] an independent simulation check.

pub mod distributions;
pub mod error;
pub mod mc_oracle;
pub mod metric;
pub mod reliability;
pub mod stage;
pub mod state_space;
pub mod tpm;
pub mod warning;

pub use distributions::{Gaussian1D, Gaussian2D, Interval};
pub use error::{Error, Result};
pub use metric::{DiscreteDist, StatisticalDistance};
pub use reliability::{Mode, ReliabilityProfile, StageDistribution};
pub use stage::StageMoments;
pub use state_space::{AggregationMap, StateSpace};
pub use tpm::{ChainModel, TransitionMatrix};
pub use warning::Warning;
