//! Bayesian fault-slip inversion as a box-constrained linear regression.
//!
//! The slip vector `D = (d_s¹, d_d¹, …, d_sᴹ, d_dᴹ)` on a discretized fault
//! is related to station displacements by a linear forward operator `Y = X D + ε`.
//! A truncated Gaussian-process prior with Matérn correlation and a Gaussian
//! likelihood combine into a multivariate truncated normal (MTN) posterior,
//! which [`sampler`] explores with an optimal directional Gibbs scheme mixing
//! eigenvector and covariance-column directions.
//!
//! Module map:
//! - [`geometry`] and [`greens`]: fault mesh, stations, observations, forward operator.
//! - [`prior`]: Matérn correlation, depth weights, prior precision.
//! - [`posterior`]: likelihood and the conjugate MTN posterior.
//! - [`sampler`]: direction ensembles, line sampling, chains, conditioning.
//! - [`hyperopt`]: marginal-posterior objective for the variance hyperparameters.
//! - [`model_selection`]: deviance and DIC, correlation-length grid search.
//! - [`postproc`]: medians, CV maps, MAP/MLE, residual quantiles, moment magnitude.

pub mod binary;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod greens;
pub mod hyperopt;
pub mod linalg;
pub mod model_selection;
pub mod posterior;
pub mod postproc;
pub mod prior;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{FaultMesh, ObservationVector, StationSet};
pub use greens::GreensMatrix;
pub use posterior::{LikelihoodSpec, MtnDistribution};
pub use prior::{MaternParams, PrecisionMatrix, PriorSpec};
pub use sampler::{ChainResult, DirectionSet, Draws, SamplerConfig};
