//! Stereology of oriented cylinders: estimating the distribution of
//! three-dimensional cylinder features from planar sections.

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod isotonic;
pub mod numeric;
pub mod plugin;
pub mod simulation;

pub use error::{Error, Result};
pub use geometry::{CylinderSample, Observation, ObservationSet, QuantityKind, ValidationReport};
pub use isotonic::{isotonic_cdf, least_concave_majorant, n_hat, u_n, IntegratedCurve, IsotonicConfig, IsotonicEstimate, MonotoneCurve};
pub use plugin::{covariance_hat, moments, n_tilde, plugin_cdf, MomentSet};
