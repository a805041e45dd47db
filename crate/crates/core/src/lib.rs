//! Lower bounds on the total variation distance between a target
//! distribution and anything a bi-Lipschitz normalizing flow can produce,
//! plus the machinery to check them: Gaussian ball measures, targets with
//! exact ball masses, certified piecewise-linear and affine flows, TV
//! estimators and the experiment runners behind the `bilip` binary.
//!
//! Numerical code is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod flows;
pub mod gaussmeasure;
pub mod montecarlo;
pub mod quadrature;
pub mod scalar;
pub mod specfun;
pub mod targets;
pub mod tvmetrics;

pub use error::{Error, Result};
pub use scalar::Real;

pub type BiLipschitzConstants64 = bounds::BiLipschitzConstants<f64>;
pub type BoundReport64 = bounds::BoundReport<f64>;
pub type BallSpec64 = gaussmeasure::BallSpec<f64>;
pub type Target64 = targets::TargetDistribution<f64>;
pub type PiecewiseLinearFlow64 = flows::PiecewiseLinearFlow1D<f64>;
pub type AffineFlow64 = flows::AffineFlowD<f64>;
pub type TvEstimate64 = tvmetrics::TvEstimate<f64>;
pub type McEstimate64 = montecarlo::McEstimate<f64>;

pub type Target32 = targets::TargetDistribution<f32>;
pub type PiecewiseLinearFlow32 = flows::PiecewiseLinearFlow1D<f32>;
