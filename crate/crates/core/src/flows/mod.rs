//! Bi-Lipschitz flows with exact Jacobians and exact Lipschitz constants.
//!
//! A flow maps data `x` to latent `z = F(x)`; the model density is the
//! change-of-variables density `|det J_F(x)| q(F(x))` with `q` the standard
//! Gaussian of matching dimension.

mod affine;
mod fit;
mod piecewise;

pub use affine::AffineFlowD;
pub use fit::{clipped_quantile_flow, fit_projected_gradient, FitObjective, FitOptions, FitReport};
pub use piecewise::PiecewiseLinearFlow1D;

use crate::bounds::BiLipschitzConstants;
use crate::scalar::{lit, Real};

pub trait Flow<T: Real> {
    fn dim(&self) -> usize;

    /// Normalizing direction `x -> z`.
    fn forward(&self, x: &[T]) -> Vec<T>;

    /// Generative direction `z -> x`.
    fn inverse(&self, z: &[T]) -> Vec<T>;

    fn abs_det_jacobian(&self, x: &[T]) -> T;

    /// Exact `(L₁, L₂)` for this flow.
    fn certify(&self) -> BiLipschitzConstants<T>;

    fn model_density(&self, x: &[T]) -> T {
        let z = self.forward(x);
        self.abs_det_jacobian(x) * std_normal_density(&z)
    }
}

/// Standard Gaussian density in `z.len()` dimensions.
pub fn std_normal_density<T: Real>(z: &[T]) -> T {
    let sq = z.iter().fold(T::zero(), |acc, &v| acc + v * v);
    let d = z.len() as i32;
    (-(sq * lit(0.5))).exp() / T::TAU().sqrt().powi(d)
}
