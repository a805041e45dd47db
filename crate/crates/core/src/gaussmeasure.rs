//! Standard Gaussian measure of ℓ₂ balls in ℝᵈ and its two closed-form
//! upper bounds.
//!
//! Radii are latent-space radii: callers pass `L₁R` or `R/L₂` themselves.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Result};
use crate::montecarlo::{chunked_mean, McEstimate};
use crate::scalar::{from_usize, lit, Real};
use crate::specfun::regularized_lower_gamma;

/// An ℓ₂ ball in latent space, located by the distance of its center from the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallSpec<T> {
    pub dim: usize,
    pub radius: T,
    pub center_norm: T,
}

impl<T: Real> BallSpec<T> {
    pub fn new(dim: usize, radius: T, center_norm: T) -> Result<Self> {
        if dim == 0 {
            return domain("ball dimension must be >= 1");
        }
        if radius.is_nan() || radius < T::zero() {
            return domain(format!("ball radius must be >= 0, got {radius}"));
        }
        if !center_norm.is_finite() || center_norm < T::zero() {
            return domain(format!("center norm must be finite and >= 0, got {center_norm}"));
        }
        Ok(Self {
            dim,
            radius,
            center_norm,
        })
    }

    pub fn centered(dim: usize, radius: T) -> Result<Self> {
        Self::new(dim, radius, T::zero())
    }
}

/// `Q(B_r)` for the centered ball: the χ²_d CDF at `r²`, i.e. `P(d/2, r²/2)`.
pub fn gaussian_ball_measure_centered<T: Real>(dim: usize, radius: T) -> Result<T> {
    let spec = BallSpec::centered(dim, radius)?;
    let half = lit::<T>(0.5);
    let shape = from_usize::<T>(spec.dim) * half;
    Ok(regularized_lower_gamma(shape, radius * radius * half)?.value)
}

/// Monte Carlo estimate of `Q(ball)` for a ball whose center may be off the origin.
///
/// By rotation invariance the center is placed on the first axis.
pub fn gaussian_ball_measure_mc<T: Real>(
    spec: &BallSpec<T>,
    n: usize,
    seed: u64,
) -> Result<McEstimate<T>> {
    if n == 0 {
        return domain("Monte Carlo sample count must be >= 1");
    }
    let spec = BallSpec::new(spec.dim, spec.radius, spec.center_norm)?;
    if spec.radius == T::zero() {
        return Ok(McEstimate {
            value: T::zero(),
            std_error: T::zero(),
            n,
            seed,
        });
    }
    let r2 = spec.radius.to_f64().unwrap_or(f64::INFINITY).powi(2);
    let c = spec.center_norm.to_f64().unwrap_or(0.0);
    let dim = spec.dim;
    Ok(chunked_mean(n, seed, move |rng| {
        let z0: f64 = StandardNormal.sample(rng);
        let mut dist2 = (z0 - c) * (z0 - c);
        for _ in 1..dim {
            let z: f64 = StandardNormal.sample(rng);
            dist2 += z * z;
        }
        if dist2 <= r2 {
            1.0
        } else {
            0.0
        }
    }))
}

/// `r / √π`, an upper bound on the centered ball measure for `d >= 2`.
///
/// In one dimension the inequality fails for `r` below about 1.563, where
/// `erf(r/√2) > r/√π`.
pub fn ball_measure_upper_sqrt_pi<T: Real>(dim: usize, radius: T) -> Result<T> {
    BallSpec::centered(dim, radius)?;
    Ok(radius / T::PI().sqrt())
}

/// `4 d^{1/4} r`, defined for `d >= 2`.
pub fn ball_measure_upper_ball93<T: Real>(dim: usize, radius: T) -> Result<T> {
    if dim < 2 {
        return domain(format!("4 d^(1/4) r bound requires d >= 2, got d = {dim}"));
    }
    BallSpec::centered(dim, radius)?;
    Ok(lit::<T>(4.0) * from_usize::<T>(dim).powf(lit(0.25)) * radius)
}
