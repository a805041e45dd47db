//! Total variation distance and the maximum precision / recall it controls.
//!
//! TV is evaluated through `sup_A |P(A) − Q(A)| = ½ ∫ |p − q|`: the supremum
//! is attained at `A = {p > q}`, where `P(A) − Q(A) = ∫ (p − q)₊`, and since
//! both densities integrate to one, `∫ (p − q)₊ = ∫ (q − p)₊ = ½ ∫ |p − q|`.

use std::fmt;

use crate::error::{domain, Error, Result};
use crate::flows::{Flow, PiecewiseLinearFlow1D};
use crate::montecarlo::chunked_mean;
use crate::quadrature::{integrate, integrate_with_breaks};
use crate::scalar::{fmt_real, lit, Real};
use crate::specfun::{normal_interval_mass, normal_pdf};
use crate::targets::{McConfig, TargetDistribution};

/// Latent radius beyond which the flow's mass (≈ 2e-17 per side) is dropped.
pub const LATENT_CUTOFF: f64 = 8.5;
/// Target tail mass (per side) dropped from the quadrature domain.
pub const TARGET_TAIL: f64 = 1e-13;
/// Mass deficits above this are recorded on the estimate.
pub const MASS_DEFICIT_TOL: f64 = 1e-9;

const PIECE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvMethod {
    Quadrature,
    MonteCarlo,
}

impl TvMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TvMethod::Quadrature => "quadrature",
            TvMethod::MonteCarlo => "monte_carlo",
        }
    }
}

impl fmt::Display for TvMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvEstimate<T> {
    pub value: T,
    pub method: TvMethod,
    /// Zero for quadrature.
    pub std_error: T,
    /// Panels (quadrature) or samples (Monte Carlo).
    pub n: usize,
    pub seed: Option<u64>,
    /// Largest missing mass of either density on the domain, when above
    /// [`MASS_DEFICIT_TOL`].
    pub mass_deficit: Option<T>,
}

impl<T: Real> TvEstimate<T> {
    pub fn csv_header() -> &'static str {
        "value,method,std_error,n,seed"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            fmt_real(self.value),
            self.method,
            fmt_real(self.std_error),
            self.n,
            self.seed.map(|s| s.to_string()).unwrap_or_default()
        )
    }
}

/// `½ ∫ |p* − p̂|` over `domain`, with panel edges at every breakpoint.
pub fn tv_quadrature_1d<T, P, Q>(
    p_star: P,
    p_hat: Q,
    domain: (T, T),
    breakpoints: &[T],
    panels: usize,
) -> Result<TvEstimate<T>>
where
    T: Real,
    P: Fn(T) -> T,
    Q: Fn(T) -> T,
{
    let (a, b) = domain;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return domain_err(a, b);
    }
    let tol: T = lit(1e-11);
    let diff = integrate_with_breaks(&|x| (p_star(x) - p_hat(x)).abs(), a, b, breakpoints, panels, tol);
    let mass_p = integrate_with_breaks(&p_star, a, b, breakpoints, panels, tol).value;
    let mass_q = integrate_with_breaks(&p_hat, a, b, breakpoints, panels, tol).value;
    if !(diff.value.is_finite() && mass_p.is_finite() && mass_q.is_finite()) {
        return Err(Error::NonFinite("density evaluated to a non-finite value".into()));
    }
    let deficit = (T::one() - mass_p).abs().max((T::one() - mass_q).abs());
    Ok(TvEstimate {
        value: (diff.value * lit(0.5)).max(T::zero()).min(T::one()),
        method: TvMethod::Quadrature,
        std_error: T::zero(),
        n: diff.intervals,
        seed: None,
        mass_deficit: (deficit > lit(MASS_DEFICIT_TOL)).then_some(deficit),
    })
}

fn domain_err<T: Real, R>(a: T, b: T) -> Result<R> {
    domain(format!("quadrature domain must be a finite interval, got [{a}, {b}]"))
}

/// Per-region pieces of `∫ |p* − p̂|` for a piecewise-linear flow.
///
/// Region 0 is the left tail, region `j` (1 ≤ j < K) is the segment between
/// knots `j−1` and `j`, region `K` the right tail. Changing knot `z_i` only
/// moves regions `i` and `i+1`, which is what makes finite-difference
/// fitting cheap.
pub(crate) struct Regions<'a, T> {
    target: &'a TargetDistribution<T>,
    breaks: Vec<T>,
    lo: T,
    hi: T,
}

/// What is integrated over each region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Integrand {
    AbsDiff,
    /// `p* · (−ln p̂)`.
    CrossEntropy,
}

impl<'a, T: Real> Regions<'a, T> {
    pub(crate) fn new(target: &'a TargetDistribution<T>) -> Result<Self> {
        if target.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: target.dim(),
            });
        }
        let (lo, hi) = target.effective_support_1d(lit(TARGET_TAIL))?;
        Ok(Self {
            target,
            breaks: target.breakpoints_1d(),
            lo,
            hi,
        })
    }

    /// Integral over `[xa, xb]` with the flow `z = za + s (x − xa)` there.
    fn segment(&self, xa: T, xb: T, za: T, s: T, what: Integrand) -> T {
        if !(xb > xa) {
            return T::zero();
        }
        let t = self.target;
        let hat = |x: T| s * normal_pdf(za + s * (x - xa));
        let half_ln_tau: T = lit(0.918_938_533_204_672_8);
        let tol: T = lit(PIECE_TOL);
        match what {
            Integrand::AbsDiff => {
                integrate_with_breaks(&|x| (t.density_1d(x) - hat(x)).abs(), xa, xb, &self.breaks, 1, tol).value
            }
            Integrand::CrossEntropy => {
                let ln_s = s.ln();
                let f = |x: T| {
                    let p = t.density_1d(x);
                    if p == T::zero() {
                        return T::zero();
                    }
                    let z = za + s * (x - xa);
                    p * (z * z * lit(0.5) + half_ln_tau - ln_s)
                };
                integrate_with_breaks(&f, xa, xb, &self.breaks, 1, tol).value
            }
        }
    }

    /// Region `j` of a flow with knots `(xs, zs)` and tail slopes `(ls, rs)`.
    pub(crate) fn region(&self, xs: &[T], zs: &[T], ls: T, rs: T, j: usize, what: Integrand) -> T {
        let k = xs.len();
        let cut: T = lit(LATENT_CUTOFF);
        if j == 0 {
            let lo = self.lo.min(xs[0] - (cut + zs[0]) / ls);
            self.segment(lo, xs[0], zs[0] + ls * (lo - xs[0]), ls, what)
        } else if j == k {
            let hi = self.hi.max(xs[k - 1] + (cut - zs[k - 1]) / rs);
            self.segment(xs[k - 1], hi, zs[k - 1], rs, what)
        } else {
            let s = (zs[j] - zs[j - 1]) / (xs[j] - xs[j - 1]);
            self.segment(xs[j - 1], xs[j], zs[j - 1], s, what)
        }
    }

    pub(crate) fn all(&self, xs: &[T], zs: &[T], ls: T, rs: T, what: Integrand) -> Vec<T> {
        (0..=xs.len()).map(|j| self.region(xs, zs, ls, rs, j, what)).collect()
    }

    /// Missing mass of either density on the integration domain.
    fn deficit(&self, flow: &PiecewiseLinearFlow1D<T>) -> Result<T> {
        let cut: T = lit(LATENT_CUTOFF);
        let lo = self.lo.min(flow.inverse_1d(-cut));
        let hi = self.hi.max(flow.inverse_1d(cut));
        let p = self.target.interval_mass_1d(lo, hi);
        let q = normal_interval_mass(flow.forward_1d(lo), flow.forward_1d(hi));
        Ok((T::one() - p).abs().max((T::one() - q).abs()))
    }
}

/// Quadrature TV between a 1D target and a piecewise-linear flow, with panel
/// edges at the target's jumps and at every flow knot.
pub fn tv_target_flow_1d<T: Real>(
    target: &TargetDistribution<T>,
    flow: &PiecewiseLinearFlow1D<T>,
) -> Result<TvEstimate<T>> {
    let regions = Regions::new(target)?;
    let (ls, rs) = flow.tail_slopes();
    let pieces = regions.all(flow.knots_x(), flow.knots_z(), ls, rs, Integrand::AbsDiff);
    let total = pieces.iter().fold(T::zero(), |a, &b| a + b);
    if !total.is_finite() {
        return Err(Error::NonFinite("TV integrand".into()));
    }
    let deficit = regions.deficit(flow)?;
    Ok(TvEstimate {
        value: (total * lit(0.5)).max(T::zero()).min(T::one()),
        method: TvMethod::Quadrature,
        std_error: T::zero(),
        n: pieces.len(),
        seed: None,
        mass_deficit: (deficit > lit(MASS_DEFICIT_TOL)).then_some(deficit),
    })
}

/// `E_{x∼P*}[(1 − p̂(x)/p*(x))₊]`, which equals TV because every flow here
/// has full support.
pub fn tv_monte_carlo<T, F>(target: &TargetDistribution<T>, flow: &F, n: usize, seed: u64) -> Result<TvEstimate<T>>
where
    T: Real,
    F: Flow<T> + Sync,
{
    if flow.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: flow.dim(),
        });
    }
    if n == 0 {
        return domain("Monte Carlo TV needs n >= 1");
    }
    let cum = target.cumulative_weights();
    let est = chunked_mean::<T, _>(n, seed, |rng| {
        let x = target.draw(&cum, rng);
        let p = target.density_unchecked(&x);
        let q = flow.model_density(&x);
        let v = (T::one() - q / p).max(T::zero());
        v.to_f64().unwrap_or(f64::NAN)
    });
    if !est.value.is_finite() {
        return Err(Error::NonFinite("flow density on a target sample".into()));
    }
    Ok(TvEstimate {
        value: est.value,
        method: TvMethod::MonteCarlo,
        std_error: est.std_error,
        n,
        seed: Some(seed),
        mass_deficit: None,
    })
}

/// Maximum precision `ᾱ = P̂(Supp P*)`, with the support widened by
/// `support_tolerance`. Exact for 1D flows; Monte Carlo over latent draws
/// otherwise.
pub fn max_precision<T, F>(
    target: &TargetDistribution<T>,
    flow: &F,
    support_tolerance: T,
    mc: McConfig,
) -> Result<T>
where
    T: Real,
    F: Flow<T> + Sync,
{
    if flow.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: flow.dim(),
        });
    }
    if !(support_tolerance >= T::zero()) {
        return domain("support tolerance must be >= 0");
    }
    if target.dim() == 1 {
        let Some(intervals) = target.support_intervals_1d()? else {
            return Ok(T::one());
        };
        // A continuous bijection of ℝ is monotone, so the image of an
        // interval is the interval between the endpoint images.
        let mass = intervals.iter().fold(T::zero(), |acc, &(a, b)| {
            let za = flow.forward(&[a - support_tolerance])[0];
            let zb = flow.forward(&[b + support_tolerance])[0];
            acc + normal_interval_mass(za.min(zb), za.max(zb))
        });
        return Ok(mass.min(T::one()));
    }
    if target.components().iter().any(|c| c.weight > T::zero() && c.shape == crate::targets::Shape::Gaussian) {
        return Ok(T::one());
    }
    let d = target.dim();
    let est = chunked_mean::<T, _>(mc.samples, mc.seed, |rng| {
        use rand_distr::{Distribution, StandardNormal};
        let z: Vec<T> = (0..d).map(|_| lit(StandardNormal.sample(rng))).collect();
        let x = flow.inverse(&z);
        f64::from(u8::from(target.in_support_within(&x, support_tolerance)))
    });
    Ok(est.value)
}

/// Maximum recall `β̄ = P*(Supp P̂)`: one, since flows push a full-support
/// Gaussian through a bijection of the whole space.
pub fn max_recall<T: Real, F: Flow<T>>(_target: &TargetDistribution<T>, _flow: &F) -> T {
    T::one()
}

/// Plain `½∫|p − q|` on `[a, b]` without breakpoints, for quick checks.
pub fn half_l1<T: Real, P: Fn(T) -> T, Q: Fn(T) -> T>(p: P, q: Q, a: T, b: T) -> T {
    integrate(&|x| (p(x) - q(x)).abs(), a, b, lit(1e-11)).value * lit(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{clipped_quantile_flow, AffineFlowD};

    fn uniform(lo: f64, hi: f64) -> impl Fn(f64) -> f64 {
        move |x| if x >= lo && x <= hi { 1.0 / (hi - lo) } else { 0.0 }
    }

    #[test]
    fn overlapping_uniforms() {
        let tv = tv_quadrature_1d(uniform(0.0, 1.0), uniform(0.5, 1.5), (-1.0, 3.0), &[0.0, 0.5, 1.0, 1.5], 1).unwrap();
        assert!((tv.value - 0.5).abs() < 1e-12);
        assert_eq!(tv.mass_deficit, None);
        let disjoint = tv_quadrature_1d(uniform(0.0, 1.0), uniform(2.0, 3.0), (-1.0, 4.0), &[0.0, 1.0, 2.0, 3.0], 1).unwrap();
        assert!((disjoint.value - 1.0).abs() < 1e-12);
        let same = tv_quadrature_1d(uniform(0.0, 1.0), uniform(0.0, 1.0), (-1.0, 2.0), &[0.0, 1.0], 1).unwrap();
        assert_eq!(same.value, 0.0);
    }

    #[test]
    fn symmetric_in_arguments() {
        let p = |x: f64| normal_pdf(x);
        let q = |x: f64| normal_pdf((x - 0.7) / 1.3) / 1.3;
        let a = tv_quadrature_1d(p, q, (-20.0, 20.0), &[], 8).unwrap().value;
        let b = tv_quadrature_1d(q, p, (-20.0, 20.0), &[], 8).unwrap().value;
        assert!((a - b).abs() < 1e-12);
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn mass_deficit_is_recorded() {
        let tv = tv_quadrature_1d(|x: f64| normal_pdf(x), |x: f64| normal_pdf(x - 1.0), (-2.0, 2.0), &[], 4).unwrap();
        assert!(tv.mass_deficit.unwrap() > 0.01);
    }

    #[test]
    fn gaussian_shift_closed_form() {
        // TV(N(0,1), N(μ,1)) = 2Φ(μ/2) − 1.
        let mu = 0.8;
        let tv = tv_quadrature_1d(|x: f64| normal_pdf(x), |x: f64| normal_pdf(x - mu), (-30.0, 30.0), &[], 4).unwrap();
        let exact = crate::specfun::erf(mu / 2.0 / std::f64::consts::SQRT_2);
        assert!((tv.value - exact).abs() < 1e-10);
    }

    #[test]
    fn flow_tv_matches_generic_quadrature() {
        let t = TargetDistribution::<f64>::dense_spike(0.9, 0.1).unwrap();
        let flow = PiecewiseLinearFlow1D::from_slopes(vec![-1.0, -0.05, 0.05, 1.0], &[0.5, 3.0, 0.5], -0.6, 1.0, 1.0).unwrap();
        let fast = tv_target_flow_1d(&t, &flow).unwrap();
        let mut breaks = t.breakpoints_1d();
        breaks.extend_from_slice(flow.knots_x());
        let slow = tv_quadrature_1d(|x| t.density_1d(x), |x| flow.density_1d(x), (-40.0, 40.0), &breaks, 64).unwrap();
        assert!((fast.value - slow.value).abs() < 1e-9, "{} vs {}", fast.value, slow.value);
        assert_eq!(fast.mass_deficit, None);
    }

    #[test]
    fn identity_flow_on_standard_gaussian() {
        let t = TargetDistribution::<f64>::standard_gaussian(1).unwrap();
        let id = PiecewiseLinearFlow1D::identity();
        assert!(tv_target_flow_1d(&t, &id).unwrap().value < 1e-12);
        let mc = tv_monte_carlo(&t, &id, 10_000, 1).unwrap();
        assert_eq!(mc.value, 0.0);
        assert_eq!(max_precision(&t, &id, 0.0, McConfig::default()).unwrap(), 1.0);
        assert_eq!(max_recall(&t, &id), 1.0);
    }

    #[test]
    fn bimodal_precision_example() {
        let t = TargetDistribution::<f64>::separated_bimodal(2.0, 0.1).unwrap();
        let id = PiecewiseLinearFlow1D::identity();
        let alpha = max_precision(&t, &id, 0.0, McConfig::default()).unwrap();
        let oracle = 2.0 * (crate::specfun::normal_cdf(1.05) - crate::specfun::normal_cdf(0.95));
        assert!((alpha - oracle).abs() < 1e-14);
        assert!((alpha - 0.0484).abs() < 5e-5);
        let tv = tv_target_flow_1d(&t, &id).unwrap().value;
        assert!(tv >= 1.0 - alpha - 1e-6);
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature() {
        let t = TargetDistribution::<f64>::dense_spike(0.5, 0.4).unwrap();
        let flow = clipped_quantile_flow(&t, 3.0, 3.0, 32).unwrap();
        let q = tv_target_flow_1d(&t, &flow).unwrap().value;
        let mc = tv_monte_carlo(&t, &flow, 100_000, 11).unwrap();
        assert!((mc.value - q).abs() <= 4.0 * mc.std_error, "{} vs {} ± {}", mc.value, q, mc.std_error);
    }

    #[test]
    fn monte_carlo_is_deterministic_and_shrinks() {
        let t = TargetDistribution::<f64>::dense_spike(0.9, 0.1).unwrap();
        let id = PiecewiseLinearFlow1D::identity();
        let a = tv_monte_carlo(&t, &id, 20_000, 3).unwrap();
        assert_eq!(a, tv_monte_carlo(&t, &id, 20_000, 3).unwrap());
        let b = tv_monte_carlo(&t, &id, 80_000, 3).unwrap();
        let c = tv_monte_carlo(&t, &id, 320_000, 3).unwrap();
        for (small, big) in [(a.std_error, b.std_error), (b.std_error, c.std_error)] {
            let ratio = small / big;
            assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
        }
    }

    #[test]
    fn affine_2d_against_radial_oracle() {
        // Target N(0, I₂); flow z = 2x gives p̂ = N(0, I₂/4). Both radial, so
        // TV = ½ ∫₀^∞ |f(r) − g(r)| dr with f, g the radius densities.
        let t = TargetDistribution::<f64>::standard_gaussian(2).unwrap();
        let flow = AffineFlowD::scaled_identity(2, 2.0, vec![0.0, 0.0]).unwrap();
        let f = |r: f64| r * (-r * r / 2.0).exp();
        let g = |r: f64| 4.0 * r * (-2.0 * r * r).exp();
        let oracle = half_l1(f, g, 0.0, 40.0);
        // Densities cross at r² = (2/3) ln 4; TV = e^{−r²/2} − e^{−2r²} there.
        let r2 = 2.0 / 3.0 * 4f64.ln();
        let closed = (-r2 / 2.0).exp() - (-2.0 * r2).exp();
        assert!((oracle - closed).abs() < 1e-10);
        let mc = tv_monte_carlo(&t, &flow, 100_000, 5).unwrap();
        assert!((mc.value - oracle).abs() <= 4.0 * mc.std_error);
    }

    #[test]
    fn csv_row() {
        let e = TvEstimate {
            value: 0.5_f64,
            method: TvMethod::MonteCarlo,
            std_error: 0.01,
            n: 100,
            seed: Some(7),
            mass_deficit: None,
        };
        assert_eq!(TvEstimate::<f64>::csv_header(), "value,method,std_error,n,seed");
        assert_eq!(e.to_csv_row(), "5.0000000000000000e-1,monte_carlo,1.0000000000000000e-2,100,7");
    }
}
