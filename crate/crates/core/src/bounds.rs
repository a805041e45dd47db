//! Lower bounds on the TV distance between a target and any distribution
//! pushed forward from a standard Gaussian by an (L₁, L₂)-bi-Lipschitz map,
//! plus the matching upper bound on maximum precision.
//!
//! Every bound is pointwise in its witness set (a ball or a subset of given
//! volume and mass). The supremum over witnesses is taken by
//! [`maximize_over_radius`] and [`maximize_over_centers`].
//!
//! Negative values are reported as computed with `valid = false`. Values
//! above one are clamped to one and the raw value is kept in `raw_bound`.

use std::fmt;
use std::str::FromStr;

use num_traits::pow;

use crate::error::{domain, Error, Result};
pub use crate::scalar::fmt_real;
use crate::scalar::{from_usize, lit, Real};
use crate::specfun::regularized_lower_gamma;

/// Where a pair of Lipschitz constants came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    /// Supplied by the caller (a budget, not a measurement).
    Declared,
    /// Max and min segment slope of a 1D piecewise-linear map.
    SegmentSlopes,
    /// Largest and smallest singular value of an affine map.
    SingularValues,
}

/// `F` is `l1`-Lipschitz and `F⁻¹` is `l2`-Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiLipschitzConstants<T> {
    l1: T,
    l2: T,
    certificate: Certificate,
}

impl<T: Real> BiLipschitzConstants<T> {
    pub fn new(l1: T, l2: T) -> Result<Self> {
        Self::with_certificate(l1, l2, Certificate::Declared)
    }

    pub fn with_certificate(l1: T, l2: T, certificate: Certificate) -> Result<Self> {
        if !(l1.is_finite() && l1 > T::zero()) {
            return domain(format!("L1 must be finite and > 0, got {l1}"));
        }
        if !(l2.is_finite() && l2 > T::zero()) {
            return domain(format!("L2 must be finite and > 0, got {l2}"));
        }
        Ok(Self {
            l1,
            l2,
            certificate,
        })
    }

    pub fn l1(&self) -> T {
        self.l1
    }

    pub fn l2(&self) -> T {
        self.l2
    }

    pub fn certificate(&self) -> Certificate {
        self.certificate
    }

    /// A bijection cannot contract and expand every distance at once: `l1 l2 >= 1`.
    pub fn is_consistent_with_bijection(&self) -> bool {
        self.l1 * self.l2 >= T::one() - T::epsilon() * lit(8.0)
    }

    /// Jacobian determinant range `[l2^-d, l1^d]`.
    pub fn det_jacobian_range(&self, dim: usize) -> (T, T) {
        (T::one() / pow(self.l2, dim), pow(self.l1, dim))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TheoremId {
    /// High-density subset, any shape.
    T1,
    /// High-density ball, `r/√π` latent bound.
    T2a,
    /// High-density ball, `4 d^{1/4} r` latent bound.
    T2b,
    /// Low-density ball around the preimage of the latent origin.
    T3,
    /// Two modes at distance `D`.
    Cor1,
    /// Gaussian-mixture latent with `K` modes.
    Mix,
    /// Maximum precision.
    Prec,
}

impl TheoremId {
    pub fn as_str(&self) -> &'static str {
        match self {
            TheoremId::T1 => "T1",
            TheoremId::T2a => "T2a",
            TheoremId::T2b => "T2b",
            TheoremId::T3 => "T3",
            TheoremId::Cor1 => "COR1",
            TheoremId::Mix => "MIX",
            TheoremId::Prec => "PREC",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    /// Case-insensitive.
    fn from_str(s: &str) -> Result<Self> {
        let all = [
            TheoremId::T1,
            TheoremId::T2a,
            TheoremId::T2b,
            TheoremId::T3,
            TheoremId::Cor1,
            TheoremId::Mix,
            TheoremId::Prec,
        ];
        all.into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Unsupported(format!("unknown theorem `{s}` (T1, T2a, T2b, T3, COR1, MIX, PREC)")))
    }
}

/// The set a bound was evaluated on.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Witness<T> {
    pub center: Option<Vec<T>>,
    pub radius: Option<T>,
    pub volume: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<T> {
    pub theorem: TheoremId,
    /// Named inputs in a fixed order per theorem.
    pub inputs: Vec<(&'static str, T)>,
    /// `min(raw_bound, 1)`.
    pub lower_bound_tv: T,
    pub raw_bound: T,
    pub witness: Witness<T>,
    /// `lower_bound_tv > 0`.
    pub valid: bool,
    /// The inequality is strict (`TV > bound`).
    pub strict: bool,
    /// A gamma term fell below 1e-300 and was reported as zero.
    pub underflow: bool,
}

impl<T: Real> BoundReport<T> {
    fn new(theorem: TheoremId, inputs: Vec<(&'static str, T)>, raw: T, witness: Witness<T>) -> Self {
        let lower = raw.min(T::one());
        Self {
            theorem,
            inputs,
            lower_bound_tv: lower,
            raw_bound: raw,
            witness,
            valid: lower > T::zero(),
            strict: false,
            underflow: false,
        }
    }

    pub fn input(&self, name: &str) -> Option<T> {
        self.inputs.iter().find(|(k, _)| *k == name).map(|&(_, v)| v)
    }

    /// `theorem_id,<input names>,lower_bound_tv,valid`.
    pub fn csv_header(&self) -> String {
        let mut cols = vec!["theorem_id".to_string()];
        cols.extend(self.inputs.iter().map(|(k, _)| k.to_string()));
        cols.push("lower_bound_tv".into());
        cols.push("valid".into());
        cols.join(",")
    }

    pub fn to_csv_row(&self) -> String {
        let mut cols = vec![self.theorem.as_str().to_string()];
        cols.extend(self.inputs.iter().map(|&(_, v)| fmt_real(v)));
        cols.push(fmt_real(self.lower_bound_tv));
        cols.push(self.valid.to_string());
        cols.join(",")
    }
}

fn check_probability<T: Real>(name: &str, p: T) -> Result<()> {
    if p.is_nan() || p < T::zero() || p > T::one() {
        return domain(format!("{name} must lie in [0, 1], got {p}"));
    }
    Ok(())
}

fn check_positive<T: Real>(name: &str, v: T) -> Result<()> {
    if !(v.is_finite() && v > T::zero()) {
        return domain(format!("{name} must be finite and > 0, got {v}"));
    }
    Ok(())
}

fn check_nonneg<T: Real>(name: &str, v: T) -> Result<()> {
    if !(v.is_finite() && v >= T::zero()) {
        return domain(format!("{name} must be finite and >= 0, got {v}"));
    }
    Ok(())
}

/// Per-unit-volume density ceiling `(L₁ / (4 L₂ √(2π)))^d` of the high-density subset bound.
pub fn theorem1_density_threshold<T: Real>(consts: &BiLipschitzConstants<T>, dim: usize) -> T {
    let denom = lit::<T>(4.0) * consts.l2() * T::TAU().sqrt();
    pow(consts.l1() / denom, dim)
}

/// `mass_a - vol_a (L₁ / (4 L₂ √(2π)))^d` for one subset `A`.
pub fn theorem1_bound<T: Real>(
    vol_a: T,
    mass_a: T,
    consts: &BiLipschitzConstants<T>,
    dim: usize,
) -> Result<BoundReport<T>> {
    check_positive("subset volume", vol_a)?;
    check_probability("subset mass", mass_a)?;
    if dim == 0 {
        return domain("dimension must be >= 1");
    }
    let raw = mass_a - vol_a * theorem1_density_threshold(consts, dim);
    Ok(BoundReport::new(
        TheoremId::T1,
        vec![
            ("vol_a", vol_a),
            ("mass_a", mass_a),
            ("l1", consts.l1()),
            ("l2", consts.l2()),
            ("dim", from_usize(dim)),
        ],
        raw,
        Witness {
            volume: Some(vol_a),
            ..Witness::default()
        },
    ))
}

/// `P*(B_R) - R L₁ / √π`.
pub fn theorem2_bound_sqrt_pi<T: Real>(mass_ball: T, radius: T, l1: T) -> Result<BoundReport<T>> {
    check_probability("ball mass", mass_ball)?;
    check_positive("radius", radius)?;
    check_positive("L1", l1)?;
    let raw = mass_ball - radius * l1 / T::PI().sqrt();
    Ok(BoundReport::new(
        TheoremId::T2a,
        vec![("mass_ball", mass_ball), ("radius", radius), ("l1", l1)],
        raw,
        Witness {
            radius: Some(radius),
            ..Witness::default()
        },
    ))
}

/// `P*(B_R) - 4 d^{1/4} R L₁` (strict), for `d >= 2`.
pub fn theorem2_bound_ball93<T: Real>(
    mass_ball: T,
    radius: T,
    l1: T,
    dim: usize,
) -> Result<BoundReport<T>> {
    if dim < 2 {
        return domain(format!("4 d^(1/4) R L1 bound requires d >= 2, got {dim}"));
    }
    check_probability("ball mass", mass_ball)?;
    check_positive("radius", radius)?;
    check_positive("L1", l1)?;
    let dim_t = from_usize::<T>(dim);
    let raw = mass_ball - lit::<T>(4.0) * dim_t.powf(lit(0.25)) * radius * l1;
    let mut report = BoundReport::new(
        TheoremId::T2b,
        vec![
            ("mass_ball", mass_ball),
            ("radius", radius),
            ("l1", l1),
            ("dim", dim_t),
        ],
        raw,
        Witness {
            radius: Some(radius),
            ..Witness::default()
        },
    );
    report.strict = true;
    Ok(report)
}

/// `Q(B_{R/L₂})` with underflow detection.
fn latent_ball_mass<T: Real>(radius: T, l2: T, dim: usize) -> Result<(T, bool)> {
    if radius == T::zero() {
        return Ok((T::zero(), false));
    }
    let half = lit::<T>(0.5);
    let shape = from_usize::<T>(dim) * half;
    let x = radius * radius / (lit::<T>(2.0) * l2 * l2);
    let p = regularized_lower_gamma(shape, x)?;
    let floor = lit::<T>(1e-300).max(T::min_positive_value());
    if p.value < floor {
        Ok((T::zero(), true))
    } else {
        Ok((p.value, false))
    }
}

/// `γ(d/2, R²/(2L₂²))/Γ(d/2) - P*(B_{R, F⁻¹(0)})`.
///
/// `mass_ball_at_center` must be the target mass of the ball centered at
/// the preimage of the latent origin.
pub fn theorem3_bound<T: Real>(
    mass_ball_at_center: T,
    radius: T,
    l2: T,
    dim: usize,
) -> Result<BoundReport<T>> {
    check_probability("ball mass", mass_ball_at_center)?;
    check_nonneg("radius", radius)?;
    check_positive("L2", l2)?;
    if dim == 0 {
        return domain("dimension must be >= 1");
    }
    let (latent, underflow) = latent_ball_mass(radius, l2, dim)?;
    let mut report = BoundReport::new(
        TheoremId::T3,
        vec![
            ("mass_ball", mass_ball_at_center),
            ("radius", radius),
            ("l2", l2),
            ("dim", from_usize(dim)),
        ],
        latent - mass_ball_at_center,
        Witness {
            radius: Some(radius),
            ..Witness::default()
        },
    );
    report.underflow = underflow;
    Ok(report)
}

/// `γ(d/2, D²/(2L₂²))/Γ(d/2)` for two modes at distance `D`.
pub fn corollary_separated_modes<T: Real>(dist: T, l2: T, dim: usize) -> Result<BoundReport<T>> {
    check_nonneg("mode distance", dist)?;
    let t3 = theorem3_bound(T::zero(), dist, l2, dim)?;
    let mut report = BoundReport::new(
        TheoremId::Cor1,
        vec![("dist", dist), ("l2", l2), ("dim", from_usize(dim))],
        t3.raw_bound,
        t3.witness,
    );
    report.underflow = t3.underflow;
    Ok(report)
}

/// `P*(B_R) - (1/K) R L₁ / (σ √π)` with `σ` the caller's latent scale product.
pub fn mixture_bound<T: Real>(
    mass_ball: T,
    radius: T,
    l1: T,
    k: usize,
    sigma_product_term: T,
) -> Result<BoundReport<T>> {
    check_probability("ball mass", mass_ball)?;
    check_positive("radius", radius)?;
    check_positive("L1", l1)?;
    check_positive("sigma product", sigma_product_term)?;
    if k == 0 {
        return domain("mixture must have K >= 1 modes");
    }
    let k_t = from_usize::<T>(k);
    let raw = mass_ball - radius * l1 / (k_t * sigma_product_term * T::PI().sqrt());
    Ok(BoundReport::new(
        TheoremId::Mix,
        vec![
            ("mass_ball", mass_ball),
            ("radius", radius),
            ("l1", l1),
            ("k", k_t),
            ("sigma_product", sigma_product_term),
        ],
        raw,
        Witness {
            radius: Some(radius),
            ..Witness::default()
        },
    ))
}

/// Upper bound on the maximum precision: `1 - γ(d/2, D²/(2L₂²))/Γ(d/2)`.
pub fn precision_upper_bound<T: Real>(dist: T, l2: T, dim: usize) -> Result<T> {
    let cor = corollary_separated_modes(dist, l2, dim)?;
    Ok((T::one() - cor.lower_bound_tv).max(T::zero()).min(T::one()))
}

/// `TV >= 1 - ᾱ`.
pub fn tv_from_max_precision<T: Real>(alpha_bar: T) -> Result<T> {
    check_probability("maximum precision", alpha_bar)?;
    Ok(T::one() - alpha_bar)
}

/// `TV >= 1 - β̄`.
pub fn tv_from_max_recall<T: Real>(beta_bar: T) -> Result<T> {
    check_probability("maximum recall", beta_bar)?;
    Ok(T::one() - beta_bar)
}

/// Radius grid for the supremum search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusSearch<T> {
    pub min: T,
    pub max: T,
    pub grid: usize,
    /// Geometric spacing instead of linear.
    pub log_spaced: bool,
    pub golden_iters: usize,
}

impl<T: Real> RadiusSearch<T> {
    pub fn linear(min: T, max: T, grid: usize) -> Self {
        Self {
            min,
            max,
            grid,
            log_spaced: false,
            golden_iters: 60,
        }
    }

    pub fn geometric(min: T, max: T, grid: usize) -> Self {
        Self {
            log_spaced: true,
            ..Self::linear(min, max, grid)
        }
    }

    fn point(&self, i: usize) -> T {
        let n = self.grid.max(2) - 1;
        let t = from_usize::<T>(i) / from_usize::<T>(n);
        if self.log_spaced {
            (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp()
        } else {
            self.min + t * (self.max - self.min)
        }
    }
}

/// Supremum of `bound(r)` over `r` in the search range: grid scan, then a
/// golden-section refinement on the bracket around the best grid point.
pub fn maximize_over_radius<T, F>(search: &RadiusSearch<T>, bound: F) -> Result<BoundReport<T>>
where
    T: Real,
    F: Fn(T) -> Result<BoundReport<T>>,
{
    if !(search.min > T::zero() && search.max >= search.min && search.max.is_finite()) {
        return domain(format!(
            "radius search needs 0 < min <= max, got [{}, {}]",
            search.min, search.max
        ));
    }
    if search.grid < 2 {
        return domain("radius search grid must have >= 2 points");
    }
    let mut best_i = 0;
    let mut best = bound(search.point(0))?;
    for i in 1..search.grid {
        let r = bound(search.point(i))?;
        if r.raw_bound > best.raw_bound {
            best = r;
            best_i = i;
        }
    }
    let lo = search.point(best_i.saturating_sub(1));
    let hi = search.point((best_i + 1).min(search.grid - 1));
    let refined = golden_section(lo, hi, search.golden_iters, &bound)?;
    if refined.raw_bound > best.raw_bound {
        best = refined;
    }
    Ok(best)
}

fn golden_section<T, F>(mut a: T, mut b: T, iters: usize, bound: &F) -> Result<BoundReport<T>>
where
    T: Real,
    F: Fn(T) -> Result<BoundReport<T>>,
{
    let inv_phi = lit::<T>(0.618_033_988_749_894_9);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = bound(c)?;
    let mut fd = bound(d)?;
    for _ in 0..iters {
        if fc.raw_bound >= fd.raw_bound {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = bound(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = bound(d)?;
        }
    }
    Ok(if fc.raw_bound >= fd.raw_bound { fc } else { fd })
}

/// Supremum over candidate centers of [`maximize_over_radius`]; the
/// winning center is recorded in the witness.
pub fn maximize_over_centers<T, F>(
    centers: &[Vec<T>],
    search: &RadiusSearch<T>,
    bound: F,
) -> Result<BoundReport<T>>
where
    T: Real,
    F: Fn(&[T], T) -> Result<BoundReport<T>>,
{
    let mut best: Option<BoundReport<T>> = None;
    for center in centers {
        let mut r = maximize_over_radius(search, |radius| bound(center, radius))?;
        r.witness.center = Some(center.clone());
        if best.as_ref().is_none_or(|b| r.raw_bound > b.raw_bound) {
            best = Some(r);
        }
    }
    best.ok_or_else(|| crate::error::Error::Domain("no candidate centers".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn theorem_ids_parse() {
        assert_eq!("t2a".parse::<TheoremId>().unwrap(), TheoremId::T2a);
        assert_eq!("COR1".parse::<TheoremId>().unwrap(), TheoremId::Cor1);
        assert!("T4".parse::<TheoremId>().is_err());
    }

    fn consts(l1: f64, l2: f64) -> BiLipschitzConstants<f64> {
        BiLipschitzConstants::new(l1, l2).unwrap()
    }

    #[test]
    fn constants_validate() {
        assert!(BiLipschitzConstants::new(0.0_f64, 1.0).is_err());
        assert!(BiLipschitzConstants::new(1.0_f64, f64::INFINITY).is_err());
        assert!(consts(2.0, 0.5).is_consistent_with_bijection());
        assert!(!consts(0.5, 0.5).is_consistent_with_bijection());
        let (lo, hi) = consts(2.0, 4.0).det_jacobian_range(2);
        assert_eq!((lo, hi), (1.0 / 16.0, 4.0));
    }

    #[test]
    fn theorem1_examples() {
        let r = theorem1_bound(1.0_f64, 0.5, &consts(1.0, 1.0), 1).unwrap();
        let expected = 0.5 - 1.0 / (4.0 * (2.0 * PI).sqrt());
        assert!((r.lower_bound_tv - expected).abs() < 1e-15);
        assert!((r.lower_bound_tv - 0.400_264_4).abs() < 1e-7);
        assert!(r.valid);

        for d in [1, 3, 7] {
            let c = consts(1.3, 0.8);
            let threshold = theorem1_density_threshold(&c, d);
            let r = theorem1_bound(1.0_f64, threshold, &c, d).unwrap();
            assert_eq!(r.lower_bound_tv, 0.0);
            assert!(!r.valid);
        }

        let r = theorem1_bound(0.01_f64, 0.9, &consts(2.0, 1.0), 3).unwrap();
        let expected = 0.9 - 0.01 * (2.0 / (4.0 * (2.0 * PI).sqrt())).powi(3);
        assert!((r.lower_bound_tv - expected).abs() < 1e-15);
        assert!((r.lower_bound_tv - 0.899_920_6).abs() < 1e-7);
    }

    #[test]
    fn theorem1_domain() {
        assert!(theorem1_bound(0.0_f64, 0.5, &consts(1.0, 1.0), 1).is_err());
        assert!(theorem1_bound(1.0_f64, 1.5, &consts(1.0, 1.0), 1).is_err());
        assert!(theorem1_bound(1.0_f64, 0.5, &consts(1.0, 1.0), 0).is_err());
    }

    #[test]
    fn theorem2_examples() {
        let r = theorem2_bound_sqrt_pi(0.9_f64, 0.1, 1.0).unwrap();
        assert!((r.lower_bound_tv - (0.9 - 0.1 / PI.sqrt())).abs() < 1e-15);
        assert!((r.lower_bound_tv - 0.843_581_0).abs() < 1e-7);

        let (radius, l1) = (0.3, 1.7);
        let r = theorem2_bound_sqrt_pi(radius * l1 / PI.sqrt(), radius, l1).unwrap();
        assert!(r.lower_bound_tv.abs() < 1e-16);
        assert!(!r.valid);

        let r = theorem2_bound_sqrt_pi(1.0_f64, 0.5, 0.1).unwrap();
        assert!((r.lower_bound_tv - 0.971_790_5).abs() < 1e-7);

        let r = theorem2_bound_ball93(0.99_f64, 1e-3, 1.0, 3072).unwrap();
        assert!((r.lower_bound_tv - (0.99 - 4.0 * 3072f64.powf(0.25) * 1e-3)).abs() < 1e-15);
        assert!((r.lower_bound_tv - 0.9602).abs() < 1e-4);
        assert!(r.strict);

        let r = theorem2_bound_ball93(0.0_f64, 0.2, 1.0, 5).unwrap();
        assert!(r.lower_bound_tv < 0.0 && !r.valid);

        let r = theorem2_bound_ball93(0.5_f64, 0.01, 2.0, 16).unwrap();
        assert!((r.lower_bound_tv - 0.34).abs() < 1e-15);

        assert!(theorem2_bound_ball93(0.5_f64, 0.01, 2.0, 1).is_err());
        assert!(theorem2_bound_sqrt_pi(0.5_f64, 0.0, 2.0).is_err());
    }

    #[test]
    fn theorem3_examples() {
        let r = theorem3_bound(0.0_f64, 2.0, 1.0, 2).unwrap();
        assert!((r.lower_bound_tv - (1.0 - (-2.0f64).exp())).abs() < 1e-12);

        let r = theorem3_bound(0.3_f64, 0.0, 1.0, 4).unwrap();
        assert_eq!(r.lower_bound_tv, -0.3);
        assert!(!r.valid);

        let r = theorem3_bound(0.05_f64, 3.0, 2.0, 1).unwrap();
        let expected = crate::specfun::erf((9.0f64 / 8.0).sqrt()) - 0.05;
        assert!((r.lower_bound_tv - expected).abs() < 1e-12);
        assert!((r.lower_bound_tv - 0.816_385_6).abs() < 1e-7);
    }

    #[test]
    fn corollary_examples() {
        let r = corollary_separated_modes(2.0_f64, 1.0, 2).unwrap();
        assert!((r.lower_bound_tv - 0.864_664_7).abs() < 1e-7);
        let r = corollary_separated_modes(1e-12_f64, 1.0, 1).unwrap();
        assert!(r.lower_bound_tv < 1e-11);
        let r = corollary_separated_modes(2.0_f64, 1.0, 784).unwrap();
        assert_eq!(r.lower_bound_tv, 0.0);
        assert!(r.underflow && !r.valid);
    }

    #[test]
    fn mixture_examples() {
        let mix = mixture_bound(0.9_f64, 0.1, 1.0, 1, 1.0).unwrap();
        let t2 = theorem2_bound_sqrt_pi(0.9_f64, 0.1, 1.0).unwrap();
        assert!((mix.lower_bound_tv - t2.lower_bound_tv).abs() <= 1e-15);

        let mix = mixture_bound(0.9_f64, 0.1, 1.0, 4, 1.0).unwrap();
        assert!((mix.lower_bound_tv - (0.9 - 0.25 * 0.1 / PI.sqrt())).abs() < 1e-15);
        assert!((mix.lower_bound_tv - 0.885_895_3).abs() < 1e-7);

        let mix = mixture_bound(0.9_f64, 0.1, 1.0, 1_000_000_000, 1.0).unwrap();
        assert!((mix.lower_bound_tv - 0.9).abs() < 1e-9);
        assert!(mixture_bound(0.9_f64, 0.1, 1.0, 0, 1.0).is_err());
    }

    #[test]
    fn precision_examples() {
        let p = precision_upper_bound(2.0_f64, 1.0, 2).unwrap();
        assert!((p - (-2.0f64).exp()).abs() < 1e-12);
        assert!((p - 0.135_335_3).abs() < 1e-7);
        assert!((precision_upper_bound(1e-12_f64, 1.0, 3).unwrap() - 1.0).abs() < 1e-12);
        let p = precision_upper_bound(5.0_f64, 1.0, 1).unwrap();
        let expected = crate::specfun::erfc(5.0 / 2f64.sqrt());
        assert!((p - expected).abs() < 1e-12);
        assert!((p - 5.733e-7).abs() < 1e-10);

        assert_eq!(tv_from_max_precision(1.0_f64).unwrap(), 0.0);
        assert!((tv_from_max_precision(0.3_f64).unwrap() - 0.7).abs() < 1e-15);
        assert!((tv_from_max_recall(0.95_f64).unwrap() - 0.05).abs() < 1e-15);
        assert!(tv_from_max_precision(1.2_f64).is_err());
    }

    #[test]
    fn clamps_above_one_and_keeps_raw() {
        // Not reachable from probabilities alone; build one directly.
        let r = BoundReport::new(TheoremId::T1, vec![], 1.25_f64, Witness::default());
        assert_eq!(r.lower_bound_tv, 1.0);
        assert_eq!(r.raw_bound, 1.25);
        assert!(r.valid);
    }

    #[test]
    fn csv_row_layout() {
        let r = theorem2_bound_sqrt_pi(0.9_f64, 0.1, 1.0).unwrap();
        assert_eq!(r.csv_header(), "theorem_id,mass_ball,radius,l1,lower_bound_tv,valid");
        let row = r.to_csv_row();
        assert!(row.starts_with("T2a,9.0000000000000002e-1,1.0000000000000001e-1,1.0000000000000000e0,"));
        assert!(row.ends_with(",true"));
    }

    #[test]
    fn radius_search_finds_interior_maximum() {
        // Peak of r e^{-r} at r = 1.
        let search = RadiusSearch::linear(0.01, 5.0, 40);
        let best = maximize_over_radius(&search, |r: f64| {
            Ok(BoundReport::new(TheoremId::T2a, vec![], r * (-r).exp(), Witness {
                radius: Some(r),
                ..Witness::default()
            }))
        })
        .unwrap();
        assert!((best.witness.radius.unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn center_search_records_winner() {
        let centers = vec![vec![-1.0], vec![0.5]];
        let search = RadiusSearch::linear(0.01, 1.0, 20);
        let best = maximize_over_centers(&centers, &search, |c, r: f64| {
            let raw = -(c[0] - 0.5).abs() - (r - 0.3).powi(2);
            Ok(BoundReport::new(TheoremId::T2a, vec![], raw, Witness::default()))
        })
        .unwrap();
        assert_eq!(best.witness.center, Some(vec![0.5]));
        assert!(best.raw_bound > -1e-10);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn theorem1_monotone_in_constants(
                vol in 1e-3f64..10.0, mass in 0.0f64..1.0, l1 in 0.1f64..10.0,
                dl1 in 0.0f64..5.0, l2 in 0.1f64..10.0, dl2 in 0.0f64..5.0, d in 1usize..8,
            ) {
                let base = theorem1_bound(vol, mass, &BiLipschitzConstants::new(l1, l2).unwrap(), d).unwrap();
                let more_l1 = theorem1_bound(vol, mass, &BiLipschitzConstants::new(l1 + dl1, l2).unwrap(), d).unwrap();
                let more_l2 = theorem1_bound(vol, mass, &BiLipschitzConstants::new(l1, l2 + dl2).unwrap(), d).unwrap();
                prop_assert!(more_l1.raw_bound <= base.raw_bound + 1e-15);
                prop_assert!(more_l2.raw_bound + 1e-15 >= base.raw_bound);
            }

            #[test]
            fn theorem2_monotone(
                mass in 0.0f64..1.0, r in 1e-3f64..2.0, dr in 0.0f64..1.0,
                l1 in 0.01f64..10.0, dl1 in 0.0f64..5.0, d in 2usize..5000,
            ) {
                let a = theorem2_bound_sqrt_pi(mass, r, l1).unwrap().raw_bound;
                prop_assert!(theorem2_bound_sqrt_pi(mass, r + dr, l1).unwrap().raw_bound <= a);
                prop_assert!(theorem2_bound_sqrt_pi(mass, r, l1 + dl1).unwrap().raw_bound <= a);
                let b = theorem2_bound_ball93(mass, r, l1, d).unwrap().raw_bound;
                prop_assert!(theorem2_bound_ball93(mass, r + dr, l1, d).unwrap().raw_bound <= b);
                prop_assert!(theorem2_bound_ball93(mass, r, l1 + dl1, d).unwrap().raw_bound <= b);
            }

            #[test]
            fn theorem3_matches_corollary_at_zero_mass(r in 1e-4f64..30.0, l2 in 0.05f64..20.0, d in 1usize..4000) {
                let t3 = theorem3_bound(0.0_f64, r, l2, d).unwrap();
                let c = corollary_separated_modes(r, l2, d).unwrap();
                prop_assert_eq!(t3.lower_bound_tv, c.lower_bound_tv);
            }

            #[test]
            fn corollary_monotone(
                dist in 1e-3f64..20.0, dd in 0.0f64..5.0, l2 in 0.05f64..20.0,
                dl2 in 0.0f64..5.0, d in 1usize..3000,
            ) {
                let a = corollary_separated_modes(dist, l2, d).unwrap().lower_bound_tv;
                prop_assert!(corollary_separated_modes(dist + dd, l2, d).unwrap().lower_bound_tv + 1e-15 >= a);
                prop_assert!(corollary_separated_modes(dist, l2 + dl2, d).unwrap().lower_bound_tv <= a + 1e-15);
                prop_assert!(corollary_separated_modes(dist, l2, d + 1).unwrap().lower_bound_tv <= a + 1e-15);
            }

            #[test]
            fn mixture_reduces_to_theorem2(mass in 0.0f64..1.0, r in 1e-3f64..3.0, l1 in 0.01f64..20.0) {
                let mix = mixture_bound(mass, r, l1, 1, 1.0).unwrap().lower_bound_tv;
                let t2 = theorem2_bound_sqrt_pi(mass, r, l1).unwrap().lower_bound_tv;
                prop_assert!((mix - t2).abs() <= 1e-15);
            }

            #[test]
            fn valid_iff_positive(mass in 0.0f64..1.0, r in 1e-3f64..3.0, l1 in 0.01f64..20.0) {
                let rep = theorem2_bound_sqrt_pi(mass, r, l1).unwrap();
                prop_assert_eq!(rep.valid, rep.lower_bound_tv > 0.0);
                prop_assert!(rep.lower_bound_tv <= 1.0);
            }
        }
    }
}
