//! Analytic target distributions: finite mixtures of uniform-on-ball and
//! isotropic Gaussian components.
//!
//! The presets model the two failure cases of bi-Lipschitz flows: a narrow
//! spike holding most of the mass ([`TargetDistribution::dense_spike`]) and
//! two narrow modes separated by an empty gap
//! ([`TargetDistribution::separated_bimodal`]).

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Error, Result};
use crate::montecarlo::{substream, CHUNK};
use crate::scalar::{from_usize, lit, Real};
use crate::specfun::{ln_gamma, normal_cdf, normal_interval_mass, normal_pdf, regularized_lower_gamma};

/// Weights must sum to one within this tolerance.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Default Monte Carlo budget for ball masses without a closed form.
pub const DEFAULT_MC_SAMPLES: usize = 200_000;
pub const DEFAULT_MC_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Uniform on the ball of radius `scale`.
    UniformBall,
    /// Isotropic Gaussian with standard deviation `scale`.
    Gaussian,
}

impl Shape {
    pub fn as_str(&self) -> &'static str {
        match self {
            Shape::UniformBall => "uniform_ball",
            Shape::Gaussian => "gaussian",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "uniform_ball" | "uniform" => Some(Shape::UniformBall),
            "gaussian" | "normal" => Some(Shape::Gaussian),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component<T> {
    pub weight: T,
    pub shape: Shape,
    pub center: Vec<T>,
    pub scale: T,
}

impl<T: Real> Component<T> {
    pub fn new(weight: T, shape: Shape, center: Vec<T>, scale: T) -> Self {
        Self {
            weight,
            shape,
            center,
            scale,
        }
    }

    fn dist_to(&self, x: &[T]) -> T {
        self.center
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (&c, &v)| acc + (v - c) * (v - c))
            .sqrt()
    }
}

/// Ball mass, exact (`std_error == 0`) or Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallMass<T> {
    pub value: T,
    pub std_error: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: DEFAULT_MC_SAMPLES,
            seed: DEFAULT_MC_SEED,
        }
    }
}

/// Volume of the ℓ₂ ball of radius `r` in ℝᵈ.
pub fn ball_volume<T: Real>(dim: usize, r: T) -> T {
    let half_d = from_usize::<T>(dim) * lit(0.5);
    let ln_unit = half_d * T::PI().ln() - ln_gamma(half_d + T::one()).expect("positive shape");
    (ln_unit + from_usize::<T>(dim) * r.ln()).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetDistribution<T> {
    dim: usize,
    components: Vec<Component<T>>,
}

impl<T: Real> TargetDistribution<T> {
    pub fn new(dim: usize, components: Vec<Component<T>>) -> Result<Self> {
        if dim == 0 {
            return domain("target dimension must be >= 1");
        }
        if components.is_empty() {
            return domain("target needs at least one component");
        }
        let mut total = T::zero();
        for (i, c) in components.iter().enumerate() {
            if c.weight.is_nan() || c.weight < T::zero() || c.weight > T::one() {
                return domain(format!("component {i}: weight must lie in [0, 1], got {}", c.weight));
            }
            if c.center.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.center.len(),
                });
            }
            if c.center.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("component {i}: center")));
            }
            if !(c.scale.is_finite() && c.scale > T::zero()) {
                return domain(format!("component {i}: scale must be finite and > 0, got {}", c.scale));
            }
            total = total + c.weight;
        }
        if (total - T::one()).abs() > lit::<T>(WEIGHT_TOL).max(T::epsilon() * lit(16.0)) {
            return domain(format!("component weights sum to {total}, expected 1"));
        }
        Ok(Self { dim, components })
    }

    /// `mass` on the interval of width `width` centered at 0, the rest a standard normal.
    pub fn dense_spike(mass: T, width: T) -> Result<Self> {
        if !(mass > T::zero() && mass <= T::one()) {
            return domain(format!("spike mass must lie in (0, 1], got {mass}"));
        }
        let half = width * lit(0.5);
        let mut comps = vec![Component::new(mass, Shape::UniformBall, vec![T::zero()], half)];
        if mass < T::one() {
            comps.push(Component::new(T::one() - mass, Shape::Gaussian, vec![T::zero()], T::one()));
        }
        Self::new(1, comps)
    }

    /// Two equal-weight intervals of width `width` centered at `±dist/2`.
    pub fn separated_bimodal(dist: T, width: T) -> Result<Self> {
        if !(dist.is_finite() && dist > width) {
            return domain(format!("mode distance {dist} must exceed mode width {width}"));
        }
        let half = lit::<T>(0.5);
        let c = dist * half;
        Self::new(
            1,
            vec![
                Component::new(half, Shape::UniformBall, vec![-c], width * half),
                Component::new(half, Shape::UniformBall, vec![c], width * half),
            ],
        )
    }

    pub fn gaussian(dim: usize, scale: T) -> Result<Self> {
        Self::new(dim, vec![Component::new(T::one(), Shape::Gaussian, vec![T::zero(); dim], scale)])
    }

    pub fn standard_gaussian(dim: usize) -> Result<Self> {
        Self::gaussian(dim, T::one())
    }

    /// Uniform on `[lo, hi]`.
    pub fn uniform_interval(lo: T, hi: T) -> Result<Self> {
        if !(hi > lo) {
            return domain(format!("empty interval [{lo}, {hi}]"));
        }
        let half = lit::<T>(0.5);
        Self::new(
            1,
            vec![Component::new(T::one(), Shape::UniformBall, vec![(lo + hi) * half], (hi - lo) * half)],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Component<T>] {
        &self.components
    }

    fn check_point(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("query point".into()));
        }
        Ok(())
    }

    pub fn density(&self, x: &[T]) -> Result<T> {
        self.check_point(x)?;
        Ok(self.density_unchecked(x))
    }

    pub(crate) fn density_unchecked(&self, x: &[T]) -> T {
        let d = self.dim;
        let mut total = T::zero();
        for c in &self.components {
            if c.weight == T::zero() {
                continue;
            }
            let r = c.dist_to(x);
            match c.shape {
                Shape::UniformBall => {
                    if r <= c.scale {
                        total = total + c.weight / ball_volume(d, c.scale);
                    }
                }
                Shape::Gaussian => {
                    let z = r / c.scale;
                    let norm = (T::TAU().sqrt() * c.scale).powi(d as i32);
                    total = total + c.weight * (-(z * z) * lit(0.5)).exp() / norm;
                }
            }
        }
        total
    }

    /// 1D density without slice allocation.
    pub fn density_1d(&self, x: T) -> T {
        debug_assert_eq!(self.dim, 1);
        let mut total = T::zero();
        for c in &self.components {
            let u = (x - c.center[0]).abs();
            match c.shape {
                Shape::UniformBall => {
                    if u <= c.scale {
                        total = total + c.weight / (c.scale + c.scale);
                    }
                }
                Shape::Gaussian => total = total + c.weight * normal_pdf(u / c.scale) / c.scale,
            }
        }
        total
    }

    /// `P*(B(center, radius))` with the default Monte Carlo budget where needed.
    pub fn ball_mass(&self, center: &[T], radius: T) -> Result<BallMass<T>> {
        self.ball_mass_with(center, radius, McConfig::default())
    }

    /// Exact in 1D and, in higher dimension, for uniform components fully
    /// inside or outside the query ball and Gaussians centered on it;
    /// everything else is estimated by Monte Carlo.
    pub fn ball_mass_with(&self, center: &[T], radius: T, mc: McConfig) -> Result<BallMass<T>> {
        self.check_point(center)?;
        if radius.is_nan() || radius < T::zero() {
            return domain(format!("radius must be >= 0, got {radius}"));
        }
        if self.dim == 1 {
            let v = self.interval_mass_1d(center[0] - radius, center[0] + radius);
            return Ok(BallMass {
                value: v.min(T::one()),
                std_error: T::zero(),
            });
        }
        if radius == T::zero() {
            return Ok(BallMass {
                value: T::zero(),
                std_error: T::zero(),
            });
        }
        let d = self.dim;
        let mut value = T::zero();
        let mut var = T::zero();
        for (k, c) in self.components.iter().enumerate() {
            if c.weight == T::zero() {
                continue;
            }
            let dist = c.dist_to(center);
            let exact = match c.shape {
                Shape::UniformBall if dist + c.scale <= radius => Some(T::one()),
                Shape::UniformBall if dist >= radius + c.scale => Some(T::zero()),
                Shape::Gaussian if dist == T::zero() => {
                    let shape = from_usize::<T>(d) * lit(0.5);
                    let x = radius * radius / (lit::<T>(2.0) * c.scale * c.scale);
                    Some(regularized_lower_gamma(shape, x)?.value)
                }
                _ => None,
            };
            match exact {
                Some(frac) => value = value + c.weight * frac,
                None => {
                    let seed = mc.seed.wrapping_add(k as u64);
                    let (frac, se) = component_ball_fraction(c, d, center, radius, mc.samples, seed);
                    value = value + c.weight * frac;
                    var = var + c.weight * c.weight * se * se;
                }
            }
        }
        Ok(BallMass {
            value: value.min(T::one()),
            std_error: var.sqrt(),
        })
    }

    /// `P*([a, b])` for a 1D target.
    pub fn interval_mass_1d(&self, a: T, b: T) -> T {
        debug_assert_eq!(self.dim, 1);
        if b <= a {
            return T::zero();
        }
        let mut total = T::zero();
        for c in &self.components {
            let m = c.center[0];
            let s = c.scale;
            let frac = match c.shape {
                Shape::UniformBall => {
                    let lo = a.max(m - s);
                    let hi = b.min(m + s);
                    if hi > lo {
                        (hi - lo) / (s + s)
                    } else {
                        T::zero()
                    }
                }
                Shape::Gaussian => normal_interval_mass((a - m) / s, (b - m) / s),
            };
            total = total + c.weight * frac;
        }
        total
    }

    fn require_1d(&self) -> Result<()> {
        if self.dim != 1 {
            return Err(Error::Unsupported(format!(
                "operation needs a 1D target, this one has dimension {}",
                self.dim
            )));
        }
        Ok(())
    }

    /// CDF of a 1D target.
    pub fn cdf_1d(&self, x: T) -> Result<T> {
        self.require_1d()?;
        if x.is_nan() {
            return Err(Error::NonFinite("cdf argument".into()));
        }
        Ok(self.cdf_1d_unchecked(x))
    }

    pub(crate) fn cdf_1d_unchecked(&self, x: T) -> T {
        let mut total = T::zero();
        for c in &self.components {
            let m = c.center[0];
            let s = c.scale;
            let frac = match c.shape {
                Shape::UniformBall => {
                    if x <= m - s {
                        T::zero()
                    } else if x >= m + s {
                        T::one()
                    } else {
                        (x - (m - s)) / (s + s)
                    }
                }
                Shape::Gaussian => normal_cdf((x - m) / s),
            };
            total = total + c.weight * frac;
        }
        total.min(T::one()).max(T::zero())
    }

    /// Smallest interval holding all but `tail` of the mass on each side
    /// (exact support ends for uniform components).
    pub fn effective_support_1d(&self, tail: T) -> Result<(T, T)> {
        self.require_1d()?;
        let k = -crate::specfun::normal_quantile(tail.max(T::min_positive_value()))?;
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for c in &self.components {
            let reach = match c.shape {
                Shape::UniformBall => c.scale,
                Shape::Gaussian => k * c.scale,
            };
            lo = lo.min(c.center[0] - reach);
            hi = hi.max(c.center[0] + reach);
        }
        Ok((lo, hi))
    }

    /// Generalized inverse `inf{x : F(x) >= u}` by bisection.
    pub fn quantile_1d(&self, u: T) -> Result<T> {
        self.require_1d()?;
        if !(u > T::zero() && u < T::one()) {
            return domain(format!("quantile level must lie in (0, 1), got {u}"));
        }
        let (mut lo, mut hi) = self.effective_support_1d(lit(1e-300))?;
        lo = lo - T::one();
        hi = hi + T::one();
        for _ in 0..200 {
            let mid = (lo + hi) * lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf_1d_unchecked(mid) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Jump points of the 1D density: ends of every uniform component, sorted.
    pub fn breakpoints_1d(&self) -> Vec<T> {
        let mut pts: Vec<T> = self
            .components
            .iter()
            .filter(|c| c.shape == Shape::UniformBall && self.dim == 1)
            .flat_map(|c| [c.center[0] - c.scale, c.center[0] + c.scale])
            .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        pts.dedup();
        pts
    }

    /// Support as a sorted union of closed intervals, or `None` when a
    /// Gaussian component makes it the whole line.
    pub fn support_intervals_1d(&self) -> Result<Option<Vec<(T, T)>>> {
        self.require_1d()?;
        if self
            .components
            .iter()
            .any(|c| c.shape == Shape::Gaussian && c.weight > T::zero())
        {
            return Ok(None);
        }
        let mut iv: Vec<(T, T)> = self
            .components
            .iter()
            .filter(|c| c.weight > T::zero())
            .map(|c| (c.center[0] - c.scale, c.center[0] + c.scale))
            .collect();
        iv.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite support"));
        let mut merged: Vec<(T, T)> = Vec::with_capacity(iv.len());
        for (a, b) in iv {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(Some(merged))
    }

    /// Whether `x` lies in the (closed) support of a component with positive weight.
    pub fn in_support(&self, x: &[T]) -> bool {
        self.in_support_within(x, T::zero())
    }

    /// Like [`in_support`](Self::in_support) with every uniform ball widened by `tol`.
    pub fn in_support_within(&self, x: &[T], tol: T) -> bool {
        self.components.iter().any(|c| {
            c.weight > T::zero() && (c.shape == Shape::Gaussian || c.dist_to(x) <= c.scale + tol)
        })
    }

    /// Distinct component centers, candidate ball centers for the supremum search.
    pub fn mode_centers(&self) -> Vec<Vec<T>> {
        let mut out: Vec<Vec<T>> = Vec::new();
        for c in &self.components {
            if !out.contains(&c.center) {
                out.push(c.center.clone());
            }
        }
        out
    }

    pub(crate) fn cumulative_weights(&self) -> Vec<f64> {
        self.components
            .iter()
            .scan(0.0, |acc, c| {
                *acc += c.weight.to_f64().unwrap_or(0.0);
                Some(*acc)
            })
            .collect()
    }

    /// `n` i.i.d. draws; deterministic per `(seed, n)`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<T>> {
        let cum = self.cumulative_weights();
        let mut out = Vec::with_capacity(n);
        for k in 0..n.div_ceil(CHUNK) {
            let mut rng = substream(seed, k as u64);
            let len = CHUNK.min(n - k * CHUNK);
            for _ in 0..len {
                out.push(self.draw(&cum, &mut rng));
            }
        }
        out
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, cum: &[f64], rng: &mut R) -> Vec<T> {
        let u: f64 = rng.gen::<f64>() * cum.last().copied().unwrap_or(1.0);
        let idx = cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1);
        draw_component(&self.components[idx], self.dim, rng)
    }

    /// Plain-text configuration: `dim = <d>` and one
    /// `component = <weight> <shape> <center...> <scale>` line per component.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut comps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let value = value.trim();
            match key.trim() {
                "dim" => {
                    dim = Some(value.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("bad dimension `{value}`"),
                    })?)
                }
                "component" => {
                    let d = dim.ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: "`dim` must precede components".into(),
                    })?;
                    comps.push(parse_component(value, d, line_no)?);
                }
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        let dim = dim.ok_or(Error::Parse {
            line: 0,
            msg: "missing `dim`".into(),
        })?;
        Self::new(dim, comps)
    }

    pub fn to_config_string(&self) -> String {
        let mut s = format!("dim = {}\n", self.dim);
        for c in &self.components {
            let _ = write!(s, "component = {} {}", c.weight, c.shape.as_str());
            for v in &c.center {
                let _ = write!(s, " {v}");
            }
            let _ = writeln!(s, " {}", c.scale);
        }
        s
    }
}

fn parse_component<T: Real>(value: &str, dim: usize, line: usize) -> Result<Component<T>> {
    let tokens: Vec<&str> = value.split_whitespace().collect();
    if tokens.len() != dim + 3 {
        return Err(Error::Parse {
            line,
            msg: format!(
                "component needs weight, shape, {dim} center coordinate(s) and scale; got {} field(s)",
                tokens.len()
            ),
        });
    }
    let num = |s: &str| -> Result<T> {
        s.parse::<f64>().map(lit).map_err(|_| Error::Parse {
            line,
            msg: format!("bad number `{s}`"),
        })
    };
    let shape = Shape::parse(tokens[1]).ok_or_else(|| Error::Parse {
        line,
        msg: format!("unknown shape `{}`", tokens[1]),
    })?;
    let center = tokens[2..2 + dim].iter().map(|t| num(t)).collect::<Result<Vec<T>>>()?;
    Ok(Component::new(num(tokens[0])?, shape, center, num(tokens[dim + 2])?))
}

fn draw_component<T: Real, R: Rng + ?Sized>(c: &Component<T>, dim: usize, rng: &mut R) -> Vec<T> {
    let scale = c.scale.to_f64().unwrap_or(1.0);
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    match c.shape {
        Shape::Gaussian => v.iter_mut().for_each(|x| *x *= scale),
        Shape::UniformBall => {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let r = scale * rng.gen::<f64>().powf(1.0 / dim as f64);
            v.iter_mut().for_each(|x| *x *= r / norm);
        }
    }
    v.iter()
        .zip(&c.center)
        .map(|(&x, &m)| m + lit::<T>(x))
        .collect()
}

/// Fraction of one component inside `B(center, radius)`, by sampling the component.
fn component_ball_fraction<T: Real>(
    c: &Component<T>,
    dim: usize,
    center: &[T],
    radius: T,
    n: usize,
    seed: u64,
) -> (T, T) {
    let est = crate::montecarlo::chunked_mean::<T, _>(n, seed, |rng| {
        let x = draw_component(c, dim, rng);
        let d2 = x
            .iter()
            .zip(center)
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
        if d2 <= radius * radius {
            1.0
        } else {
            0.0
        }
    });
    (est.value, est.std_error)
}
