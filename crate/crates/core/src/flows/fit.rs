use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::scalar::{from_usize, lit, Real};
use crate::specfun::normal_quantile;
use crate::targets::TargetDistribution;
use crate::tvmetrics::{tv_target_flow_1d, Integrand, Regions};

use super::PiecewiseLinearFlow1D;

/// Relative finite-difference step (times the mean latent knot spacing).
pub const FD_REL_STEP: f64 = 1e-6;
pub const BACKTRACK_FACTOR: f64 = 0.5;
pub const MAX_HALVINGS: usize = 30;
/// Above this many knots each step updates a random block of this size.
pub const BLOCK_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitObjective {
    #[default]
    Tv,
    /// Cross-entropy `−∫ p* ln p̂`, i.e. NLL up to the target entropy.
    Nll,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub knots: usize,
    pub steps: usize,
    pub step_size: f64,
    pub seed: u64,
    pub objective: FitObjective,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            knots: 64,
            steps: 200,
            step_size: 1.0,
            seed: 0,
            objective: FitObjective::Tv,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport<T> {
    pub flow: PiecewiseLinearFlow1D<T>,
    pub initial_tv: T,
    pub final_tv: T,
    /// Objective after initialization and after every accepted step.
    pub objective_trace: Vec<T>,
    pub accepted_steps: usize,
}

fn check_budgets<T: Real>(l1_max: T, l2_max: T) -> Result<()> {
    if !(l1_max > T::zero() && l2_max > T::zero() && l1_max.is_finite() && l2_max.is_finite()) {
        return domain(format!("budgets must be finite and > 0, got L1={l1_max}, L2={l2_max}"));
    }
    if l1_max * l2_max < T::one() {
        return domain(format!("empty slope range: need L1·L2 >= 1, got L1={l1_max}, L2={l2_max}"));
    }
    Ok(())
}

fn clip<T: Real>(s: T, lo: T, hi: T) -> T {
    if s.is_nan() {
        lo
    } else {
        s.max(lo).min(hi)
    }
}

/// Midpoint of `{x : CDF(x) = ½}`.
fn median_midpoint<T: Real>(t: &TargetDistribution<T>) -> Result<T> {
    let half: T = lit(0.5);
    let left = t.quantile_1d(half)?;
    let (_, hi) = t.effective_support_1d(lit(1e-300))?;
    let (mut lo, mut hi) = (left, hi + T::one());
    for _ in 0..200 {
        let mid = (lo + hi) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if t.cdf_1d(mid)? > half {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((left + lo) * half)
}

fn accumulate<T: Real>(z0: T, slopes: &[T], dx: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(slopes.len() + 1);
    out.push(z0);
    for (s, d) in slopes.iter().zip(dx) {
        let prev = *out.last().expect("non-empty");
        out.push(prev + *s * *d);
    }
    out
}

/// Slopes of consecutive knots clipped into `[1/l2_max, l1_max]`, then
/// re-accumulated from `z0`.
fn project<T: Real>(xs: &[T], zs: &[T], lo: T, hi: T) -> Vec<T> {
    let mut out = Vec::with_capacity(zs.len());
    out.push(zs[0]);
    for j in 1..xs.len() {
        let dx = xs[j] - xs[j - 1];
        let s = clip((zs[j] - zs[j - 1]) / dx, lo, hi);
        let prev = out[j - 1];
        out.push(prev + s * dx);
    }
    out
}

/// Discretized monotone rearrangement `Φ⁻¹ ∘ CDF` on `grid` quantile levels,
/// with every slope clipped into the budget and the map anchored so that
/// the median of the target goes to 0.
pub fn clipped_quantile_flow<T: Real>(
    t: &TargetDistribution<T>,
    l1_max: T,
    l2_max: T,
    grid: usize,
) -> Result<PiecewiseLinearFlow1D<T>> {
    check_budgets(l1_max, l2_max)?;
    if grid < 8 {
        return domain(format!("quantile grid needs >= 8 knots, got {grid}"));
    }
    if t.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: t.dim(),
        });
    }
    let denom = from_usize::<T>(grid + 1);
    let mut xs: Vec<T> = Vec::with_capacity(grid);
    let mut zs: Vec<T> = Vec::with_capacity(grid);
    for i in 1..=grid {
        let u = from_usize::<T>(i) / denom;
        let x = t.quantile_1d(u)?;
        // Quantiles closer than the bisection resolution collapse; keep the first.
        if xs.last().is_some_and(|&last| x <= last) {
            continue;
        }
        xs.push(x);
        zs.push(normal_quantile(u)?);
    }
    if xs.len() < 2 {
        return domain("target quantiles collapsed to a single point");
    }
    let (lo, hi) = (T::one() / l2_max, l1_max);
    let zs = project(&xs, &zs, lo, hi);
    let n = xs.len();
    let left = clip((zs[1] - zs[0]) / (xs[1] - xs[0]), lo, hi);
    let right = clip((zs[n - 1] - zs[n - 2]) / (xs[n - 1] - xs[n - 2]), lo, hi);
    let flow = PiecewiseLinearFlow1D::new(xs.clone(), zs.clone(), left, right)?;
    let shift = flow.forward_1d(median_midpoint(t)?);
    let zs = zs.into_iter().map(|z| z - shift).collect();
    PiecewiseLinearFlow1D::new(xs, zs, left, right)
}

struct Objective<'a, T> {
    regions: Regions<'a, T>,
    what: Integrand,
    xs: Vec<T>,
    ls: T,
    rs: T,
}

impl<T: Real> Objective<'_, T> {
    fn pieces(&self, zs: &[T]) -> Vec<T> {
        self.regions.all(&self.xs, zs, self.ls, self.rs, self.what)
    }

    fn total(pieces: &[T]) -> Result<T> {
        let v = pieces.iter().fold(T::zero(), |a, &b| a + b);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("fitting objective diverged".into()))
        }
    }

    /// Change in the objective when only `zs[i]` moves; regions `i`, `i+1`.
    fn local(&self, zs: &[T], i: usize) -> T {
        self.regions.region(&self.xs, zs, self.ls, self.rs, i, self.what)
            + self.regions.region(&self.xs, zs, self.ls, self.rs, i + 1, self.what)
    }
}

/// Projected gradient descent on the latent knot positions, starting from
/// [`clipped_quantile_flow`] with `opts.knots` knots.
///
/// The parameters are the first latent knot and the segment slopes, so the
/// budget is a box and projection is a clip. Knot abscissae and tail slopes
/// stay at their initial values. Gradients come from forward differences in
/// each latent knot (only the two adjacent regions move) mapped through the
/// chain rule; every step backtracks until the objective strictly
/// decreases, and the fit stops early when no step size does. With more
/// than [`BLOCK_SIZE`] knots each step updates a seeded random block.
pub fn fit_projected_gradient<T: Real>(
    t: &TargetDistribution<T>,
    l1_max: T,
    l2_max: T,
    opts: &FitOptions,
) -> Result<FitReport<T>> {
    if !(opts.step_size > 0.0 && opts.step_size.is_finite()) {
        return domain(format!("step size must be finite and > 0, got {}", opts.step_size));
    }
    let init = clipped_quantile_flow(t, l1_max, l2_max, opts.knots)?;
    let initial_tv = tv_target_flow_1d(t, &init)?.value;
    let (ls, rs) = init.tail_slopes();
    let obj = Objective {
        regions: Regions::new(t)?,
        what: match opts.objective {
            FitObjective::Tv => Integrand::AbsDiff,
            FitObjective::Nll => Integrand::CrossEntropy,
        },
        xs: init.knots_x().to_vec(),
        ls,
        rs,
    };
    let (lo, hi) = (T::one() / l2_max, l1_max);
    let k = obj.xs.len();
    let dx: Vec<T> = obj.xs.windows(2).map(|w| w[1] - w[0]).collect();
    // Parameters: z₀ and the k−1 segment slopes; the budget is a box on the slopes.
    let mut z0 = init.knots_z()[0];
    let mut slopes = init.segment_slopes();
    let mut zs = accumulate(z0, &slopes, &dx);
    let mut pieces = obj.pieces(&zs);
    let mut value = Objective::total(&pieces)?;
    let mut trace = vec![value];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let step0: T = lit(opts.step_size);
    let mut accepted = 0;

    for _ in 0..opts.steps {
        let h = (zs[k - 1] - zs[0]) / from_usize::<T>(k - 1) * lit(FD_REL_STEP);
        let mut grad_z = vec![T::zero(); k];
        let mut probe = zs.clone();
        for i in 0..k {
            let mut gap = T::infinity();
            if i > 0 {
                gap = gap.min(zs[i] - zs[i - 1]);
            }
            if i + 1 < k {
                gap = gap.min(zs[i + 1] - zs[i]);
            }
            let dz = h.min(gap * lit(0.25));
            let base = pieces[i] + pieces[i + 1];
            probe[i] = zs[i] + dz;
            let moved = obj.local(&probe, i);
            probe[i] = zs[i];
            grad_z[i] = (moved - base) / dz;
            if !grad_z[i].is_finite() {
                return Err(Error::NonFinite(format!("gradient at knot {i}")));
            }
        }
        // Chain rule: z_j = z₀ + Σ_{m<j} s_m Δx_m.
        let mut suffix = T::zero();
        let mut grad_s = vec![T::zero(); k - 1];
        for j in (0..k - 1).rev() {
            suffix = suffix + grad_z[j + 1];
            grad_s[j] = suffix * dx[j];
        }
        let grad_z0 = suffix + grad_z[0];

        let n_params = k;
        let block: Vec<bool> = if n_params > BLOCK_SIZE {
            let mut mask = vec![false; n_params];
            for idx in sample(&mut rng, n_params, BLOCK_SIZE) {
                mask[idx] = true;
            }
            mask
        } else {
            vec![true; n_params]
        };

        let mut eta = step0;
        let mut next = None;
        for _ in 0..=MAX_HALVINGS {
            let trial_z0 = if block[0] { z0 - eta * grad_z0 } else { z0 };
            let trial_s: Vec<T> = slopes
                .iter()
                .zip(&grad_s)
                .enumerate()
                .map(|(j, (&s, &g))| if block[j + 1] { clip(s - eta * g, lo, hi) } else { s })
                .collect();
            let trial_z = accumulate(trial_z0, &trial_s, &dx);
            let trial_pieces = obj.pieces(&trial_z);
            let trial_value = Objective::total(&trial_pieces)?;
            if trial_value < value {
                next = Some((trial_z0, trial_s, trial_z, trial_pieces, trial_value));
                break;
            }
            eta = eta * lit(BACKTRACK_FACTOR);
        }
        match next {
            Some((a, s, z, p, v)) => {
                z0 = a;
                slopes = s;
                zs = z;
                pieces = p;
                value = v;
                trace.push(v);
                accepted += 1;
            }
            None => break,
        }
    }

    let flow = PiecewiseLinearFlow1D::new(obj.xs.clone(), zs, ls, rs)?;
    let final_tv = tv_target_flow_1d(t, &flow)?.value;
    Ok(FitReport {
        flow,
        initial_tv,
        final_tv,
        objective_trace: trace,
        accepted_steps: accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::Flow;

    #[test]
    fn budgets_are_validated() {
        let t = TargetDistribution::<f64>::standard_gaussian(1).unwrap();
        assert!(clipped_quantile_flow(&t, 0.5, 1.5, 16).is_err());
        assert!(clipped_quantile_flow(&t, 2.0, 2.0, 4).is_err());
        assert!(clipped_quantile_flow(&t, f64::INFINITY, 2.0, 16).is_err());
        let g2 = TargetDistribution::<f64>::standard_gaussian(2).unwrap();
        assert!(clipped_quantile_flow(&g2, 2.0, 2.0, 16).is_err());
    }

    #[test]
    fn quantile_flow_respects_budget() {
        let t = TargetDistribution::<f64>::dense_spike(0.9, 0.1).unwrap();
        for (l1, l2) in [(1.0, 1.0), (1.0, 1e6), (3.0, 2.0), (50.0, 50.0)] {
            let f = clipped_quantile_flow(&t, l1, l2, 64).unwrap();
            let c = f.certify();
            assert!(c.l1() <= l1 * (1.0 + 1e-12) && c.l2() <= l2 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn unit_budget_on_gaussian_is_identity() {
        let t = TargetDistribution::<f64>::standard_gaussian(1).unwrap();
        let f = clipped_quantile_flow(&t, 1.0, 1.0, 16).unwrap();
        for x in [-5.0, -0.3, 0.0, 1.7, 9.0] {
            assert!((f.forward_1d(x) - x).abs() < 1e-9, "{x}");
        }
    }

    #[test]
    fn loose_budget_quantile_flow_converges() {
        let t = TargetDistribution::<f64>::standard_gaussian(1).unwrap();
        let f = clipped_quantile_flow(&t, 1e6, 1e6, 2048).unwrap();
        assert!(tv_target_flow_1d(&t, &f).unwrap().value < 0.02);
    }

    #[test]
    fn bimodal_is_anchored_at_the_gap_midpoint() {
        let t = TargetDistribution::<f64>::separated_bimodal(2.0, 0.1).unwrap();
        let f = clipped_quantile_flow(&t, 1e6, 1e6, 64).unwrap();
        assert!(f.forward_1d(0.0).abs() < 1e-9);
    }

    #[test]
    fn fit_is_monotone_and_within_budget() {
        let t = TargetDistribution::<f64>::dense_spike(0.6, 0.3).unwrap();
        let opts = FitOptions {
            knots: 24,
            steps: 40,
            ..FitOptions::default()
        };
        let r = fit_projected_gradient(&t, 2.0, 2.0, &opts).unwrap();
        assert!(r.objective_trace.windows(2).all(|w| w[1] < w[0]));
        assert!(r.final_tv <= r.initial_tv + 1e-12);
        assert!(r.accepted_steps > 0);
        let c = r.flow.certify();
        assert!(c.l1() <= 2.0 * (1.0 + 1e-12) && c.l2() <= 2.0 * (1.0 + 1e-12));
    }

    #[test]
    fn fit_is_deterministic_per_seed() {
        let t = TargetDistribution::<f64>::dense_spike(0.8, 0.2).unwrap();
        let opts = FitOptions {
            knots: 80,
            steps: 5,
            seed: 42,
            ..FitOptions::default()
        };
        let a = fit_projected_gradient(&t, 3.0, 3.0, &opts).unwrap();
        let b = fit_projected_gradient(&t, 3.0, 3.0, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.flow.to_csv(), b.flow.to_csv());
    }

    #[test]
    fn nll_objective_runs() {
        let t = TargetDistribution::<f64>::dense_spike(0.5, 0.5).unwrap();
        let opts = FitOptions {
            knots: 16,
            steps: 10,
            objective: FitObjective::Nll,
            ..FitOptions::default()
        };
        let r = fit_projected_gradient(&t, 4.0, 4.0, &opts).unwrap();
        assert!(r.objective_trace.windows(2).all(|w| w[1] < w[0]));
    }
}
