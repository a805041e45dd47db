//! Closed-form bound sweeps over a parameter grid.

use crate::bounds::{
    corollary_separated_modes, mixture_bound, theorem1_bound, theorem2_bound_ball93, theorem2_bound_sqrt_pi,
    theorem3_bound, BiLipschitzConstants, BoundReport, TheoremId,
};
use crate::error::{domain, Error, Result};
use crate::scalar::fmt_real;

use super::svg::{plot_csv, PlotOptions};
use super::write_csv;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsEvalConfig {
    pub theorems: Vec<TheoremId>,
    pub dims: Vec<usize>,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    /// Target mass of the ball (T2a, T2b, T3, MIX).
    pub mass: f64,
    pub radius: f64,
    /// Mode distance (COR1).
    pub dist: f64,
    /// Subset volume and mass (T1).
    pub vol_a: f64,
    pub mass_a: f64,
    /// Mixture modes and latent scale product (MIX).
    pub k: usize,
    pub sigma_term: f64,
}

impl Default for BoundsEvalConfig {
    fn default() -> Self {
        Self {
            theorems: vec![
                TheoremId::T1,
                TheoremId::T2a,
                TheoremId::T2b,
                TheoremId::T3,
                TheoremId::Cor1,
                TheoremId::Mix,
            ],
            dims: vec![1, 2, 10],
            l1: vec![1.0, 2.0, 5.0, 10.0, 20.0],
            l2: vec![1.0],
            mass: 0.9,
            radius: 0.1,
            dist: 2.0,
            vol_a: 0.1,
            mass_a: 0.9,
            k: 1,
            sigma_term: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsEvalRow {
    pub report: BoundReport<f64>,
    pub dim: usize,
    pub l1: f64,
    pub l2: f64,
    /// Where the bound changes sign relative to the previous row of the same
    /// series: the interpolated `L₁`/`L₂` when only that changed, the row's
    /// own dimension when only `d` changed.
    pub crossing: Option<f64>,
}

fn evaluate(cfg: &BoundsEvalConfig, theorem: TheoremId, dim: usize, l1: f64, l2: f64) -> Result<BoundReport<f64>> {
    match theorem {
        TheoremId::T1 => theorem1_bound(cfg.vol_a, cfg.mass_a, &BiLipschitzConstants::new(l1, l2)?, dim),
        TheoremId::T2a => theorem2_bound_sqrt_pi(cfg.mass, cfg.radius, l1),
        TheoremId::T2b => theorem2_bound_ball93(cfg.mass, cfg.radius, l1, dim),
        TheoremId::T3 => theorem3_bound(cfg.mass, cfg.radius, l2, dim),
        TheoremId::Cor1 => corollary_separated_modes(cfg.dist, l2, dim),
        TheoremId::Mix => mixture_bound(cfg.mass, cfg.radius, l1, cfg.k, cfg.sigma_term),
        TheoremId::Prec => Err(Error::Unsupported(
            "PREC is an upper bound on precision, not a TV bound; not part of bounds-eval".into(),
        )),
    }
}

/// Bisects the sign change of the bound along one constant.
fn bisect<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64) -> Result<f64> {
    let fa_pos = f(a)? > 0.0;
    for _ in 0..200 {
        // Constants span decades; bisect in log space.
        let m = (a.ln() * 0.5 + b.ln() * 0.5).exp();
        if !(m > a.min(b) && m < a.max(b)) {
            break;
        }
        if (f(m)? > 0.0) == fa_pos {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Rows ordered theorem → dim → L₂ → L₁, skipping cells where a theorem is
/// undefined (e.g. T2b in one dimension).
pub fn run_bounds_eval(cfg: &BoundsEvalConfig) -> Result<Vec<BoundsEvalRow>> {
    if cfg.theorems.is_empty() || cfg.dims.is_empty() || cfg.l1.is_empty() || cfg.l2.is_empty() {
        return domain("bounds-eval needs at least one theorem, dimension, L1 and L2");
    }
    let mut rows: Vec<BoundsEvalRow> = Vec::new();
    for &theorem in &cfg.theorems {
        let mut prev: Option<(usize, f64, f64, bool)> = None;
        for &dim in &cfg.dims {
            for &l2 in &cfg.l2 {
                for &l1 in &cfg.l1 {
                    let report = match evaluate(cfg, theorem, dim, l1, l2) {
                        Ok(r) => r,
                        Err(Error::Domain(_)) if theorem == TheoremId::T2b && dim < 2 => continue,
                        Err(e) => return Err(e),
                    };
                    let positive = report.raw_bound > 0.0;
                    let crossing = match prev {
                        Some((pd, pl1, pl2, pp)) if pp != positive => {
                            if pd == dim && pl2 == l2 && pl1 != l1 {
                                Some(bisect(|v| Ok(evaluate(cfg, theorem, dim, v, l2)?.raw_bound), pl1, l1)?)
                            } else if pd == dim && pl1 == l1 && pl2 != l2 {
                                Some(bisect(|v| Ok(evaluate(cfg, theorem, dim, l1, v)?.raw_bound), pl2, l2)?)
                            } else if pd != dim && pl1 == l1 && pl2 == l2 {
                                Some(dim as f64)
                            } else {
                                None
                            }
                        }
                        _ => None,
                    };
                    prev = Some((dim, l1, l2, positive));
                    rows.push(BoundsEvalRow {
                        report,
                        dim,
                        l1,
                        l2,
                        crossing,
                    });
                }
            }
        }
    }
    Ok(rows)
}

impl BoundsEvalRow {
    pub fn csv(rows: &[BoundsEvalRow], cfg: &BoundsEvalConfig) -> String {
        write_csv(
            &[
                "theorem_id",
                "dim",
                "l1",
                "l2",
                "mass",
                "radius",
                "dist",
                "vol_a",
                "mass_a",
                "k",
                "sigma_term",
                "raw_bound",
                "lower_bound_tv",
                "valid",
                "sign_change_at",
            ],
            rows.iter().map(|r| {
                vec![
                    r.report.theorem.as_str().to_string(),
                    r.dim.to_string(),
                    fmt_real(r.l1),
                    fmt_real(r.l2),
                    fmt_real(cfg.mass),
                    fmt_real(cfg.radius),
                    fmt_real(cfg.dist),
                    fmt_real(cfg.vol_a),
                    fmt_real(cfg.mass_a),
                    cfg.k.to_string(),
                    fmt_real(cfg.sigma_term),
                    fmt_real(r.report.raw_bound),
                    fmt_real(r.report.lower_bound_tv),
                    r.report.valid.to_string(),
                    r.crossing.map(fmt_real).unwrap_or_default(),
                ]
            }),
        )
    }
}

/// Lower bound against `L₁`, one curve per `(theorem, d, L₂)`.
pub fn bounds_eval_svg(csv: &str) -> Result<String> {
    plot_csv(
        csv,
        "l1",
        &["lower_bound_tv"],
        &["theorem_id", "dim", "l2"],
        &PlotOptions {
            title: "TV lower bounds".into(),
            x_label: "L1".into(),
            y_label: "min(bound, 1)".into(),
            log_x: true,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t2_sign_change_in_l1() {
        let cfg = BoundsEvalConfig {
            theorems: vec![TheoremId::T2a],
            dims: vec![1],
            l1: vec![1.0, 10.0, 15.0, 16.0, 20.0],
            ..BoundsEvalConfig::default()
        };
        let rows = run_bounds_eval(&cfg).unwrap();
        let crossings: Vec<f64> = rows.iter().filter_map(|r| r.crossing).collect();
        assert_eq!(crossings.len(), 1);
        let exact = 0.9 * std::f64::consts::PI.sqrt() / 0.1;
        assert!((crossings[0] - exact).abs() < 1e-9, "{}", crossings[0]);
        assert!((exact - 15.952_08).abs() < 1e-5);
        assert_eq!(rows[3].crossing, Some(crossings[0]));
    }

    #[test]
    fn corollary_is_nonincreasing_in_dimension() {
        let cfg = BoundsEvalConfig {
            theorems: vec![TheoremId::Cor1],
            dims: vec![1, 2, 3, 10, 100, 784, 3072, 12288],
            l1: vec![1.0],
            l2: vec![1.0],
            dist: 2.0,
            ..BoundsEvalConfig::default()
        };
        let rows = run_bounds_eval(&cfg).unwrap();
        assert_eq!(rows.len(), 8);
        for w in rows.windows(2) {
            assert!(w[1].report.raw_bound <= w[0].report.raw_bound);
        }
    }

    #[test]
    fn mixture_with_one_mode_matches_t2a() {
        let cfg = BoundsEvalConfig {
            theorems: vec![TheoremId::T2a, TheoremId::Mix],
            dims: vec![1],
            ..BoundsEvalConfig::default()
        };
        let rows = run_bounds_eval(&cfg).unwrap();
        let half = rows.len() / 2;
        for (a, b) in rows[..half].iter().zip(&rows[half..]) {
            assert_eq!(a.report.raw_bound, b.report.raw_bound);
        }
    }

    #[test]
    fn t2b_skips_one_dimension() {
        let cfg = BoundsEvalConfig {
            theorems: vec![TheoremId::T2b],
            dims: vec![1, 2],
            l1: vec![1.0],
            ..BoundsEvalConfig::default()
        };
        let rows = run_bounds_eval(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].dim, 2);
    }

    #[test]
    fn csv_shape() {
        let cfg = BoundsEvalConfig::default();
        let rows = run_bounds_eval(&cfg).unwrap();
        let csv = BoundsEvalRow::csv(&rows, &cfg);
        assert_eq!(csv.lines().count(), rows.len() + 1);
        assert!(csv.lines().all(|l| l.split(',').count() == 15));
        let svg = bounds_eval_svg(&csv).unwrap();
        assert!(svg.matches("<polyline").count() >= cfg.theorems.len());
    }
}
