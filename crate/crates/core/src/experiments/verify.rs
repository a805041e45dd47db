//! Bound-versus-measurement matrix: fit a budgeted flow to each target,
//! certify it, measure its TV and compare with the scenario's bound
//! maximized over balls.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bounds::{
    corollary_separated_modes, maximize_over_centers, maximize_over_radius, theorem1_bound,
    theorem2_bound_sqrt_pi, theorem3_bound, BiLipschitzConstants, BoundReport, RadiusSearch,
};
use crate::error::{domain, Error, Result};
use crate::flows::{fit_projected_gradient, FitOptions, Flow, PiecewiseLinearFlow1D};
use crate::scalar::fmt_real;
use crate::targets::{ball_volume, TargetDistribution};
use crate::tvmetrics::tv_target_flow_1d;

use super::svg::{plot_csv, PlotOptions};
use super::{write_csv, TargetSpec};

/// Quadrature slack allowed before a cell counts as a violation.
pub const SOUNDNESS_SLACK: f64 = 1e-3;

const RADIUS_GRID: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Theorem1,
    Theorem2,
    Theorem3,
    Corollary,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Theorem1 => "theorem1",
            Scenario::Theorem2 => "theorem2",
            Scenario::Theorem3 => "theorem3",
            Scenario::Corollary => "corollary",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem1" => Ok(Scenario::Theorem1),
            "theorem2" => Ok(Scenario::Theorem2),
            "theorem3" => Ok(Scenario::Theorem3),
            "corollary" => Ok(Scenario::Corollary),
            other => Err(Error::Unsupported(format!(
                "unknown scenario `{other}` (theorem1, theorem2, theorem3, corollary)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub scenario: Scenario,
    pub targets: Vec<TargetSpec>,
    /// `(L₁, L₂)` budgets.
    pub budgets: Vec<(f64, f64)>,
    pub fit: FitOptions,
}

impl VerifyConfig {
    /// The pathological target of the scenario, at a tight and a loose budget.
    pub fn for_scenario(scenario: Scenario) -> Self {
        let (target, budgets) = match scenario {
            Scenario::Theorem1 => (TargetSpec::DenseSpike { mass: 0.9, width: 0.1 }, vec![(1.0, 1.0), (1e6, 1e6)]),
            Scenario::Theorem2 => (TargetSpec::DenseSpike { mass: 0.9, width: 0.1 }, vec![(1.0, 1e6), (1e6, 1e6)]),
            Scenario::Theorem3 | Scenario::Corollary => (
                TargetSpec::SeparatedBimodal { dist: 2.0, width: 0.1 },
                vec![(1e6, 1.0), (1e6, 1e6)],
            ),
        };
        Self {
            scenario,
            targets: vec![target],
            budgets,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub scenario: Scenario,
    pub target: String,
    pub l1_budget: f64,
    pub l2_budget: f64,
    pub l1_certified: f64,
    pub l2_certified: f64,
    pub bound: Option<BoundReport<f64>>,
    pub measured_tv: f64,
    /// `measured_tv − lower_bound_tv`.
    pub gap: f64,
    /// `None` when the cell ran; the failure message otherwise.
    pub failure: Option<String>,
}

impl VerifyRow {
    pub fn is_violation(&self) -> bool {
        self.failure.is_none() && self.gap < -SOUNDNESS_SLACK
    }

    fn status(&self) -> String {
        match &self.failure {
            Some(msg) => format!("failed: {msg}"),
            None if self.is_violation() => "violation".into(),
            None => "ok".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.is_violation()).count()
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.failure.is_some()).count()
    }

    pub fn to_csv(&self) -> String {
        write_csv(
            &[
                "scenario",
                "target",
                "l1_budget",
                "l2_budget",
                "l1_certified",
                "l2_certified",
                "bound",
                "measured_tv",
                "gap",
                "valid",
                "witness_center",
                "witness_radius",
                "status",
            ],
            self.rows.iter().map(|r| {
                let b = r.bound.as_ref();
                let center = b
                    .and_then(|b| b.witness.center.as_ref())
                    .map(|c| c.iter().map(|&v| fmt_real(v)).collect::<Vec<_>>().join(" "))
                    .unwrap_or_default();
                vec![
                    r.scenario.to_string(),
                    r.target.clone(),
                    fmt_real(r.l1_budget),
                    fmt_real(r.l2_budget),
                    fmt_real(r.l1_certified),
                    fmt_real(r.l2_certified),
                    fmt_real(b.map_or(f64::NAN, |b| b.lower_bound_tv)),
                    fmt_real(r.measured_tv),
                    fmt_real(r.gap),
                    b.is_some_and(|b| b.valid).to_string(),
                    center,
                    b.and_then(|b| b.witness.radius).map(fmt_real).unwrap_or_default(),
                    r.status(),
                ]
            }),
        )
    }
}

/// Bound and measured TV against the budget that the scenario constrains
/// (`L₁` for theorems 1–2, `L₂` otherwise), one pair of curves per target.
pub fn verify_svg(csv: &str, scenario: Scenario) -> Result<String> {
    let x = match scenario {
        Scenario::Theorem1 | Scenario::Theorem2 => "l1_budget",
        Scenario::Theorem3 | Scenario::Corollary => "l2_budget",
    };
    plot_csv(
        csv,
        x,
        &["bound", "measured_tv"],
        &["target"],
        &PlotOptions {
            title: format!("{scenario}: bound vs measured TV"),
            x_label: x.into(),
            y_label: "TV".into(),
            log_x: true,
        },
    )
}

fn radius_search(t: &TargetDistribution<f64>) -> Result<RadiusSearch<f64>> {
    let (lo, hi) = t.effective_support_1d(1e-12)?;
    let span = hi - lo;
    Ok(RadiusSearch::geometric(span * 1e-5, span, RADIUS_GRID))
}

/// The scenario's bound for `flow`, maximized over the ball search space
/// with the flow's certified constants.
pub fn scenario_bound(
    scenario: Scenario,
    t: &TargetDistribution<f64>,
    flow: &PiecewiseLinearFlow1D<f64>,
    consts: &BiLipschitzConstants<f64>,
) -> Result<BoundReport<f64>> {
    let search = radius_search(t)?;
    let centers = t.mode_centers();
    let mass = |c: &[f64], r: f64| t.ball_mass(c, r).map(|m| m.value.clamp(0.0, 1.0));
    match scenario {
        Scenario::Theorem1 => maximize_over_centers(&centers, &search, |c, r| {
            theorem1_bound(ball_volume(1, r), mass(c, r)?, consts, 1)
        }),
        Scenario::Theorem2 => {
            maximize_over_centers(&centers, &search, |c, r| theorem2_bound_sqrt_pi(mass(c, r)?, r, consts.l1()))
        }
        Scenario::Theorem3 => {
            let origin = flow.inverse(&[0.0]);
            let mut report =
                maximize_over_radius(&search, |r| theorem3_bound(mass(&origin, r)?, r, consts.l2(), 1))?;
            report.witness.center = Some(origin);
            Ok(report)
        }
        Scenario::Corollary => {
            if centers.len() < 2 {
                return domain("the corollary needs a target with at least two mode centers");
            }
            let dist = (centers[0][0] - centers[1][0]).abs();
            corollary_separated_modes(dist, consts.l2(), 1)
        }
    }
}

fn run_cell(cfg: &VerifyConfig, spec: &TargetSpec, l1: f64, l2: f64) -> VerifyRow {
    let mut row = VerifyRow {
        scenario: cfg.scenario,
        target: spec.to_string(),
        l1_budget: l1,
        l2_budget: l2,
        l1_certified: f64::NAN,
        l2_certified: f64::NAN,
        bound: None,
        measured_tv: f64::NAN,
        gap: f64::NAN,
        failure: None,
    };
    let outcome = (|| -> Result<()> {
        let t = spec.build()?;
        let fit = fit_projected_gradient(&t, l1, l2, &cfg.fit)?;
        let consts = fit.flow.certify();
        row.l1_certified = consts.l1();
        row.l2_certified = consts.l2();
        row.measured_tv = tv_target_flow_1d(&t, &fit.flow)?.value;
        let bound = scenario_bound(cfg.scenario, &t, &fit.flow, &consts)?;
        row.gap = row.measured_tv - bound.lower_bound_tv;
        row.bound = Some(bound);
        Ok(())
    })();
    if let Err(e) = outcome {
        row.failure = Some(e.to_string());
    }
    row
}

/// One row per `(target, budget)`, targets outer, in config order.
pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    if cfg.targets.is_empty() || cfg.budgets.is_empty() {
        return domain("verify needs at least one target and one budget");
    }
    let cells: Vec<(&TargetSpec, f64, f64)> = cfg
        .targets
        .iter()
        .flat_map(|t| cfg.budgets.iter().map(move |&(a, b)| (t, a, b)))
        .collect();
    let rows = cells.par_iter().map(|&(t, l1, l2)| run_cell(cfg, t, l1, l2)).collect();
    Ok(VerifyReport { rows })
}
