//! `bilip`: reproduce the Gaussian ball-measure curves, sweep the closed-form
//! TV bounds, and check them against certified flows fitted at desk scale.
//!
//! Every subcommand writes CSV first and renders SVG from that CSV, so
//! `bilip plot` can regenerate any figure offline. `--config FILE` reads
//! `key = value` lines whose keys are the long flag names; flags given on
//! the command line win.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bilip::bounds::TheoremId;
use bilip::experiments::svg::{plot_csv, PlotOptions};
use bilip::experiments::{
    bounds_eval_svg, default_fig3_ratios, fig3_csv, fig3_svg, run_bounds_eval, run_fig3, run_verify, verify_svg,
    BoundsEvalConfig, BoundsEvalRow, Scenario, TargetSpec, VerifyConfig, DEFAULT_FIG3_DIMS,
};
use bilip::flows::{fit_projected_gradient, FitObjective, FitOptions, Flow};
use bilip::scalar::fmt_real;
use bilip::tvmetrics::{tv_monte_carlo, tv_target_flow_1d};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Flags that take no value; `key = true` in a config file turns them on.
const SWITCHES: [&str; 1] = ["log-x"];

/// Budget used for the unconstrained side when only one of `--l1`/`--l2` is given.
const LOOSE_BUDGET: f64 = 1e6;

const DENSITY_POINTS: usize = 2001;

#[derive(Parser, Debug)]
#[command(name = "bilip", version, about = "TV lower bounds for bi-Lipschitz normalizing flows")]
struct Cli {
    /// Plain `key = value` file; keys are long flag names.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gaussian measure of centered balls of radius R/L2, one curve per dimension.
    Fig3(Fig3Args),
    /// Evaluate the closed-form bounds over a parameter grid.
    BoundsEval(BoundsEvalArgs),
    /// Fit budgeted flows, certify them and compare measured TV with the bound.
    Verify(VerifyArgs),
    /// Fit one budgeted 1D flow and export it with its density.
    Fit1d(Fit1dArgs),
    /// Re-render an SVG from a CSV written by another subcommand.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        self != Format::Svg
    }

    fn svg(self) -> bool {
        self != Format::Csv
    }
}

#[derive(Args, Debug)]
struct Output {
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,

    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

impl Output {
    /// Writes `<stem>.csv` and/or `<stem>.svg`; the SVG is rendered from the CSV.
    fn emit(&self, stem: &str, csv: &str, svg: impl FnOnce(&str) -> bilip::Result<String>) -> Result<()> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        if self.format.csv() {
            write(&self.out.join(format!("{stem}.csv")), csv)?;
        }
        if self.format.svg() {
            write(&self.out.join(format!("{stem}.svg")), &svg(csv)?)?;
        }
        Ok(())
    }
}

#[derive(Args, Debug)]
struct Fig3Args {
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_FIG3_DIMS)]
    dims: Vec<usize>,

    /// R/L2 values; defaults to 0, 0.25, …, 160.
    #[arg(long, value_delimiter = ',')]
    ratios: Vec<f64>,

    #[arg(long)]
    log_x: bool,

    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct BoundsEvalArgs {
    /// T1, T2a, T2b, T3, COR1, MIX.
    #[arg(long, value_delimiter = ',', value_parser = parse_theorem)]
    theorems: Vec<TheoremId>,

    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,

    #[arg(long, value_delimiter = ',')]
    l1: Vec<f64>,

    #[arg(long, value_delimiter = ',')]
    l2: Vec<f64>,

    /// Target mass of the ball.
    #[arg(long)]
    mass: Option<f64>,

    #[arg(long)]
    radius: Option<f64>,

    /// Distance between modes (COR1).
    #[arg(long)]
    dist: Option<f64>,

    /// Volume and mass of the high-density subset (T1).
    #[arg(long)]
    vol_a: Option<f64>,

    #[arg(long)]
    mass_a: Option<f64>,

    /// Number of mixture modes (MIX).
    #[arg(long)]
    k: Option<usize>,

    /// Latent scale product of the mixture (MIX).
    #[arg(long)]
    sigma_term: Option<f64>,

    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = FitOptions::default().knots)]
    knots: usize,

    #[arg(long, default_value_t = FitOptions::default().steps)]
    steps: usize,

    #[arg(long, default_value_t = FitOptions::default().step_size)]
    step_size: f64,

    #[arg(long, value_enum, default_value_t = Objective::Tv)]
    objective: Objective,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Objective {
    Tv,
    Nll,
}

impl FitArgs {
    fn options(&self) -> FitOptions {
        FitOptions {
            knots: self.knots,
            steps: self.steps,
            step_size: self.step_size,
            seed: self.seed,
            objective: match self.objective {
                Objective::Tv => FitObjective::Tv,
                Objective::Nll => FitObjective::Nll,
            },
        }
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// theorem1, theorem2, theorem3 or corollary.
    #[arg(long, value_parser = parse_scenario)]
    scenario: Scenario,

    /// Preset such as `dense_spike:0.9,0.1`, or a target config file. Repeatable.
    #[arg(long)]
    target: Vec<String>,

    /// L1 budgets; crossed with `--l2`. Without either, the scenario's defaults.
    #[arg(long, value_delimiter = ',')]
    l1: Vec<f64>,

    #[arg(long, value_delimiter = ',')]
    l2: Vec<f64>,

    #[command(flatten)]
    fit: FitArgs,

    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct Fit1dArgs {
    #[arg(long)]
    target: String,

    #[arg(long, default_value_t = LOOSE_BUDGET)]
    l1: f64,

    #[arg(long, default_value_t = LOOSE_BUDGET)]
    l2: f64,

    /// Also report a Monte Carlo TV estimate from this many target samples.
    #[arg(long, default_value_t = 0)]
    mc_samples: usize,

    #[command(flatten)]
    fit: FitArgs,

    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PlotKind {
    Fig3,
    BoundsEval,
    Verify,
    Fit1d,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// CSV to plot.
    #[arg(long)]
    input: PathBuf,

    /// SVG to write; defaults to the input with an `.svg` extension.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Use the layout of a subcommand's own plot.
    #[arg(long, value_enum)]
    kind: Option<PlotKind>,

    /// Scenario for `--kind verify`.
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<Scenario>,

    #[arg(long)]
    x: Option<String>,

    #[arg(long, value_delimiter = ',')]
    y: Vec<String>,

    /// Columns whose values split rows into series.
    #[arg(long, value_delimiter = ',')]
    series: Vec<String>,

    #[arg(long)]
    log_x: bool,

    #[arg(long, default_value = "")]
    title: String,
}

fn parse_theorem(s: &str) -> std::result::Result<TheoremId, String> {
    s.parse().map_err(|e: bilip::Error| e.to_string())
}

fn parse_scenario(s: &str) -> std::result::Result<Scenario, String> {
    s.parse().map_err(|e: bilip::Error| e.to_string())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn or_default<T: Clone>(given: &[T], default: &[T]) -> Vec<T> {
    if given.is_empty() {
        default.to_vec()
    } else {
        given.to_vec()
    }
}

fn fig3(a: &Fig3Args) -> Result<()> {
    let ratios = if a.ratios.is_empty() { default_fig3_ratios() } else { a.ratios.clone() };
    let rows = run_fig3(&a.dims, &ratios)?;
    a.output.emit("fig3", &fig3_csv(&rows), |csv| fig3_svg(csv, a.log_x))
}

fn bounds_eval(a: &BoundsEvalArgs) -> Result<()> {
    let d = BoundsEvalConfig::default();
    let cfg = BoundsEvalConfig {
        theorems: or_default(&a.theorems, &d.theorems),
        dims: or_default(&a.dims, &d.dims),
        l1: or_default(&a.l1, &d.l1),
        l2: or_default(&a.l2, &d.l2),
        mass: a.mass.unwrap_or(d.mass),
        radius: a.radius.unwrap_or(d.radius),
        dist: a.dist.unwrap_or(d.dist),
        vol_a: a.vol_a.unwrap_or(d.vol_a),
        mass_a: a.mass_a.unwrap_or(d.mass_a),
        k: a.k.unwrap_or(d.k),
        sigma_term: a.sigma_term.unwrap_or(d.sigma_term),
    };
    let rows = run_bounds_eval(&cfg)?;
    for r in rows.iter().filter(|r| r.crossing.is_some()) {
        eprintln!(
            "{} d={}: sign change at {}",
            r.report.theorem,
            r.dim,
            r.crossing.map(fmt_real).unwrap_or_default()
        );
    }
    a.output.emit("bounds_eval", &BoundsEvalRow::csv(&rows, &cfg), bounds_eval_svg)
}

/// Returns whether any cell violated its bound.
fn verify(a: &VerifyArgs) -> Result<bool> {
    let mut cfg = VerifyConfig::for_scenario(a.scenario);
    if !a.target.is_empty() {
        cfg.targets = a.target.iter().map(|t| TargetSpec::parse(t)).collect::<bilip::Result<_>>()?;
    }
    if !(a.l1.is_empty() && a.l2.is_empty()) {
        let l1 = or_default(&a.l1, &[LOOSE_BUDGET]);
        let l2 = or_default(&a.l2, &[LOOSE_BUDGET]);
        cfg.budgets = l1.iter().flat_map(|&x| l2.iter().map(move |&y| (x, y))).collect();
    }
    cfg.fit = a.fit.options();
    let report = run_verify(&cfg)?;
    let stem = format!("verify_{}", a.scenario);
    a.output.emit(&stem, &report.to_csv(), |csv| verify_svg(csv, a.scenario))?;
    for r in report.rows.iter().filter(|r| r.failure.is_some()) {
        eprintln!(
            "cell {} (L1={}, L2={}) failed: {}",
            r.target,
            r.l1_budget,
            r.l2_budget,
            r.failure.as_deref().unwrap_or_default()
        );
    }
    let violations = report.violations();
    eprintln!("{}: {} cells, {} violations, {} failed", a.scenario, report.rows.len(), violations, report.failures());
    Ok(violations > 0)
}

fn fit1d(a: &Fit1dArgs) -> Result<()> {
    let spec = TargetSpec::parse(&a.target)?;
    let t = spec.build()?;
    if t.dim() != 1 {
        bail!("fit1d needs a one-dimensional target, `{spec}` has d = {}", t.dim());
    }
    let fit = fit_projected_gradient(&t, a.l1, a.l2, &a.fit.options())?;
    let consts = fit.flow.certify();
    let tv = tv_target_flow_1d(&t, &fit.flow)?;
    let mc = if a.mc_samples > 0 {
        Some(tv_monte_carlo(&t, &fit.flow, a.mc_samples, a.fit.seed)?)
    } else {
        None
    };

    let report = {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record([
            "target",
            "l1_budget",
            "l2_budget",
            "l1_certified",
            "l2_certified",
            "initial_tv",
            "final_tv",
            "tv_quadrature",
            "tv_monte_carlo",
            "tv_monte_carlo_std_error",
            "accepted_steps",
            "seed",
        ])?;
        w.write_record([
            spec.to_string(),
            fmt_real(a.l1),
            fmt_real(a.l2),
            fmt_real(consts.l1()),
            fmt_real(consts.l2()),
            fmt_real(fit.initial_tv),
            fmt_real(fit.final_tv),
            fmt_real(tv.value),
            mc.as_ref().map(|m| fmt_real(m.value)).unwrap_or_default(),
            mc.as_ref().map(|m| fmt_real(m.std_error)).unwrap_or_default(),
            fit.accepted_steps.to_string(),
            a.fit.seed.to_string(),
        ])?;
        String::from_utf8(w.into_inner()?)?
    };

    let (lo, hi) = t.effective_support_1d(1e-9)?;
    let pad = 0.1 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let density = {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(["x", "target", "model"])?;
        for i in 0..DENSITY_POINTS {
            let x = lo + (hi - lo) * i as f64 / (DENSITY_POINTS - 1) as f64;
            w.write_record([fmt_real(x), fmt_real(t.density_1d(x)), fmt_real(fit.flow.density_1d(x))])?;
        }
        String::from_utf8(w.into_inner()?)?
    };

    let out = &a.output;
    fs::create_dir_all(&out.out).with_context(|| format!("creating {}", out.out.display()))?;
    write(&out.out.join("fit1d_flow.csv"), &fit.flow.to_csv())?;
    write(&out.out.join("fit1d_report.csv"), &report)?;
    out.emit("fit1d_density", &density, density_svg)?;
    eprintln!(
        "{spec}: TV {} -> {} (certified L1 = {}, L2 = {})",
        fmt_real(fit.initial_tv),
        fmt_real(tv.value),
        fmt_real(consts.l1()),
        fmt_real(consts.l2())
    );
    Ok(())
}

fn density_svg(csv: &str) -> bilip::Result<String> {
    plot_csv(
        csv,
        "x",
        &["target", "model"],
        &[],
        &PlotOptions {
            title: "Target and fitted flow densities".into(),
            x_label: "x".into(),
            y_label: "density".into(),
            log_x: false,
        },
    )
}

fn plot(a: &PlotArgs) -> Result<()> {
    let csv = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let svg = match a.kind {
        Some(PlotKind::Fig3) => fig3_svg(&csv, a.log_x)?,
        Some(PlotKind::BoundsEval) => bounds_eval_svg(&csv)?,
        Some(PlotKind::Verify) => {
            let Some(scenario) = a.scenario else { bail!("--kind verify needs --scenario") };
            verify_svg(&csv, scenario)?
        }
        Some(PlotKind::Fit1d) => density_svg(&csv)?,
        None => {
            let (Some(x), false) = (&a.x, a.y.is_empty()) else {
                bail!("give --kind, or --x and --y")
            };
            let y: Vec<&str> = a.y.iter().map(String::as_str).collect();
            let series: Vec<&str> = a.series.iter().map(String::as_str).collect();
            plot_csv(
                &csv,
                x,
                &y,
                &series,
                &PlotOptions {
                    title: a.title.clone(),
                    x_label: x.clone(),
                    y_label: y.join(", "),
                    log_x: a.log_x,
                },
            )?
        }
    };
    let path = a.output.clone().unwrap_or_else(|| a.input.with_extension("svg"));
    write(&path, &svg)
}

/// Splices `--key value` pairs from the `--config` file in after the
/// subcommand, skipping keys already given on the command line.
fn expand_config(mut argv: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    let path = match argv[pos].strip_prefix("--config=") {
        Some(p) => {
            let p = p.to_string();
            argv.remove(pos);
            p
        }
        None => {
            if pos + 1 >= argv.len() {
                bail!("--config needs a file");
            }
            argv.remove(pos);
            argv.remove(pos)
        }
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let given = |key: &str| {
        let flag = format!("--{key}");
        argv.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{path}:{}: expected `key = value`", n + 1);
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if given(&key) {
            continue;
        }
        if SWITCHES.contains(&key.as_str()) {
            match value {
                "true" => extra.push(format!("--{key}")),
                "false" => {}
                _ => bail!("{path}:{}: `{key}` takes true or false", n + 1),
            }
        } else if key == "target" {
            // Presets contain commas, so several targets are separated by `;`.
            for t in value.split(';').map(str::trim).filter(|t| !t.is_empty()) {
                extra.push(format!("--{key}={t}"));
            }
        } else {
            extra.push(format!("--{key}={value}"));
        }
    }
    let Some(sub) = argv.iter().skip(1).position(|a| !a.starts_with('-')).map(|i| i + 1) else {
        bail!("no subcommand given");
    };
    argv.splice(sub + 1..sub + 1, extra);
    Ok(argv)
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse_from(expand_config(std::env::args().collect())?);
    debug_assert!(cli.config.is_none(), "expanded before parsing");
    match &cli.command {
        Command::Fig3(a) => fig3(a)?,
        Command::BoundsEval(a) => bounds_eval(a)?,
        Command::Verify(a) => {
            if verify(a)? {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Fit1d(a) => fit1d(a)?,
        Command::Plot(a) => plot(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
