//! Gaussian measure of centered balls of radius `R/L₂`, per dimension.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::gaussmeasure::gaussian_ball_measure_centered;
use crate::scalar::fmt_real;

use super::svg::{plot_csv, PlotOptions};
use super::write_csv;

/// 1, 2, 10, then MNIST (28·28), CIFAR-10 (32·32·3) and CelebA at the
/// 64·64·3 center-crop resolution.
pub const DEFAULT_FIG3_DIMS: [usize; 6] = [1, 2, 10, 784, 3072, 12288];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig3Row {
    pub dim: usize,
    pub ratio: f64,
    pub measure: f64,
}

/// `0, 0.25, …, 160`: wide enough to show the jump near `√d` for every
/// default dimension.
pub fn default_fig3_ratios() -> Vec<f64> {
    (0..=640).map(|i| f64::from(i) * 0.25).collect()
}

/// One row per `(dim, ratio)`, dims outer, in input order.
pub fn run_fig3(dims: &[usize], ratios: &[f64]) -> Result<Vec<Fig3Row>> {
    if dims.is_empty() || ratios.is_empty() {
        return domain("fig3 needs at least one dimension and one ratio");
    }
    if let Some(r) = ratios.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return domain(format!("ratios must be finite and >= 0, got {r}"));
    }
    let cells: Vec<(usize, f64)> = dims.iter().flat_map(|&d| ratios.iter().map(move |&r| (d, r))).collect();
    cells
        .par_iter()
        .map(|&(dim, ratio)| {
            Ok(Fig3Row {
                dim,
                ratio,
                measure: gaussian_ball_measure_centered(dim, ratio)?,
            })
        })
        .collect()
}

pub fn fig3_csv(rows: &[Fig3Row]) -> String {
    write_csv(
        &["dim", "ratio", "measure"],
        rows.iter()
            .map(|r| vec![r.dim.to_string(), fmt_real(r.ratio), fmt_real(r.measure)]),
    )
}

/// Renders the plot straight from CSV text, so it can be regenerated offline.
pub fn fig3_svg(csv: &str, log_x: bool) -> Result<String> {
    plot_csv(
        csv,
        "ratio",
        &["measure"],
        &["dim"],
        &PlotOptions {
            title: "Gaussian measure of centered balls".into(),
            x_label: "R / L2".into(),
            y_label: "Q(B(0, R/L2))".into(),
            log_x,
        },
    )
}
