//! Standalone SVG line plots, one polyline per series.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{domain, Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Draws each of `y_cols` against `x_col` from CSV text. Rows are grouped
/// into series by the values of `series_cols` (labelled `col=value`), and
/// by y column when there is more than one; series keep the order of first
/// appearance. Rows with non-positive `x` are dropped under `log_x`, as are
/// non-numeric y cells.
pub fn plot_csv(
    csv_text: &str,
    x_col: &str,
    y_cols: &[&str],
    series_cols: &[&str],
    opts: &PlotOptions,
) -> Result<String> {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Domain(format!("CSV header: {e}")))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Domain(format!("CSV has no column `{name}`")))
    };
    let xi = col(x_col)?;
    let yis = y_cols.iter().map(|c| col(c)).collect::<Result<Vec<_>>>()?;
    let sis = series_cols.iter().map(|c| col(c)).collect::<Result<Vec<_>>>()?;
    let mut order: Vec<String> = Vec::new();
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: line + 2,
            msg: e.to_string(),
        })?;
        let x: f64 = rec[xi].trim().parse().map_err(|_| Error::Parse {
            line: line + 2,
            msg: format!("bad number `{}`", &rec[xi]),
        })?;
        if opts.log_x && x <= 0.0 {
            continue;
        }
        let prefix: Vec<String> = series_cols.iter().zip(&sis).map(|(n, &i)| format!("{n}={}", &rec[i])).collect();
        for (name, &yi) in y_cols.iter().zip(&yis) {
            let Ok(y) = rec[yi].trim().parse::<f64>() else { continue };
            let mut label = prefix.clone();
            if y_cols.len() > 1 {
                label.push((*name).to_string());
            }
            let key = label.join(", ");
            if !series.contains_key(&key) {
                order.push(key.clone());
            }
            series.entry(key).or_default().push((x, y));
        }
    }
    let ordered: Vec<(String, Vec<(f64, f64)>)> = order
        .into_iter()
        .map(|k| {
            let pts = series.remove(&k).unwrap_or_default();
            (k, pts)
        })
        .collect();
    line_plot(&ordered, opts)
}

pub fn line_plot(series: &[(String, Vec<(f64, f64)>)], opts: &PlotOptions) -> Result<String> {
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        if !(x.is_finite() && y.is_finite()) {
            continue;
        }
        let x = if opts.log_x { x.log10() } else { x };
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x0.is_finite() && y0.is_finite()) {
        return domain("nothing to plot");
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| {
        let x = if opts.log_x { x.log10() } else { x };
        MARGIN_L + (x - x0) / (x1 - x0) * pw
    };
    let sy = |y: f64| MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_L + pw / 2.0,
        esc(&opts.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="black"/>"#
    );
    // Five ticks per axis.
    for i in 0..=4 {
        let f = f64::from(i) / 4.0;
        let xv = x0 + f * (x1 - x0);
        let label = if opts.log_x { format!("{:.3e}", 10f64.powf(xv)) } else { format!("{xv:.3}") };
        let px = MARGIN_L + f * pw;
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
            MARGIN_T + ph,
            MARGIN_T + ph + 5.0,
            MARGIN_T + ph + 18.0
        );
        let yv = y0 + f * (y1 - y0);
        let py = sy(yv);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{MARGIN_L}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.3}</text>"#,
            MARGIN_L - 5.0,
            MARGIN_L - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 12.0,
        esc(&opts.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        esc(&opts.y_label)
    );
    for (i, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite() && (!opts.log_x || *x > 0.0))
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let ly = MARGIN_T + 14.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_R + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            esc(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
