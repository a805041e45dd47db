//! Experiment runners behind the `bilip` binary: each produces rows that
//! serialize to deterministic CSV, and every plot is rendered from that CSV.

mod bounds_eval;
mod fig3;
pub mod svg;
mod verify;

use std::fmt;
use std::path::Path;

pub use bounds_eval::{bounds_eval_svg, run_bounds_eval, BoundsEvalConfig, BoundsEvalRow};
pub use fig3::{default_fig3_ratios, fig3_csv, fig3_svg, run_fig3, Fig3Row, DEFAULT_FIG3_DIMS};
pub use verify::{run_verify, scenario_bound, verify_svg, Scenario, VerifyConfig, VerifyReport, VerifyRow, SOUNDNESS_SLACK};

use crate::error::{domain, Error, Result};
use crate::targets::TargetDistribution;

/// A target given either as a preset (`dense_spike:0.9,0.1`) or a config file.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    DenseSpike { mass: f64, width: f64 },
    SeparatedBimodal { dist: f64, width: f64 },
    Gaussian { dim: usize, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    File { path: String, text: String },
}

fn parse_args(name: &str, args: &str, want: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = args
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Domain(format!("preset `{name}`: {e}")))?;
    if v.len() != want {
        return domain(format!("preset `{name}` takes {want} parameters, got {}", v.len()));
    }
    Ok(v)
}

impl TargetSpec {
    /// `dense_spike:<mass>,<width>`, `separated_bimodal:<dist>,<width>`,
    /// `gaussian[:<dim>[,<scale>]]`, `uniform:<lo>,<hi>`, or a path to a
    /// target config file.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        match name {
            "dense_spike" => {
                let v = parse_args(name, args, 2)?;
                Ok(Self::DenseSpike { mass: v[0], width: v[1] })
            }
            "separated_bimodal" => {
                let v = parse_args(name, args, 2)?;
                Ok(Self::SeparatedBimodal { dist: v[0], width: v[1] })
            }
            "gaussian" => {
                let parts: Vec<&str> = args.split(',').filter(|p| !p.trim().is_empty()).collect();
                let dim = match parts.first() {
                    Some(d) => d.trim().parse().map_err(|_| Error::Domain(format!("bad dimension `{d}`")))?,
                    None => 1,
                };
                let scale = match parts.get(1) {
                    Some(v) => v.trim().parse().map_err(|_| Error::Domain(format!("bad scale `{v}`")))?,
                    None => 1.0,
                };
                Ok(Self::Gaussian { dim, scale })
            }
            "uniform" => {
                let v = parse_args(name, args, 2)?;
                Ok(Self::Uniform { lo: v[0], hi: v[1] })
            }
            _ if Path::new(s).is_file() => {
                let text = std::fs::read_to_string(s).map_err(|e| Error::Domain(format!("reading `{s}`: {e}")))?;
                Ok(Self::File {
                    path: s.to_string(),
                    text,
                })
            }
            _ => Err(Error::Unsupported(format!(
                "unknown target `{s}` (presets: dense_spike, separated_bimodal, gaussian, uniform; or a config file path)"
            ))),
        }
    }

    pub fn build(&self) -> Result<TargetDistribution<f64>> {
        match *self {
            Self::DenseSpike { mass, width } => TargetDistribution::dense_spike(mass, width),
            Self::SeparatedBimodal { dist, width } => TargetDistribution::separated_bimodal(dist, width),
            Self::Gaussian { dim, scale } => TargetDistribution::gaussian(dim, scale),
            Self::Uniform { lo, hi } => TargetDistribution::uniform_interval(lo, hi),
            Self::File { ref text, .. } => TargetDistribution::from_config_str(text),
        }
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DenseSpike { mass, width } => write!(f, "dense_spike:{mass},{width}"),
            Self::SeparatedBimodal { dist, width } => write!(f, "separated_bimodal:{dist},{width}"),
            Self::Gaussian { dim, scale } => write!(f, "gaussian:{dim},{scale}"),
            Self::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
            Self::File { path, .. } => f.write_str(path),
        }
    }
}

/// Serializes string records; quoting follows RFC 4180.
pub(crate) fn write_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_display() {
        for s in ["dense_spike:0.9,0.1", "separated_bimodal:2,0.1", "gaussian:3,0.5", "uniform:0,1"] {
            let t = TargetSpec::parse(s).unwrap();
            assert_eq!(t.to_string(), s);
            t.build().unwrap();
        }
        assert_eq!(TargetSpec::parse("gaussian").unwrap(), TargetSpec::Gaussian { dim: 1, scale: 1.0 });
        assert!(TargetSpec::parse("dense_spike:0.9").is_err());
        assert!(TargetSpec::parse("no_such_preset").is_err());
        assert!(TargetSpec::parse("dense_spike:1.5,0.1").unwrap().build().is_err());
    }

    #[test]
    fn csv_quotes_commas() {
        let s = write_csv(&["a", "b"], [vec!["x,y".to_string(), "1".to_string()]]);
        assert_eq!(s, "a,b\n\"x,y\",1\n");
    }
}
