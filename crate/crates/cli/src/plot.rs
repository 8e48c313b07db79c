//! Plot-ready CSV series.

use std::fmt::Write;

use multibump::reduction::{InteractionPoint, LadderReport, ResidualDecayReport};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    ResidualDecay,
    Ladder,
    Interaction,
}

#[derive(Debug, Clone, Copy)]
pub enum PlotReport<'a> {
    ResidualDecay(&'a ResidualDecayReport),
    Ladder(&'a LadderReport),
    Interaction(&'a [InteractionPoint]),
}

impl PlotReport<'_> {
    pub fn kind(&self) -> PlotKind {
        match self {
            PlotReport::ResidualDecay(_) => PlotKind::ResidualDecay,
            PlotReport::Ladder(_) => PlotKind::Ladder,
            PlotReport::Interaction(_) => PlotKind::Interaction,
        }
    }
}

/// CSV text with a header row, one row per sample in report order.
///
/// Columns: `mu,log_star_norm` for residual decay, `d,ratio_to_gamma1` for
/// the interaction series, `m,R_m,gap` for the ladder.
pub fn emit_plot_data(report: PlotReport<'_>, kind: PlotKind) -> Result<String, CliError> {
    if report.kind() != kind {
        return Err(CliError::Validation(format!(
            "plot kind {kind:?} does not match a {:?} report",
            report.kind()
        )));
    }
    let mut out = String::new();
    match report {
        PlotReport::ResidualDecay(r) => {
            out.push_str("mu,log_star_norm\n");
            for p in &r.points {
                writeln!(out, "{},{}", p.mu, p.log_star_norm).unwrap();
            }
        }
        PlotReport::Interaction(points) => {
            out.push_str("d,ratio_to_gamma1\n");
            for p in points {
                writeln!(out, "{},{}", p.d, p.ratio_to_gamma1).unwrap();
            }
        }
        PlotReport::Ladder(l) => {
            out.push_str("m,R_m,gap\n");
            for level in &l.levels {
                writeln!(out, "{},{},{}", level.m, level.r_m, level.gap).unwrap();
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use multibump::reduction::ResidualDecayPoint;

    #[test]
    fn columns_follow_the_kind_and_mismatch_is_rejected() {
        let rep = ResidualDecayReport {
            points: vec![
                ResidualDecayPoint {
                    mu: 8.0,
                    star_norm: 1e-3,
                    log_star_norm: 1e-3f64.ln(),
                },
                ResidualDecayPoint {
                    mu: 10.0,
                    star_norm: 1e-4,
                    log_star_norm: 1e-4f64.ln(),
                },
            ],
            slope: -1.0,
            intercept: 0.0,
            r_squared: 1.0,
            strictly_decreasing: true,
        };
        let csv = emit_plot_data(PlotReport::ResidualDecay(&rep), PlotKind::ResidualDecay).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "mu,log_star_norm");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').next(), Some("8"));
        assert!(emit_plot_data(PlotReport::ResidualDecay(&rep), PlotKind::Ladder).is_err());

        let pts = [InteractionPoint {
            d: 12.0,
            integral: 1.0,
            ratio_to_gamma1: 0.99,
        }];
        let csv = emit_plot_data(PlotReport::Interaction(&pts), PlotKind::Interaction).unwrap();
        assert_eq!(csv, "d,ratio_to_gamma1\n12,0.99\n");
    }
}
