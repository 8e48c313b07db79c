//! Run configuration: the JSON document passed with `--config`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use multibump::ansatz::{validate_configuration, Configuration};
use multibump::field::{Grid, SystemParams};
use multibump::reduction::{FixedPointOptions, OptimizeOptions};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    GroundState,
    Solve,
    Optimize,
    Ladder,
    Spectrum,
    Diagnose,
}

/// How to place `m` initial spikes when no explicit configuration is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum InitPolicy {
    /// Evenly spaced along `x₁`, centered on the origin, `spacing·μ/γ` apart.
    Line { spacing: f64 },
}

impl Default for InitPolicy {
    fn default() -> Self {
        InitPolicy::Line { spacing: 1.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeInit {
    pub m: usize,
    pub mu: f64,
    #[serde(default)]
    pub init: InitPolicy,
}

impl SpikeInit {
    pub fn configuration(&self, dim: usize, gamma: f64) -> multibump::Result<Configuration> {
        let InitPolicy::Line { spacing } = self.init;
        let step = spacing * self.mu / gamma;
        let offset = 0.5 * step * (self.m as f64 - 1.0);
        let centers = (0..self.m)
            .map(|j| {
                let mut p = vec![0.0; dim];
                p[0] = j as f64 * step - offset;
                p
            })
            .collect();
        Configuration::new(dim, self.mu, centers)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Shooting tolerance of the ground state.
    pub ground_state: f64,
    pub fixed_point: FixedPointOptions,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ground_state: 1e-8,
            fixed_point: FixedPointOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderSpec {
    pub m_max: usize,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectrumSpec {
    /// Number of eigenvalues from the top.
    pub count: usize,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        Self { count: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnoseSpec {
    /// Separations for the residual-decay series.
    pub mus: Vec<f64>,
    /// Distances for the interaction series, at the coupling's `γ`.
    pub distances: Vec<f64>,
    /// New center for the increment diagnostic (needs a configuration).
    pub p_new: Option<Vec<f64>>,
}

impl Default for DiagnoseSpec {
    fn default() -> Self {
        Self {
            mus: vec![8.0, 10.0, 12.0],
            distances: vec![8.0, 10.0, 12.0],
            p_new: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub params: SystemParams,
    pub grid: Grid,
    #[serde(default)]
    pub configuration: Option<Configuration>,
    #[serde(default)]
    pub spikes: Option<SpikeInit>,
    #[serde(default)]
    pub ladder: Option<LadderSpec>,
    #[serde(default)]
    pub spectrum: SpectrumSpec,
    #[serde(default)]
    pub diagnose: DiagnoseSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub optimizer: OptimizeOptions,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Explicit configuration, or the one built from `spikes`.
    pub fn initial_configuration(&self) -> Result<Option<Configuration>, CliError> {
        match (&self.configuration, &self.spikes) {
            (Some(c), _) => Ok(Some(c.clone())),
            (None, Some(s)) => Ok(Some(s.configuration(self.grid.dim(), self.params.gamma())?)),
            (None, None) => Ok(None),
        }
    }

    /// Checks that do not require running a solver.
    pub fn validate(&self) -> Result<(), CliError> {
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail
        if !(self.params.beta() < 1.0) {
            return Err(CliError::Validation(format!(
                "beta must be below 1, got {}",
                self.params.beta()
            )));
        }
        let gamma = self.params.gamma();
        let needs_configuration = matches!(self.command, Command::Solve | Command::Optimize);
        let c = self.initial_configuration()?;
        if needs_configuration && c.is_none() {
            return Err(CliError::Validation(
                "this command needs `configuration` or `spikes`".into(),
            ));
        }
        if let Some(c) = &c {
            if c.dim() != self.grid.dim() {
                return Err(CliError::Validation(format!(
                    "configuration is {}-dimensional but the grid is {}-dimensional",
                    c.dim(),
                    self.grid.dim()
                )));
            }
            c.check_truncation(&self.grid, gamma)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let report = validate_configuration(c, gamma);
            if !report.valid {
                return Err(CliError::Validation(format!(
                    "centers {:?} are closer than mu/gamma = {:.4}",
                    report.violating_pair, report.required_separation
                )));
            }
        }
        if self.command == Command::Ladder {
            match self.ladder {
                Some(l) if l.m_max >= 1 && l.mu > 0.0 => {}
                _ => {
                    return Err(CliError::Validation(
                        "ladder needs `ladder.m_max >= 1` and `ladder.mu > 0`".into(),
                    ))
                }
            }
        }
        if self.diagnose.p_new.is_some() && c.is_none() {
            return Err(CliError::Validation(
                "`diagnose.p_new` needs a configuration".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "command": "solve",
        "params": {"beta": 0.5, "epsilon": 0.0, "potential_p": {"family": "zero"}, "potential_q": {"family": "zero"}},
        "grid": {"dim": 1, "half_width": 30.0, "nodes": 601, "stencil": 8},
        "configuration": {"dim": 1, "mu": 10.0, "centers": [[0.0]]}
    }"#;

    #[test]
    fn minimal_config_parses_and_round_trips() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.command, Command::Solve);
        assert_eq!(c.tolerances, Tolerances::default());
        c.validate().unwrap();
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_fields_and_bad_values_are_parse_errors() {
        let extra = MINIMAL.replacen("\"command\"", "\"bogus\": 1, \"command\"", 1);
        assert!(matches!(
            RunConfig::from_json(&extra),
            Err(CliError::Parse(_))
        ));
        let even = MINIMAL.replace("601", "600");
        assert!(matches!(
            RunConfig::from_json(&even),
            Err(CliError::Parse(_))
        ));
        let strong = MINIMAL.replace("\"beta\": 0.5", "\"beta\": 1.5");
        assert!(matches!(
            RunConfig::from_json(&strong),
            Err(CliError::Parse(_))
        ));
    }

    #[test]
    fn truncation_and_separation_are_validated() {
        let far = MINIMAL.replace("[[0.0]]", "[[20.0]]");
        let c = RunConfig::from_json(&far).unwrap();
        assert!(matches!(c.validate(), Err(CliError::Validation(_))));
        let close = MINIMAL.replace("[[0.0]]", "[[0.0], [1.0]]");
        let c = RunConfig::from_json(&close).unwrap();
        assert!(matches!(c.validate(), Err(CliError::Validation(_))));
    }

    #[test]
    fn line_policy_centers_the_spikes() {
        let s = SpikeInit {
            m: 3,
            mu: 10.0,
            init: InitPolicy::Line { spacing: 1.0 },
        };
        let c = s.configuration(2, 0.5).unwrap();
        let xs: Vec<f64> = c.centers().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-20.0, 0.0, 20.0]);
        assert!(c.centers().iter().all(|p| p[1] == 0.0));
    }
}
