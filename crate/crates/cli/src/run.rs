//! Command dispatch and artifact writing.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde_json::{json, Value};

use multibump::ansatz::Configuration;
use multibump::field::energy_i;
use multibump::ground_state::{build_block, solve_ground_state, GroundState};
use multibump::linsolve::{linearized_spectrum, nondegeneracy_check};
use multibump::reduction::{
    energy_ladder, increment_diagnostics, interaction_series, multiplier_vanishing_check,
    optimize_configuration, residual_decay, solve_nonlinear, ReducedProblem, SpikeSolution,
};

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::plot::{emit_plot_data, PlotKind, PlotReport};

pub const MANIFEST: &str = "manifest.json";
pub const LOG: &str = "log.jsonl";
pub const ERROR: &str = "error.json";

/// What a finished run wrote.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub manifest: Value,
    /// File names relative to `out_dir`, in write order.
    pub artifacts: Vec<String>,
}

struct Sink<'a> {
    dir: &'a Path,
    artifacts: Vec<String>,
    log: Vec<Value>,
    verbose: bool,
}

impl Sink<'_> {
    fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(name), contents)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn note(&self, msg: &str) {
        if self.verbose {
            eprintln!("multibump: {msg}");
        }
    }
}

fn ground(cfg: &RunConfig) -> Result<Arc<GroundState>, CliError> {
    Ok(Arc::new(solve_ground_state(
        cfg.grid.dim(),
        cfg.tolerances.ground_state,
    )?))
}

fn problem(cfg: &RunConfig, gs: Arc<GroundState>) -> Result<ReducedProblem, CliError> {
    Ok(ReducedProblem::new(cfg.params, gs, cfg.grid)?.with_fixed_point(cfg.tolerances.fixed_point))
}

fn required_configuration(cfg: &RunConfig) -> Result<Configuration, CliError> {
    cfg.initial_configuration()?.ok_or_else(|| {
        CliError::Validation("this command needs `configuration` or `spikes`".into())
    })
}

fn solution_json(sol: &SpikeSolution, problem: &ReducedProblem) -> Value {
    json!({
        "configuration": sol.configuration,
        "energy": sol.energy(&problem.params),
        "star_norm": sol.star_norm,
        "multipliers": sol.multipliers,
        "max_multiplier": sol.max_multiplier(),
        "iterations": sol.iterations,
        "contraction_factor": sol.contraction_factor,
        "fixed_point_residual": sol.fixed_point_residual,
        "ansatz_residual": sol.ansatz_residual,
        "full_residual": sol.full_residual,
        "positive": sol.positive,
        "epsilon_hypothesis": sol.epsilon_hypothesis,
        "condition_estimate": sol.condition_estimate,
    })
}

fn fields_csv(sol: &SpikeSolution) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    sol.fields.write_csv(&mut buf)?;
    Ok(buf)
}

fn ground_state_cmd(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let gs = ground(cfg)?;
    let mut buf = Vec::new();
    gs.write_csv(&mut buf)?;
    sink.write("w.csv", &buf)?;
    Ok(json!({
        "dim": gs.dim(),
        "center_value": gs.center_value(),
        "tail_constant": gs.tail_constant(),
        "tail_start": gs.tail_start(),
        "r_max": gs.r_max(),
        "gamma": cfg.params.gamma(),
        "block_energy": energy_i(cfg.params.beta(), &gs)?,
    }))
}

fn solve_cmd(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let pr = problem(cfg, ground(cfg)?)?;
    let c = required_configuration(cfg)?;
    let sol = solve_nonlinear(&c, &pr)?;
    sink.note(&format!("converged in {} iterations", sol.iterations));
    for rec in sol.iteration_log() {
        sink.log
            .push(serde_json::to_value(rec).expect("plain data"));
    }
    sink.write("solution.csv", &fields_csv(&sol)?)?;
    let mut out = solution_json(&sol, &pr);
    out["block_energy"] = json!(pr.block_energy()?);
    Ok(out)
}

fn optimize_cmd(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let pr = problem(cfg, ground(cfg)?)?;
    let init = required_configuration(cfg)?;
    let mut opts = cfg.optimizer;
    opts.seed = cfg.seed;
    let rep = optimize_configuration(&init, &pr, &opts)?;
    for (i, r) in rep.restarts.iter().enumerate() {
        let mut line = serde_json::to_value(r).expect("plain data");
        line["restart"] = json!(i);
        sink.log.push(line);
    }
    let sol = solve_nonlinear(&rep.best.configuration, &pr)?;
    sink.write("solution.csv", &fields_csv(&sol)?)?;
    Ok(json!({
        "best": rep.best,
        "estimate": rep.estimate(),
        "boundary_warning": rep.boundary_warning,
        "polish_steps": rep.polish_steps,
        "solution": solution_json(&sol, &pr),
    }))
}

fn ladder_cmd(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let spec = cfg
        .ladder
        .ok_or_else(|| CliError::Validation("ladder command needs a `ladder` section".into()))?;
    let pr = problem(cfg, ground(cfg)?)?;
    let mut opts = cfg.optimizer;
    opts.seed = cfg.seed;
    let rep = energy_ladder(spec.m_max, spec.mu, &pr, &opts)?;
    for level in &rep.levels {
        sink.note(&format!(
            "m = {}: R_m = {:.12}, gap = {:.3e}",
            level.m, level.r_m, level.gap
        ));
        sink.log
            .push(serde_json::to_value(level).expect("plain data"));
    }
    let csv = emit_plot_data(PlotReport::Ladder(&rep), PlotKind::Ladder)?;
    sink.write("ladder.csv", csv.as_bytes())?;
    let gaps = rep.gaps();
    Ok(json!({
        "block_energy": rep.block_energy,
        "r_m": rep.levels.iter().map(|l| l.r_m).collect::<Vec<_>>(),
        "gaps": gaps,
        "all_gaps_positive": gaps.iter().all(|&g| g > 0.0),
        "levels": rep.levels,
    }))
}

fn spectrum_cmd(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let beta = cfg.params.beta();
    let block = build_block(ground(cfg)?, beta)?;
    let spec = linearized_spectrum(beta, &block, &cfg.grid, cfg.spectrum.count)?;
    let mut csv = String::from("index,eigenvalue,sector,residual\n");
    for (i, ((l, s), r)) in spec
        .eigenvalues
        .iter()
        .zip(&spec.sectors)
        .zip(&spec.residuals)
        .enumerate()
    {
        let sector = serde_json::to_value(s).expect("plain data");
        csv.push_str(&format!("{i},{l},{},{r}\n", sector.as_str().unwrap_or("")));
    }
    sink.write("eigenvalues.csv", csv.as_bytes())?;
    let nd = nondegeneracy_check(beta, &block, &cfg.grid)?;
    Ok(json!({
        "spectrum": spec.to_json(),
        "sectors": spec.sectors,
        "residuals": spec.residuals,
        "nondegeneracy": nd,
    }))
}

fn diagnose_cmd(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let gs = ground(cfg)?;
    let pr = problem(cfg, gs.clone())?;
    let mut out = json!({});
    if cfg.diagnose.mus.len() >= 2 {
        let rep = residual_decay(&cfg.diagnose.mus, &pr)?;
        let csv = emit_plot_data(PlotReport::ResidualDecay(&rep), PlotKind::ResidualDecay)?;
        sink.write("residual_decay.csv", csv.as_bytes())?;
        out["residual_decay"] = serde_json::to_value(&rep).expect("plain data");
    }
    if !cfg.diagnose.distances.is_empty() {
        let pts = interaction_series(&gs, pr.gamma(), &cfg.diagnose.distances)?;
        let csv = emit_plot_data(PlotReport::Interaction(&pts), PlotKind::Interaction)?;
        sink.write("interaction.csv", csv.as_bytes())?;
        out["interaction"] = serde_json::to_value(&pts).expect("plain data");
    }
    if let Some(c) = cfg.initial_configuration()? {
        let sol = solve_nonlinear(&c, &pr)?;
        out["multipliers"] =
            serde_json::to_value(multiplier_vanishing_check(&sol, &pr)?).expect("plain data");
        if let Some(p_new) = &cfg.diagnose.p_new {
            let inc = increment_diagnostics(&c, p_new, &pr)?;
            out["increment"] = serde_json::to_value(inc).expect("plain data");
        }
    }
    Ok(out)
}

fn write_log(sink: &mut Sink) -> Result<(), CliError> {
    let f = fs::File::create(sink.dir.join(LOG))?;
    let mut w = BufWriter::new(f);
    for line in &sink.log {
        serde_json::to_writer(&mut w, line).map_err(|e| CliError::Io(e.into()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    sink.artifacts.push(LOG.to_string());
    Ok(())
}

/// Validates `cfg`, runs its command and writes the manifest, CSVs and the
/// JSON-lines log into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path, verbose: bool) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut sink = Sink {
        dir: out_dir,
        artifacts: Vec::new(),
        log: Vec::new(),
        verbose,
    };
    let start = Instant::now();
    sink.note(&format!("running {:?}", cfg.command));
    let results = match cfg.command {
        Command::GroundState => ground_state_cmd(cfg, &mut sink),
        Command::Solve => solve_cmd(cfg, &mut sink),
        Command::Optimize => optimize_cmd(cfg, &mut sink),
        Command::Ladder => ladder_cmd(cfg, &mut sink),
        Command::Spectrum => spectrum_cmd(cfg, &mut sink),
        Command::Diagnose => diagnose_cmd(cfg, &mut sink),
    }?;
    write_log(&mut sink)?;
    sink.note(&format!("finished in {:.2?}", start.elapsed()));
    let mut artifacts = sink.artifacts.clone();
    artifacts.push(MANIFEST.to_string());
    let manifest = json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "results": results,
        "artifacts": artifacts,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(out_dir.join(MANIFEST), text + "\n")?;
    Ok(RunOutput {
        out_dir: out_dir.to_path_buf(),
        manifest,
        artifacts,
    })
}

/// Writes `error.json` into `out_dir` when possible; failures are ignored.
pub fn write_error(err: &CliError, out_dir: Option<&Path>) {
    if let Some(dir) = out_dir {
        if fs::create_dir_all(dir).is_ok() {
            let text = serde_json::to_string_pretty(&err.to_json()).unwrap_or_default();
            let _ = fs::write(dir.join(ERROR), text + "\n");
        }
    }
}

/// Re-reads the configuration stored in a manifest.
pub fn config_from_manifest(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
    let cfg = v
        .get("config")
        .ok_or_else(|| CliError::Parse("manifest has no `config` entry".into()))?;
    serde_json::from_value(cfg.clone()).map_err(|e| CliError::Parse(e.to_string()))
}
