use faer::linalg::solvers::Solve;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    reduced_energy_value, report_from_solution, solve_nonlinear, ReducedEnergyReport,
    ReducedProblem,
};
use crate::ansatz::{distance, validate_configuration, Configuration};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Spread of objective values across the simplex at convergence.
    pub ftol: f64,
    /// Simplex diameter at convergence.
    pub xtol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 800,
            ftol: 1e-13,
            xtol: 1e-4,
            initial_step: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Downhill simplex minimization with the standard coefficients.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evals)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }
    let mut converged = false;
    while evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let spread = simplex
            .iter()
            .map(|s| (s.1 - best).abs())
            .fold(0.0, f64::max);
        let diameter = simplex
            .iter()
            .skip(1)
            .map(|s| distance(&s.0, &simplex[0].0))
            .fold(0.0, f64::max);
        if best.is_finite() && spread <= opts.ftol && diameter <= opts.xtol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|s| s.0[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let worst = simplex[n].clone();
        let xr = along(-1.0, &worst.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(-2.0, &worst.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let x = along(-0.5, &worst.0);
            let fx = eval(&x, &mut evals);
            (x, fx)
        } else {
            let x = along(0.5, &worst.0);
            let fx = eval(&x, &mut evals);
            (x, fx)
        };
        if fc < worst.1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for s in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = x_best
                .iter()
                .zip(&s.0)
                .map(|(b, v)| b + 0.5 * (v - b))
                .collect();
            let fx = eval(&x, &mut evals);
            *s = (x, fx);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        f,
        evaluations: evals,
        converged,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeOptions {
    pub restarts: usize,
    pub seed: u64,
    pub nelder_mead: NelderMeadOptions,
    /// Half width of the uniform perturbation of restart seeds; defaults to `μ/(2γ)`.
    pub perturbation: Option<f64>,
    /// Coefficient of the squared separation violation.
    pub penalty: f64,
    /// A maximizer closer than this fraction of `μ/γ` to the separation
    /// boundary counts as a boundary point.
    pub boundary_tol: f64,
    pub parallel: bool,
    /// Newton iteration on `c(P) = 0` after the simplex search.
    pub polish: bool,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            seed: 0,
            nelder_mead: NelderMeadOptions::default(),
            perturbation: None,
            penalty: 1e3,
            boundary_tol: 1e-3,
            parallel: true,
            polish: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartOutcome {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub energy: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub best: ReducedEnergyReport,
    pub restarts: Vec<RestartOutcome>,
    /// Every restart ended on the separation boundary.
    pub boundary_warning: bool,
    /// Newton steps accepted while polishing.
    pub polish_steps: usize,
}

impl OptimizationReport {
    pub fn estimate(&self) -> f64 {
        self.best.energy
    }
}

fn objective(x: &[f64], init: &Configuration, problem: &ReducedProblem, penalty: f64) -> f64 {
    let limit = problem.center_limit();
    if x.iter().any(|v| v.abs() > limit) {
        return f64::INFINITY;
    }
    let Ok(c) = init.from_flat(x) else {
        return f64::INFINITY;
    };
    let violation = c
        .min_separation()
        .map_or(0.0, |(d, _, _)| (c.mu() / problem.gamma() - d).max(0.0));
    match reduced_energy_value(&c, problem) {
        Ok(n) => -n + penalty * violation * violation,
        Err(_) => f64::INFINITY,
    }
}

fn at_boundary(c: &Configuration, problem: &ReducedProblem, tol: f64) -> bool {
    let rep = validate_configuration(c, problem.gamma());
    rep.margin
        .is_some_and(|m| m < tol * rep.required_separation)
}

fn restart_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add((r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Maximizes the reduced energy over configurations with `init.len()` spikes.
pub fn optimize_configuration(
    init: &Configuration,
    problem: &ReducedProblem,
    opts: &OptimizeOptions,
) -> Result<OptimizationReport> {
    let x0 = init.flat();
    let limit = problem.center_limit();
    if limit <= 0.0 {
        return Err(Error::Truncation {
            center: 0,
            required_half_width: init.required_half_width(problem.gamma()),
        });
    }
    let delta = opts
        .perturbation
        .unwrap_or(init.mu() / (2.0 * problem.gamma()));
    let starts: Vec<Vec<f64>> = (0..opts.restarts.max(1))
        .map(|r| {
            if r == 0 {
                return x0.clone();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(opts.seed, r));
            x0.iter()
                .map(|&v| (v + rng.random_range(-delta..delta)).clamp(-limit, limit))
                .collect()
        })
        .collect();
    let run = |start: &Vec<f64>| {
        let res = nelder_mead(
            |x| objective(x, init, problem, opts.penalty),
            start,
            &opts.nelder_mead,
        );
        let end_cfg = init.from_flat(&res.x).ok();
        RestartOutcome {
            start: start.clone(),
            at_boundary: end_cfg
                .as_ref()
                .is_some_and(|c| at_boundary(c, problem, opts.boundary_tol)),
            end: res.x,
            energy: -res.f,
            evaluations: res.evaluations,
            converged: res.converged,
        }
    };
    let restarts: Vec<RestartOutcome> = if opts.parallel {
        starts.par_iter().map(run).collect()
    } else {
        starts.iter().map(run).collect()
    };
    let best_idx = restarts
        .iter()
        .enumerate()
        .filter(|(_, r)| r.energy.is_finite())
        .fold(None, |acc: Option<usize>, (i, r)| match acc {
            Some(j) if restarts[j].energy >= r.energy => Some(j),
            _ => Some(i),
        })
        .ok_or_else(|| Error::Configuration("every optimizer restart failed to evaluate".into()))?;
    let mut best = init.from_flat(&restarts[best_idx].end)?;
    let mut polish_steps = 0;
    if opts.polish {
        (best, polish_steps) = polish(best, problem, opts.penalty)?;
    }
    let sol = solve_nonlinear(&best, problem)?;
    Ok(OptimizationReport {
        best: report_from_solution(&sol, problem)?,
        boundary_warning: restarts.iter().all(|r| r.at_boundary),
        restarts,
        polish_steps,
    })
}

const POLISH_STEP: f64 = 1e-3;
const POLISH_ITERATIONS: usize = 4;

/// Newton iteration on the multipliers `c(P) = 0` with a forward-difference
/// Jacobian; a step is kept only if the objective does not get worse and
/// `max |c|` shrinks.
fn polish(
    start: Configuration,
    problem: &ReducedProblem,
    penalty: f64,
) -> Result<(Configuration, usize)> {
    let mut current = start;
    let mut sol = solve_nonlinear(&current, problem)?;
    let mut obj = objective(&current.flat(), &current, problem, penalty);
    let mut accepted = 0;
    for _ in 0..POLISH_ITERATIONS {
        let x = current.flat();
        let n = x.len();
        let c0 = sol.multipliers.clone();
        let mut jac = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            let mut xp = x.clone();
            xp[i] += POLISH_STEP;
            let cp = solve_nonlinear(&current.from_flat(&xp)?, problem)?.multipliers;
            for k in 0..n {
                jac[(k, i)] = (cp[k] - c0[k]) / POLISH_STEP;
            }
        }
        let sv = jac
            .singular_values()
            .map_err(|e| Error::Domain(format!("svd failed: {e:?}")))?;
        let (smax, smin) = (sv[0], sv[n - 1]);
        if !(smin > 1e-10 * smax) || !smax.is_finite() {
            break;
        }
        let rhs = Mat::from_fn(n, 1, |k, _| -c0[k]);
        let delta = jac.partial_piv_lu().solve(&rhs);
        let cap = 0.5 / problem.gamma();
        let step_norm = (0..n).map(|k| delta[(k, 0)].abs()).fold(0.0, f64::max);
        let scale = if step_norm > cap {
            cap / step_norm
        } else {
            1.0
        };
        let xn: Vec<f64> = (0..n).map(|k| x[k] + scale * delta[(k, 0)]).collect();
        let cand = current.from_flat(&xn)?;
        let cand_obj = objective(&xn, &cand, problem, penalty);
        if !(cand_obj <= obj) {
            break;
        }
        let cand_sol = solve_nonlinear(&cand, problem)?;
        if cand_sol.max_multiplier() >= sol.max_multiplier() {
            break;
        }
        current = cand;
        sol = cand_sol;
        obj = cand_obj;
        accepted += 1;
    }
    Ok((current, accepted))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderLevel {
    pub m: usize,
    /// Estimate of `R_m`, the maximum of the reduced energy over `m` spikes.
    pub r_m: f64,
    /// `R_m − R_{m−1} − I(U, V)` with `R_0 = 0`.
    pub gap: f64,
    pub configuration: Configuration,
    pub max_multiplier: f64,
    pub gradient_norm: f64,
    pub boundary_warning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub block_energy: f64,
    pub levels: Vec<LadderLevel>,
    pub optimizations: Vec<OptimizationReport>,
}

impl LadderReport {
    pub fn gaps(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.gap).collect()
    }
}

/// Smallest `x₁ ≥ reach` at which `εP` exceeds the block tail `U(x₁ − reach)`;
/// `reach` itself when there is no potential.
fn interaction_tail_crossing(problem: &ReducedProblem, reach: f64) -> f64 {
    let p = &problem.params;
    if p.epsilon() == 0.0 {
        return reach;
    }
    let step = problem.grid.spacing();
    let mut x = reach;
    while x < problem.center_limit() {
        let mut point = vec![0.0; problem.grid.dim()];
        point[0] = x;
        if p.epsilon() * p.potential_p().eval(&point, p.gamma()) >= problem.block.value(x - reach) {
            return x;
        }
        x += step;
    }
    problem.center_limit()
}

/// Position along `x₁` for an added spike: at least `2μ/γ` beyond the cluster,
/// and beyond the radius where the potential outweighs the interaction tail.
fn far_spike(c: &Configuration, problem: &ReducedProblem) -> Vec<f64> {
    let gamma = problem.gamma();
    let reach = c
        .centers()
        .iter()
        .map(|p| p[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let tail = interaction_tail_crossing(problem, reach);
    let x1 = (reach + 2.0 * c.mu() / gamma)
        .max(tail)
        .min(problem.center_limit());
    let mut p = vec![0.0; c.dim()];
    p[0] = x1;
    p
}

/// `R_1, …, R_{m_max}` by repeated maximization, each level warm-started from
/// the previous maximizer plus one far spike.
pub fn energy_ladder(
    m_max: usize,
    mu: f64,
    problem: &ReducedProblem,
    opts: &OptimizeOptions,
) -> Result<LadderReport> {
    if m_max == 0 {
        return Err(Error::Domain("ladder needs m_max >= 1".into()));
    }
    let block_energy = problem.block_energy()?;
    let dim = problem.grid.dim();
    let mut first = vec![0.0; dim];
    first[0] = 1.0f64.min(problem.center_limit());
    let mut init = Configuration::new(dim, mu, vec![first])?;
    let mut levels = Vec::with_capacity(m_max);
    let mut optimizations = Vec::with_capacity(m_max);
    let mut previous = 0.0;
    for m in 1..=m_max {
        let rep = optimize_configuration(&init, problem, opts)?;
        let r_m = rep.best.energy;
        levels.push(LadderLevel {
            m,
            r_m,
            gap: r_m - previous - block_energy,
            configuration: rep.best.configuration.clone(),
            max_multiplier: rep.best.max_multiplier,
            gradient_norm: rep.best.gradient_norm,
            boundary_warning: rep.boundary_warning,
        });
        previous = r_m;
        if m < m_max {
            init = rep
                .best
                .configuration
                .with_center(far_spike(&rep.best.configuration, problem))?;
        }
        optimizations.push(rep);
    }
    Ok(LadderReport {
        block_energy,
        levels,
        optimizations,
    })
}
