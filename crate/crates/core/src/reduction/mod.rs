//! Nonlinear projected problem, reduced energy, and the finite-dimensional
//! reduction over spike positions.
//!
//! Writing `(u, v) = (U + φ, V + ψ)` with `(U, V)` the ansatz, the equation
//! `G(u, v) = Σ c_jk D_jk` becomes
//!
//! ```text
//! L(φ, ψ) = Σ c_jk D_jk − G(U, V) − M(φ, ψ),   ⟨(φ, ψ), D_jk⟩ = 0,
//! ```
//!
//! with `M` the cubic remainder. It is solved by the fixed-point map
//! `T(φ) = A(−G(U) − M(φ))`, where `A` is the projected linear solve.

mod diagnostics;
mod interaction;
mod optimize;

pub use diagnostics::{
    increment_diagnostics, multiplier_vanishing_check, residual_decay, IncrementReport,
    MultiplierReport, ResidualDecayPoint, ResidualDecayReport,
};
pub use interaction::{
    gamma1_constant, interaction_integral, interaction_series, InteractionPoint,
};
pub use optimize::{
    energy_ladder, nelder_mead, optimize_configuration, LadderLevel, LadderReport,
    NelderMeadOptions, NelderMeadResult, OptimizationReport, OptimizeOptions, RestartOutcome,
};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ansatz::{ansatz_exterior, validate_configuration, Configuration};
use crate::error::{Error, Result};
use crate::field::{
    energy_i, energy_j, residual_g_with_exterior, FieldPair, Grid, SystemParams, DEFAULT_NU,
};
use crate::ground_state::{build_block, BlockProfile, GroundState};
use crate::linsolve::ProjectedSolver;

/// Stopping rule of the contraction iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedPointOptions {
    /// Stop once the `*`-norm of the update falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Weight exponent of the `*`-norm.
    pub nu: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 50,
            nu: DEFAULT_NU,
        }
    }
}

/// Everything a reduced-energy evaluation needs besides the configuration.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    pub params: SystemParams,
    pub block: BlockProfile,
    pub grid: Grid,
    pub fixed_point: FixedPointOptions,
}

impl ReducedProblem {
    pub fn new(params: SystemParams, ground: Arc<GroundState>, grid: Grid) -> Result<Self> {
        if ground.dim() != grid.dim() {
            return Err(Error::Domain(format!(
                "ground state dimension {} differs from grid dimension {}",
                ground.dim(),
                grid.dim()
            )));
        }
        Ok(Self {
            block: build_block(ground, params.beta())?,
            params,
            grid,
            fixed_point: FixedPointOptions::default(),
        })
    }

    pub fn with_fixed_point(mut self, opts: FixedPointOptions) -> Self {
        self.fixed_point = opts;
        self
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma()
    }

    /// `I(U, V)` of one block.
    pub fn block_energy(&self) -> Result<f64> {
        energy_i(self.params.beta(), self.block.ground())
    }

    /// Largest admissible absolute center coordinate under the truncation rule.
    pub fn center_limit(&self) -> f64 {
        self.grid.half_width() - crate::ansatz::TRUNCATION_MARGIN / self.gamma()
    }
}

/// Cubic remainder `M(φ, ψ) = (3Uφ² + φ³, 3Vψ² + ψ³)`.
pub fn nonlinear_remainder(f: &FieldPair, ansatz: &FieldPair) -> Result<FieldPair> {
    if f.grid != ansatz.grid {
        return Err(Error::GridMismatch);
    }
    let m = |a: &[f64], p: &[f64]| -> Vec<f64> {
        a.iter()
            .zip(p)
            .map(|(a, p)| p * p * (3.0 * a + p))
            .collect()
    };
    Ok(FieldPair {
        grid: f.grid,
        u: m(&ansatz.u, &f.u),
        v: m(&ansatz.v, &f.v),
    })
}

/// Converged solution of the nonlinear projected problem.
#[derive(Debug, Clone)]
pub struct SpikeSolution {
    pub configuration: Configuration,
    /// `(u, v) = ansatz + correction`.
    pub fields: FieldPair,
    pub ansatz: FieldPair,
    /// Laplacian source of the ansatz continued outside the box.
    pub exterior: FieldPair,
    pub correction: FieldPair,
    pub multipliers: Vec<f64>,
    /// `‖(φ, ψ)‖_*`.
    pub star_norm: f64,
    pub iterations: usize,
    /// `*`-norms of successive updates, first entry `‖φ₁ − 0‖_*`.
    pub update_history: Vec<f64>,
    /// Largest ratio of successive updates above the noise floor.
    pub contraction_factor: Option<f64>,
    /// `‖φ − T(φ)‖_*` re-evaluated at the returned correction.
    pub fixed_point_residual: f64,
    /// `‖G(U, V)‖_*` of the ansatz.
    pub ansatz_residual: f64,
    /// `‖G(u, v)‖_*` of the corrected fields.
    pub full_residual: f64,
    /// `u > 0` and `v > 0` at every interior node.
    pub positive: bool,
    /// Whether `ε < e^{−2μ}` holds.
    pub epsilon_hypothesis: bool,
    pub condition_estimate: f64,
}

/// One line of the per-iteration log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub update_star_norm: f64,
    pub correction_star_norm: f64,
}

impl SpikeSolution {
    pub fn max_multiplier(&self) -> f64 {
        self.multipliers.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn energy(&self, p: &SystemParams) -> f64 {
        energy_j(&self.fields, p)
    }

    pub fn iteration_log(&self) -> Vec<IterationRecord> {
        let mut out = Vec::with_capacity(self.update_history.len());
        for (k, &u) in self.update_history.iter().enumerate() {
            out.push(IterationRecord {
                iteration: k + 1,
                update_star_norm: u,
                correction_star_norm: f64::NAN,
            });
        }
        if let Some(last) = out.last_mut() {
            last.correction_star_norm = self.star_norm;
        }
        out
    }
}

fn interior_positive(f: &FieldPair) -> bool {
    let g = &f.grid;
    let n = g.nodes_per_axis();
    (0..f.len()).all(|i| {
        let mi = g.multi_index(i);
        let boundary = mi[..g.dim()].iter().any(|&k| k == 0 || k == n - 1);
        boundary || (f.u[i] > 0.0 && f.v[i] > 0.0)
    })
}

fn fixed_point_rhs(g_ansatz: &FieldPair, phi: &FieldPair, ansatz: &FieldPair) -> Result<FieldPair> {
    let m = nonlinear_remainder(phi, ansatz)?;
    Ok(g_ansatz.add(&m)?.scale(-1.0))
}

/// Solves the nonlinear projected problem at `c` by contraction iteration from zero.
pub fn solve_nonlinear(c: &Configuration, problem: &ReducedProblem) -> Result<SpikeSolution> {
    let opts = problem.fixed_point;
    let solver =
        ProjectedSolver::with_nu(c, &problem.params, &problem.block, &problem.grid, opts.nu)?;
    let ansatz = solver.ansatz().clone();
    let star = solver.star_weight();
    let exterior = ansatz_exterior(c, &problem.block, &problem.grid)?;
    let g0 = residual_g_with_exterior(&ansatz, &problem.params, &exterior)?;
    let ansatz_residual = star.norm(&g0)?;

    let floor = 64.0 * f64::EPSILON * ansatz_residual.max(f64::MIN_POSITIVE);
    let mut phi = FieldPair::zeros(problem.grid);
    let mut multipliers = vec![0.0; solver.kernel().len()];
    let mut history: Vec<f64> = Vec::new();
    let mut factor: Option<f64> = None;
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let (next, c_next) = solver.solve_raw(&fixed_point_rhs(&g0, &phi, &ansatz)?)?;
        if !next.is_finite() {
            return Err(Error::Contraction {
                reason: "non-finite iterate".into(),
                history,
            });
        }
        let update = star.norm(&next.sub(&phi)?)?;
        if let Some(&prev) = history.last() {
            if prev > floor && update > floor {
                let r = update / prev;
                factor = Some(factor.map_or(r, |f: f64| f.max(r)));
                if r >= 1.0 {
                    history.push(update);
                    return Err(Error::Contraction {
                        reason: format!("update ratio {r:.3} >= 1"),
                        history,
                    });
                }
            }
        }
        history.push(update);
        phi = next;
        multipliers = c_next;
        if update < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Contraction {
            reason: format!("no convergence within {} iterations", opts.max_iter),
            history,
        });
    }

    let (again, _) = solver.solve_raw(&fixed_point_rhs(&g0, &phi, &ansatz)?)?;
    let fixed_point_residual = star.norm(&again.sub(&phi)?)?;
    let fields = ansatz.add(&phi)?;
    let full_residual = star.norm(&residual_g_with_exterior(
        &fields,
        &problem.params,
        &exterior,
    )?)?;
    Ok(SpikeSolution {
        configuration: c.clone(),
        star_norm: star.norm(&phi)?,
        positive: interior_positive(&fields),
        epsilon_hypothesis: problem.params.epsilon() < (-2.0 * c.mu()).exp(),
        condition_estimate: solver.condition_estimate(),
        iterations: history.len(),
        update_history: history,
        contraction_factor: factor,
        fixed_point_residual,
        ansatz_residual,
        full_residual,
        multipliers,
        fields,
        correction: phi,
        ansatz,
        exterior,
    })
}

/// Reduced energy `N(P)` at a configuration, with a central-difference
/// gradient over the center coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedEnergyReport {
    pub configuration: Configuration,
    /// `N(P) = J(u_P, v_P)`.
    pub energy: f64,
    /// `I(U, V)` of one block.
    pub block_energy: f64,
    pub gradient: Vec<f64>,
    pub gradient_norm: f64,
    /// `min |P_j − P_k| − μ/γ`; absent for one spike.
    pub boundary_distance: Option<f64>,
    pub multipliers: Vec<f64>,
    pub max_multiplier: f64,
    pub correction_star_norm: f64,
}

/// Step of the central differences used for reduced-energy gradients.
pub const GRADIENT_STEP: f64 = 1e-2;

/// `N(P)` only.
pub fn reduced_energy_value(c: &Configuration, problem: &ReducedProblem) -> Result<f64> {
    Ok(solve_nonlinear(c, problem)?.energy(&problem.params))
}

pub fn reduced_energy(c: &Configuration, problem: &ReducedProblem) -> Result<ReducedEnergyReport> {
    let sol = solve_nonlinear(c, problem)?;
    report_from_solution(&sol, problem)
}

pub(crate) fn report_from_solution(
    sol: &SpikeSolution,
    problem: &ReducedProblem,
) -> Result<ReducedEnergyReport> {
    let c = &sol.configuration;
    let x = c.flat();
    let mut gradient = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += GRADIENT_STEP;
        xm[i] -= GRADIENT_STEP;
        let fp = reduced_energy_value(&c.from_flat(&xp)?, problem)?;
        let fm = reduced_energy_value(&c.from_flat(&xm)?, problem)?;
        gradient.push((fp - fm) / (2.0 * GRADIENT_STEP));
    }
    Ok(ReducedEnergyReport {
        configuration: c.clone(),
        energy: sol.energy(&problem.params),
        block_energy: problem.block_energy()?,
        gradient_norm: gradient.iter().map(|g| g * g).sum::<f64>().sqrt(),
        gradient,
        boundary_distance: validate_configuration(c, problem.gamma()).margin,
        multipliers: sol.multipliers.clone(),
        max_multiplier: sol.max_multiplier(),
        correction_star_norm: sol.star_norm,
    })
}
