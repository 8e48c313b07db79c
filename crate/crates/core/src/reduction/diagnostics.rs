use serde::{Deserialize, Serialize};

use super::{solve_nonlinear, ReducedProblem, SpikeSolution};
use crate::ansatz::{ansatz_exterior, assemble_ansatz, distance, kernel_elements, Configuration};
use crate::error::{Error, Result};
use crate::field::{h1_squared_sum, integrate, residual_g_with_exterior, StarWeight};

/// Bound on `max_jk |c_jk|·‖D_jk‖` for a certified solution.
pub const MULTIPLIER_TOL: f64 = 1e-6;
/// Bound on `‖G(u, v)‖_*` for a certified solution.
pub const RESIDUAL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierReport {
    pub max_multiplier: f64,
    /// `‖D_jk‖` under `⟨·,·⟩`, spike-major.
    pub kernel_norms: Vec<f64>,
    /// `max_jk |c_jk|·‖D_jk‖`.
    pub scaled_max_multiplier: f64,
    /// `‖G(u, v)‖_*` of the unprojected system.
    pub residual_star_norm: f64,
    pub positive: bool,
    pub passed: bool,
}

/// Whether a solution at a critical point of the reduced energy solves the
/// full discrete system: multipliers and residual both negligible.
pub fn multiplier_vanishing_check(
    sol: &SpikeSolution,
    problem: &ReducedProblem,
) -> Result<MultiplierReport> {
    let g = &problem.grid;
    let kernel = kernel_elements(&sol.configuration, &problem.block, g)?;
    let kernel_norms: Vec<f64> = kernel
        .iter()
        .map(|e| {
            let sq: Vec<f64> = e.values.iter().map(|d| 2.0 * d * d).collect();
            let weighted: Vec<f64> = e
                .nodes
                .iter()
                .zip(&sq)
                .map(|(&i, s)| g.weight(i) * s)
                .collect();
            crate::field::pairwise_sum(&weighted).sqrt()
        })
        .collect();
    let scaled = sol
        .multipliers
        .iter()
        .zip(&kernel_norms)
        .map(|(c, n)| c.abs() * n)
        .fold(0.0f64, f64::max);
    let star = StarWeight::new(
        *g,
        sol.configuration.centers(),
        problem.gamma(),
        problem.fixed_point.nu,
    )?;
    let residual = star.norm(&residual_g_with_exterior(
        &sol.fields,
        &problem.params,
        &sol.exterior,
    )?)?;
    Ok(MultiplierReport {
        max_multiplier: sol.max_multiplier(),
        kernel_norms,
        scaled_max_multiplier: scaled,
        residual_star_norm: residual,
        positive: sol.positive,
        passed: scaled <= MULTIPLIER_TOL && residual <= RESIDUAL_TOL && sol.positive,
    })
}

/// Size of the correction created by adding one spike, next to the shape of
/// its a-priori bound evaluated with unit constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementReport {
    /// Distance from the new spike to the nearest old one.
    pub distance: f64,
    /// `∫(|∇φ₁|² + φ₁² + |∇φ₂|² + φ₂²)` of the increment.
    pub h1_squared: f64,
    /// `Σ_j w(γ|P_{m+1} − P_j|)`.
    pub interaction_term: f64,
    /// `ε²[(∫(|P|U + |Q|V))² + ∫(P²U² + Q²V²)]` for the new block.
    pub potential_term: f64,
    pub bound: f64,
}

pub fn increment_diagnostics(
    c_m: &Configuration,
    p_new: &[f64],
    problem: &ReducedProblem,
) -> Result<IncrementReport> {
    if p_new.len() != c_m.dim() {
        return Err(Error::Configuration(
            "new center has the wrong dimension".into(),
        ));
    }
    let joined = c_m.with_center(p_new.to_vec())?;
    let base = solve_nonlinear(c_m, problem)?;
    let full = solve_nonlinear(&joined, problem)?;
    let single = Configuration::new(c_m.dim(), c_m.mu(), vec![p_new.to_vec()])?;
    let new_block = assemble_ansatz(&single, &problem.block, &problem.grid)?;
    let increment = full.fields.sub(&base.fields)?.sub(&new_block)?;

    let gamma = problem.gamma();
    let dists: Vec<f64> = c_m.centers().iter().map(|p| distance(p, p_new)).collect();
    let interaction_term: f64 = dists
        .iter()
        .map(|&d| problem.block.ground().eval(gamma * d))
        .sum();

    let p = &problem.params;
    let g = &problem.grid;
    let pp = g.sample(|x| p.potential_p().eval(x, gamma).abs());
    let qq = g.sample(|x| p.potential_q().eval(x, gamma).abs());
    let lin: Vec<f64> = (0..g.len())
        .map(|i| pp[i] * new_block.u[i] + qq[i] * new_block.v[i])
        .collect();
    let quad: Vec<f64> = (0..g.len())
        .map(|i| (pp[i] * new_block.u[i]).powi(2) + (qq[i] * new_block.v[i]).powi(2))
        .collect();
    let eps2 = p.epsilon() * p.epsilon();
    let potential_term = eps2 * (integrate(g, &lin).powi(2) + integrate(g, &quad));
    Ok(IncrementReport {
        distance: dists.iter().copied().fold(f64::INFINITY, f64::min),
        h1_squared: h1_squared_sum(&increment),
        interaction_term,
        potential_term,
        bound: interaction_term + potential_term,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualDecayPoint {
    pub mu: f64,
    pub star_norm: f64,
    pub log_star_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualDecayReport {
    pub points: Vec<ResidualDecayPoint>,
    /// Least-squares line `log ‖G‖_* ≈ intercept + slope·μ`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub strictly_decreasing: bool,
}

/// `‖G(U, V)‖_*` of a two-spike ansatz at separation `μ/γ` for each `μ`.
pub fn residual_decay(mus: &[f64], problem: &ReducedProblem) -> Result<ResidualDecayReport> {
    if mus.len() < 2 {
        return Err(Error::Domain(
            "residual decay needs at least two values of mu".into(),
        ));
    }
    let gamma = problem.gamma();
    let dim = problem.grid.dim();
    let mut points = Vec::with_capacity(mus.len());
    for &mu in mus {
        let half = mu / (2.0 * gamma);
        let mut a = vec![0.0; dim];
        let mut b = vec![0.0; dim];
        a[0] = -half;
        b[0] = half;
        let c = Configuration::new(dim, mu, vec![a, b])?;
        let ansatz = assemble_ansatz(&c, &problem.block, &problem.grid)?;
        let star = StarWeight::new(problem.grid, c.centers(), gamma, problem.fixed_point.nu)?;
        let exterior = ansatz_exterior(&c, &problem.block, &problem.grid)?;
        let s = star.norm(&residual_g_with_exterior(
            &ansatz,
            &problem.params,
            &exterior,
        )?)?;
        points.push(ResidualDecayPoint {
            mu,
            star_norm: s,
            log_star_norm: s.ln(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.mu).sum::<f64>() / n;
    let my = points.iter().map(|p| p.log_star_norm).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.mu - mx).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| (p.mu - mx) * (p.log_star_norm - my))
        .sum();
    let syy: f64 = points.iter().map(|p| (p.log_star_norm - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(ResidualDecayReport {
        strictly_decreasing: points
            .windows(2)
            .all(|w| w[1].log_star_norm < w[0].log_star_norm),
        slope,
        intercept: my - slope * mx,
        r_squared,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::PotentialSpec;
    use crate::field::{Grid, SystemParams};
    use crate::reduction::tests::ground1;

    fn problem(epsilon: f64, half_width: f64, nodes: usize) -> ReducedProblem {
        let params = SystemParams::symmetric(0.5, epsilon, PotentialSpec::default()).unwrap();
        ReducedProblem::new(params, ground1(), Grid::new(1, half_width, nodes).unwrap()).unwrap()
    }

    #[test]
    fn exact_single_spike_passes_and_off_optimum_fails() {
        let pr = problem(0.0, 30.0, 1201);
        let c = Configuration::on_line(10.0, &[0.0]).unwrap();
        let rep = multiplier_vanishing_check(&solve_nonlinear(&c, &pr).unwrap(), &pr).unwrap();
        assert!(rep.passed, "{rep:?}");

        let pr = problem(1e-3, 30.0, 1201);
        let off = Configuration::on_line(10.0, &[3.0]).unwrap();
        let rep = multiplier_vanishing_check(&solve_nonlinear(&off, &pr).unwrap(), &pr).unwrap();
        assert!(!rep.passed);
        assert!(rep.scaled_max_multiplier > MULTIPLIER_TOL);
    }

    #[test]
    fn isolated_spikes_have_small_and_repeatable_increments() {
        let pr = problem(0.0, 60.0, 2401);
        let gamma = pr.gamma();
        let c = Configuration::on_line(10.0, &[-15.0]).unwrap();
        let p_new = [-15.0 + 30.0 / gamma];
        let a = increment_diagnostics(&c, &p_new, &pr).unwrap();
        let b = increment_diagnostics(&c, &p_new, &pr).unwrap();
        assert_eq!(a, b);
        assert!(a.h1_squared < 1e-4, "{a:?}");
        assert_eq!(a.potential_term, 0.0);
    }

    #[test]
    fn residual_decay_is_log_linear() {
        let pr = problem(0.0, 32.0, 1281);
        let rep = residual_decay(&[8.0, 10.0, 12.0], &pr).unwrap();
        assert!(rep.strictly_decreasing);
        assert!(rep.r_squared >= 0.95, "{rep:?}");
        assert!(rep.slope < 0.0);
    }
}
