//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line each and exits nonzero if any fails.

use std::f64::consts::SQRT_2;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use multibump::ansatz::{Configuration, PotentialSpec};
use multibump::field::{FieldPair, Grid, SystemParams, DEFAULT_NU};
use multibump::ground_state::{build_block, sech_reference, solve_ground_state, GroundState};
use multibump::linsolve::{linearized_spectrum, nondegeneracy_check, ProjectedSolver};
use multibump::reduction::{
    energy_ladder, gamma1_constant, increment_diagnostics, interaction_series,
    multiplier_vanishing_check, reduced_energy_value, residual_decay, solve_nonlinear,
    OptimizeOptions, ReducedProblem,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn ground(dim: usize) -> Arc<GroundState> {
    let tol = if dim == 1 { 1e-8 } else { 1e-7 };
    Arc::new(solve_ground_state(dim, tol).expect("ground state"))
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn problem(
    gs: &Arc<GroundState>,
    beta: f64,
    epsilon: f64,
    half_width: f64,
    nodes: usize,
) -> ReducedProblem {
    let params = SystemParams::symmetric(beta, epsilon, PotentialSpec::default()).unwrap();
    ReducedProblem::new(params, gs.clone(), Grid::new(1, half_width, nodes).unwrap()).unwrap()
}

fn two_spikes(mu: f64, gamma: f64) -> Configuration {
    let half = mu / (2.0 * gamma);
    Configuration::on_line(mu, &[-half, half]).unwrap()
}

fn ground_state_golden() -> Outcome {
    let t = Instant::now();
    let gs = solve_ground_state(1, 1e-8).unwrap();
    let elapsed = t.elapsed();
    let sup = (0..=20_000)
        .map(|i| -10.0 + i as f64 * 1e-3)
        .fold(0.0f64, |m, x| {
            m.max((gs.eval(x.abs()) - sech_reference(x)).abs())
        });
    let tail = gs.tail_constant();
    let tail_err = (tail - 2.0 * SQRT_2).abs() / (2.0 * SQRT_2);
    outcome(
        sup <= 1e-6 && tail_err <= 5e-3 && within(elapsed, 1.0),
        format!("sup error {sup:.2e}, tail constant {tail:.6} (rel {tail_err:.2e}), {elapsed:.2?}"),
    )
}

fn interaction_constant() -> Outcome {
    let gs = ground(1);
    let t = Instant::now();
    let g1 = gamma1_constant(&gs);
    let pts = interaction_series(&gs, 1.0, &[8.0, 10.0, 12.0]).unwrap();
    let elapsed = t.elapsed();
    let dev: Vec<f64> = pts
        .iter()
        .map(|p| (p.ratio_to_gamma1 - 1.0).abs())
        .collect();
    let passed = (g1 - 4.0 * SQRT_2).abs() <= 1e-6
        && dev[2] <= 0.05
        && dev[0] > dev[1]
        && dev[1] > dev[2]
        && within(elapsed, 1.0);
    outcome(
        passed,
        format!(
            "gamma1 {g1:.9} vs {:.9}, ratios {:?}, {elapsed:.2?}",
            4.0 * SQRT_2,
            pts.iter()
                .map(|p| format!("{:.4}", p.ratio_to_gamma1))
                .collect::<Vec<_>>()
        ),
    )
}

fn single_spike_exactness() -> Outcome {
    let gs = ground(1);
    let t = Instant::now();
    let params = SystemParams::free(0.5).unwrap();
    let pr = ReducedProblem::new(params, gs, Grid::new(1, 50.0, 2001).unwrap()).unwrap();
    let c = Configuration::on_line(10.0, &[0.0]).unwrap();
    let sol = solve_nonlinear(&c, &pr).unwrap();
    let elapsed = t.elapsed();
    let maxc = sol.max_multiplier();
    outcome(
        sol.star_norm < 1e-8 && maxc < 1e-8 && within(elapsed, 5.0),
        format!(
            "star norm {:.2e}, max |c| {maxc:.2e}, {elapsed:.2?}",
            sol.star_norm
        ),
    )
}

/// Dense eigenvalues of `Δ_h − 1 + 3U²` on a one-dimensional grid.
fn dense_top_eigenvalue(g: &Grid, u: &[f64]) -> f64 {
    let n = g.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        g.laplacian_row(i, |j, c| m[(i, j)] += c);
        m[(i, i)] += -1.0 + 3.0 * u[i] * u[i];
    }
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

fn nondegeneracy() -> Outcome {
    let gs1 = ground(1);
    let gs2 = ground(2);
    let t = Instant::now();
    let mut lines = Vec::new();
    let mut passed = true;
    let cases = [
        (
            gs1.clone(),
            Grid::new(1, 20.0, 401).unwrap(),
            Grid::new(1, 20.0, 801).unwrap(),
        ),
        (
            gs2.clone(),
            Grid::new(2, 12.0, 121).unwrap(),
            Grid::new(2, 12.0, 241).unwrap(),
        ),
    ];
    for (gs, coarse, fine) in cases {
        let block = build_block(gs, 0.5).unwrap();
        for g in [coarse, fine] {
            let rep = nondegeneracy_check(0.5, &block, &g).unwrap();
            let worst = rep.angles.iter().copied().fold(0.0f64, f64::max);
            passed &= rep.kernel_dim == g.dim() && rep.angles.len() == g.dim() && worst < 1e-2;
            lines.push(format!(
                "N={} h={:.3}: kernel {} angle {worst:.1e}",
                g.dim(),
                g.spacing(),
                rep.kernel_dim
            ));
        }
    }
    let g = Grid::new(1, 15.0, 601).unwrap();
    let block = build_block(gs1, 0.0).unwrap();
    let spec = linearized_spectrum(0.0, &block, &g, 3).unwrap();
    let u = g.sample(|x| block.value(x[0].abs()));
    let dense = dense_top_eigenvalue(&g, &u);
    let top = spec.eigenvalues[0];
    passed &=
        (top - 3.0).abs() <= 1e-3 && (dense - 3.0).abs() <= 1e-3 && (top - dense).abs() <= 1e-3;
    let elapsed = t.elapsed();
    passed &= within(elapsed, 60.0);
    lines.push(format!("beta=0 top {top:.6} dense {dense:.6}"));
    outcome(passed, format!("{}, {elapsed:.2?}", lines.join("; ")))
}

fn linear_stability() -> Outcome {
    let gs = ground(1);
    let t = Instant::now();
    let pr = problem(&gs, 0.5, 0.0, 32.0, 1281);
    let gamma = pr.gamma();
    let g = pr.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise: Vec<f64> = (0..2 * g.len())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let envelope = g.sample(|x| (-DEFAULT_NU * gamma * x[0].abs()).exp());
    let h = FieldPair::new(
        g,
        (0..g.len()).map(|i| noise[i] * envelope[i]).collect(),
        (0..g.len())
            .map(|i| noise[g.len() + i] * envelope[i])
            .collect(),
    )
    .unwrap();
    let mut ratios = Vec::new();
    let mut ortho = 0.0f64;
    for mu in [8.0, 10.0, 12.0] {
        let c = two_spikes(mu, gamma);
        let solver = ProjectedSolver::new(&c, &pr.params, &pr.block, &g).unwrap();
        let sol = solver.solve(&h).unwrap();
        ratios.push(sol.stability_ratio());
        ortho = ortho.max(sol.orthogonality_residual);
    }
    let elapsed = t.elapsed();
    let spread = ratios.iter().copied().fold(0.0f64, f64::max)
        / ratios.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        spread < 2.0 && ortho < 1e-8 && within(elapsed, 60.0),
        format!(
            "ratios {ratios:.4?}, spread {spread:.3}, orthogonality {ortho:.1e}, {elapsed:.2?}"
        ),
    )
}

fn residual_decay_shape() -> Outcome {
    let gs = ground(1);
    let t = Instant::now();
    let pr = problem(&gs, 0.5, 0.0, 32.0, 1281);
    let rep = residual_decay(&[8.0, 10.0, 12.0], &pr).unwrap();
    let elapsed = t.elapsed();
    outcome(
        rep.strictly_decreasing && rep.r_squared >= 0.95 && within(elapsed, 30.0),
        format!(
            "log norms {:.3?}, slope {:.4}, R^2 {:.5}, {elapsed:.2?}",
            rep.points
                .iter()
                .map(|p| p.log_star_norm)
                .collect::<Vec<_>>(),
            rep.slope,
            rep.r_squared
        ),
    )
}

fn contraction_certificate() -> Outcome {
    let gs = ground(1);
    let t = Instant::now();
    let pr = problem(&gs, 0.5, 1e-3, 32.0, 1281);
    let gamma = pr.gamma();
    let at10 = solve_nonlinear(&two_spikes(10.0, gamma), &pr);
    let at12 = solve_nonlinear(&two_spikes(12.0, gamma), &pr);
    let elapsed = t.elapsed();
    match (at10, at12) {
        (Ok(a), Ok(b)) => {
            let factor = a.contraction_factor.unwrap_or(0.0);
            outcome(
                a.iterations <= 20 && factor <= 0.5 && b.star_norm < a.star_norm && within(elapsed, 120.0),
                format!(
                    "iterations {}, factor {factor:.3}, star norm mu=10 {:.3e} mu=12 {:.3e}, {elapsed:.2?}",
                    a.iterations, a.star_norm, b.star_norm
                ),
            )
        }
        (a, b) => outcome(
            false,
            format!("solve failed: {:?} / {:?}", a.err(), b.err()),
        ),
    }
}

/// Ladder and certified-solution criteria share one run.
fn ladder_and_certificate() -> (Outcome, Outcome) {
    let gs = ground(1);
    let t = Instant::now();
    let pr = problem(&gs, 0.5, 1e-3, 50.0, 2001);
    let h = pr.grid.spacing();
    let ladder = energy_ladder(2, 10.0, &pr, &OptimizeOptions::default());
    let ladder = match ladder {
        Ok(l) => l,
        Err(e) => {
            let o = outcome(false, format!("ladder failed: {e}"));
            return (o, outcome(false, "no optimizer output".into()));
        }
    };
    let block_energy = ladder.block_energy;
    let r1 = ladder.levels[0].r_m;
    let r2 = ladder.levels[1].r_m;
    let x1 = ladder.levels[0].configuration.centers()[0][0];

    // dense scan of N over single-spike positions
    let scan: Vec<(f64, f64)> = (-80..=80)
        .map(|i| {
            let x = i as f64 * h / 2.0;
            let c = Configuration::on_line(10.0, &[x]).unwrap();
            (x, reduced_energy_value(&c, &pr).unwrap())
        })
        .collect();
    let x_scan = scan
        .iter()
        .fold(scan[0], |b, &p| if p.1 > b.1 { p } else { b })
        .0;
    let m2 = &ladder.optimizations[1].best;
    let cert =
        solve_nonlinear(&m2.configuration, &pr).and_then(|s| multiplier_vanishing_check(&s, &pr));
    let elapsed = t.elapsed();

    let margin1 = r1 - block_energy;
    let margin2 = r2 - r1 - block_energy;
    let located = (x1 - x_scan).abs() <= 2.0 * h && x1.abs() <= 2.0 * h;
    let ladder_outcome = outcome(
        margin1 > 0.0 && margin2 > 0.0 && located && within(elapsed, 600.0),
        format!(
            "I {block_energy:.10}, R1-I {margin1:.3e}, R2-R1-I {margin2:.3e}, m=1 maximizer {x1:.4} (scan {x_scan:.4}, h {h}), m=2 centers {:?}, {elapsed:.2?}",
            m2.configuration.centers()
        ),
    );
    let cert_outcome = match cert {
        Ok(rep) => outcome(
            rep.passed,
            format!(
                "scaled max |c| {:.2e}, residual {:.2e}, positive {}",
                rep.scaled_max_multiplier, rep.residual_star_norm, rep.positive
            ),
        ),
        Err(e) => outcome(false, format!("certification solve failed: {e}")),
    };
    (ladder_outcome, cert_outcome)
}

fn increment_shape() -> Outcome {
    let gs = ground(1);
    let t = Instant::now();
    let pr = problem(&gs, 0.5, 0.0, 45.0, 1801);
    let gamma = pr.gamma();
    let mu = 10.0;
    let old = -1.5 * mu / gamma;
    let c = Configuration::on_line(mu, &[old]).unwrap();
    let mut norms = Vec::new();
    for factor in [1.5, 2.25, 3.0] {
        match increment_diagnostics(&c, &[old + factor * mu / gamma], &pr) {
            Ok(rep) => norms.push(rep.h1_squared.sqrt()),
            Err(e) => return outcome(false, format!("increment failed at {factor}: {e}")),
        }
    }
    let elapsed = t.elapsed();
    outcome(
        norms[0] > norms[1] && norms[1] > norms[2] && within(elapsed, 120.0),
        format!(
            "H1 norms {:?}, {elapsed:.2?}",
            norms.iter().map(|n| format!("{n:.3e}")).collect::<Vec<_>>()
        ),
    )
}

fn report(n: usize, name: &str, o: &Outcome) -> bool {
    let tag = if o.passed { "PASS" } else { "FAIL" };
    println!("{tag} criterion {n} ({name}): {}", o.detail);
    o.passed
}

type Criterion = (usize, &'static str, fn() -> Outcome);

fn main() {
    let simple: [Criterion; 7] = [
        (1, "ground-state golden test", ground_state_golden),
        (2, "interaction constant", interaction_constant),
        (3, "exactness of a single spike", single_spike_exactness),
        (4, "non-degeneracy", nondegeneracy),
        (5, "linear stability", linear_stability),
        (6, "residual decay", residual_decay_shape),
        (7, "contraction certificate", contraction_certificate),
    ];
    let mut passed = 0;
    for (n, name, f) in simple {
        passed += usize::from(report(n, name, &f()));
    }
    let (ladder, cert) = ladder_and_certificate();
    passed += usize::from(report(8, "energy ladder", &ladder));
    passed += usize::from(report(9, "certified solution", &cert));
    passed += usize::from(report(10, "increment shape", &increment_shape()));
    println!("acceptance: {passed} passed, {} failed", 10 - passed);
    if passed < 10 {
        std::process::exit(1);
    }
}
