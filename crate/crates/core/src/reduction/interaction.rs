use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::pairwise_sum;
use crate::ground_state::GroundState;

/// Quadrature half-length in profile units; `w` is below `e^{−30}` beyond it.
const REACH: f64 = 30.0;

fn simpson(a: f64, b: f64, intervals: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let terms: Vec<f64> = (0..=n)
        .map(|i| {
            let c = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * f(a + i as f64 * h)
        })
        .collect();
    h / 3.0 * pairwise_sum(&terms)
}

/// `∫_{ℝ^N} f(z, ρ)` for an integrand symmetric about the `z`-axis, written
/// in the axial coordinate `z` and the transverse radius `ρ`.
fn axial_integral(
    dim: usize,
    z0: f64,
    z1: f64,
    step: f64,
    f: impl Fn(f64, f64) -> f64 + Sync,
) -> f64 {
    let nz = ((z1 - z0) / step).ceil() as usize;
    match dim {
        1 => simpson(z0, z1, nz, |z| f(z, 0.0)),
        _ => {
            let nr = (REACH / step).ceil() as usize;
            let measure = |rho: f64| {
                if dim == 2 {
                    2.0
                } else {
                    2.0 * std::f64::consts::PI * rho
                }
            };
            simpson(z0, z1, nz, |z| {
                simpson(0.0, REACH, nr, |rho| measure(rho) * f(z, rho))
            })
        }
    }
}

fn step_for(dim: usize) -> f64 {
    if dim == 1 {
        1e-3
    } else {
        2e-2
    }
}

/// `γ₁ = ∫_{ℝ^N} w³(y) e^{−y₁} dy`.
pub fn gamma1_constant(gs: &GroundState) -> f64 {
    axial_integral(gs.dim(), -REACH, REACH, step_for(gs.dim()), |z, rho| {
        gs.eval((z * z + rho * rho).sqrt()).powi(3) * (-z).exp()
    })
}

/// `∫_{ℝ^N} w³(γ(x − P_j)) w(γ(x − P_k)) dx` for `|P_j − P_k| = d`.
pub fn interaction_integral(gs: &GroundState, gamma: f64, d: f64) -> Result<f64> {
    if !(gamma > 0.0 && d >= 0.0) {
        return Err(Error::Domain(format!(
            "need gamma > 0 and d >= 0, got {gamma}, {d}"
        )));
    }
    let n = gs.dim();
    let s = gamma * d;
    // substitute y = γ(x − P_j)
    let integral = axial_integral(n, -REACH, s + REACH, step_for(n), |z, rho| {
        let r2 = rho * rho;
        gs.eval((z * z + r2).sqrt()).powi(3) * gs.eval(((z - s) * (z - s) + r2).sqrt())
    });
    Ok(integral / gamma.powi(n as i32))
}

/// One sample of the interaction asymptotics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionPoint {
    pub d: f64,
    pub integral: f64,
    /// `γ^N · integral / (γ₁ · w(γd))`; tends to 1 as `d` grows.
    pub ratio_to_gamma1: f64,
}

pub fn interaction_series(
    gs: &GroundState,
    gamma: f64,
    distances: &[f64],
) -> Result<Vec<InteractionPoint>> {
    let g1 = gamma1_constant(gs);
    distances
        .iter()
        .map(|&d| {
            let integral = interaction_integral(gs, gamma, d)?;
            Ok(InteractionPoint {
                d,
                integral,
                ratio_to_gamma1: gamma.powi(gs.dim() as i32) * integral / (g1 * gs.eval(gamma * d)),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::tests::ground1;

    #[test]
    fn gamma1_in_one_dimension() {
        let g1 = gamma1_constant(&ground1());
        assert!((g1 - 4.0 * 2f64.sqrt()).abs() < 1e-6, "{g1}");
    }

    #[test]
    fn interaction_is_symmetric_and_approaches_gamma1() {
        let gs = ground1();
        let pts = interaction_series(&gs, 1.0, &[8.0, 10.0, 12.0]).unwrap();
        let dev: Vec<f64> = pts
            .iter()
            .map(|p| (p.ratio_to_gamma1 - 1.0).abs())
            .collect();
        assert!(dev[0] > dev[1] && dev[1] > dev[2], "{dev:?}");
        assert!(dev[2] < 0.05);
        // reflecting x ↦ −x swaps the roles of P_j and P_k in one dimension
        let s = 7.0;
        let swapped = simpson(-REACH - s, REACH, 80_000, |z| {
            gs.eval(z.abs()).powi(3) * gs.eval((z + s).abs())
        });
        let direct = interaction_integral(&gs, 1.0, s).unwrap();
        assert!((swapped - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn interaction_scales_with_gamma() {
        let gs = ground1();
        let gamma = 0.5f64.sqrt();
        let a = interaction_integral(&gs, gamma, 10.0 / gamma).unwrap();
        let b = interaction_integral(&gs, 1.0, 10.0).unwrap();
        assert!((a * gamma - b).abs() < 1e-10 * b);
    }
}
