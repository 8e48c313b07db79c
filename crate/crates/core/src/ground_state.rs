//! Radial ground state of `Δw − w + w³ = 0` and the rescaled building block.
//!
//! The profile is computed in two legs. An outward RK4 shooting from `r = 0`,
//! with `w(0)` fixed by bisection, is trusted while the unstable `e^{+r}` mode
//! is still far below the solution. The tail is then integrated inward from
//! `r_max`, starting on the decaying linear solution `A·r^{-(N-2)/2}K_{(N-2)/2}(r)`,
//! and its amplitude `A` is matched to the outward leg. Samples are evaluated
//! with quintic Hermite interpolation (the ODE supplies `w''`), so sampled
//! blocks are smooth enough for high-order finite differences.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default outer radius of the sampled profile.
pub const DEFAULT_R_MAX: f64 = 25.0;
/// Default number of sample radii, `r_0 = 0` through `r_max`.
pub const DEFAULT_SAMPLES: usize = 2000;
/// RK4 substeps between consecutive sample radii.
pub const DEFAULT_SUBSTEPS: usize = 8;

/// The outward leg is kept until `w` has dropped below this fraction of `w(0)`.
const MATCH_FRACTION: f64 = 1e-2;
const MAX_BISECTION: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStateOptions {
    pub r_max: f64,
    pub samples: usize,
    pub substeps: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            r_max: DEFAULT_R_MAX,
            samples: DEFAULT_SAMPLES,
            substeps: DEFAULT_SUBSTEPS,
        }
    }
}

/// Sampled radial ground state `w` in dimension `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    dim: usize,
    radii: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    tail_constant: f64,
    tail_start: f64,
    /// Final shooting bracket on `w(0)`.
    bracket: (f64, f64),
    /// Slope mismatch between the two legs at the matching radius.
    match_defect: f64,
    /// Largest ODE residual over interior sample radii.
    max_residual: f64,
}

/// `√2·sech(x)`, the closed-form one-dimensional ground state. Used as a
/// reference only; all dimensions go through [`solve_ground_state`].
pub fn sech_reference(x: f64) -> f64 {
    std::f64::consts::SQRT_2 / x.cosh()
}

/// Solves for the ground state with default sampling.
pub fn solve_ground_state(dim: usize, tol: f64) -> Result<GroundState> {
    solve_ground_state_with(dim, tol, GroundStateOptions::default())
}

pub fn solve_ground_state_with(
    dim: usize,
    tol: f64,
    opts: GroundStateOptions,
) -> Result<GroundState> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Domain(format!(
            "dimension must be 1, 2 or 3, got {dim}"
        )));
    }
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(Error::Domain(format!(
            "tolerance must lie in (0, 1e-4], got {tol}"
        )));
    }
    if opts.samples < 64 || opts.substeps == 0 || !(opts.r_max > 10.0) {
        return Err(Error::Domain(format!("unusable sampling options {opts:?}")));
    }

    let ode = RadialOde { dim };
    let dr = opts.r_max / (opts.samples - 1) as f64;
    let step = dr / opts.substeps as f64;

    let (lo, hi) = bisect_center_value(&ode, opts.r_max, step)?;
    let w0 = 0.5 * (lo + hi);

    // Outward leg, stored up to the first sample below MATCH_FRACTION·w0.
    let mut radii = Vec::with_capacity(opts.samples);
    let mut values = Vec::with_capacity(opts.samples);
    let mut slopes = Vec::with_capacity(opts.samples);
    let (mut w, mut p) = (w0, 0.0);
    radii.push(0.0);
    values.push(w);
    slopes.push(p);
    let mut i_match = None;
    for i in 1..opts.samples {
        let r0 = (i - 1) as f64 * dr;
        for s in 0..opts.substeps {
            (w, p) = ode.rk4(r0 + s as f64 * step, w, p, step);
        }
        radii.push(i as f64 * dr);
        values.push(w);
        slopes.push(p);
        if w < 0.0 || p > 0.0 {
            break;
        }
        if w < MATCH_FRACTION * w0 {
            i_match = Some(i);
            break;
        }
    }
    let i_match = i_match.ok_or_else(|| Error::Shooting {
        lo,
        hi,
        iterations: MAX_BISECTION,
        reason: "outward trajectory left the admissible region before decaying".into(),
    })?;
    let r_match = radii[i_match];
    let target = values[i_match];

    // Inward leg from r_max on the decaying tail solution, amplitude matched at r_match.
    let inward = |amp: f64| -> Vec<(f64, f64)> {
        let (t, tp) = tail_basis(dim, opts.r_max);
        let mut state = (amp * t, amp * tp);
        let mut out = vec![state];
        for i in (i_match..opts.samples - 1).rev() {
            let r_hi = (i + 1) as f64 * dr;
            for s in 0..opts.substeps {
                state = ode.rk4(r_hi - s as f64 * step, state.0, state.1, -step);
            }
            out.push(state);
        }
        out.reverse();
        out
    };
    let mut amp_a = target / tail_basis(dim, r_match).0;
    let mut f_a = inward(amp_a)[0].0 - target;
    let mut amp_b = amp_a * (1.0 + 1e-3);
    let mut f_b = inward(amp_b)[0].0 - target;
    for _ in 0..50 {
        if f_b == f_a || (f_b.abs() <= 1e-15 * target) {
            break;
        }
        let next = amp_b - f_b * (amp_b - amp_a) / (f_b - f_a);
        amp_a = amp_b;
        f_a = f_b;
        amp_b = next;
        f_b = inward(amp_b)[0].0 - target;
    }
    let amplitude = amp_b;
    let tail = inward(amplitude);
    let match_defect = tail[0].1 - slopes[i_match];

    radii.truncate(i_match);
    values.truncate(i_match);
    slopes.truncate(i_match);
    for (k, (tw, tp)) in tail.into_iter().enumerate() {
        radii.push((i_match + k) as f64 * dr);
        values.push(tw);
        slopes.push(tp);
    }

    let mut gs = GroundState {
        dim,
        radii,
        values,
        slopes,
        tail_constant: amplitude,
        tail_start: opts.r_max,
        bracket: (lo, hi),
        match_defect,
        max_residual: 0.0,
    };
    gs.max_residual = gs.ode_residuals().into_iter().fold(0.0, f64::max);
    if gs.max_residual > tol
        || gs.values.windows(2).any(|p| p[1] >= p[0])
        || gs.values.iter().any(|v| *v <= 0.0)
    {
        return Err(Error::Shooting {
            lo,
            hi,
            iterations: MAX_BISECTION,
            reason: format!(
                "profile residual {:.3e} exceeds tolerance {tol:.1e} or profile is not positive and decreasing",
                gs.max_residual
            ),
        });
    }
    Ok(gs)
}

/// Bisection on `w(0)`: too large crosses zero, too small turns back up.
fn bisect_center_value(ode: &RadialOde, r_max: f64, step: f64) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (1.05, 10.0);
    let classify = |w0: f64| ode.classify(w0, r_max, step);
    if classify(lo) != Shot::Under || classify(hi) != Shot::Over {
        return Err(Error::Shooting {
            lo,
            hi,
            iterations: 0,
            reason: "initial bracket does not straddle the ground state".into(),
        });
    }
    for _ in 0..MAX_BISECTION {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok((lo, hi));
        }
        match classify(mid) {
            Shot::Under => lo = mid,
            Shot::Over => hi = mid,
            Shot::Neither => return Ok((mid, mid)),
        }
    }
    if hi - lo <= 1e-13 * hi {
        Ok((lo, hi))
    } else {
        Err(Error::Shooting {
            lo,
            hi,
            iterations: MAX_BISECTION,
            reason: "bracket did not shrink to machine precision".into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// Trajectory turned back up before decaying.
    Under,
    /// Trajectory crossed zero.
    Over,
    /// Reached `r_max` without either event.
    Neither,
}

struct RadialOde {
    dim: usize,
}

impl RadialOde {
    /// `(w', w'')` of the first-order radial system.
    fn rhs(&self, r: f64, w: f64, p: f64) -> (f64, f64) {
        let nonlinear = w - w * w * w;
        if r == 0.0 {
            (p, nonlinear / self.dim as f64)
        } else {
            (p, -((self.dim - 1) as f64) / r * p + nonlinear)
        }
    }

    fn rk4(&self, r: f64, w: f64, p: f64, h: f64) -> (f64, f64) {
        let (k1w, k1p) = self.rhs(r, w, p);
        let (k2w, k2p) = self.rhs(r + 0.5 * h, w + 0.5 * h * k1w, p + 0.5 * h * k1p);
        let (k3w, k3p) = self.rhs(r + 0.5 * h, w + 0.5 * h * k2w, p + 0.5 * h * k2p);
        let (k4w, k4p) = self.rhs(r + h, w + h * k3w, p + h * k3p);
        (
            w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
            p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        )
    }

    fn classify(&self, w0: f64, r_max: f64, step: f64) -> Shot {
        let (mut w, mut p) = (w0, 0.0);
        let steps = (r_max / step).round() as usize;
        for i in 0..steps {
            (w, p) = self.rk4(i as f64 * step, w, p, step);
            if w < 0.0 {
                return Shot::Over;
            }
            if p > 0.0 {
                return Shot::Under;
            }
        }
        Shot::Neither
    }
}

/// Decaying solution of `t'' + (N−1)/r·t' − t = 0`, normalised as
/// `r^{-(N-1)/2} e^{-r} (1 + O(1/r))`, together with its derivative.
fn tail_basis(dim: usize, r: f64) -> (f64, f64) {
    let nu = (dim as f64 - 2.0) / 2.0;
    let four_nu2 = 4.0 * nu * nu;
    let mut coeff = 1.0;
    let mut series = 1.0;
    let mut series_slope = 0.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        coeff *= (four_nu2 - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf);
        let term = coeff / r.powi(k);
        if term.abs() >= last || term == 0.0 {
            break;
        }
        last = term.abs();
        series += term;
        series_slope -= kf * term / r;
        if term.abs() < 1e-18 {
            break;
        }
    }
    let half = (dim as f64 - 1.0) / 2.0;
    let base = r.powf(-half) * (-r).exp();
    let value = base * series;
    let slope = value * (-half / r - 1.0) + base * series_slope;
    (value, slope)
}

impl GroundState {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Asymptotic constant `A_N` in `w(r) ~ A_N r^{-(N-1)/2} e^{-r}`.
    pub fn tail_constant(&self) -> f64 {
        self.tail_constant
    }

    pub fn tail_start(&self) -> f64 {
        self.tail_start
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().expect("profile has samples")
    }

    pub fn center_value(&self) -> f64 {
        self.values[0]
    }

    pub fn bracket(&self) -> (f64, f64) {
        self.bracket
    }

    pub fn match_defect(&self) -> f64 {
        self.match_defect
    }

    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    fn spacing(&self) -> f64 {
        self.radii[1]
    }

    fn curvature(&self, r: f64, w: f64, p: f64) -> f64 {
        RadialOde { dim: self.dim }.rhs(r, w, p).1
    }

    /// Tail formula `A_N r^{-(N-1)/2} e^{-r}` including the `1/r` series of
    /// the modified Bessel function (exact for `N = 1, 3`).
    pub fn tail_value(&self, r: f64) -> f64 {
        self.tail_constant * tail_basis(self.dim, r).0
    }

    /// Leading-order tail `A_N r^{-(N-1)/2} e^{-r}` without the series correction.
    pub fn leading_tail(&self, r: f64) -> f64 {
        self.tail_constant * r.powf(-(self.dim as f64 - 1.0) / 2.0) * (-r).exp()
    }

    /// `w(r)` for `r ≥ 0`.
    pub fn eval(&self, r: f64) -> f64 {
        self.hermite(r).0
    }

    /// `w'(r)` for `r ≥ 0`.
    pub fn eval_slope(&self, r: f64) -> f64 {
        self.hermite(r).1
    }

    fn hermite(&self, r: f64) -> (f64, f64) {
        let r = r.abs();
        if r >= self.tail_start {
            let (t, tp) = tail_basis(self.dim, r);
            return (self.tail_constant * t, self.tail_constant * tp);
        }
        let h = self.spacing();
        let i = ((r / h) as usize).min(self.radii.len() - 2);
        let (r0, r1) = (self.radii[i], self.radii[i + 1]);
        let (f0, f1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
        let s0 = self.curvature(r0, f0, d0);
        let s1 = self.curvature(r1, f1, d1);
        quintic_hermite(r, r0, r1, [f0, d0, s0], [f1, d1, s1])
    }

    /// ODE residual `w'' + (N−1)/r·w' − w + w³` at interior sample radii,
    /// with `w''` from an eighth-order difference of the samples.
    pub fn ode_residuals(&self) -> Vec<f64> {
        const C: [f64; 5] = [
            -205.0 / 72.0,
            8.0 / 5.0,
            -1.0 / 5.0,
            8.0 / 315.0,
            -1.0 / 560.0,
        ];
        let h = self.spacing();
        let n = self.values.len();
        // even extension w(-r) = w(r)
        let at = |k: isize| self.values[k.unsigned_abs()];
        (1..n - 4)
            .map(|i| {
                let r = self.radii[i];
                let ii = i as isize;
                let mut second = C[0] * at(ii);
                for (k, c) in C.iter().enumerate().skip(1) {
                    second += c * (at(ii + k as isize) + at(ii - k as isize));
                }
                second /= h * h;
                let w = self.values[i];
                (second + (self.dim - 1) as f64 / r * self.slopes[i] - w + w * w * w).abs()
            })
            .collect()
    }

    /// Writes the profile as CSV with header `r,w`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,w")?;
        for (r, w) in self.radii.iter().zip(&self.values) {
            writeln!(out, "{r},{w}")?;
        }
        Ok(())
    }
}

/// Standalone form of [`GroundState::eval`].
pub fn eval_profile(gs: &GroundState, r: f64) -> f64 {
    gs.eval(r)
}

fn quintic_hermite(r: f64, r0: f64, r1: f64, a: [f64; 3], b: [f64; 3]) -> (f64, f64) {
    let h = r1 - r0;
    let t = (r - r0) / h;
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
    let h3 = 0.5 * t3 - t4 + 0.5 * t5;
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let value = h0 * a[0]
        + h1 * h * a[1]
        + h2 * h * h * a[2]
        + h3 * h * h * b[2]
        + h4 * h * b[1]
        + h5 * b[0];

    let g0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let g1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let g2 = t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4;
    let g3 = 1.5 * t2 - 4.0 * t3 + 2.5 * t4;
    let g4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let g5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let slope = (g0 * a[0]
        + g1 * h * a[1]
        + g2 * h * h * a[2]
        + g3 * h * h * b[2]
        + g4 * h * b[1]
        + g5 * b[0])
        / h;
    (value, slope)
}

/// Least-squares tail fit: regresses `log w + r + (N−1)/2·log r` on `1/r`
/// over the final decade of the samples and returns `exp(intercept)`.
///
/// Samples are `(r, w)` pairs sorted by radius with `samples[0]` at `r = 0`.
pub fn fit_tail_constant(dim: usize, samples: &[(f64, f64)]) -> Result<f64> {
    let (_, w0) = *samples.first().ok_or(Error::InsufficientTail {
        required_r_max: f64::NAN,
    })?;
    let &(r_last, w_last) = samples.last().unwrap();
    let threshold = 1e-4 * w0;
    if !(w_last < threshold) || !(w_last > 0.0) {
        let required = r_last + (w_last.max(f64::MIN_POSITIVE) / threshold).ln().max(1.0);
        return Err(Error::InsufficientTail {
            required_r_max: required,
        });
    }
    let half = (dim as f64 - 1.0) / 2.0;
    let window: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(r, w)| *r > 0.0 && *w > 0.0 && *w <= 10.0 * w_last)
        .map(|&(r, w)| (1.0 / r, w.ln() + r + half * r.ln()))
        .collect();
    if window.len() < 3 {
        return Err(Error::InsufficientTail {
            required_r_max: r_last + 3.0,
        });
    }
    let n = window.len() as f64;
    let mx = window.iter().map(|p| p.0).sum::<f64>() / n;
    let my = window.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = window.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = window.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    Ok((my - slope * mx).exp())
}

impl GroundState {
    /// `(r, w)` pairs at full sample resolution.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        self.radii
            .iter()
            .copied()
            .zip(self.values.iter().copied())
            .collect()
    }
}

/// Radially symmetric block `U(x) = V(x) = γ·w(γ|x|)` with `γ = √(1−β)`.
#[derive(Debug, Clone)]
pub struct BlockProfile {
    gamma: f64,
    ground: Arc<GroundState>,
}

pub fn build_block(gs: Arc<GroundState>, beta: f64) -> Result<BlockProfile> {
    if !(beta < 1.0) {
        return Err(Error::Domain(format!(
            "gamma undefined for beta = {beta} (need beta < 1)"
        )));
    }
    Ok(BlockProfile {
        gamma: (1.0 - beta).sqrt(),
        ground: gs,
    })
}

impl BlockProfile {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn ground(&self) -> &GroundState {
        &self.ground
    }

    pub fn ground_arc(&self) -> &Arc<GroundState> {
        &self.ground
    }

    pub fn dim(&self) -> usize {
        self.ground.dim
    }

    /// `U` at radius `r`.
    pub fn value(&self, r: f64) -> f64 {
        self.gamma * self.ground.eval(self.gamma * r)
    }

    /// Radial derivative `dU/dr`.
    pub fn radial_slope(&self, r: f64) -> f64 {
        self.gamma * self.gamma * self.ground.eval_slope(self.gamma * r)
    }

    /// `U(y)` and `∇U(y)` at displacement `y = x − P`.
    pub fn value_and_gradient(&self, y: &[f64]) -> (f64, [f64; 3]) {
        let r = y.iter().map(|c| c * c).sum::<f64>().sqrt();
        let (w, wp) = self.ground.hermite(self.gamma * r);
        let value = self.gamma * w;
        let mut grad = [0.0; 3];
        if r > 0.0 {
            let radial = self.gamma * self.gamma * wp / r;
            for (g, c) in grad.iter_mut().zip(y) {
                *g = radial * c;
            }
        }
        (value, grad)
    }
}
