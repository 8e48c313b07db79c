//! Truncated tensor grids, scalar/pair fields, discrete operators and the
//! energy functional of the coupled system.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ansatz::PotentialSpec;
use crate::error::{Error, Result};
use crate::ground_state::GroundState;

/// Default weight exponent `ν` of the `*`-norm.
pub const DEFAULT_NU: f64 = 0.75;

/// Order of the central finite-difference stencils used on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Stencil {
    Second,
    Fourth,
    Sixth,
    #[default]
    Eighth,
}

impl TryFrom<u8> for Stencil {
    type Error = String;

    fn try_from(order: u8) -> std::result::Result<Self, String> {
        match order {
            2 => Ok(Stencil::Second),
            4 => Ok(Stencil::Fourth),
            6 => Ok(Stencil::Sixth),
            8 => Ok(Stencil::Eighth),
            _ => Err(format!(
                "unsupported stencil order {order} (expected 2, 4, 6 or 8)"
            )),
        }
    }
}

impl From<Stencil> for u8 {
    fn from(s: Stencil) -> u8 {
        s.order() as u8
    }
}

impl Stencil {
    pub fn order(self) -> usize {
        match self {
            Stencil::Second => 2,
            Stencil::Fourth => 4,
            Stencil::Sixth => 6,
            Stencil::Eighth => 8,
        }
    }

    /// Symmetric second-derivative weights `c_0, c_1, …, c_k` (unit spacing).
    pub fn second_derivative(self) -> &'static [f64] {
        match self {
            Stencil::Second => &[-2.0, 1.0],
            Stencil::Fourth => &[-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0],
            Stencil::Sixth => &[-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0],
            Stencil::Eighth => &[
                -205.0 / 72.0,
                8.0 / 5.0,
                -1.0 / 5.0,
                8.0 / 315.0,
                -1.0 / 560.0,
            ],
        }
    }

    /// Antisymmetric first-derivative weights `d_1, …, d_k` (unit spacing).
    pub fn first_derivative(self) -> &'static [f64] {
        match self {
            Stencil::Second => &[1.0 / 2.0],
            Stencil::Fourth => &[2.0 / 3.0, -1.0 / 12.0],
            Stencil::Sixth => &[3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
            Stencil::Eighth => &[4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0],
        }
    }

    pub fn reach(self) -> usize {
        self.order() / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct RawGrid {
    dim: usize,
    half_width: f64,
    nodes: usize,
    #[serde(default)]
    stencil: Stencil,
}

/// Uniform grid on the box `[−L, L]^N` with an odd node count per axis, so
/// the origin is a node. Nodes are stored with axis 0 varying fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct Grid {
    dim: usize,
    half_width: f64,
    nodes: usize,
    spacing: f64,
    stencil: Stencil,
}

impl TryFrom<RawGrid> for Grid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        Grid::new(raw.dim, raw.half_width, raw.nodes).map(|g| g.with_stencil(raw.stencil))
    }
}

impl From<Grid> for RawGrid {
    fn from(g: Grid) -> Self {
        RawGrid {
            dim: g.dim,
            half_width: g.half_width,
            nodes: g.nodes,
            stencil: g.stencil,
        }
    }
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, nodes: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Domain(format!(
                "grid dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Domain(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if nodes < 3 || nodes.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "node count per axis must be odd and >= 3, got {nodes}"
            )));
        }
        Ok(Self {
            dim,
            half_width,
            nodes,
            spacing: 2.0 * half_width / (nodes - 1) as f64,
            stencil: Stencil::default(),
        })
    }

    /// Grid whose spacing is the closest to `spacing` with an odd node count.
    pub fn with_spacing(dim: usize, half_width: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::Domain(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        let half_nodes = (half_width / spacing).round().max(1.0) as usize;
        Self::new(dim, half_width, 2 * half_nodes + 1)
    }

    pub fn with_stencil(mut self, stencil: Stencil) -> Self {
        self.stencil = stencil;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.nodes.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axis_coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.nodes.pow(axis as u32)
    }

    /// Per-axis indices of a flat node index.
    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for slot in out.iter_mut().take(self.dim) {
            *slot = idx % self.nodes;
            idx /= self.nodes;
        }
        out
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let mi = self.multi_index(idx);
        let mut x = [0.0; 3];
        for k in 0..self.dim {
            x[k] = self.axis_coordinate(mi[k]);
        }
        x
    }

    /// Flat index of the node nearest to `x`, if it lies in the box.
    pub fn nearest_index(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for k in (0..self.dim).rev() {
            let i = ((x[k] + self.half_width) / self.spacing).round();
            if i < 0.0 || i >= self.nodes as f64 {
                return None;
            }
            idx = idx * self.nodes + i as usize;
        }
        Some(idx)
    }

    /// Trapezoidal quadrature weight of a node.
    pub fn weight(&self, idx: usize) -> f64 {
        let mi = self.multi_index(idx);
        let mut w = self.spacing.powi(self.dim as i32);
        for &i in mi.iter().take(self.dim) {
            if i == 0 || i == self.nodes - 1 {
                w *= 0.5;
            }
        }
        w
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Samples `f` at every node.
    pub fn sample(&self, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|i| f(&self.point(i)[..self.dim]))
            .collect()
    }

    /// Grid metadata `{dim, half_width, spacing}`.
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "dim": self.dim,
            "half_width": self.half_width,
            "spacing": self.spacing,
        })
    }

    /// `(neighbour, coefficient)` pairs of the Laplacian row at `idx`,
    /// diagonal included; neighbours outside the box are dropped
    /// (homogeneous Dirichlet extension).
    pub fn laplacian_row(&self, idx: usize, mut visit: impl FnMut(usize, f64)) {
        let c = self.stencil.second_derivative();
        let inv_h2 = 1.0 / (self.spacing * self.spacing);
        let mi = self.multi_index(idx);
        visit(idx, self.dim as f64 * c[0] * inv_h2);
        for axis in 0..self.dim {
            let stride = self.stride(axis);
            let i = mi[axis];
            for (s, &cs) in c.iter().enumerate().skip(1) {
                if i + s < self.nodes {
                    visit(idx + s * stride, cs * inv_h2);
                }
                if i >= s {
                    visit(idx - s * stride, cs * inv_h2);
                }
            }
        }
    }

    /// Contribution of exterior values `f(x)`, `x` outside the box, to the
    /// discrete Laplacian at each node. Adding it to [`laplacian`] replaces
    /// the zero extension by `f`.
    pub fn exterior_source(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let c = self.stencil.second_derivative();
        let inv_h2 = 1.0 / (self.spacing * self.spacing);
        (0..self.len())
            .map(|idx| {
                let mi = self.multi_index(idx);
                let x = self.point(idx);
                let mut acc = 0.0;
                for axis in 0..self.dim {
                    let i = mi[axis];
                    for (s, &cs) in c.iter().enumerate().skip(1) {
                        let off = s as f64 * self.spacing;
                        let mut y = x;
                        if i + s >= self.nodes {
                            y[axis] = x[axis] + off;
                            acc += cs * inv_h2 * f(&y[..self.dim]);
                        }
                        if i < s {
                            y[axis] = x[axis] - off;
                            acc += cs * inv_h2 * f(&y[..self.dim]);
                        }
                    }
                }
                acc
            })
            .collect()
    }
}

/// Sum with a fixed pairwise reduction tree.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Trapezoidal integral of a scalar nodal field.
pub fn integrate(g: &Grid, f: &[f64]) -> f64 {
    let terms: Vec<f64> = f.iter().enumerate().map(|(i, v)| g.weight(i) * v).collect();
    pairwise_sum(&terms)
}

/// Discrete Laplacian with zero values outside the box.
pub fn laplacian(f: &[f64], g: &Grid) -> Vec<f64> {
    assert_eq!(f.len(), g.len(), "field does not live on the grid");
    (0..g.len())
        .map(|i| {
            let mut acc = 0.0;
            g.laplacian_row(i, |j, c| acc += c * f[j]);
            acc
        })
        .collect()
}

/// Partial derivative along `axis`: central stencil of the grid order in the
/// interior, second-order central or one-sided differences near the boundary.
pub fn partial(f: &[f64], g: &Grid, axis: usize) -> Vec<f64> {
    let d = g.stencil.first_derivative();
    let k = d.len();
    let n = g.nodes;
    let stride = g.stride(axis);
    let h = g.spacing;
    (0..g.len())
        .map(|idx| {
            let i = g.multi_index(idx)[axis];
            if i >= k && i + k < n {
                d.iter()
                    .enumerate()
                    .map(|(s, c)| c * (f[idx + (s + 1) * stride] - f[idx - (s + 1) * stride]))
                    .sum::<f64>()
                    / h
            } else if i == 0 {
                (-3.0 * f[idx] + 4.0 * f[idx + stride] - f[idx + 2 * stride]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * f[idx] - 4.0 * f[idx - stride] + f[idx - 2 * stride]) / (2.0 * h)
            } else {
                (f[idx + stride] - f[idx - stride]) / (2.0 * h)
            }
        })
        .collect()
}

/// A pair of real scalar fields `(u, v)` sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl FieldPair {
    pub fn new(grid: Grid, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != grid.len() || v.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, u, v })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            u: vec![0.0; grid.len()],
            v: vec![0.0; grid.len()],
        }
    }

    /// Both components equal to `f`.
    pub fn symmetric(grid: Grid, f: Vec<f64>) -> Self {
        Self {
            grid,
            v: f.clone(),
            u: f,
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> (f64, f64)) -> Self {
        let (u, v) = (0..grid.len())
            .map(|i| f(&grid.point(i)[..grid.dim()]))
            .unzip();
        Self { grid, u, v }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    fn check(&self, other: &FieldPair) -> Result<()> {
        if self.grid != other.grid {
            Err(Error::GridMismatch)
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &FieldPair) -> Result<FieldPair> {
        self.check(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &FieldPair) -> Result<FieldPair> {
        self.check(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn scale(&self, s: f64) -> FieldPair {
        self.map(|a| s * a)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> FieldPair {
        FieldPair {
            grid: self.grid,
            u: self.u.iter().map(|&a| f(a)).collect(),
            v: self.v.iter().map(|&a| f(a)).collect(),
        }
    }

    fn zip_with(&self, other: &FieldPair, f: impl Fn(f64, f64) -> f64) -> FieldPair {
        FieldPair {
            grid: self.grid,
            u: self
                .u
                .iter()
                .zip(&other.u)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            v: self
                .v
                .iter()
                .zip(&other.v)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Components exchanged.
    pub fn swapped(&self) -> FieldPair {
        FieldPair {
            grid: self.grid,
            u: self.v.clone(),
            v: self.u.clone(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.v)
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    /// Writes `x[,y[,z]],u,v` rows, one per node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let axes = ["x", "y", "z"];
        writeln!(out, "{},u,v", axes[..self.grid.dim()].join(","))?;
        for i in 0..self.len() {
            let p = self.grid.point(i);
            for c in &p[..self.grid.dim()] {
                write!(out, "{c},")?;
            }
            writeln!(out, "{},{}", self.u[i], self.v[i])?;
        }
        Ok(())
    }
}

/// `⟨f, g⟩ = ∫ (f₁g₁ + f₂g₂)` by trapezoidal quadrature.
pub fn inner(f: &FieldPair, g: &FieldPair) -> Result<f64> {
    f.check(g)?;
    let grid = &f.grid;
    let terms: Vec<f64> = (0..f.len())
        .map(|i| grid.weight(i) * (f.u[i] * g.u[i] + f.v[i] * g.v[i]))
        .collect();
    Ok(pairwise_sum(&terms))
}

fn h1_component(f: &[f64], g: &Grid) -> f64 {
    let mut density: Vec<f64> = f.iter().map(|x| x * x).collect();
    for axis in 0..g.dim() {
        for (d, p) in density.iter_mut().zip(partial(f, g, axis)) {
            *d += p * p;
        }
    }
    integrate(g, &density).sqrt()
}

/// `‖u‖_{H¹} + ‖v‖_{H¹}`.
pub fn h1_norm(f: &FieldPair) -> f64 {
    h1_component(&f.u, &f.grid) + h1_component(&f.v, &f.grid)
}

/// `∫ (|∇u|² + u² + |∇v|² + v²)`, the squared form used for increment bounds.
pub fn h1_squared_sum(f: &FieldPair) -> f64 {
    h1_component(&f.u, &f.grid).powi(2) + h1_component(&f.v, &f.grid).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct RawParams {
    beta: f64,
    epsilon: f64,
    potential_p: PotentialSpec,
    potential_q: PotentialSpec,
}

/// Coupling `β`, potential strength `ε`, and the two potentials. `γ = √(1−β)`
/// is derived on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct SystemParams {
    beta: f64,
    gamma: f64,
    epsilon: f64,
    potential_p: PotentialSpec,
    potential_q: PotentialSpec,
}

impl TryFrom<RawParams> for SystemParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        SystemParams::new(r.beta, r.epsilon, r.potential_p, r.potential_q)
    }
}

impl From<SystemParams> for RawParams {
    fn from(p: SystemParams) -> Self {
        RawParams {
            beta: p.beta,
            epsilon: p.epsilon,
            potential_p: p.potential_p,
            potential_q: p.potential_q,
        }
    }
}

impl SystemParams {
    pub fn new(
        beta: f64,
        epsilon: f64,
        potential_p: PotentialSpec,
        potential_q: PotentialSpec,
    ) -> Result<Self> {
        if !(beta < 1.0) {
            return Err(Error::Domain(format!("beta must be < 1, got {beta}")));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Domain(format!(
                "epsilon must be finite and >= 0, got {epsilon}"
            )));
        }
        potential_p.validate()?;
        potential_q.validate()?;
        Ok(Self {
            beta,
            gamma: (1.0 - beta).sqrt(),
            epsilon,
            potential_p,
            potential_q,
        })
    }

    /// No potential: `ε = 0`, `P ≡ Q ≡ 0`.
    pub fn free(beta: f64) -> Result<Self> {
        Self::new(beta, 0.0, PotentialSpec::Zero, PotentialSpec::Zero)
    }

    /// Same potential in both equations.
    pub fn symmetric(beta: f64, epsilon: f64, potential: PotentialSpec) -> Result<Self> {
        Self::new(beta, epsilon, potential, potential)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn potential_p(&self) -> &PotentialSpec {
        &self.potential_p
    }

    pub fn potential_q(&self) -> &PotentialSpec {
        &self.potential_q
    }

    pub fn potentials_equal(&self) -> bool {
        self.potential_p == self.potential_q
    }

    /// `(1 + εP, 1 + εQ)` at every node.
    pub fn mass_terms(&self, g: &Grid) -> (Vec<f64>, Vec<f64>) {
        let p = g.sample(|x| 1.0 + self.epsilon * self.potential_p.eval(x, self.gamma));
        let q = if self.potentials_equal() {
            p.clone()
        } else {
            g.sample(|x| 1.0 + self.epsilon * self.potential_q.eval(x, self.gamma))
        };
        (p, q)
    }
}

/// Energy `J(u, v)`. The gradient term is discretised as `−∫u·Δ_h u` so that
/// the discrete gradient of `J` is `−G` under the quadrature weights.
pub fn energy_j(f: &FieldPair, p: &SystemParams) -> f64 {
    let g = &f.grid;
    let (mp, mq) = p.mass_terms(g);
    let lu = laplacian(&f.u, g);
    let lv = laplacian(&f.v, g);
    let terms: Vec<f64> = (0..f.len())
        .map(|i| {
            let (u, v) = (f.u[i], f.v[i]);
            let quadratic = -u * lu[i] + mp[i] * u * u - v * lv[i] + mq[i] * v * v;
            g.weight(i) * (0.5 * quadratic - 0.25 * (u.powi(4) + v.powi(4)) - p.beta * u * v)
        })
        .collect();
    pairwise_sum(&terms)
}

/// `G(u, v) = (Δu − (1+εP)u + u³ + βv, Δv − (1+εQ)v + v³ + βu)`.
pub fn residual_g(f: &FieldPair, p: &SystemParams) -> FieldPair {
    let g = &f.grid;
    let (mp, mq) = p.mass_terms(g);
    let lu = laplacian(&f.u, g);
    let lv = laplacian(&f.v, g);
    residual_from_laplacians(f, p, &mp, &mq, lu, lv)
}

/// [`residual_g`] with exterior values entering through `exterior`, the
/// output of [`Grid::exterior_source`] for each component.
pub fn residual_g_with_exterior(
    f: &FieldPair,
    p: &SystemParams,
    exterior: &FieldPair,
) -> Result<FieldPair> {
    if f.grid != exterior.grid {
        return Err(Error::GridMismatch);
    }
    let g = &f.grid;
    let (mp, mq) = p.mass_terms(g);
    let mut lu = laplacian(&f.u, g);
    let mut lv = laplacian(&f.v, g);
    lu.iter_mut().zip(&exterior.u).for_each(|(a, b)| *a += b);
    lv.iter_mut().zip(&exterior.v).for_each(|(a, b)| *a += b);
    Ok(residual_from_laplacians(f, p, &mp, &mq, lu, lv))
}

fn residual_from_laplacians(
    f: &FieldPair,
    p: &SystemParams,
    mp: &[f64],
    mq: &[f64],
    lu: Vec<f64>,
    lv: Vec<f64>,
) -> FieldPair {
    let g = &f.grid;
    let n = f.len();
    let mut ru = Vec::with_capacity(n);
    let mut rv = Vec::with_capacity(n);
    for i in 0..n {
        let (u, v) = (f.u[i], f.v[i]);
        ru.push(lu[i] - mp[i] * u + u * u * u + p.beta * v);
        rv.push(lv[i] - mq[i] * v + v * v * v + p.beta * u);
    }
    FieldPair {
        grid: *g,
        u: ru,
        v: rv,
    }
}

/// Nodal weight `F(x) = Σ_j e^{−νγ|x − P_j|}` of the `*`-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StarWeight {
    grid: Grid,
    values: Vec<f64>,
}

impl StarWeight {
    pub fn new(grid: Grid, centers: &[Vec<f64>], gamma: f64, nu: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::Configuration(
                "star norm needs at least one center".into(),
            ));
        }
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::Domain(format!("nu must lie in (0, 1), got {nu}")));
        }
        let values = grid.sample(|x| {
            centers
                .iter()
                .map(|c| {
                    let d = x
                        .iter()
                        .zip(c)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    (-nu * gamma * d).exp()
                })
                .sum()
        });
        Ok(Self { grid, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `sup|u/F| + sup|v/F|`.
    pub fn norm(&self, f: &FieldPair) -> Result<f64> {
        if f.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        let sup = |c: &[f64]| {
            c.iter()
                .zip(&self.values)
                .fold(0.0f64, |m, (x, w)| m.max((x / w).abs()))
        };
        Ok(sup(&f.u) + sup(&f.v))
    }
}

/// One-shot weighted sup norm; build a [`StarWeight`] to reuse the weight.
pub fn star_norm(f: &FieldPair, centers: &[Vec<f64>], gamma: f64, nu: f64) -> Result<f64> {
    StarWeight::new(f.grid, centers, gamma, nu)?.norm(f)
}

fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    }
}

/// Radial Simpson quadrature of `∫_{ℝ^N} f(|x|) dx` over `[0, r_cut]`.
pub(crate) fn radial_integral(
    dim: usize,
    r_cut: f64,
    intervals: usize,
    f: impl Fn(f64) -> f64,
) -> f64 {
    let n = intervals + intervals % 2;
    let h = r_cut / n as f64;
    let terms: Vec<f64> = (0..=n)
        .map(|i| {
            let r = i as f64 * h;
            let c = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * f(r) * r.powi(dim as i32 - 1)
        })
        .collect();
    sphere_area(dim) * h / 3.0 * pairwise_sum(&terms)
}

/// Energy `I(U, V)` of the block `(γw(γx), γw(γx))` by radial quadrature.
pub fn energy_i(beta: f64, gs: &GroundState) -> Result<f64> {
    if !(beta < 1.0) {
        return Err(Error::Domain(format!("gamma undefined for beta = {beta}")));
    }
    let gamma = (1.0 - beta).sqrt();
    let r_cut = (gs.r_max() + 15.0) / gamma;
    let density = |r: f64| {
        let u = gamma * gs.eval(gamma * r);
        let du = gamma * gamma * gs.eval_slope(gamma * r);
        // two identical components
        2.0 * (0.5 * du * du + 0.5 * (1.0 - beta) * u * u - 0.25 * u.powi(4))
    };
    Ok(radial_integral(gs.dim(), r_cut, 40_000, density))
}
