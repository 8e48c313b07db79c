//! Linearization around the ansatz, the projected saddle-point solve, and the
//! spectrum of the single-bump linearization.

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Accum, Mat, MatMut, MatRef, Par, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{assemble_ansatz, kernel_elements, Configuration, KernelElement};
use crate::error::{Error, Result};
use crate::field::{laplacian, FieldPair, Grid, StarWeight, SystemParams, DEFAULT_NU};
use crate::ground_state::BlockProfile;

/// Condition estimates above this make the saddle system count as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Eigen-residual tolerance relative to the eigenfield norm.
pub const EIGEN_TOLERANCE: f64 = 1e-6;

/// Residual accepted for eigenpairs whose error interval lies outside the
/// near-kernel band.
pub const LOOSE_EIGEN_TOLERANCE: f64 = 1e-3;

/// The coupled linearization around a synchronized ansatz:
/// `L(φ, ψ) = (Δφ − (1+εP)φ + 3U²φ + βψ, Δψ − (1+εQ)ψ + 3V²ψ + βφ)`.
#[derive(Debug, Clone)]
pub struct Linearization {
    grid: Grid,
    beta: f64,
    diag_u: Vec<f64>,
    diag_v: Vec<f64>,
}

impl Linearization {
    pub fn new(p: &SystemParams, ansatz: &FieldPair) -> Self {
        let (mp, mq) = p.mass_terms(&ansatz.grid);
        Self {
            grid: ansatz.grid,
            beta: p.beta(),
            diag_u: ansatz
                .u
                .iter()
                .zip(&mp)
                .map(|(u, m)| 3.0 * u * u - m)
                .collect(),
            diag_v: ansatz
                .v
                .iter()
                .zip(&mq)
                .map(|(v, m)| 3.0 * v * v - m)
                .collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn apply(&self, f: &FieldPair) -> Result<FieldPair> {
        if f.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        let lu = laplacian(&f.u, &self.grid);
        let lv = laplacian(&f.v, &self.grid);
        let n = f.len();
        let u = (0..n)
            .map(|i| lu[i] + self.diag_u[i] * f.u[i] + self.beta * f.v[i])
            .collect();
        let v = (0..n)
            .map(|i| lv[i] + self.diag_v[i] * f.v[i] + self.beta * f.u[i])
            .collect();
        Ok(FieldPair {
            grid: self.grid,
            u,
            v,
        })
    }

    /// Entries of the `2n × 2n` matrix, unknowns ordered `(φ, ψ)`.
    fn push_triplets(&self, out: &mut Vec<Triplet<usize, usize, f64>>) {
        let n = self.grid.len();
        for i in 0..n {
            for (block, diag) in [(0, &self.diag_u), (n, &self.diag_v)] {
                self.grid.laplacian_row(i, |j, c| {
                    let extra = if j == i { diag[i] } else { 0.0 };
                    out.push(Triplet::new(block + i, block + j, c + extra));
                });
            }
            if self.beta != 0.0 {
                out.push(Triplet::new(i, n + i, self.beta));
                out.push(Triplet::new(n + i, i, self.beta));
            }
        }
    }
}

/// `L(f)` around `ansatz`.
pub fn apply_l(f: &FieldPair, p: &SystemParams, ansatz: &FieldPair) -> Result<FieldPair> {
    if f.grid != ansatz.grid {
        return Err(Error::GridMismatch);
    }
    Linearization::new(p, ansatz).apply(f)
}

/// Result of one projected solve.
#[derive(Debug, Clone)]
pub struct ProjectedSolution {
    pub correction: FieldPair,
    /// `c_jk`, ordered spike-major.
    pub multipliers: Vec<f64>,
    pub star_norm: f64,
    pub rhs_star_norm: f64,
    /// `max_{j,k} |⟨(φ,ψ), D_jk⟩|`.
    pub orthogonality_residual: f64,
    /// Sup norm of `L(φ,ψ) − h − Σ c_jk D_jk`.
    pub linear_residual: f64,
}

impl ProjectedSolution {
    /// `‖(φ,ψ)‖_* / ‖h‖_*`, zero for `h = 0`.
    pub fn stability_ratio(&self) -> f64 {
        if self.rhs_star_norm == 0.0 {
            0.0
        } else {
            self.star_norm / self.rhs_star_norm
        }
    }
}

/// Factored saddle system
/// `[L  −D; DᵀW  0]·[(φ,ψ); c] = [h; 0]`
/// for one configuration; reusable across right-hand sides.
pub struct ProjectedSolver {
    ansatz: FieldPair,
    linearization: Linearization,
    kernel: Vec<KernelElement>,
    star: StarWeight,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    condition_estimate: f64,
}

impl std::fmt::Debug for ProjectedSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProjectedSolver")
            .field("grid", &self.ansatz.grid)
            .field("constraints", &self.kernel.len())
            .field("condition_estimate", &self.condition_estimate)
            .finish()
    }
}

impl ProjectedSolver {
    pub fn new(
        c: &Configuration,
        p: &SystemParams,
        block: &BlockProfile,
        grid: &Grid,
    ) -> Result<Self> {
        Self::with_nu(c, p, block, grid, DEFAULT_NU)
    }

    pub fn with_nu(
        c: &Configuration,
        p: &SystemParams,
        block: &BlockProfile,
        grid: &Grid,
        nu: f64,
    ) -> Result<Self> {
        if (block.gamma() - p.gamma()).abs() > 1e-14 {
            return Err(Error::Domain(
                "block profile and parameters disagree on gamma".into(),
            ));
        }
        let ansatz = assemble_ansatz(c, block, grid)?;
        let kernel = kernel_elements(c, block, grid)?;
        let star = StarWeight::new(*grid, c.centers(), p.gamma(), nu)?;
        let linearization = Linearization::new(p, &ansatz);

        let n = grid.len();
        let size = 2 * n + kernel.len();
        let mut triplets = Vec::new();
        linearization.push_triplets(&mut triplets);
        let unit = grid.spacing().powi(grid.dim() as i32);
        for (col, e) in kernel.iter().enumerate() {
            let row = 2 * n + col;
            for (&i, &d) in e.nodes.iter().zip(&e.values) {
                triplets.push(Triplet::new(i, row, -d));
                triplets.push(Triplet::new(n + i, row, -d));
                let wd = grid.weight(i) / unit * d;
                triplets.push(Triplet::new(row, i, wd));
                triplets.push(Triplet::new(row, n + i, wd));
            }
        }
        let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(size, size, &triplets)
            .map_err(|e| Error::Domain(format!("sparse assembly failed: {e:?}")))?;
        let lu = matrix.sp_lu().map_err(|_| Error::Singular {
            condition_estimate: f64::INFINITY,
        })?;
        let condition_estimate = one_norm(&matrix) * inverse_one_norm_estimate(&lu, size);
        if !condition_estimate.is_finite() || condition_estimate > MAX_CONDITION {
            return Err(Error::Singular { condition_estimate });
        }
        Ok(Self {
            ansatz,
            linearization,
            kernel,
            star,
            lu,
            condition_estimate,
        })
    }

    pub fn ansatz(&self) -> &FieldPair {
        &self.ansatz
    }

    pub fn kernel(&self) -> &[KernelElement] {
        &self.kernel
    }

    pub fn star_weight(&self) -> &StarWeight {
        &self.star
    }

    pub fn linearization(&self) -> &Linearization {
        &self.linearization
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// Raw solve: correction and multipliers, no diagnostics.
    pub fn solve_raw(&self, h: &FieldPair) -> Result<(FieldPair, Vec<f64>)> {
        let grid = self.ansatz.grid;
        if h.grid != grid {
            return Err(Error::GridMismatch);
        }
        let n = grid.len();
        let size = 2 * n + self.kernel.len();
        let rhs = Mat::from_fn(size, 1, |i, _| {
            if i < n {
                h.u[i]
            } else if i < 2 * n {
                h.v[i - n]
            } else {
                0.0
            }
        });
        let x = self.lu.solve(&rhs);
        let u = (0..n).map(|i| x[(i, 0)]).collect();
        let v = (0..n).map(|i| x[(n + i, 0)]).collect();
        let c = (0..self.kernel.len()).map(|k| x[(2 * n + k, 0)]).collect();
        Ok((FieldPair { grid, u, v }, c))
    }

    pub fn solve(&self, h: &FieldPair) -> Result<ProjectedSolution> {
        let (correction, multipliers) = self.solve_raw(h)?;
        let grid = correction.grid;
        let orthogonality_residual = self
            .kernel
            .iter()
            .map(|e| e.inner_with(&grid, &correction).abs())
            .fold(0.0f64, f64::max);
        let mut r = self.linearization.apply(&correction)?.sub(h)?;
        for (e, &c) in self.kernel.iter().zip(&multipliers) {
            for (&i, &d) in e.nodes.iter().zip(&e.values) {
                r.u[i] -= c * d;
                r.v[i] -= c * d;
            }
        }
        Ok(ProjectedSolution {
            star_norm: self.star.norm(&correction)?,
            rhs_star_norm: self.star.norm(h)?,
            orthogonality_residual,
            linear_residual: r.sup_norm(),
            correction,
            multipliers,
        })
    }
}

/// One-shot projected solve; build a [`ProjectedSolver`] to reuse the factorization.
pub fn solve_projected(
    h: &FieldPair,
    c: &Configuration,
    p: &SystemParams,
    block: &BlockProfile,
) -> Result<ProjectedSolution> {
    ProjectedSolver::new(c, p, block, &h.grid)?.solve(h)
}

fn one_norm(m: &SparseColMat<usize, f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        let s: f64 = m.val_of_col(j).iter().map(|v| v.abs()).sum();
        best = best.max(s);
    }
    best
}

/// Hager's estimate of `‖A⁻¹‖₁`.
fn inverse_one_norm_estimate(lu: &faer::sparse::linalg::solvers::Lu<usize, f64>, n: usize) -> f64 {
    let mut x = Mat::from_fn(n, 1, |_, _| 1.0 / n as f64);
    let mut estimate = 0.0;
    for _ in 0..5 {
        let y = lu.solve(&x);
        estimate = (0..n).map(|i| y[(i, 0)].abs()).sum::<f64>();
        if !estimate.is_finite() {
            return f64::INFINITY;
        }
        let xi = Mat::from_fn(n, 1, |i, _| if y[(i, 0)] >= 0.0 { 1.0 } else { -1.0 });
        let z = lu.solve_transpose(&xi);
        let (jmax, zmax) =
            (0..n)
                .map(|i| (i, z[(i, 0)].abs()))
                .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        let ztx: f64 = (0..n).map(|i| z[(i, 0)] * x[(i, 0)]).sum();
        if zmax <= ztx {
            break;
        }
        x = Mat::from_fn(n, 1, |i, _| if i == jmax { 1.0 } else { 0.0 });
    }
    estimate
}

// ---------------------------------------------------------------------------
// Spectrum of the single-bump linearization

/// Which invariant subspace of the component swap an eigenfield lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    /// `η₁ = η₂`
    Symmetric,
    /// `η₁ = −η₂`
    Antisymmetric,
}

/// Top of the spectrum of the coupled linearization around one block.
#[derive(Debug, Clone)]
pub struct EigenReport {
    pub beta: f64,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Normalized under `⟨·,·⟩`, in the order of `eigenvalues`.
    pub eigenfields: Vec<FieldPair>,
    pub sectors: Vec<Sector>,
    pub residuals: Vec<f64>,
    pub kernel_threshold: f64,
    pub kernel_dim: usize,
    /// Smallest `|λ|` among the eigenvalues outside the near-kernel.
    pub gap: f64,
}

#[derive(Serialize)]
struct EigenJson<'a> {
    eigenvalues: &'a [f64],
    kernel_dim: usize,
    gap: f64,
}

impl EigenReport {
    /// `{"eigenvalues": [...], "kernel_dim": n, "gap": g}`
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(EigenJson {
            eigenvalues: &self.eigenvalues,
            kernel_dim: self.kernel_dim,
            gap: self.gap,
        })
        .expect("plain data serializes")
    }

    pub fn positive_count(&self, threshold: f64) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > threshold).count()
    }

    /// Eigenfields with `|λ| ≤ kernel_threshold`.
    pub fn near_kernel(&self) -> Vec<&FieldPair> {
        self.eigenvalues
            .iter()
            .zip(&self.eigenfields)
            .filter(|(l, _)| l.abs() <= self.kernel_threshold)
            .map(|(_, f)| f)
            .collect()
    }
}

/// Scalar operator `Δ + diag(a)` on a grid.
struct ScalarOperator {
    grid: Grid,
    diag: Vec<f64>,
}

impl ScalarOperator {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = laplacian(x, &self.grid);
        for ((yi, d), xi) in y.iter_mut().zip(&self.diag).zip(x) {
            *yi += d * xi;
        }
        y
    }

    /// Lower triangle of `σI − (Δ + diag(a))`.
    fn shifted_lower(&self, sigma: f64) -> Result<SparseColMat<usize, f64>> {
        let n = self.grid.len();
        let mut t = Vec::new();
        for i in 0..n {
            self.grid.laplacian_row(i, |j, c| {
                if j >= i {
                    let v = if j == i { sigma - c - self.diag[i] } else { -c };
                    t.push(Triplet::new(j, i, v));
                }
            });
        }
        SparseColMat::try_new_from_triplets(n, n, &t)
            .map_err(|e| Error::Domain(format!("sparse assembly failed: {e:?}")))
    }
}

struct SectorPairs {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    residuals: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            v.iter_mut().zip(q).for_each(|(x, qi)| *x -= c * qi);
        }
    }
}

fn matmul_seq(
    dst: MatMut<'_, f64>,
    accum: Accum,
    lhs: MatRef<'_, f64>,
    rhs: MatRef<'_, f64>,
    alpha: f64,
) {
    // sequential so that results do not depend on the thread count
    matmul(dst, accum, lhs, rhs, alpha, Par::Seq);
}

/// Orthonormalizes the columns of `z` against the first `cols` columns of `q`
/// and each other, appending the survivors to `q`. Returns the new column count.
fn extend_basis(q: &mut Mat<f64>, cols: usize, mut z: Mat<f64>) -> usize {
    let n = q.nrows();
    let scales: Vec<f64> = (0..z.ncols())
        .map(|j| dot(z.col_as_slice(j), z.col_as_slice(j)).sqrt())
        .collect();
    if cols > 0 {
        for _ in 0..2 {
            let basis = q.as_ref().subcols(0, cols);
            let mut h = Mat::<f64>::zeros(cols, z.ncols());
            matmul_seq(
                h.as_mut(),
                Accum::Replace,
                basis.transpose(),
                z.as_ref(),
                1.0,
            );
            matmul_seq(z.as_mut(), Accum::Add, basis, h.as_ref(), -1.0);
        }
    }
    let first = cols;
    let mut cols = cols;
    for j in 0..z.ncols() {
        if cols == q.ncols() {
            break;
        }
        let mut v = z.col_as_slice(j).to_vec();
        for _ in 0..2 {
            for c in first..cols {
                let qc = q.col_as_slice(c);
                let a = dot(qc, &v);
                v.iter_mut().zip(qc).for_each(|(x, y)| *x -= a * y);
            }
        }
        if normalize(&mut v) > 1e-10 * scales[j] {
            q.col_as_slice_mut(cols)[..n].copy_from_slice(&v);
            cols += 1;
        }
    }
    cols
}

/// Largest `k` eigenpairs of a symmetric scalar operator by block
/// shift-invert Krylov iteration with full reorthogonalization. Stops when
/// every pair is `settled(λ, residual)` or the basis is exhausted; the caller
/// judges pairs that did not settle.
fn top_eigenpairs(
    op: &ScalarOperator,
    k: usize,
    sigma: f64,
    seed: u64,
    settled: impl Fn(f64, f64) -> bool,
) -> Result<SectorPairs> {
    let n = op.grid.len();
    let k = k.min(n);
    let block = (k + 2).min(n);
    let max_dim = n.min(60 * block).min(400);
    let llt = op
        .shifted_lower(sigma)?
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::Domain(format!("shifted operator not positive definite: {e:?}")))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start = Mat::<f64>::zeros(n, block);
    for j in 0..block {
        for x in start.col_as_slice_mut(j) {
            *x = rng.random_range(-1.0..1.0);
        }
    }
    let mut q = Mat::<f64>::zeros(n, max_dim);
    let mut cols = extend_basis(&mut q, 0, start);
    // t = Qᵀ (σI − A)⁻¹ Q over processed columns
    let mut t = Mat::<f64>::zeros(max_dim, max_dim);
    let mut processed = 0;
    let mut last: Option<SectorPairs> = None;
    while cols > processed {
        let fresh = cols - processed;
        let z = llt.solve(q.as_ref().subcols(processed, fresh));
        let mut c = Mat::<f64>::zeros(cols, fresh);
        matmul_seq(
            c.as_mut(),
            Accum::Replace,
            q.as_ref().subcols(0, cols).transpose(),
            z.as_ref(),
            1.0,
        );
        for j in 0..fresh {
            for i in 0..=processed + j {
                t[(i, processed + j)] = c[(i, j)];
                t[(processed + j, i)] = c[(i, j)];
            }
        }
        processed = cols;
        cols = extend_basis(&mut q, cols, z);

        if processed < k {
            continue;
        }
        let eig = t
            .as_ref()
            .submatrix(0, 0, processed, processed)
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Domain(format!("dense eigensolve failed: {e:?}")))?;
        let theta = eig.S().column_vector();
        let s = eig.U();
        let top = Mat::from_fn(processed, k, |i, r| s[(i, processed - 1 - r)]);
        let mut y = Mat::<f64>::zeros(n, k);
        matmul_seq(
            y.as_mut(),
            Accum::Replace,
            q.as_ref().subcols(0, processed),
            top.as_ref(),
            1.0,
        );
        let mut values = Vec::with_capacity(k);
        let mut vectors = Vec::with_capacity(k);
        let mut residuals = Vec::with_capacity(k);
        for r in 0..k {
            let mut v = y.col_as_slice(r).to_vec();
            normalize(&mut v);
            let lambda = sigma - 1.0 / theta[processed - 1 - r];
            let av = op.apply(&v);
            let res = av
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - lambda * b).powi(2))
                .sum::<f64>()
                .sqrt();
            values.push(lambda);
            vectors.push(v);
            residuals.push(res);
        }
        let done = values.iter().zip(&residuals).all(|(&l, &r)| settled(l, r));
        last = Some(SectorPairs {
            values,
            vectors,
            residuals,
        });
        if done {
            break;
        }
    }
    last.ok_or_else(|| Error::EigenNonConvergence {
        worst_residual: f64::NAN,
        residuals: Vec::new(),
    })
}

/// Top `k` eigenpairs of the coupled linearization
/// `(Δη₁ − η₁ + 3U²η₁ + βη₂, Δη₂ − η₂ + 3V²η₂ + βη₁)` around a single block at
/// the origin. Because `U = V`, the operator preserves the symmetric and
/// antisymmetric sectors, where it acts as `Δ − 1 ± β + 3U²`.
pub fn linearized_spectrum(
    beta: f64,
    block: &BlockProfile,
    g: &Grid,
    k: usize,
) -> Result<EigenReport> {
    if !(beta < 1.0) {
        return Err(Error::Domain(format!("beta must be < 1, got {beta}")));
    }
    if (block.gamma() - (1.0 - beta).sqrt()).abs() > 1e-14 {
        return Err(Error::Domain(
            "block profile was built for a different beta".into(),
        ));
    }
    if block.dim() != g.dim() {
        return Err(Error::Domain("grid and profile dimensions differ".into()));
    }
    if k < g.dim() + 2 {
        return Err(Error::Domain(format!("need k >= {}, got {k}", g.dim() + 2)));
    }
    let u2: Vec<f64> = g
        .sample(|x| block.value(x.iter().map(|c| c * c).sum::<f64>().sqrt()))
        .into_iter()
        .map(|u| u * u)
        .collect();
    let max_u2 = u2.iter().copied().fold(0.0, f64::max);
    let sigma = 3.0 * max_u2 + beta.abs() + 1.0;

    let unit = g.spacing().powi(g.dim() as i32);
    let threshold = 10.0 * g.spacing() * g.spacing();
    // A Ritz pair with residual r has an eigenvalue within r, so a loose pair
    // is harmless once its interval clears the kernel band.
    let clears_band = |l: f64, r: f64| r <= LOOSE_EIGEN_TOLERANCE && l.abs() - r > threshold;
    let mut pairs: Vec<(f64, FieldPair, Sector, f64)> = Vec::new();
    for (sector, sign, seed) in [
        (Sector::Symmetric, 1.0, 0x5eed_0001),
        (Sector::Antisymmetric, -1.0, 0x5eed_0002),
    ] {
        let op = ScalarOperator {
            grid: *g,
            diag: u2.iter().map(|a| 3.0 * a - 1.0 + sign * beta).collect(),
        };
        let sp = top_eigenpairs(&op, k, sigma, seed, |l, r| {
            r <= EIGEN_TOLERANCE || clears_band(l, r)
        })?;
        for ((lambda, y), res) in sp.values.into_iter().zip(sp.vectors).zip(sp.residuals) {
            // unit Euclidean vector → unit field under the uniform-weight inner product
            let c = 1.0 / (2.0 * unit).sqrt();
            let a: Vec<f64> = y.iter().map(|x| c * x).collect();
            let b: Vec<f64> = a.iter().map(|x| sign * x).collect();
            pairs.push((
                lambda,
                FieldPair {
                    grid: *g,
                    u: a,
                    v: b,
                },
                sector,
                res,
            ));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs.truncate(k);

    let undecided = pairs
        .iter()
        .any(|p| p.3 > EIGEN_TOLERANCE && !clears_band(p.0, p.3));
    if undecided {
        let residuals: Vec<f64> = pairs.iter().map(|p| p.3).collect();
        return Err(Error::EigenNonConvergence {
            worst_residual: residuals.iter().copied().fold(0.0, f64::max),
            residuals,
        });
    }
    let kernel_dim = pairs.iter().filter(|p| p.0.abs() <= threshold).count();
    let gap = pairs
        .iter()
        .filter(|p| p.0.abs() > threshold)
        .map(|p| p.0.abs())
        .fold(f64::INFINITY, f64::min);
    let mut report = EigenReport {
        beta,
        eigenvalues: Vec::with_capacity(k),
        eigenfields: Vec::with_capacity(k),
        sectors: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
        kernel_threshold: threshold,
        kernel_dim,
        gap,
    };
    for (l, f, s, r) in pairs {
        report.eigenvalues.push(l);
        report.eigenfields.push(f);
        report.sectors.push(s);
        report.residuals.push(r);
    }
    Ok(report)
}

/// Dimension of the near-kernel and its principal angles to the translation span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub beta: f64,
    pub dim: usize,
    pub kernel_dim: usize,
    pub kernel_threshold: f64,
    /// Principal angles (radians), ascending.
    pub angles: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub passed: bool,
}

/// Principal angles between two subspaces under the uniform-weight inner product.
pub fn principal_angles(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<f64> {
    let ortho = |vs: &[Vec<f64>]| {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for v in vs {
            let mut w = v.clone();
            orthogonalize(&mut w, &out);
            if normalize(&mut w) > 1e-12 {
                out.push(w);
            }
        }
        out
    };
    let (qa, qb) = (ortho(a), ortho(b));
    if qa.is_empty() || qb.is_empty() {
        return Vec::new();
    }
    let (small, large) = if qa.len() <= qb.len() {
        (&qa, &qb)
    } else {
        (&qb, &qa)
    };
    let m: Vec<Vec<f64>> = small
        .iter()
        .map(|s| large.iter().map(|l| dot(s, l)).collect())
        .collect();
    let gram = Mat::from_fn(small.len(), small.len(), |i, j| dot(&m[i], &m[j]));
    let eig = gram
        .self_adjoint_eigen(Side::Lower)
        .expect("small symmetric eigensolve");
    let cos2 = eig.S().column_vector();
    let mut angles: Vec<f64> = (0..small.len())
        .map(|i| cos2[i].clamp(0.0, 1.0).sqrt().acos())
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
}

/// Checks that the near-kernel of the single-bump linearization is exactly
/// the translation span.
pub fn nondegeneracy_check(
    beta: f64,
    block: &BlockProfile,
    g: &Grid,
) -> Result<NondegeneracyReport> {
    let n = g.dim();
    let report = linearized_spectrum(beta, block, g, 2 * n + 4)?;
    let kernel: Vec<Vec<f64>> = report
        .near_kernel()
        .into_iter()
        .map(|f| f.u.iter().chain(&f.v).copied().collect())
        .collect();
    let translations: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let d = g.sample(|x| block.value_and_gradient(x).1[k]);
            d.iter().chain(&d).copied().collect()
        })
        .collect();
    let angles = principal_angles(&kernel, &translations);
    let passed = report.kernel_dim == n && angles.len() == n && angles.iter().all(|&a| a < 1e-2);
    Ok(NondegeneracyReport {
        beta,
        dim: n,
        kernel_dim: report.kernel_dim,
        kernel_threshold: report.kernel_threshold,
        angles,
        eigenvalues: report.eigenvalues,
        passed,
    })
}

/// Non-degeneracy over a list of couplings; each `β` gets its own block.
pub fn beta_sweep(
    betas: &[f64],
    ground: &std::sync::Arc<crate::ground_state::GroundState>,
    g: &Grid,
) -> Result<Vec<NondegeneracyReport>> {
    betas
        .iter()
        .map(|&b| {
            let block = crate::ground_state::build_block(ground.clone(), b)?;
            nondegeneracy_check(b, &block, g)
        })
        .collect()
}

/// Scanning negative couplings from zero downward, the first one with an extra
/// near-zero eigenvalue together with its non-degenerate neighbour.
pub fn degeneracy_bracket(reports: &[NondegeneracyReport]) -> Option<(f64, f64)> {
    let mut negative: Vec<&NondegeneracyReport> = reports.iter().filter(|r| r.beta < 0.0).collect();
    negative.sort_by(|a, b| b.beta.total_cmp(&a.beta));
    let mut previous: Option<f64> = None;
    for r in negative {
        if r.kernel_dim > r.dim {
            return Some((r.beta, previous.unwrap_or(0.0)));
        }
        previous = Some(r.beta);
    }
    None
}
