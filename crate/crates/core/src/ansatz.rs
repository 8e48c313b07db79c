//! Spike configurations, potentials, the multi-bump ansatz, cutoffs and the
//! approximate kernel basis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldPair, Grid};
use crate::ground_state::BlockProfile;

/// Distance, in units of `1/γ`, kept between every center and the box edge.
pub const TRUNCATION_MARGIN: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawConfiguration {
    dim: usize,
    mu: f64,
    centers: Vec<Vec<f64>>,
}

/// Spike centers `P_1..P_m` in `ℝ^N` together with the separation parameter `μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfiguration", into = "RawConfiguration")]
pub struct Configuration {
    dim: usize,
    mu: f64,
    centers: Vec<Vec<f64>>,
}

impl TryFrom<RawConfiguration> for Configuration {
    type Error = Error;

    fn try_from(r: RawConfiguration) -> Result<Self> {
        Configuration::new(r.dim, r.mu, r.centers)
    }
}

impl From<Configuration> for RawConfiguration {
    fn from(c: Configuration) -> Self {
        RawConfiguration {
            dim: c.dim,
            mu: c.mu,
            centers: c.centers,
        }
    }
}

impl Configuration {
    pub fn new(dim: usize, mu: f64, centers: Vec<Vec<f64>>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Configuration(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Configuration(format!(
                "mu must be positive, got {mu}"
            )));
        }
        if centers.is_empty() {
            return Err(Error::Configuration(
                "at least one center is required".into(),
            ));
        }
        for (j, c) in centers.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::Configuration(format!(
                    "center {j} has {} coordinates, expected {dim}",
                    c.len()
                )));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::Configuration(format!("center {j} is not finite")));
            }
        }
        Ok(Self { dim, mu, centers })
    }

    /// One-dimensional configuration from scalar positions.
    pub fn on_line(mu: f64, positions: &[f64]) -> Result<Self> {
        Self::new(1, mu, positions.iter().map(|&p| vec![p]).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Same `μ`, centers replaced.
    pub fn with_centers(&self, centers: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.dim, self.mu, centers)
    }

    /// Centers of both configurations (the `μ` of `self` is kept).
    pub fn union(&self, other: &Configuration) -> Result<Self> {
        let mut centers = self.centers.clone();
        centers.extend(other.centers.iter().cloned());
        Self::new(self.dim, self.mu, centers)
    }

    pub fn with_center(&self, p: Vec<f64>) -> Result<Self> {
        let mut centers = self.centers.clone();
        centers.push(p);
        Self::new(self.dim, self.mu, centers)
    }

    pub fn translated(&self, t: &[f64]) -> Result<Self> {
        let centers = self
            .centers
            .iter()
            .map(|c| c.iter().zip(t).map(|(a, b)| a + b).collect())
            .collect();
        Self::new(self.dim, self.mu, centers)
    }

    /// Flattened coordinates `P_1, P_2, …`.
    pub fn flat(&self) -> Vec<f64> {
        self.centers.iter().flatten().copied().collect()
    }

    pub fn from_flat(&self, x: &[f64]) -> Result<Self> {
        Self::new(
            self.dim,
            self.mu,
            x.chunks(self.dim).map(|c| c.to_vec()).collect(),
        )
    }

    /// Smallest pairwise distance and the pair attaining it (`None` for m = 1).
    pub fn min_separation(&self) -> Option<(f64, usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for j in 0..self.len() {
            for k in j + 1..self.len() {
                let d = distance(&self.centers[j], &self.centers[k]);
                if best.is_none_or(|(b, _, _)| d < b) {
                    best = Some((d, j, k));
                }
            }
        }
        best
    }

    /// Largest absolute coordinate over all centers.
    pub fn max_abs_coordinate(&self) -> f64 {
        self.centers
            .iter()
            .flatten()
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Half width required by the truncation rule.
    pub fn required_half_width(&self, gamma: f64) -> f64 {
        self.max_abs_coordinate() + TRUNCATION_MARGIN / gamma
    }

    /// Errors if some center is closer than `TRUNCATION_MARGIN/γ` to the box edge.
    pub fn check_truncation(&self, g: &Grid, gamma: f64) -> Result<()> {
        let margin = TRUNCATION_MARGIN / gamma;
        for (j, c) in self.centers.iter().enumerate() {
            let worst = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if worst + margin > g.half_width() * (1.0 + 1e-12) {
                return Err(Error::Truncation {
                    center: j,
                    required_half_width: self.required_half_width(gamma),
                });
            }
        }
        Ok(())
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Outcome of the separation check `min |P_j − P_k| ≥ μ/γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub required_separation: f64,
    pub min_separation: Option<f64>,
    /// `min_separation − μ/γ`; `None` for a single spike.
    pub margin: Option<f64>,
    pub violating_pair: Option<(usize, usize)>,
}

pub fn validate_configuration(c: &Configuration, gamma: f64) -> ValidityReport {
    let required = c.mu / gamma;
    match c.min_separation() {
        None => ValidityReport {
            valid: true,
            required_separation: required,
            min_separation: None,
            margin: None,
            violating_pair: None,
        },
        Some((d, j, k)) => {
            let margin = d - required;
            let valid = margin >= -1e-12 * required;
            ValidityReport {
                valid,
                required_separation: required,
                min_separation: Some(d),
                margin: Some(margin),
                violating_pair: (!valid).then_some((j, k)),
            }
        }
    }
}

/// Radial potential centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum PotentialSpec {
    Zero,
    /// `a·(1 + |x|²)^{−k/2}`
    Polynomial {
        a: f64,
        k: f64,
    },
    /// `a·e^{−αγ|x|}`
    Exponential {
        a: f64,
        alpha: f64,
    },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Polynomial { a: 1.0, k: 3.0 }
    }
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PotentialSpec::Zero => true,
            PotentialSpec::Polynomial { a, k } => {
                a >= 0.0 && a.is_finite() && k > 0.0 && k.is_finite()
            }
            PotentialSpec::Exponential { a, alpha } => {
                a >= 0.0 && a.is_finite() && alpha > 0.0 && alpha.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid potential {self:?}")))
        }
    }

    pub fn radial(&self, r: f64, gamma: f64) -> f64 {
        match *self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Polynomial { a, k } => a * (1.0 + r * r).powf(-k / 2.0),
            PotentialSpec::Exponential { a, alpha } => a * (-alpha * gamma * r).exp(),
        }
    }

    pub fn eval(&self, x: &[f64], gamma: f64) -> f64 {
        self.radial(x.iter().map(|c| c * c).sum::<f64>().sqrt(), gamma)
    }

    /// Decay to zero at infinity, checked on radii `10^1 … 10^6`.
    pub fn satisfies_k1(&self, gamma: f64) -> bool {
        let vals: Vec<f64> = (1..=6).map(|e| self.radial(10f64.powi(e), gamma)).collect();
        vals.windows(2).all(|w| w[1] <= w[0]) && vals[5] < 1e-6 * vals[0].max(1e-300)
            || vals.iter().all(|&v| v == 0.0)
    }
}

/// Growth of `γ²(P+Q)(r)·e^{αγr}`, checked as strict increase on `r ∈ {10, 20, 30}`.
pub fn satisfies_k2(p: &PotentialSpec, q: &PotentialSpec, alpha: f64, gamma: f64) -> bool {
    let f = |r: f64| {
        gamma * gamma * (p.radial(r, gamma) + q.radial(r, gamma)) * (alpha * gamma * r).exp()
    };
    let vals = [f(10.0), f(20.0), f(30.0)];
    vals[0] > 0.0 && vals[0] < vals[1] && vals[1] < vals[2]
}

/// Radial cutoff around a spike: 1 inside `(μ−1)/(2γ)`, 0 beyond
/// `μ²/(2γ(μ+1))`, quintic smoothstep in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    inner: f64,
    outer: f64,
}

impl Cutoff {
    pub fn new(mu: f64, gamma: f64) -> Result<Self> {
        if !(mu > 2.0) {
            return Err(Error::Domain(format!("cutoff needs mu > 2, got {mu}")));
        }
        Ok(Self {
            inner: (mu - 1.0) / (2.0 * gamma),
            outer: mu * mu / (2.0 * gamma * (mu + 1.0)),
        })
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.inner {
            1.0
        } else if r >= self.outer {
            0.0
        } else {
            let s = (self.outer - r) / (self.outer - self.inner);
            s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
        }
    }
}

pub fn cutoff_zeta(x: &[f64], pj: &[f64], mu: f64, gamma: f64) -> Result<f64> {
    Ok(Cutoff::new(mu, gamma)?.value(distance(x, pj)))
}

fn check_dims(c: &Configuration, block: &BlockProfile, g: &Grid) -> Result<()> {
    if c.dim() != g.dim() || block.dim() != g.dim() {
        return Err(Error::Configuration(format!(
            "dimension mismatch: configuration {}, profile {}, grid {}",
            c.dim(),
            block.dim(),
            g.dim()
        )));
    }
    Ok(())
}

/// Scalar superposition `Σ_j U(x − P_j)` at every node.
pub fn ansatz_component(c: &Configuration, block: &BlockProfile, g: &Grid) -> Result<Vec<f64>> {
    check_dims(c, block, g)?;
    c.check_truncation(g, block.gamma())?;
    Ok(g.sample(|x| {
        c.centers()
            .iter()
            .map(|p| block.value(distance(x, p)))
            .sum()
    }))
}

/// The synchronized ansatz `(Σ_j U_{P_j}, Σ_j V_{P_j})`.
pub fn assemble_ansatz(c: &Configuration, block: &BlockProfile, g: &Grid) -> Result<FieldPair> {
    Ok(FieldPair::symmetric(*g, ansatz_component(c, block, g)?))
}

/// Laplacian source from the ansatz continued outside the box. The
/// corrected field `U + φ` takes exterior values `U` while `φ` vanishes
/// there.
pub fn ansatz_exterior(c: &Configuration, block: &BlockProfile, g: &Grid) -> Result<FieldPair> {
    check_dims(c, block, g)?;
    let src = g.exterior_source(|x| {
        c.centers()
            .iter()
            .map(|p| block.value(distance(x, p)))
            .sum()
    });
    Ok(FieldPair::symmetric(*g, src))
}

/// One basis element `∂U_{P_j}/∂x_k · ζ_j` stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelElement {
    pub spike: usize,
    pub axis: usize,
    /// Node indices inside the cutoff ball, ascending.
    pub nodes: Vec<usize>,
    /// Scalar value at those nodes (both components carry it).
    pub values: Vec<f64>,
}

impl KernelElement {
    pub fn to_field(&self, g: Grid) -> FieldPair {
        let mut f = vec![0.0; g.len()];
        for (&i, &v) in self.nodes.iter().zip(&self.values) {
            f[i] = v;
        }
        FieldPair::symmetric(g, f)
    }

    /// `⟨D, (u, v)⟩` with trapezoidal weights.
    pub fn inner_with(&self, g: &Grid, f: &FieldPair) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.values)
            .map(|(&i, &d)| g.weight(i) * d * (f.u[i] + f.v[i]))
            .collect();
        crate::field::pairwise_sum(&terms)
    }
}

/// Approximate kernel basis, ordered spike-major (`j·N + k`).
pub fn kernel_elements(
    c: &Configuration,
    block: &BlockProfile,
    g: &Grid,
) -> Result<Vec<KernelElement>> {
    check_dims(c, block, g)?;
    let cutoff = Cutoff::new(c.mu(), block.gamma())?;
    let n = g.dim();
    let mut out = Vec::with_capacity(c.len() * n);
    for (j, p) in c.centers().iter().enumerate() {
        let mut nodes = Vec::new();
        let mut grads: Vec<[f64; 3]> = Vec::new();
        for idx in 0..g.len() {
            let x = g.point(idx);
            let y: Vec<f64> = x[..n].iter().zip(p).map(|(a, b)| a - b).collect();
            let r = y.iter().map(|t| t * t).sum::<f64>().sqrt();
            let z = cutoff.value(r);
            if z == 0.0 {
                continue;
            }
            let (_, grad) = block.value_and_gradient(&y);
            nodes.push(idx);
            grads.push([grad[0] * z, grad[1] * z, grad[2] * z]);
        }
        for k in 0..n {
            out.push(KernelElement {
                spike: j,
                axis: k,
                nodes: nodes.clone(),
                values: grads.iter().map(|gr| gr[k]).collect(),
            });
        }
    }
    Ok(out)
}

/// Dense form of [`kernel_elements`].
pub fn kernel_basis(c: &Configuration, block: &BlockProfile, g: &Grid) -> Result<Vec<FieldPair>> {
    Ok(kernel_elements(c, block, g)?
        .iter()
        .map(|e| e.to_field(*g))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::inner;
    use crate::ground_state::{build_block, solve_ground_state};
    use approx::assert_relative_eq;
    use std::sync::{Arc, OnceLock};

    fn block(dim: usize, beta: f64) -> BlockProfile {
        static GS: OnceLock<Vec<Arc<crate::ground_state::GroundState>>> = OnceLock::new();
        let all = GS.get_or_init(|| {
            (1..=2)
                .map(|d| Arc::new(solve_ground_state(d, 1e-7).unwrap()))
                .collect()
        });
        build_block(all[dim - 1].clone(), beta).unwrap()
    }

    #[test]
    fn validity_boundary_cases() {
        let gamma = 0.5f64.sqrt();
        let mu = 10.0;
        let single = Configuration::on_line(mu, &[3.0]).unwrap();
        assert!(validate_configuration(&single, gamma).valid);
        let exact = Configuration::on_line(mu, &[0.0, mu / gamma]).unwrap();
        assert!(validate_configuration(&exact, gamma).valid);
        let h = 0.05;
        let close = Configuration::on_line(mu, &[0.0, mu / gamma - h]).unwrap();
        let rep = validate_configuration(&close, gamma);
        assert!(!rep.valid);
        assert_eq!(rep.violating_pair, Some((0, 1)));
        assert!((rep.margin.unwrap() + h).abs() < 1e-12);
    }

    #[test]
    fn configuration_json_shape() {
        let c = Configuration::new(2, 10.0, vec![vec![0.0, 1.0], vec![20.0, -1.0]]).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(
            s,
            r#"{"dim":2,"mu":10.0,"centers":[[0.0,1.0],[20.0,-1.0]]}"#
        );
        assert_eq!(serde_json::from_str::<Configuration>(&s).unwrap(), c);
        assert!(
            serde_json::from_str::<Configuration>(r#"{"dim":2,"mu":10.0,"centers":[[0.0]]}"#)
                .is_err()
        );
    }

    #[test]
    fn potential_json_and_decay_conditions() {
        let p: PotentialSpec =
            serde_json::from_str(r#"{"family":"polynomial","a":1.0,"k":3.0}"#).unwrap();
        assert_eq!(p, PotentialSpec::default());
        let gamma = 0.5f64.sqrt();
        assert!(p.satisfies_k1(gamma));
        assert!(satisfies_k2(&p, &p, 0.5, gamma));
        let slow = PotentialSpec::Exponential { a: 1.0, alpha: 0.3 };
        let fast = PotentialSpec::Exponential { a: 1.0, alpha: 0.7 };
        assert!(satisfies_k2(&slow, &slow, 0.5, gamma));
        assert!(!satisfies_k2(&fast, &fast, 0.5, gamma));
        assert!(!satisfies_k2(
            &PotentialSpec::Zero,
            &PotentialSpec::Zero,
            0.5,
            gamma
        ));
        assert!(PotentialSpec::Polynomial { a: -1.0, k: 3.0 }
            .validate()
            .is_err());
    }

    #[test]
    fn cutoff_plateaus_and_monotonicity() {
        let (mu, gamma) = (10.0, 0.8);
        let c = Cutoff::new(mu, gamma).unwrap();
        assert_eq!(cutoff_zeta(&[1.0], &[1.0], mu, gamma).unwrap(), 1.0);
        assert_eq!(c.value(mu * mu / (2.0 * gamma * (mu + 1.0))), 0.0);
        assert_eq!(c.value((mu - 1.0) / (2.0 * gamma)), 1.0);
        let mid = c.value(0.5 * (c.inner_radius() + c.outer_radius()));
        assert!(mid > 0.0 && mid < 1.0);
        let rs: Vec<f64> = (0..=100)
            .map(|i| c.inner_radius() + (c.outer_radius() - c.inner_radius()) * i as f64 / 100.0)
            .collect();
        assert!(rs.windows(2).all(|w| c.value(w[1]) <= c.value(w[0])));
        assert!(Cutoff::new(2.0, 1.0).is_err());
    }

    #[test]
    fn single_spike_and_midpoint_values() {
        let b = block(1, 0.5);
        let g = Grid::new(1, 30.0, 1201).unwrap();
        let c = Configuration::on_line(10.0, &[0.0]).unwrap();
        let f = assemble_ansatz(&c, &b, &g).unwrap();
        assert_relative_eq!(f.u[600], b.gamma() * 2f64.sqrt(), epsilon = 1e-10);
        assert_eq!(f.u, f.v);

        let b0 = block(1, 0.0);
        let g = Grid::new(1, 25.0, 1001).unwrap();
        let two = Configuration::on_line(10.0, &[-5.0, 5.0]).unwrap();
        let f = assemble_ansatz(&two, &b0, &g).unwrap();
        let expected = 2.0 * 2.0 * 2f64.sqrt() * (-5.0f64).exp();
        assert_relative_eq!(f.u[500], expected, max_relative = 1e-4);
    }

    #[test]
    fn ansatz_is_additive_and_checks_truncation() {
        let b = block(1, 0.5);
        let g = Grid::new(1, 60.0, 2401).unwrap();
        let c1 = Configuration::on_line(10.0, &[-10.0]).unwrap();
        let c2 = Configuration::on_line(10.0, &[8.0, 25.0]).unwrap();
        let joint = assemble_ansatz(&c1.union(&c2).unwrap(), &b, &g).unwrap();
        let sum = assemble_ansatz(&c1, &b, &g)
            .unwrap()
            .add(&assemble_ansatz(&c2, &b, &g).unwrap())
            .unwrap();
        for (a, s) in joint.u.iter().zip(&sum.u) {
            assert!((a - s).abs() < 1e-14);
        }
        let far = Configuration::on_line(10.0, &[50.0]).unwrap();
        match assemble_ansatz(&far, &b, &g) {
            Err(Error::Truncation {
                center: 0,
                required_half_width,
            }) => {
                assert_relative_eq!(
                    required_half_width,
                    50.0 + 15.0 / b.gamma(),
                    epsilon = 1e-12
                )
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn kernel_basis_norms_supports_and_orthogonality() {
        let b = block(1, 0.0);
        let g = Grid::new(1, 30.0, 3001).unwrap();
        let mu = 10.0;
        let c = Configuration::on_line(mu, &[-6.0, 6.0]).unwrap();
        let d = kernel_basis(&c, &b, &g).unwrap();
        assert_eq!(d.len(), 2);
        let nrm = inner(&d[0], &d[0]).unwrap();
        assert!((nrm / (2.0 * 4.0 / 3.0) - 1.0).abs() < 0.01, "{nrm}");
        assert_eq!(inner(&d[0], &d[1]).unwrap(), 0.0);
        let outer = Cutoff::new(mu, b.gamma()).unwrap().outer_radius();
        for (j, dj) in d.iter().enumerate() {
            for i in 0..g.len() {
                if distance(&g.point(i)[..1], &c.centers()[j]) >= outer {
                    assert_eq!(dj.u[i], 0.0);
                    assert_eq!(dj.v[i], 0.0);
                }
            }
            assert_eq!(dj.u, dj.v);
        }
    }

    #[test]
    fn kernel_basis_in_two_dimensions_is_axis_orthogonal() {
        let b = block(2, 0.5);
        let g = Grid::new(2, 25.0, 201).unwrap();
        let c = Configuration::new(2, 6.0, vec![vec![0.0, 0.0]]).unwrap();
        let d = kernel_basis(&c, &b, &g).unwrap();
        assert_eq!(d.len(), 2);
        let cross = inner(&d[0], &d[1]).unwrap();
        let diag = inner(&d[0], &d[0]).unwrap();
        assert!(cross.abs() < 1e-10 * diag, "{cross} vs {diag}");
        assert_relative_eq!(diag, inner(&d[1], &d[1]).unwrap(), max_relative = 1e-10);
    }
}
