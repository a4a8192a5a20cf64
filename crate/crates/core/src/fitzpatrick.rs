//! Finite monotone graphs in `R^d × R^d` and their maximal extensions.
//!
//! A finite graph `A = {(x_k, v_k)}` is monotone when
//! `⟨v_i − v_j, x_i − x_j⟩ ≥ 0` for all pairs. Three convex functions on
//! `Z = R^d × R^d` organize its extensions:
//!
//! * the Fitzpatrick function, a finite max of affine pieces:
//!   `F(x, v) = max_k ⟨v_k, x⟩ + ⟨v, x_k⟩ − ⟨v_k, x_k⟩`;
//! * the Penot function `P(v, x)`, the value of the simplex LP
//!   `min Σ λ_k ⟨v_k, x_k⟩` over `λ ≥ 0, Σλ = 1, Σ λ_k (x_k, v_k) = (x, v)`
//!   (`+∞` outside the convex hull of the graph in `Z`);
//! * the restricted function `f = F + ι_C` with `C = D × R^d`,
//!   `D = conv{x_k}`, whose conjugate is the inf-convolution
//!   `f*(v, x) = inf { P(v₁, x) + σ_D(v₂) : v₁ + v₂ = v }` with
//!   `σ_D(w) = max_k ⟨w, x_k⟩`.
//!
//! The kernel average of `f` with a self-dual kernel `ψ`,
//!
//! ```text
//! R(x, v) = min { ½ f(x₁, v₁) + ½ f*(v₂, x₂) + ¼ ψ(x₁ − x₂, v₁ − v₂)
//!                 :  (x, v) = ½ (x₁ + x₂, v₁ + v₂) }
//! ```
//!
//! is self-dual, sandwiched between `F` and `P∘switch`, and its contact set
//! `{R(x, v) = ⟨v, x⟩}` is a maximal monotone extension of the graph whose
//! domain stays inside `D`.
//!
//! # Joint program assembly
//!
//! For the quadratic kernel `ψ(x, v) = ½|x|² + ½|v|²` the minimization above
//! is one convex QP. With variables `z₁ = (x₁, v₁)`, `z₂ = (x₂, v₂)`,
//! epigraph scalars `s, u`, hull weights `α`, simplex weights `β` and the
//! split variable `w₂`:
//!
//! * `f(z₁)` appears positively, so `F(z₁) ≤ s` is enforced by one affine row
//!   per graph pair, `⟨v_k, x₁⟩ + ⟨x_k, v₁⟩ − s ≤ ⟨v_k, x_k⟩`, and the
//!   membership `x₁ ∈ D` by `x₁ = Σ α_k x_k`, `α ≥ 0`, `Σα = 1`;
//! * `f*(v₂, x₂)` is itself an inf, so its structure is inlined rather than
//!   nested: `x₂ = Σ β_k x_k`, `Σβ = 1`, `β ≥ 0` carry the inner LP, the
//!   split `v₂ = Σ β_k v_k + w₂` introduces the support-function argument,
//!   and `⟨w₂, x_k⟩ ≤ u` bounds it; the contribution to the objective is
//!   `Σ β_k ⟨v_k, x_k⟩ + u`;
//! * the kernel contributes the PSD quadratic `⅛|x₁ − x₂|² + ⅛|v₁ − v₂|²`;
//! * the averaging rows `x₁ + x₂ = 2x`, `v₁ + v₂ = 2v` close the system.
//!
//! Because the inlined blocks appear with positive sign inside a
//! minimization, the QP optimum equals the nested evaluation exactly; the
//! test suite cross-checks this against standalone `F`/`f*` oracles on
//! random instances.
//!
//! The resolvent `J_τ(y)` of the extension solves `x + τ·Ã(x) ∋ y`. By the
//! contact characterization this is the unique minimizer of
//! `Φ(x) = R(x, (y−x)/τ) − ⟨(y−x)/τ, x⟩ ≥ 0`, whose optimal value is zero.
//! Substituting `v = (y−x)/τ` turns the bilinear term `−⟨v, x⟩` into
//! `(|x|² − ⟨y, x⟩)/τ`, so the whole problem stays one convex QP in
//! `(z₁, z₂, x, …)` with the extra rows `x₁ + x₂ = 2x` and
//! `(τ/2)(v₁ + v₂) + x = y`.

use crate::error::{Error, Result};
use crate::linalg::{dist, dot, norm, sub, Mat, Vector};
use crate::optkit::{
    hull_membership, solve_lp, solve_qp, Bounds, LinearProgram, QuadraticProgram, SolveStatus,
};
use crate::par;
use serde::{Deserialize, Serialize};

const MONOTONE_TOL: f64 = 1e-10;

/// Outcome of a monotonicity scan over all index pairs.
#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub monotone: bool,
    /// minimum of `⟨v_i − v_j, x_i − x_j⟩` over pairs (`+∞` for < 2 pairs)
    pub min_pairing: f64,
    pub worst_pair: Option<(usize, usize)>,
}

/// Scans all pairs for the monotonicity inequality, reporting the minimizing
/// pair. Accepts within a `−1e-10` slack.
pub fn check_monotone(pairs: &[(Vector, Vector)]) -> Result<MonotonicityReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("empty pair list".into()));
    }
    let d = pairs[0].0.len();
    for (x, v) in pairs {
        if x.len() != d || v.len() != d {
            return Err(Error::DimensionMismatch(
                "graph pairs must share one dimension".into(),
            ));
        }
    }
    let mut min_pairing = f64::INFINITY;
    let mut worst = None;
    for i in 0..pairs.len() {
        for j in (i + 1)..pairs.len() {
            let dx = sub(&pairs[i].0, &pairs[j].0);
            let dv = sub(&pairs[i].1, &pairs[j].1);
            let p = dot(&dv, &dx);
            if p < min_pairing {
                min_pairing = p;
                worst = Some((i, j));
            }
        }
    }
    Ok(MonotonicityReport {
        monotone: min_pairing >= -MONOTONE_TOL,
        min_pairing,
        worst_pair: worst,
    })
}

/// A finite monotone graph: pairs `(x_k, v_k)` in `R^d × R^d`.
///
/// Duplicate primal points with distinct dual values (multivalued sections)
/// are legal as long as monotonicity holds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct MonotoneGraph {
    dim: usize,
    pairs: Vec<(Vector, Vector)>,
}

/// On-disk JSON schema: `{"dim": d, "pairs": [[[x...],[v...]], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub dim: usize,
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
}

impl TryFrom<GraphFile> for MonotoneGraph {
    type Error = Error;
    fn try_from(f: GraphFile) -> Result<Self> {
        let pairs = f
            .pairs
            .into_iter()
            .map(|(x, v)| Ok((Vector::new(x)?, Vector::new(v)?)))
            .collect::<Result<Vec<_>>>()?;
        MonotoneGraph::new(f.dim, pairs)
    }
}

impl From<MonotoneGraph> for GraphFile {
    fn from(g: MonotoneGraph) -> GraphFile {
        GraphFile {
            dim: g.dim,
            pairs: g
                .pairs
                .into_iter()
                .map(|(x, v)| (x.into_inner(), v.into_inner()))
                .collect(),
        }
    }
}

impl MonotoneGraph {
    pub fn new(dim: usize, pairs: Vec<(Vector, Vector)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if pairs.iter().any(|(x, v)| x.len() != dim || v.len() != dim) {
            return Err(Error::DimensionMismatch(
                "pair dimension differs from declared dim".into(),
            ));
        }
        let report = check_monotone(&pairs)?;
        if !report.monotone {
            return Err(Error::InvariantViolation(format!(
                "pairs {:?} violate monotonicity (pairing {:.3e})",
                report.worst_pair, report.min_pairing
            )));
        }
        Ok(MonotoneGraph { dim, pairs })
    }

    /// 1-d convenience constructor from scalar pairs.
    pub fn scalar(pairs: &[(f64, f64)]) -> Result<Self> {
        MonotoneGraph::new(
            1,
            pairs
                .iter()
                .map(|&(x, v)| Ok((Vector::new(vec![x])?, Vector::new(vec![v])?)))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn pairs(&self) -> &[(Vector, Vector)] {
        &self.pairs
    }

    /// Primal points `x_k`, the generators of the extension's domain hull.
    pub fn primal_points(&self) -> Vec<Vec<f64>> {
        self.pairs.iter().map(|(x, _)| x.to_vec()).collect()
    }

    /// Pairings `c_k = ⟨v_k, x_k⟩`.
    fn pairings(&self) -> Vec<f64> {
        self.pairs.iter().map(|(x, v)| dot(v, x)).collect()
    }

    fn check_query(&self, x: &[f64], v: &[f64]) -> Result<()> {
        if x.len() != self.dim || v.len() != self.dim {
            return Err(Error::DimensionMismatch(
                "query dimension differs from graph".into(),
            ));
        }
        if x.iter().chain(v).any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("query must be finite".into()));
        }
        Ok(())
    }

    /// Fitzpatrick function: exact finite max, no solver involved.
    pub fn fitzpatrick(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        self.check_query(x, v)?;
        Ok(self
            .pairs
            .iter()
            .map(|(xk, vk)| dot(vk, x) + dot(v, xk) - dot(vk, xk))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Penot function `P(v, x)`: simplex LP over the graph, `+∞` outside the
    /// convex hull of the graph in `R^d × R^d`.
    pub fn penot(&self, v: &[f64], x: &[f64]) -> Result<f64> {
        self.check_query(x, v)?;
        let n = self.pairs.len();
        let d = self.dim;
        let c = self.pairings();
        let mut eq_rows = Vec::with_capacity(2 * d + 1);
        let mut b_eq = Vec::with_capacity(2 * d + 1);
        for j in 0..d {
            eq_rows.push(self.pairs.iter().map(|(xk, _)| xk[j]).collect::<Vec<_>>());
            b_eq.push(x[j]);
        }
        for j in 0..d {
            eq_rows.push(self.pairs.iter().map(|(_, vk)| vk[j]).collect::<Vec<_>>());
            b_eq.push(v[j]);
        }
        eq_rows.push(vec![1.0; n]);
        b_eq.push(1.0);
        let lp = LinearProgram::new(
            c,
            Mat::from_rows(&eq_rows)?,
            b_eq,
            Mat::zeros(0, n),
            vec![],
            vec![(Some(0.0), None); n],
        )?;
        let r = solve_lp(&lp)?;
        match r.status {
            SolveStatus::Optimal => Ok(r.value),
            SolveStatus::Infeasible => Ok(f64::INFINITY),
            other => Err(Error::InvalidInput(format!(
                "Penot LP terminated with {other:?}"
            ))),
        }
    }

    /// Conjugate `f*(v, x)` of `f = F + ι_{D × R^d}`, evaluated as one LP:
    /// `inf { P(v₁, x) + max_k ⟨v₂, x_k⟩ : v₁ + v₂ = v }`; `+∞` iff `x` lies
    /// outside `conv{x_k}`.
    pub fn fstar(&self, v: &[f64], x: &[f64]) -> Result<f64> {
        self.check_query(x, v)?;
        let n = self.pairs.len();
        let d = self.dim;
        let c_pair = self.pairings();
        // variables: λ (n), w₂ (d), t (1)
        let nv = n + d + 1;
        let mut cost = vec![0.0; nv];
        cost[..n].copy_from_slice(&c_pair);
        cost[nv - 1] = 1.0;
        let mut eq_rows = Vec::with_capacity(2 * d + 1);
        let mut b_eq = Vec::with_capacity(2 * d + 1);
        for j in 0..d {
            let mut row = vec![0.0; nv];
            for (k, (xk, _)) in self.pairs.iter().enumerate() {
                row[k] = xk[j];
            }
            eq_rows.push(row);
            b_eq.push(x[j]);
        }
        for j in 0..d {
            let mut row = vec![0.0; nv];
            for (k, (_, vk)) in self.pairs.iter().enumerate() {
                row[k] = vk[j];
            }
            row[n + j] = 1.0;
            eq_rows.push(row);
            b_eq.push(v[j]);
        }
        let mut simplex = vec![0.0; nv];
        for s in simplex.iter_mut().take(n) {
            *s = 1.0;
        }
        eq_rows.push(simplex);
        b_eq.push(1.0);
        let mut ub_rows = Vec::with_capacity(n);
        for (xk, _) in &self.pairs {
            let mut row = vec![0.0; nv];
            for j in 0..d {
                row[n + j] = xk[j];
            }
            row[nv - 1] = -1.0;
            ub_rows.push(row);
        }
        let mut bounds: Bounds = vec![(Some(0.0), None); n];
        bounds.extend(vec![(None, None); d + 1]);
        let lp = LinearProgram::new(
            cost,
            Mat::from_rows(&eq_rows)?,
            b_eq,
            Mat::from_rows(&ub_rows)?,
            vec![0.0; n],
            bounds,
        )?;
        let r = solve_lp(&lp)?;
        match r.status {
            SolveStatus::Optimal => Ok(r.value),
            SolveStatus::Infeasible => Ok(f64::INFINITY),
            other => Err(Error::InvalidInput(format!(
                "conjugate LP terminated with {other:?}"
            ))),
        }
    }
}

/// Self-dual kernel `ψ(x, v) = (1/p)|x|^p + (1/p*)|v|^{p*}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KernelPsi {
    p: f64,
}

impl KernelPsi {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidInput(
                "kernel exponent must lie in (1, ∞)".into(),
            ));
        }
        let k = KernelPsi { p };
        debug_assert!((1.0 / k.p + 1.0 / k.conjugate_exponent() - 1.0).abs() <= 1e-12);
        Ok(k)
    }

    /// The quadratic kernel (`p = 2`), the only exponent the extension QP
    /// supports.
    pub fn quadratic() -> Self {
        KernelPsi { p: 2.0 }
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn conjugate_exponent(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn is_quadratic(&self) -> bool {
        (self.p - 2.0).abs() <= 1e-14
    }

    pub fn eval(&self, x: &[f64], v: &[f64]) -> f64 {
        let q = self.conjugate_exponent();
        norm(x).powf(self.p) / self.p + norm(v).powf(q) / q
    }
}

impl Default for KernelPsi {
    fn default() -> Self {
        KernelPsi::quadratic()
    }
}

const GROUP_TOL: f64 = 1e-10;

/// A finite group of orthogonal `d × d` matrices (closed under product and
/// inverse, containing the identity).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GroupFile", into = "GroupFile")]
pub struct IsometryGroup {
    dim: usize,
    elements: Vec<Mat>,
}

/// On-disk JSON schema: `{"dim": d, "matrices": [[[row],...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupFile {
    pub dim: usize,
    pub matrices: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<GroupFile> for IsometryGroup {
    type Error = Error;
    fn try_from(f: GroupFile) -> Result<Self> {
        let mats = f
            .matrices
            .into_iter()
            .map(|rows| Mat::from_rows(&rows))
            .collect::<Result<Vec<_>>>()?;
        IsometryGroup::new(f.dim, mats)
    }
}

impl From<IsometryGroup> for GroupFile {
    fn from(g: IsometryGroup) -> GroupFile {
        GroupFile {
            dim: g.dim,
            matrices: g
                .elements
                .iter()
                .map(|m| (0..m.nrows()).map(|i| m.row(i).to_vec()).collect())
                .collect(),
        }
    }
}

impl IsometryGroup {
    pub fn new(dim: usize, elements: Vec<Mat>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidInput(
                "group needs at least one element".into(),
            ));
        }
        for u in &elements {
            if u.nrows() != dim || u.ncols() != dim {
                return Err(Error::DimensionMismatch(
                    "group element size differs from dim".into(),
                ));
            }
            let gram = u.transpose().matmul(u);
            if gram.max_abs_diff(&Mat::identity(dim)) > GROUP_TOL {
                return Err(Error::InvariantViolation(
                    "group element is not orthogonal within 1e-10".into(),
                ));
            }
        }
        let contains = |m: &Mat| elements.iter().any(|e| e.max_abs_diff(m) <= GROUP_TOL);
        if !contains(&Mat::identity(dim)) {
            return Err(Error::InvariantViolation(
                "group does not contain the identity".into(),
            ));
        }
        for u in &elements {
            if !contains(&u.transpose()) {
                return Err(Error::InvariantViolation(
                    "group is not closed under inverse".into(),
                ));
            }
            for w in &elements {
                if !contains(&u.matmul(w)) {
                    return Err(Error::InvariantViolation(
                        "group is not closed under product".into(),
                    ));
                }
            }
        }
        Ok(IsometryGroup { dim, elements })
    }

    /// `{±I}` in dimension `d`.
    pub fn sign_flips(d: usize) -> Self {
        let mut neg = Mat::identity(d);
        for i in 0..d {
            neg[(i, i)] = -1.0;
        }
        IsometryGroup {
            dim: d,
            elements: vec![Mat::identity(d), neg],
        }
    }

    /// Planar rotation group of the given order (`d = 2`).
    pub fn planar_rotations(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput(
                "rotation order must be positive".into(),
            ));
        }
        let elements = (0..order)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / order as f64;
                Mat::from_rows(&[vec![t.cos(), -t.sin()], vec![t.sin(), t.cos()]]).unwrap()
            })
            .collect();
        IsometryGroup::new(2, elements)
    }

    /// Full symmetric group permuting `blocks` equal coordinate blocks of
    /// size `block_size` (`d = blocks · block_size`).
    pub fn block_permutations(blocks: usize, block_size: usize) -> Result<Self> {
        let d = blocks * block_size;
        let mut perms: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..blocks {
            let mut next = Vec::new();
            for p in &perms {
                for c in 0..blocks {
                    if !p.contains(&c) {
                        let mut q = p.clone();
                        q.push(c);
                        next.push(q);
                    }
                }
            }
            perms = next;
        }
        let elements = perms
            .iter()
            .map(|p| {
                let mut m = Mat::zeros(d, d);
                for (bi, &bj) in p.iter().enumerate() {
                    for s in 0..block_size {
                        m[(bi * block_size + s, bj * block_size + s)] = 1.0;
                    }
                }
                m
            })
            .collect();
        IsometryGroup::new(d, elements)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[Mat] {
        &self.elements
    }
}

/// True when every transformed pair `(U x_k, U v_k)` matches a graph pair
/// within 1e-8.
pub fn check_invariance(graph: &MonotoneGraph, group: &IsometryGroup) -> Result<bool> {
    if graph.dim() != group.dim() {
        return Err(Error::DimensionMismatch(
            "graph and group dimensions differ".into(),
        ));
    }
    let matches = |x: &[f64], v: &[f64]| {
        graph
            .pairs()
            .iter()
            .any(|(xk, vk)| dist(xk, x).max(dist(vk, v)) <= 1e-8)
    };
    for u in group.elements() {
        for (x, v) in graph.pairs() {
            if !matches(&u.matvec(x), &u.matvec(v)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Closure of the graph under `(x, v) ↦ (Ux, Uv)` over the whole group,
/// de-duplicated within 1e-10. Fails when the saturated set is not monotone
/// (the input cannot carry an invariant monotone extension).
pub fn saturate_orbit(graph: &MonotoneGraph, group: &IsometryGroup) -> Result<MonotoneGraph> {
    if graph.dim() != group.dim() {
        return Err(Error::DimensionMismatch(
            "graph and group dimensions differ".into(),
        ));
    }
    let mut pairs: Vec<(Vector, Vector)> = Vec::new();
    for u in group.elements() {
        for (x, v) in graph.pairs() {
            let ux = u.matvec(x);
            let uv = u.matvec(v);
            let dup = pairs
                .iter()
                .any(|(px, pv)| dist(px, &ux).max(dist(pv, &uv)) <= 1e-10);
            if !dup {
                pairs.push((Vector::new(ux)?, Vector::new(uv)?));
            }
        }
    }
    let report = check_monotone(&pairs)?;
    if !report.monotone {
        return Err(Error::InvariantViolation(format!(
            "orbit saturation breaks monotonicity at pair {:?} (pairing {:.3e})",
            report.worst_pair, report.min_pairing
        )));
    }
    MonotoneGraph::new(graph.dim(), pairs)
}

/// Optimal witness of one kernel-average evaluation.
#[derive(Debug, Clone)]
pub struct RfWitness {
    pub value: f64,
    pub z1: (Vec<f64>, Vec<f64>),
    pub z2: (Vec<f64>, Vec<f64>),
}

/// The assembled extension machinery for one graph: evaluates the kernel
/// average `R` and the resolvent of the induced maximal monotone extension.
///
/// Immutable after construction; evaluations are pure and safe to share
/// across threads.
#[derive(Debug, Clone)]
pub struct ExtensionProgram {
    graph: MonotoneGraph,
    kernel: KernelPsi,
    group: Option<IsometryGroup>,
    pairings: Vec<f64>,
}

/// Variable layout of the joint QP (resolvent mode appends `x` itself).
struct Layout {
    d: usize,
    x1: usize,
    v1: usize,
    x2: usize,
    v2: usize,
    s: usize,
    u: usize,
    alpha: usize,
    beta: usize,
    w2: usize,
    x: usize,
    nv: usize,
}

impl Layout {
    fn new(d: usize, n: usize, with_x: bool) -> Layout {
        let base = 5 * d + 2 + 2 * n;
        Layout {
            d,
            x1: 0,
            v1: d,
            x2: 2 * d,
            v2: 3 * d,
            s: 4 * d,
            u: 4 * d + 1,
            alpha: 4 * d + 2,
            beta: 4 * d + 2 + n,
            w2: 4 * d + 2 + 2 * n,
            x: base,
            nv: if with_x { base + d } else { base },
        }
    }
}

enum Mode<'a> {
    Query { x: &'a [f64], v: &'a [f64] },
    Resolvent { tau: f64, y: &'a [f64] },
}

impl ExtensionProgram {
    pub fn new(
        graph: MonotoneGraph,
        kernel: KernelPsi,
        group: Option<IsometryGroup>,
    ) -> Result<Self> {
        if let Some(g) = &group {
            if !check_invariance(&graph, g)? {
                return Err(Error::InvariantViolation(
                    "graph is not invariant under the supplied group".into(),
                ));
            }
        }
        let pairings = graph.pairings();
        Ok(ExtensionProgram {
            graph,
            kernel,
            group,
            pairings,
        })
    }

    /// Quadratic-kernel program without group structure.
    pub fn plain(graph: MonotoneGraph) -> Result<Self> {
        ExtensionProgram::new(graph, KernelPsi::quadratic(), None)
    }

    pub fn graph(&self) -> &MonotoneGraph {
        &self.graph
    }

    pub fn group(&self) -> Option<&IsometryGroup> {
        self.group.as_ref()
    }

    fn require_quadratic(&self) -> Result<()> {
        if !self.kernel.is_quadratic() {
            return Err(Error::UnsupportedKernel(format!(
                "extension programs require the quadratic kernel (got p = {})",
                self.kernel.exponent()
            )));
        }
        Ok(())
    }

    fn assemble(&self, mode: &Mode) -> QuadraticProgram {
        let d = self.graph.dim();
        let n = self.graph.len();
        let lay = Layout::new(d, n, matches!(mode, Mode::Resolvent { .. }));
        let nv = lay.nv;
        let pairs = self.graph.pairs();

        let mut q = Mat::zeros(nv, nv);
        for j in 0..d {
            for (a, b) in [(lay.x1 + j, lay.x2 + j), (lay.v1 + j, lay.v2 + j)] {
                q[(a, a)] += 0.25;
                q[(b, b)] += 0.25;
                q[(a, b)] -= 0.25;
                q[(b, a)] -= 0.25;
            }
        }
        let mut cost = vec![0.0; nv];
        cost[lay.s] = 0.5;
        cost[lay.u] = 0.5;
        for k in 0..n {
            cost[lay.beta + k] = 0.5 * self.pairings[k];
        }

        let mut eq_rows: Vec<Vec<f64>> = Vec::new();
        let mut b_eq: Vec<f64> = Vec::new();
        // hull membership of x₁: x₁ = Σ α_k x_k, Σα = 1
        for j in 0..d {
            let mut row = vec![0.0; nv];
            for (k, (xk, _)) in pairs.iter().enumerate() {
                row[lay.alpha + k] = xk[j];
            }
            row[lay.x1 + j] = -1.0;
            eq_rows.push(row);
            b_eq.push(0.0);
        }
        let mut row = vec![0.0; nv];
        for k in 0..n {
            row[lay.alpha + k] = 1.0;
        }
        eq_rows.push(row);
        b_eq.push(1.0);
        // conjugate block: x₂ = Σ β_k x_k ; v₂ = Σ β_k v_k + w₂ ; Σβ = 1
        for j in 0..d {
            let mut row = vec![0.0; nv];
            for (k, (xk, _)) in pairs.iter().enumerate() {
                row[lay.beta + k] = xk[j];
            }
            row[lay.x2 + j] = -1.0;
            eq_rows.push(row);
            b_eq.push(0.0);
        }
        for j in 0..d {
            let mut row = vec![0.0; nv];
            for (k, (_, vk)) in pairs.iter().enumerate() {
                row[lay.beta + k] = vk[j];
            }
            row[lay.w2 + j] = 1.0;
            row[lay.v2 + j] = -1.0;
            eq_rows.push(row);
            b_eq.push(0.0);
        }
        let mut row = vec![0.0; nv];
        for k in 0..n {
            row[lay.beta + k] = 1.0;
        }
        eq_rows.push(row);
        b_eq.push(1.0);
        // averaging rows (and, in resolvent mode, the implicit-step coupling)
        match mode {
            Mode::Query { x, v } => {
                for j in 0..d {
                    let mut row = vec![0.0; nv];
                    row[lay.x1 + j] = 1.0;
                    row[lay.x2 + j] = 1.0;
                    eq_rows.push(row);
                    b_eq.push(2.0 * x[j]);
                }
                for j in 0..d {
                    let mut row = vec![0.0; nv];
                    row[lay.v1 + j] = 1.0;
                    row[lay.v2 + j] = 1.0;
                    eq_rows.push(row);
                    b_eq.push(2.0 * v[j]);
                }
            }
            Mode::Resolvent { tau, y } => {
                for j in 0..d {
                    let mut row = vec![0.0; nv];
                    row[lay.x1 + j] = 1.0;
                    row[lay.x2 + j] = 1.0;
                    row[lay.x + j] = -2.0;
                    eq_rows.push(row);
                    b_eq.push(0.0);
                }
                for j in 0..d {
                    let mut row = vec![0.0; nv];
                    row[lay.v1 + j] = 0.5 * tau;
                    row[lay.v2 + j] = 0.5 * tau;
                    row[lay.x + j] = 1.0;
                    eq_rows.push(row);
                    b_eq.push(y[j]);
                }
                for j in 0..d {
                    q[(lay.x + j, lay.x + j)] += 2.0 / tau;
                    cost[lay.x + j] = -y[j] / tau;
                }
            }
        }

        // epigraph rows: F(z₁) ≤ s and ⟨w₂, x_k⟩ ≤ u
        let mut ub_rows: Vec<Vec<f64>> = Vec::new();
        let mut b_ub: Vec<f64> = Vec::new();
        for (k, (xk, vk)) in pairs.iter().enumerate() {
            let mut row = vec![0.0; nv];
            for j in 0..d {
                row[lay.x1 + j] = vk[j];
                row[lay.v1 + j] = xk[j];
            }
            row[lay.s] = -1.0;
            ub_rows.push(row);
            b_ub.push(self.pairings[k]);
        }
        for (xk, _) in pairs.iter() {
            let mut row = vec![0.0; nv];
            for j in 0..d {
                row[lay.w2 + j] = xk[j];
            }
            row[lay.u] = -1.0;
            ub_rows.push(row);
            b_ub.push(0.0);
        }

        let mut bounds: Bounds = vec![(None, None); nv];
        for k in 0..n {
            bounds[lay.alpha + k] = (Some(0.0), None);
            bounds[lay.beta + k] = (Some(0.0), None);
        }

        QuadraticProgram::new_unchecked(
            q,
            cost,
            Mat::from_rows(&eq_rows).expect("equality rows share the layout width"),
            b_eq,
            Mat::from_rows(&ub_rows).expect("inequality rows share the layout width"),
            b_ub,
            bounds,
        )
    }

    /// Kernel-average value `R(x, v)`; `+∞` when `x` lies outside the domain
    /// hull `conv{x_k}`.
    pub fn rf(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        Ok(self.rf_witness(x, v)?.map_or(f64::INFINITY, |w| w.value))
    }

    /// Like [`Self::rf`] but exposing the optimal decomposition
    /// `(x, v) = ½(z₁ + z₂)`; `None` when infeasible.
    pub fn rf_witness(&self, x: &[f64], v: &[f64]) -> Result<Option<RfWitness>> {
        self.graph.check_query(x, v)?;
        self.require_quadratic()?;
        let qp = self.assemble(&Mode::Query { x, v });
        let r = solve_qp(&qp)?;
        match r.status {
            SolveStatus::Optimal => {
                let lay = Layout::new(self.graph.dim(), self.graph.len(), false);
                let d = lay.d;
                Ok(Some(RfWitness {
                    value: r.value,
                    z1: (
                        r.x[lay.x1..lay.x1 + d].to_vec(),
                        r.x[lay.v1..lay.v1 + d].to_vec(),
                    ),
                    z2: (
                        r.x[lay.x2..lay.x2 + d].to_vec(),
                        r.x[lay.v2..lay.v2 + d].to_vec(),
                    ),
                }))
            }
            SolveStatus::Infeasible => Ok(None),
            other => Err(Error::IterationLimit {
                iterations: r.iterations,
                residual: if other == SolveStatus::IterationLimit {
                    r.kkt_residual
                } else {
                    f64::INFINITY
                },
            }),
        }
    }

    /// Resolvent `J_τ(y)` of the maximal monotone extension: the unique `x`
    /// with `x + τ·Ã(x) ∋ y`, reached as the minimizer of
    /// `R(x, (y−x)/τ) − ⟨(y−x)/τ, x⟩`.
    pub fn resolvent(&self, tau: f64, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.resolvent_with_value(tau, y)?.0)
    }

    /// Resolvent plus the optimal objective value (zero, up to solver
    /// tolerance, by the contact characterization of the extension).
    pub fn resolvent_with_value(&self, tau: f64, y: &[f64]) -> Result<(Vec<f64>, f64)> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidInput(
                "resolvent step must be positive".into(),
            ));
        }
        if y.len() != self.graph.dim() {
            return Err(Error::DimensionMismatch(
                "resolvent argument dimension differs from graph".into(),
            ));
        }
        self.require_quadratic()?;
        let qp = self.assemble(&Mode::Resolvent { tau, y });
        let r = solve_qp(&qp)?;
        if r.status != SolveStatus::Optimal {
            return Err(Error::IterationLimit {
                iterations: r.iterations,
                residual: r.kkt_residual,
            });
        }
        let lay = Layout::new(self.graph.dim(), self.graph.len(), true);
        Ok((r.x[lay.x..lay.x + lay.d].to_vec(), r.value))
    }

    /// Resolvent over a batch of points (data-parallel when enabled).
    pub fn resolvent_batch(&self, tau: f64, ys: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        par::map_slice(ys, |y| self.resolvent(tau, y))
            .into_iter()
            .collect()
    }

    /// Samples `R` over a two-dimensional grid (axis 0 = x, axis 1 = v);
    /// only defined for scalar graphs.
    pub fn rf_table(&self, grid: &crate::optkit::Grid) -> Result<crate::optkit::GridFn> {
        if self.graph.dim() != 1 || grid.dim() != 2 {
            return Err(Error::DimensionMismatch(
                "kernel-average tables require a scalar graph and a 2-d grid".into(),
            ));
        }
        let values = par::map_indices(grid.len(), |i| {
            let node = grid.node(i);
            self.rf(&node[..1], &node[1..]).unwrap_or(f64::INFINITY)
        });
        crate::optkit::GridFn::new(grid.clone(), values)
    }

    /// Domain-hull membership of a point (LP residual tolerance `tol`).
    pub fn in_domain_hull(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(hull_membership(x, &self.graph.primal_points(), tol)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn two_point_graph() -> MonotoneGraph {
        MonotoneGraph::scalar(&[(0.0, 0.0), (1.0, 1.0)]).unwrap()
    }

    #[test]
    fn monotonicity_examples() {
        let inc = [
            (
                Vector::new(vec![0.0]).unwrap(),
                Vector::new(vec![0.0]).unwrap(),
            ),
            (
                Vector::new(vec![1.0]).unwrap(),
                Vector::new(vec![1.0]).unwrap(),
            ),
        ];
        assert!(check_monotone(&inc).unwrap().monotone);

        let dec = [
            (
                Vector::new(vec![0.0]).unwrap(),
                Vector::new(vec![1.0]).unwrap(),
            ),
            (
                Vector::new(vec![1.0]).unwrap(),
                Vector::new(vec![0.0]).unwrap(),
            ),
        ];
        let rep = check_monotone(&dec).unwrap();
        assert!(!rep.monotone);
        assert_abs_diff_eq!(rep.min_pairing, -1.0, epsilon = 1e-12);
        assert_eq!(rep.worst_pair, Some((0, 1)));

        let single = [(
            Vector::new(vec![3.0]).unwrap(),
            Vector::new(vec![-2.0]).unwrap(),
        )];
        assert!(check_monotone(&single).unwrap().monotone);
    }

    #[test]
    fn fitzpatrick_hand_values() {
        let g = two_point_graph();
        assert_abs_diff_eq!(g.fitzpatrick(&[1.0], &[1.0]).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.fitzpatrick(&[0.0], &[0.0]).unwrap(), 0.0, epsilon = 1e-12);
        let zero = MonotoneGraph::scalar(&[(0.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(
            zero.fitzpatrick(&[5.0], &[-3.0]).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn penot_contact_and_midpoint() {
        let g = two_point_graph();
        // equality on the graph
        for (x, v) in g.pairs() {
            let p = g.penot(v, x).unwrap();
            assert_abs_diff_eq!(p, dot(v, x), epsilon = 1e-8);
        }
        assert_abs_diff_eq!(g.penot(&[0.5], &[0.5]).unwrap(), 0.5, epsilon = 1e-8);
        assert_eq!(g.penot(&[2.0], &[2.0]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn fstar_values() {
        let g = two_point_graph();
        assert_eq!(g.fstar(&[0.0], &[2.0]).unwrap(), f64::INFINITY);
        assert_abs_diff_eq!(g.fstar(&[1.0], &[1.0]).unwrap(), 1.0, epsilon = 1e-8);
        let zero = MonotoneGraph::scalar(&[(0.0, 0.0)]).unwrap();
        for v in [-4.0, -0.5, 0.0, 2.0] {
            assert_abs_diff_eq!(zero.fstar(&[v], &[0.0]).unwrap(), 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn rf_contact_on_graph() {
        let prog = ExtensionProgram::plain(two_point_graph()).unwrap();
        for (x, v) in prog.graph().pairs().to_vec() {
            let r = prog.rf(&x, &v).unwrap();
            assert_abs_diff_eq!(r, dot(&v, &x), epsilon = 1e-6);
        }
    }

    #[test]
    fn rf_single_point_graph_is_flat() {
        // extension = {0} × R: R(0, v) = 0 for every v
        let prog =
            ExtensionProgram::plain(MonotoneGraph::scalar(&[(0.0, 0.0)]).unwrap()).unwrap();
        for v in [-3.0, -1.0, 0.0, 0.7, 10.0] {
            assert_abs_diff_eq!(prog.rf(&[0.0], &[v]).unwrap(), 0.0, epsilon = 1e-7);
        }
        assert_eq!(prog.rf(&[0.5], &[0.0]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn rf_sandwich_at_midpoint() {
        let prog = ExtensionProgram::plain(two_point_graph()).unwrap();
        let r = prog.rf(&[0.5], &[0.5]).unwrap();
        let fa = prog.graph().fitzpatrick(&[0.5], &[0.5]).unwrap();
        let pa = prog.graph().penot(&[0.5], &[0.5]).unwrap();
        assert!(
            fa - 1e-6 <= r && r <= pa + 1e-6,
            "sandwich broken: {fa} ≤ {r} ≤ {pa}"
        );
        assert!((0.0..=0.5 + 1e-6).contains(&r));
    }

    #[test]
    fn resolvent_forced_values() {
        let prog = ExtensionProgram::plain(two_point_graph()).unwrap();
        for (y, expect) in [(-3.0, 0.0), (0.0, 0.0), (2.0, 1.0), (2.5, 1.0)] {
            let (x, val) = prog.resolvent_with_value(1.0, &[y]).unwrap();
            assert_abs_diff_eq!(x[0], expect, epsilon = 1e-6);
            assert!(val.abs() <= 1e-6, "contact value {val} at y = {y}");
        }
    }

    #[test]
    fn resolvent_graph_identity() {
        let prog = ExtensionProgram::plain(two_point_graph()).unwrap();
        for tau in [0.5, 1.0, 2.0] {
            for (x, v) in prog.graph().pairs().to_vec() {
                let y = x[0] + tau * v[0];
                let j = prog.resolvent(tau, &[y]).unwrap();
                assert_abs_diff_eq!(j[0], x[0], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn resolvent_single_point_graph() {
        let prog =
            ExtensionProgram::plain(MonotoneGraph::scalar(&[(0.0, 0.0)]).unwrap()).unwrap();
        for y in [-10.0, -1.0, 0.0, 0.3, 8.0] {
            for tau in [0.25, 1.0, 4.0] {
                let j = prog.resolvent(tau, &[y]).unwrap();
                assert_abs_diff_eq!(j[0], 0.0, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn resolvent_nonexpansive() {
        let prog = ExtensionProgram::plain(two_point_graph()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let y1 = rng.gen_range(-5.0..5.0);
            let y2 = rng.gen_range(-5.0..5.0);
            let j1 = prog.resolvent(1.0, &[y1]).unwrap();
            let j2 = prog.resolvent(1.0, &[y2]).unwrap();
            assert!((j1[0] - j2[0]).abs() <= (y1 - y2).abs() + 1e-6);
        }
    }

    #[test]
    fn saturate_and_invariance() {
        let group = IsometryGroup::sign_flips(1);
        let g = MonotoneGraph::scalar(&[(1.0, 1.0)]).unwrap();
        assert!(!check_invariance(&g, &group).unwrap());
        let sat = saturate_orbit(&g, &group).unwrap();
        assert_eq!(sat.len(), 2);
        assert!(check_invariance(&sat, &group).unwrap());

        // identity group leaves the graph unchanged
        let id = IsometryGroup::new(1, vec![Mat::identity(1)]).unwrap();
        let same = saturate_orbit(&g, &id).unwrap();
        assert_eq!(same.len(), 1);
        assert!(check_invariance(&g, &id).unwrap());

        // (1, −1) flips to a decreasing pair: not extendable invariantly
        let bad = MonotoneGraph::scalar(&[(1.0, -1.0)]).unwrap();
        assert!(saturate_orbit(&bad, &group).is_err());
    }

    #[test]
    fn equivariant_resolvent_under_sign_flip() {
        let group = IsometryGroup::sign_flips(1);
        let g = MonotoneGraph::scalar(&[(1.0, 1.0), (-1.0, -1.0)]).unwrap();
        let prog = ExtensionProgram::new(g, KernelPsi::quadratic(), Some(group)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let y = rng.gen_range(-4.0..4.0);
            let jp = prog.resolvent(0.7, &[y]).unwrap();
            let jm = prog.resolvent(0.7, &[-y]).unwrap();
            assert_abs_diff_eq!(jm[0], -jp[0], epsilon = 1e-6);
        }
    }

    #[test]
    fn rejects_non_quadratic_kernel_in_programs() {
        let kernel = KernelPsi::new(1.5).unwrap();
        let prog = ExtensionProgram::new(two_point_graph(), kernel, None).unwrap();
        assert!(matches!(
            prog.rf(&[0.5], &[0.5]),
            Err(Error::UnsupportedKernel(_))
        ));
        assert!(matches!(
            prog.resolvent(1.0, &[0.0]),
            Err(Error::UnsupportedKernel(_))
        ));
    }

    #[test]
    fn kernel_eval_properties() {
        let k = KernelPsi::new(3.0).unwrap();
        assert_abs_diff_eq!(k.conjugate_exponent(), 1.5, epsilon = 1e-12);
        assert_eq!(k.eval(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert!(k.eval(&[1.0, 2.0], &[0.5, -1.0]) > 0.0);
        let quad = KernelPsi::quadratic();
        assert_abs_diff_eq!(quad.eval(&[3.0], &[4.0]), 12.5, epsilon = 1e-12);
    }

    #[test]
    fn graph_json_round_trip() {
        let g = two_point_graph();
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.contains("\"dim\":1"));
        assert!(s.contains("\"pairs\""));
        let back: MonotoneGraph = serde_json::from_str(&s).unwrap();
        assert_eq!(back.len(), 2);
        // non-monotone data must fail on deserialization
        let bad = r#"{"dim":1,"pairs":[[[0.0],[1.0]],[[1.0],[0.0]]]}"#;
        assert!(serde_json::from_str::<MonotoneGraph>(bad).is_err());
    }
}
