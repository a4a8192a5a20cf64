//! Discrete dyadic model of a standard probability space.
//!
//! The sample space is `I_N = {0, …, N−1}` with `N = 2^m` and uniform atom
//! weight `1/N`; its dyadic blocks at level `k ≤ m` are the `2^k` runs of
//! `2^{m−k}` consecutive atoms. Measure-preserving isomorphisms are exactly
//! the permutations of `I_N`, conditional expectations are block averages,
//! and couplings with uniform marginals are doubly stochastic mass matrices.
//! On this model every statement about couplings, Wasserstein distances and
//! law alignment becomes a finite, exactly checkable computation.

mod matching;

pub use matching::{hungarian, perfect_matching, transport_lp};

use crate::error::{Error, Result};
use crate::linalg::{dist, Mat, Vector};
use serde::{Deserialize, Serialize};

/// Hard cap on dyadic refinement depth (≈ 10⁶ atoms).
pub const MAX_LEVEL: u32 = 20;

/// The uniform dyadic space `I_{2^m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicSpace {
    level: u32,
}

impl DyadicSpace {
    pub fn new(level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::Capacity(format!(
                "dyadic level {level} exceeds the cap {MAX_LEVEL}"
            )));
        }
        Ok(DyadicSpace { level })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn atoms(&self) -> usize {
        1usize << self.level
    }

    pub fn atom_weight(&self) -> f64 {
        1.0 / self.atoms() as f64
    }
}

/// A bijection of `I_N`; the discrete measure-preserving isomorphisms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &t in &map {
            if t >= n || seen[t] {
                return Err(Error::InvalidInput(
                    "mapping is not a bijection of its index range".into(),
                ));
            }
            seen[t] = true;
        }
        Ok(Permutation { map })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            map: (0..n).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.map.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0usize; self.map.len()];
        for (i, &t) in self.map.iter().enumerate() {
            inv[t] = i;
        }
        Permutation { map: inv }
    }

    /// `(self ∘ other)(i) = self(other(i))`
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.order() != other.order() {
            return Err(Error::DimensionMismatch(
                "permutation orders differ".into(),
            ));
        }
        Ok(Permutation {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        })
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.map
    }
}

/// A coupling of the uniform measure with itself: nonnegative mass matrix
/// whose rows and columns each sum to `1/N` (total mass 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "CouplingFile", into = "CouplingFile")]
pub struct DoublyStochastic {
    order: usize,
    mass: Mat,
}

/// On-disk JSON schema: `{"order": N, "matrix": [[...]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingFile {
    pub order: usize,
    pub matrix: Vec<Vec<f64>>,
}

impl TryFrom<CouplingFile> for DoublyStochastic {
    type Error = Error;
    fn try_from(f: CouplingFile) -> Result<Self> {
        DoublyStochastic::new(f.order, Mat::from_rows(&f.matrix)?)
    }
}

impl From<DoublyStochastic> for CouplingFile {
    fn from(b: DoublyStochastic) -> CouplingFile {
        CouplingFile {
            order: b.order,
            matrix: (0..b.order)
                .map(|i| b.mass.row(i).to_vec())
                .collect(),
        }
    }
}

impl DoublyStochastic {
    pub fn new(order: usize, mass: Mat) -> Result<Self> {
        if order == 0 || mass.nrows() != order || mass.ncols() != order {
            return Err(Error::DimensionMismatch(
                "coupling matrix must be square of the declared order".into(),
            ));
        }
        let target = 1.0 / order as f64;
        for i in 0..order {
            let mut row_sum = 0.0;
            let mut col_sum = 0.0;
            for j in 0..order {
                if mass[(i, j)] < -1e-12 {
                    return Err(Error::InvariantViolation(
                        "coupling entries must be nonnegative".into(),
                    ));
                }
                row_sum += mass[(i, j)];
                col_sum += mass[(j, i)];
            }
            if (row_sum - target).abs() > 1e-12 || (col_sum - target).abs() > 1e-12 {
                return Err(Error::InvariantViolation(format!(
                    "marginal sums of line {i} differ from 1/N"
                )));
            }
        }
        Ok(DoublyStochastic { order, mass })
    }

    /// The diagonal coupling induced by a permutation (`P/N`).
    pub fn from_permutation(p: &Permutation) -> Self {
        let n = p.order();
        let mut mass = Mat::zeros(n, n);
        for i in 0..n {
            mass[(i, p.apply(i))] = 1.0 / n as f64;
        }
        DoublyStochastic { order: n, mass }
    }

    /// Product coupling `1/N² · 1`.
    pub fn uniform(order: usize) -> Self {
        let mut mass = Mat::zeros(order, order);
        let w = 1.0 / (order * order) as f64;
        for i in 0..order {
            for j in 0..order {
                mass[(i, j)] = w;
            }
        }
        DoublyStochastic { order, mass }
    }

    /// Convex mixture of permutation couplings.
    pub fn mixture(weights: &[f64], perms: &[Permutation]) -> Result<Self> {
        if weights.is_empty() || weights.len() != perms.len() {
            return Err(Error::InvalidInput(
                "need equally many weights and permutations".into(),
            ));
        }
        let n = perms[0].order();
        let mut mass = Mat::zeros(n, n);
        let total: f64 = weights.iter().sum();
        for (w, p) in weights.iter().zip(perms) {
            if p.order() != n {
                return Err(Error::DimensionMismatch(
                    "mixture permutations differ in order".into(),
                ));
            }
            for i in 0..n {
                mass[(i, p.apply(i))] += w / total / n as f64;
            }
        }
        DoublyStochastic::new(n, mass)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mass(&self) -> &Mat {
        &self.mass
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.mass[(i, j)]
    }
}

/// A vector-valued random variable on the dyadic space: one `R^d` row per
/// atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampleFile", into = "SampleFile")]
pub struct EmpiricalSample {
    space: DyadicSpace,
    dim: usize,
    values: Vec<Vector>,
}

/// On-disk JSON schema: `{"level": m, "dim": d, "values": [[...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleFile {
    pub level: u32,
    pub dim: usize,
    pub values: Vec<Vec<f64>>,
}

impl TryFrom<SampleFile> for EmpiricalSample {
    type Error = Error;
    fn try_from(f: SampleFile) -> Result<Self> {
        EmpiricalSample::new(
            DyadicSpace::new(f.level)?,
            f.dim,
            f.values
                .into_iter()
                .map(Vector::new)
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

impl From<EmpiricalSample> for SampleFile {
    fn from(s: EmpiricalSample) -> SampleFile {
        SampleFile {
            level: s.space.level(),
            dim: s.dim,
            values: s.values.into_iter().map(Vector::into_inner).collect(),
        }
    }
}

impl EmpiricalSample {
    pub fn new(space: DyadicSpace, dim: usize, values: Vec<Vector>) -> Result<Self> {
        if values.len() != space.atoms() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} value rows, got {}",
                space.atoms(),
                values.len()
            )));
        }
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch(
                "value rows must share the declared dimension".into(),
            ));
        }
        Ok(EmpiricalSample { space, dim, values })
    }

    /// Scalar sample from plain values (level inferred from the length).
    pub fn scalar(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if !n.is_power_of_two() {
            return Err(Error::InvalidInput(
                "scalar sample length must be a power of two".into(),
            ));
        }
        EmpiricalSample::new(
            DyadicSpace::new(n.trailing_zeros())?,
            1,
            values
                .iter()
                .map(|&v| Vector::new(vec![v]))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn space(&self) -> DyadicSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[Vector] {
        &self.values
    }

    pub fn value(&self, atom: usize) -> &[f64] {
        &self.values[atom]
    }

    /// `X ∘ g`: the relabeled sample with `(X∘g)(i) = X(g(i))`.
    pub fn compose(&self, g: &Permutation) -> Result<EmpiricalSample> {
        if g.order() != self.len() {
            return Err(Error::DimensionMismatch(
                "permutation order differs from sample size".into(),
            ));
        }
        Ok(EmpiricalSample {
            space: self.space,
            dim: self.dim,
            values: (0..self.len())
                .map(|i| self.values[g.apply(i)].clone())
                .collect(),
        })
    }

    /// Conditional expectation onto the level-`k` dyadic blocks: every block
    /// of `2^{m−k}` consecutive values is replaced by its mean (the result
    /// stays at level `m`, block-constant).
    pub fn coarsen(&self, k: u32) -> Result<EmpiricalSample> {
        let m = self.space.level();
        if k > m {
            return Err(Error::InvalidInput(format!(
                "coarsening level {k} exceeds the sample level {m}"
            )));
        }
        let block = 1usize << (m - k);
        let mut values = Vec::with_capacity(self.len());
        for b in 0..(1usize << k) {
            let mut mean = vec![0.0; self.dim];
            for t in 0..block {
                crate::linalg::axpy(1.0, &self.values[b * block + t], &mut mean);
            }
            for c in mean.iter_mut() {
                *c /= block as f64;
            }
            let mv = Vector::new(mean)?;
            for _ in 0..block {
                values.push(mv.clone());
            }
        }
        EmpiricalSample::new(self.space, self.dim, values)
    }

    /// Repeats every value over `2^extra` subatoms (refinement to level
    /// `m + extra`).
    pub fn refine(&self, extra: u32) -> Result<EmpiricalSample> {
        let space = DyadicSpace::new(self.space.level() + extra)?;
        let rep = 1usize << extra;
        let mut values = Vec::with_capacity(space.atoms());
        for v in &self.values {
            for _ in 0..rep {
                values.push(v.clone());
            }
        }
        EmpiricalSample::new(space, self.dim, values)
    }

    /// Canonical identifier of the empirical law `X♯P`: an FNV-1a hash of
    /// the sorted multiset of value rows (bit-exact, stable across runs), so
    /// equal laws collide exactly.
    pub fn law_key(&self) -> String {
        let mut rows: Vec<Vec<u64>> = self
            .values
            .iter()
            .map(|v| v.iter().map(|t| t.to_bits()).collect())
            .collect();
        rows.sort();
        let mut h: u64 = 0xcbf29ce484222325;
        for row in &rows {
            for bits in row {
                for byte in bits.to_le_bytes() {
                    h ^= byte as u64;
                    h = h.wrapping_mul(0x100000001b3);
                }
            }
        }
        format!("{h:016x}")
    }

    /// The empirical law as a weighted point list (duplicates aggregated,
    /// first-seen order).
    pub fn law(&self) -> WeightedPoints {
        let w = self.space.atom_weight();
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for v in &self.values {
            if let Some(idx) = points.iter().position(|p| dist(p, v) == 0.0) {
                weights[idx] += w;
            } else {
                points.push(v.to_vec());
                weights.push(w);
            }
        }
        WeightedPoints { points, weights }
    }
}

/// Lifts a block permutation at level `k` to the atoms of level `m`: atom
/// `j` in block `i` goes to the same offset inside block `σ(i)`.
pub fn lift_permutation(sigma: &Permutation, k: u32, m: u32) -> Result<Permutation> {
    if k > m {
        return Err(Error::InvalidInput(format!(
            "block level {k} exceeds the target level {m}"
        )));
    }
    if sigma.order() != (1usize << k) {
        return Err(Error::DimensionMismatch(
            "block permutation order differs from 2^k".into(),
        ));
    }
    let block = 1usize << (m - k);
    let mut map = vec![0usize; 1usize << m];
    for (j, slot) in map.iter_mut().enumerate() {
        let (i, offset) = (j / block, j % block);
        *slot = sigma.apply(i) * block + offset;
    }
    Permutation::new(map)
}

/// Nearest-integer matrix rounding of `M = NK·B` that preserves the exact
/// row/column sums `K`: floors plus a 0/1 repair flow concentrated on
/// fractional cells. Every entry moves by less than one unit.
fn round_counts(b: &DoublyStochastic, k: usize) -> Mat {
    let n = b.order();
    let nk = (n * k) as f64;
    let mut floor = Mat::zeros(n, n);
    let mut frac = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let m = b.entry(i, j) * nk;
            let f = (m + 1e-9).floor();
            floor[(i, j)] = f;
            frac[(i, j)] = (m - f).max(0.0);
        }
    }
    let mut row_deficit: Vec<i64> = (0..n)
        .map(|i| k as i64 - (0..n).map(|j| floor[(i, j)] as i64).sum::<i64>())
        .collect();
    let mut col_deficit: Vec<i64> = (0..n)
        .map(|j| k as i64 - (0..n).map(|i| floor[(i, j)] as i64).sum::<i64>())
        .collect();
    // repair: unit-capacity b-matching by augmenting paths, restricted to
    // fractional cells first (a feasible fractional flow lives there, so an
    // integral one does too); any unmatched remainder may use every cell
    let mut extra = vec![vec![false; n]; n];
    for pass in 0..2 {
        for i in 0..n {
            while row_deficit[i] > 0 {
                let allowed = |r: usize, c: usize| pass == 1 || frac[(r, c)] > 1e-12;
                let mut seen_cols = vec![false; n];
                if augment_unit(i, n, &allowed, &mut extra, &mut col_deficit, &mut seen_cols) {
                    row_deficit[i] -= 1;
                } else {
                    break;
                }
            }
        }
    }
    let mut counts = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            counts[(i, j)] = floor[(i, j)] + if extra[i][j] { 1.0 } else { 0.0 };
        }
    }
    counts
}

/// One augmenting step of the repair flow: place a unit from row `i` on a
/// free column, displacing already-placed units along alternating paths when
/// necessary.
fn augment_unit(
    i: usize,
    n: usize,
    allowed: &dyn Fn(usize, usize) -> bool,
    extra: &mut Vec<Vec<bool>>,
    col_deficit: &mut [i64],
    seen_cols: &mut [bool],
) -> bool {
    for j in 0..n {
        if seen_cols[j] || extra[i][j] || !allowed(i, j) {
            continue;
        }
        seen_cols[j] = true;
        if col_deficit[j] > 0 {
            extra[i][j] = true;
            col_deficit[j] -= 1;
            return true;
        }
        for i2 in 0..n {
            if extra[i2][j] {
                extra[i2][j] = false;
                if augment_unit(i2, n, allowed, extra, col_deficit, seen_cols) {
                    extra[i][j] = true;
                    return true;
                }
                extra[i2][j] = true;
            }
        }
    }
    false
}

/// Block-transition counts of a permutation of `I_{NK}` over the `N` blocks
/// of `K` consecutive atoms: `C_{ii'} = #{j in block i : σ(j) in block i'}`.
pub fn block_counts(sigma: &Permutation, n: usize) -> Result<Mat> {
    if sigma.order() % n != 0 {
        return Err(Error::DimensionMismatch(
            "permutation order is not a multiple of the block count".into(),
        ));
    }
    let k = sigma.order() / n;
    let mut c = Mat::zeros(n, n);
    for j in 0..sigma.order() {
        c[(j / k, sigma.apply(j) / k)] += 1.0;
    }
    let _ = k;
    Ok(c)
}

/// Approximates a bistochastic coupling by a single permutation of the
/// `K`-fold refined space: the block-transition frequencies of the result
/// differ from `B` by at most `1/(NK)` per entry, exactly reproducing `B`
/// whenever `N·K·B` is integral.
///
/// Deterministic: rounding, the Hall-matching extraction and the subatom
/// layout (sources sorted by atom index) involve no randomness.
pub fn approx_coupling(b: &DoublyStochastic, k: usize) -> Result<Permutation> {
    if k == 0 {
        return Err(Error::InvalidInput("refinement must be at least 1".into()));
    }
    let n = b.order();
    let counts = round_counts(b, k);
    // peel off K permutation systems by repeated perfect matchings
    let mut remaining = counts.clone();
    let mut systems: Vec<Vec<usize>> = Vec::with_capacity(k);
    for _ in 0..k {
        let m = perfect_matching(n, |r, c| remaining[(r, c)] > 0.5).map_err(|row| {
            Error::InvalidInput(format!(
                "count matrix admits no permutation system through block {row}"
            ))
        })?;
        for (r, &c) in m.iter().enumerate() {
            remaining[(r, c)] -= 1.0;
        }
        systems.push(m);
    }
    // subatom layout: sources (i, t) with π_t(i) = i' take consecutive
    // offsets of block i', ordered by source atom index i·K + t
    let mut next_offset = vec![0usize; n];
    let mut map = vec![0usize; n * k];
    for i in 0..n {
        for (t, pi) in systems.iter().enumerate() {
            let target = pi[i];
            map[i * k + t] = target * k + next_offset[target];
            next_offset[target] += 1;
        }
    }
    Permutation::new(map)
}

/// Weighted point list: a finitely supported probability measure on `R^d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedPoints {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl WeightedPoints {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidInput(
                "need equally many (≥ 1) points and weights".into(),
            ));
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::DimensionMismatch(
                "support points differ in dimension".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidInput("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(WeightedPoints { points, weights })
    }

    pub fn dirac(point: Vec<f64>) -> Self {
        WeightedPoints {
            points: vec![point],
            weights: vec![1.0],
        }
    }

    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        WeightedPoints::new(points, vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|&x| (x - w).abs() <= 1e-12)
    }
}

/// Exact `W_p` between finitely supported measures, with the optimal plan.
///
/// Uniform equal-size supports go through the Hungarian assignment; general
/// weights through the dense transportation LP. The reported value is the
/// p-th root of the optimal p-cost; plan marginals are exact to 1e-9.
pub fn wasserstein(p: f64, mu: &WeightedPoints, nu: &WeightedPoints) -> Result<(f64, Mat)> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidInput("exponent p must satisfy p ≥ 1".into()));
    }
    if mu.points[0].len() != nu.points[0].len() {
        return Err(Error::DimensionMismatch(
            "measures live in different dimensions".into(),
        ));
    }
    let cost_of = |a: &[f64], b: &[f64]| dist(a, b).powf(p);
    let mut cost = Mat::zeros(mu.len(), nu.len());
    for i in 0..mu.len() {
        for j in 0..nu.len() {
            cost[(i, j)] = cost_of(&mu.points[i], &nu.points[j]);
        }
    }
    if mu.len() == nu.len() && mu.is_uniform() && nu.is_uniform() {
        let (assign, total) = hungarian(&cost);
        let n = mu.len();
        let mut plan = Mat::zeros(n, n);
        for (i, &j) in assign.iter().enumerate() {
            plan[(i, j)] = 1.0 / n as f64;
        }
        return Ok(((total / n as f64).powf(1.0 / p), plan));
    }
    let (plan, value) = transport_lp(&mu.weights, &nu.weights, &cost)?;
    Ok((value.max(0.0).powf(1.0 / p), plan))
}

/// `W₂` gap between the pair-empirical measure of one permutation and a
/// bistochastic coupling: compares `{(Z(j), Z'(σ(j)))}_{j ∈ I_{NK}}` (atoms
/// weighted `1/(NK)`, block values repeated per subatom) with
/// `Σ B_{ii'} δ_{(Z(i), Z'(i'))}`, exactly via the transportation LP.
pub fn coupling_discrepancy(
    sigma: &Permutation,
    b: &DoublyStochastic,
    z: &EmpiricalSample,
    zp: &EmpiricalSample,
) -> Result<f64> {
    let n = b.order();
    if z.len() != n || zp.len() != n {
        return Err(Error::DimensionMismatch(
            "samples must live on the coupling's space".into(),
        ));
    }
    if sigma.order() % n != 0 {
        return Err(Error::DimensionMismatch(
            "permutation order must refine the coupling order".into(),
        ));
    }
    let k = sigma.order() / n;
    let nk = sigma.order();
    let d = z.dim();
    // empirical pairs
    let mut emp_pts: Vec<Vec<f64>> = Vec::with_capacity(nk);
    for j in 0..nk {
        let mut row = z.value(j / k).to_vec();
        row.extend_from_slice(zp.value(sigma.apply(j) / k));
        emp_pts.push(row);
    }
    let emp_w = vec![1.0 / nk as f64; nk];
    // target pairs with positive mass
    let mut tgt_pts: Vec<Vec<f64>> = Vec::new();
    let mut tgt_w: Vec<f64> = Vec::new();
    for i in 0..n {
        for ip in 0..n {
            let w = b.entry(i, ip);
            if w > 0.0 {
                let mut row = z.value(i).to_vec();
                row.extend_from_slice(zp.value(ip));
                tgt_pts.push(row);
                tgt_w.push(w);
            }
        }
    }
    let _ = d;
    let mut cost = Mat::zeros(emp_pts.len(), tgt_pts.len());
    for i in 0..emp_pts.len() {
        for j in 0..tgt_pts.len() {
            cost[(i, j)] = dist(&emp_pts[i], &tgt_pts[j]).powi(2);
        }
    }
    let (_, value) = transport_lp(&emp_w, &tgt_w, &cost)?;
    Ok(value.max(0.0).sqrt())
}

/// Realizes a target law on a dyadic refinement: returns `Y` with
/// `Y♯P = ν` exactly and `‖X − Y‖_p = W_p(X♯P, ν)` (the assignment achieves
/// `ε = 0` on this discrete model; `ε ≥ 0` is accepted for interface
/// compatibility).
///
/// Fails with a capacity error when no refinement up to level 20 represents
/// the target weights.
pub fn monge_match(
    x: &EmpiricalSample,
    nu: &WeightedPoints,
    p: f64,
    epsilon: f64,
) -> Result<EmpiricalSample> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidInput("ε must be nonnegative".into()));
    }
    if nu.points[0].len() != x.dim() {
        return Err(Error::DimensionMismatch(
            "target dimension differs from the sample".into(),
        ));
    }
    let m = x.space().level();
    // smallest dyadic level whose atoms represent every target weight
    let mut level = m;
    let counts: Vec<usize> = loop {
        let atoms = (1usize << level) as f64;
        let counts: Vec<f64> = nu.weights.iter().map(|w| w * atoms).collect();
        if counts.iter().all(|c| (c - c.round()).abs() <= 1e-6 && c.round() >= 1.0) {
            let rounded: Vec<usize> = counts.iter().map(|c| c.round() as usize).collect();
            if rounded.iter().sum::<usize>() == 1usize << level {
                break rounded;
            }
        }
        if level == MAX_LEVEL {
            return Err(Error::Capacity(format!(
                "target weights are not dyadic at any level ≤ {MAX_LEVEL}"
            )));
        }
        level += 1;
    };
    let extra = level - m;
    let rep = 1usize << extra;
    // optimal plan between the (unaggregated) atoms of X and ν
    let n_atoms = x.len();
    let mut cost = Mat::zeros(n_atoms, nu.len());
    for i in 0..n_atoms {
        for j in 0..nu.len() {
            cost[(i, j)] = dist(x.value(i), &nu.points[j]).powf(p);
        }
    }
    let atom_w = vec![x.space().atom_weight(); n_atoms];
    let (plan, _) = transport_lp(&atom_w, &nu.weights, &cost)?;
    // a basic solution of a transportation problem with marginals on the
    // 1/2^level lattice stays on that lattice; snap and distribute
    let scale = (1usize << level) as f64;
    let mut values: Vec<Vector> = Vec::with_capacity(1usize << level);
    for i in 0..n_atoms {
        let mut assigned = 0usize;
        for j in 0..nu.len() {
            let units_f = plan[(i, j)] * scale;
            let units = units_f.round() as usize;
            if (units_f - units as f64).abs() > 1e-6 {
                return Err(Error::InvalidInput(
                    "transport plan left the dyadic lattice (numerically degenerate input)"
                        .into(),
                ));
            }
            for _ in 0..units {
                values.push(Vector::new(nu.points[j].clone())?);
            }
            assigned += units;
        }
        if assigned != rep {
            return Err(Error::InvalidInput(format!(
                "plan row {i} fills {assigned} of {rep} subatoms"
            )));
        }
    }
    let _ = counts;
    EmpiricalSample::new(DyadicSpace::new(level)?, x.dim(), values)
}

/// `L^p` distance between two samples on a common space (values compared
/// atom by atom after refining to the finer level).
pub fn sample_distance(p: f64, a: &EmpiricalSample, b: &EmpiricalSample) -> Result<f64> {
    let la = a.space().level();
    let lb = b.space().level();
    let (ar, br) = if la < lb {
        (a.refine(lb - la)?, b.clone())
    } else {
        (a.clone(), b.refine(la - lb)?)
    };
    if ar.dim() != br.dim() {
        return Err(Error::DimensionMismatch(
            "samples differ in dimension".into(),
        ));
    }
    let w = ar.space().atom_weight();
    let total: f64 = (0..ar.len())
        .map(|i| dist(ar.value(i), br.value(i)).powf(p) * w)
        .sum();
    Ok(total.powf(1.0 / p))
}

/// Finds a permutation `g` with `(X'∘g, Y'∘g) = (X, Y)` as row multisets
/// (within 1e-9 per row). Rejects pairs with different joint laws, naming
/// the first unmatched row.
pub fn align_same_law(
    x: &EmpiricalSample,
    y: Option<&EmpiricalSample>,
    xp: &EmpiricalSample,
    yp: Option<&EmpiricalSample>,
) -> Result<Permutation> {
    if y.is_some() != yp.is_some() {
        return Err(Error::InvalidInput(
            "either both or neither pair carries a second component".into(),
        ));
    }
    let n = x.len();
    if xp.len() != n
        || y.map_or(false, |s| s.len() != n)
        || yp.map_or(false, |s| s.len() != n)
    {
        return Err(Error::DimensionMismatch(
            "all samples must live on one space".into(),
        ));
    }
    let row = |s: &EmpiricalSample, extra: Option<&EmpiricalSample>, i: usize| -> Vec<f64> {
        let mut r = s.value(i).to_vec();
        if let Some(e) = extra {
            r.extend_from_slice(e.value(i));
        }
        r
    };
    let rows_a: Vec<Vec<f64>> = (0..n).map(|i| row(x, y, i)).collect();
    let rows_b: Vec<Vec<f64>> = (0..n).map(|i| row(xp, yp, i)).collect();
    let close = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .all(|(s, t)| (s - t).abs() <= 1e-9)
    };
    // sort both row sets; identical laws then match rank by rank
    let sorted_idx = |rows: &[Vec<f64>]| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| {
            rows[i]
                .iter()
                .map(|t| t.to_bits() as i64 ^ (((t.to_bits() as i64) >> 63) & 0x7fffffffffffffff))
                .cmp(rows[j].iter().map(|t| {
                    t.to_bits() as i64 ^ (((t.to_bits() as i64) >> 63) & 0x7fffffffffffffff)
                }))
        });
        idx
    };
    let ia = sorted_idx(&rows_a);
    let ib = sorted_idx(&rows_b);
    let mut map = vec![0usize; n];
    let mut sorted_ok = true;
    for r in 0..n {
        if close(&rows_a[ia[r]], &rows_b[ib[r]]) {
            map[ia[r]] = ib[r];
        } else {
            sorted_ok = false;
            break;
        }
    }
    if sorted_ok {
        return Permutation::new(map);
    }
    // near-ties can sort differently; fall back to explicit matching
    match perfect_matching(n, |i, j| close(&rows_a[i], &rows_b[j])) {
        Ok(m) => Permutation::new(m),
        Err(row_idx) => Err(Error::LawMismatch {
            row: rows_a[row_idx].clone(),
        }),
    }
}

/// Rationalizes `t ≥ 0` as `p/q` with `q ≤ max_den` and error ≤ 1e-9, by
/// continued fractions. Returns the denominator.
fn rational_denominator(t: f64, max_den: u64) -> Option<u64> {
    let mut x = t;
    let (mut p0, mut q0, mut p1, mut q1): (i64, i64, i64, i64) = (0, 1, 1, 0);
    for _ in 0..64 {
        let a = x.floor();
        let p2 = a as i64 * p1 + p0;
        let q2 = a as i64 * q1 + q0;
        if q2 as u64 > max_den || q2 < 0 {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        if (t - p1 as f64 / q1 as f64).abs() <= 1e-9 {
            return Some(q1 as u64);
        }
        let rem = x - a;
        if rem.abs() < 1e-12 {
            break;
        }
        x = 1.0 / rem;
    }
    if (t - p1 as f64 / q1 as f64).abs() <= 1e-9 && q1 > 0 {
        Some(q1 as u64)
    } else {
        None
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Birkhoff decomposition of a rational coupling into permutation couplings:
/// weights `w_t` summing to 1 with `Σ w_t · (P_t/N) = B` exactly (within
/// 1e-9), at most `N² − 2N + 2` terms, by iterated matching extraction.
pub fn birkhoff_decompose(b: &DoublyStochastic) -> Result<Vec<(f64, Permutation)>> {
    let n = b.order();
    const MAX_DEN: u64 = 1_000_000;
    let mut q: u64 = 1;
    for i in 0..n {
        for j in 0..n {
            let den = rational_denominator(b.entry(i, j).max(0.0), MAX_DEN).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "entry ({i}, {j}) is not rational with denominator ≤ {MAX_DEN}"
                ))
            })?;
            q = q / gcd(q, den) * den;
            if q > MAX_DEN {
                return Err(Error::InvalidInput(format!(
                    "common denominator exceeds {MAX_DEN}"
                )));
            }
        }
    }
    // integer matrix with row/col sums q/N
    let row_sum_f = q as f64 / n as f64;
    if (row_sum_f - row_sum_f.round()).abs() > 1e-9 {
        // marginal 1/N is not representable over q; scale up by N
        q *= n as u64;
        if q > MAX_DEN {
            return Err(Error::InvalidInput(format!(
                "common denominator exceeds {MAX_DEN}"
            )));
        }
    }
    let s = q / n as u64;
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let units = b.entry(i, j) * q as f64;
            let r = units.round();
            if (units - r).abs() > 1e-6 {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) is not a multiple of 1/{q}"
                )));
            }
            a[(i, j)] = r;
        }
    }
    let mut out: Vec<(f64, Permutation)> = Vec::new();
    let mut remaining = s as f64;
    while remaining > 0.5 {
        let m = perfect_matching(n, |r, c| a[(r, c)] > 0.5).map_err(|row| {
            Error::InvalidInput(format!(
                "numerically broken doubly-stochasticity: no system through row {row}"
            ))
        })?;
        let take = m
            .iter()
            .enumerate()
            .map(|(r, &c)| a[(r, c)])
            .fold(f64::INFINITY, f64::min);
        for (r, &c) in m.iter().enumerate() {
            a[(r, c)] -= take;
        }
        out.push((take / s as f64, Permutation::new(m)?));
        remaining -= take;
        if out.len() > n * n {
            return Err(Error::InvalidInput(
                "decomposition failed to terminate".into(),
            ));
        }
    }
    Ok(out)
}
