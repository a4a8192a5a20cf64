//! Dense two-phase simplex under Bland's rule.
//!
//! The general form accepted here (equalities, inequalities, per-variable
//! bounds, free variables) is reduced to standard form `min cᵀx, Ax = b,
//! x ≥ 0` by shifting, mirroring or splitting variables and adding slacks.
//! Bland's rule makes every pivot choice index-deterministic, so results are
//! reproducible bit for bit and cycling is impossible.

use super::{check_system_dims, Bounds, SolveReport, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg::Mat;

const RC_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

/// `min cᵀx` subject to `A_eq x = b_eq`, `A_ub x ≤ b_ub` and variable bounds.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub a_eq: Mat,
    pub b_eq: Vec<f64>,
    pub a_ub: Mat,
    pub b_ub: Vec<f64>,
    pub bounds: Bounds,
}

impl LinearProgram {
    pub fn new(
        cost: Vec<f64>,
        a_eq: Mat,
        b_eq: Vec<f64>,
        a_ub: Mat,
        b_ub: Vec<f64>,
        bounds: Bounds,
    ) -> Result<Self> {
        check_system_dims(cost.len(), &a_eq, &b_eq, &a_ub, &b_ub, &bounds)?;
        Ok(LinearProgram {
            cost,
            a_eq,
            b_eq,
            a_ub,
            b_ub,
            bounds,
        })
    }

    /// Convenience: no equality block.
    pub fn inequality_form(
        cost: Vec<f64>,
        a_ub: Mat,
        b_ub: Vec<f64>,
        bounds: Bounds,
    ) -> Result<Self> {
        let n = cost.len();
        LinearProgram::new(cost, Mat::zeros(0, n), vec![], a_ub, b_ub, bounds)
    }
}

/// How an original variable maps into the standard-form variable vector.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = y + shift
    Shifted { col: usize, shift: f64 },
    /// x = hi − y
    Mirrored { col: usize, hi: f64 },
    /// x = y⁺ − y⁻
    Split { pos: usize, neg: usize },
}

struct StandardForm {
    a: Mat,
    b: Vec<f64>,
    c: Vec<f64>,
    maps: Vec<VarMap>,
    n_std: usize,
}

fn to_standard_form(lp: &LinearProgram) -> StandardForm {
    let n = lp.cost.len();
    let mut maps = Vec::with_capacity(n);
    let mut n_std = 0usize;
    // extra upper-bound rows generated by two-sided bounds
    let mut extra_rows: Vec<(usize, f64)> = Vec::new(); // (std col, ub value)
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        match (lo, hi) {
            (Some(l), Some(h)) => {
                maps.push(VarMap::Shifted { col: n_std, shift: l });
                extra_rows.push((n_std, h - l));
                n_std += 1;
            }
            (Some(l), None) => {
                maps.push(VarMap::Shifted { col: n_std, shift: l });
                n_std += 1;
            }
            (None, Some(h)) => {
                maps.push(VarMap::Mirrored { col: n_std, hi: h });
                n_std += 1;
            }
            (None, None) => {
                maps.push(VarMap::Split {
                    pos: n_std,
                    neg: n_std + 1,
                });
                n_std += 2;
            }
        }
        let _ = j;
    }
    let m_eq = lp.a_eq.nrows();
    let m_ub = lp.a_ub.nrows() + extra_rows.len();
    let m = m_eq + m_ub;
    let total_cols = n_std + m_ub; // slacks for every inequality row
    let mut a = Mat::zeros(m, total_cols);
    let mut b = vec![0.0; m];
    let mut c = vec![0.0; total_cols];

    let emit = |row: usize,
                    coeffs: &dyn Fn(usize) -> f64,
                    rhs: f64,
                    a: &mut Mat,
                    b: &mut Vec<f64>| {
        let mut r = rhs;
        for (j, map) in maps.iter().enumerate() {
            let cj = coeffs(j);
            if cj == 0.0 {
                continue;
            }
            match *map {
                VarMap::Shifted { col, shift } => {
                    a[(row, col)] += cj;
                    r -= cj * shift;
                }
                VarMap::Mirrored { col, hi } => {
                    a[(row, col)] -= cj;
                    r -= cj * hi;
                }
                VarMap::Split { pos, neg } => {
                    a[(row, pos)] += cj;
                    a[(row, neg)] -= cj;
                }
            }
        }
        b[row] = r;
    };

    for i in 0..m_eq {
        let row = lp.a_eq.row(i).to_vec();
        emit(i, &|j| row[j], lp.b_eq[i], &mut a, &mut b);
    }
    for i in 0..lp.a_ub.nrows() {
        let row = lp.a_ub.row(i).to_vec();
        emit(m_eq + i, &|j| row[j], lp.b_ub[i], &mut a, &mut b);
        a[(m_eq + i, n_std + i)] = 1.0;
    }
    for (k, &(col, ub)) in extra_rows.iter().enumerate() {
        let row_idx = m_eq + lp.a_ub.nrows() + k;
        a[(row_idx, col)] = 1.0;
        b[row_idx] = ub;
        a[(row_idx, n_std + lp.a_ub.nrows() + k)] = 1.0;
    }
    // objective in standard variables (constant offset handled by caller)
    for (j, map) in maps.iter().enumerate() {
        let cj = lp.cost[j];
        match *map {
            VarMap::Shifted { col, .. } => c[col] += cj,
            VarMap::Mirrored { col, .. } => c[col] -= cj,
            VarMap::Split { pos, neg } => {
                c[pos] += cj;
                c[neg] -= cj;
            }
        }
    }
    // normalize b ≥ 0
    for i in 0..m {
        if b[i] < 0.0 {
            b[i] = -b[i];
            for j in 0..total_cols {
                a[(i, j)] = -a[(i, j)];
            }
        }
    }
    StandardForm {
        a,
        b,
        c,
        maps,
        n_std,
    }
}

fn recover(maps: &[VarMap], y: &[f64]) -> Vec<f64> {
    maps.iter()
        .map(|m| match *m {
            VarMap::Shifted { col, shift } => y[col] + shift,
            VarMap::Mirrored { col, hi } => hi - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect()
}

fn recover_direction(maps: &[VarMap], dy: &[f64]) -> Vec<f64> {
    maps.iter()
        .map(|m| match *m {
            VarMap::Shifted { col, .. } => dy[col],
            VarMap::Mirrored { col, .. } => -dy[col],
            VarMap::Split { pos, neg } => dy[pos] - dy[neg],
        })
        .collect()
}

/// Tableau with basis bookkeeping; columns `0..ncols` are structural+slack,
/// columns `ncols..ncols+m` are the phase-1 artificials.
struct Tableau {
    t: Mat, // (m+1) × (ncols + m + 1); last row = reduced costs, last col = rhs
    basis: Vec<usize>,
    m: usize,
    ncols: usize,
}

impl Tableau {
    fn new(a: &Mat, b: &[f64]) -> Self {
        let m = a.nrows();
        let ncols = a.ncols();
        let width = ncols + m + 1;
        let mut t = Mat::zeros(m + 1, width);
        for i in 0..m {
            for j in 0..ncols {
                t[(i, j)] = a[(i, j)];
            }
            t[(i, ncols + i)] = 1.0;
            t[(i, width - 1)] = b[i];
        }
        Tableau {
            t,
            basis: (ncols..ncols + m).collect(),
            m,
            ncols,
        }
    }

    fn rhs(&self, i: usize) -> f64 {
        let w = self.t.ncols();
        self.t[(i, w - 1)]
    }

    fn set_costs(&mut self, c: &[f64], allow_artificial: bool) {
        // reduced cost row: c_j − c_B B⁻¹ a_j, computed from the current basis
        let w = self.t.ncols();
        for j in 0..w {
            self.t[(self.m, j)] = 0.0;
        }
        for j in 0..self.ncols {
            self.t[(self.m, j)] = c[j];
        }
        if allow_artificial {
            for j in self.ncols..(w - 1) {
                self.t[(self.m, j)] = 1.0;
            }
        }
        for i in 0..self.m {
            let cb = if self.basis[i] < self.ncols {
                c[self.basis[i]]
            } else if allow_artificial {
                1.0
            } else {
                0.0
            };
            if cb != 0.0 {
                for j in 0..w {
                    let v = self.t[(i, j)];
                    if v != 0.0 {
                        self.t[(self.m, j)] -= cb * v;
                    }
                }
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.t.ncols();
        let p = self.t[(row, col)];
        for j in 0..w {
            self.t[(row, j)] /= p;
        }
        for i in 0..=self.m {
            if i == row {
                continue;
            }
            let f = self.t[(i, col)];
            if f != 0.0 {
                for j in 0..w {
                    let v = self.t[(row, j)];
                    self.t[(i, j)] -= f * v;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule iteration over the column set `cols`. Returns
    /// `Ok(pivots)` at optimality or `Err(col)` with an unbounded column.
    fn run(&mut self, cols: &[usize], budget: &mut usize) -> std::result::Result<(), usize> {
        loop {
            // entering: lowest-index column with negative reduced cost
            let mut entering = None;
            for &j in cols {
                if self.t[(self.m, j)] < -RC_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                return Ok(());
            };
            // leaving: min ratio, ties broken by lowest basis variable index
            let mut best: Option<(f64, usize, usize)> = None; // (ratio, basis var, row)
            for i in 0..self.m {
                let aij = self.t[(i, col)];
                if aij > 1e-9 {
                    let ratio = self.rhs(i) / aij;
                    let key = (ratio, self.basis[i]);
                    match best {
                        None => best = Some((key.0, key.1, i)),
                        Some((r, bv, _)) => {
                            if key.0 < r - 1e-12 || (key.0 <= r + 1e-12 && key.1 < bv) {
                                best = Some((key.0, key.1, i));
                            }
                        }
                    }
                }
            }
            let Some((_, _, row)) = best else {
                return Err(col);
            };
            self.pivot(row, col);
            *budget -= 1;
            if *budget == 0 {
                return Ok(()); // caller checks optimality and reports the cap
            }
        }
    }
}

/// Solves the LP. Infeasibility and unboundedness are certified through the
/// report's `certificate` field (Farkas dual, or a feasible ray in the
/// original variables).
pub fn solve_lp(lp: &LinearProgram) -> Result<SolveReport> {
    for c in &lp.cost {
        if !c.is_finite() {
            return Err(Error::InvalidInput("LP cost must be finite".into()));
        }
    }
    let sf = to_standard_form(lp);
    let m = sf.a.nrows();
    let total = sf.a.ncols();
    let mut tab = Tableau::new(&sf.a, &sf.b);
    let structural: Vec<usize> = (0..total).collect();
    let mut budget = MAX_PIVOTS;

    // phase 1: minimize the artificial sum
    let zero_costs = vec![0.0; total];
    tab.set_costs(&zero_costs, true);
    let r = tab.run(&structural, &mut budget);
    debug_assert!(r.is_ok(), "phase 1 is bounded below by zero");
    let phase1_val: f64 = (0..m)
        .filter(|&i| tab.basis[i] >= total)
        .map(|i| tab.rhs(i))
        .sum();
    if phase1_val > 1e-7 {
        // Farkas witness: y with yᵀA ≤ 0, yᵀb > 0, read off the phase-1 duals
        let y: Vec<f64> = (0..m)
            .map(|i| 1.0 - tab.t[(m, total + i)])
            .collect();
        return Ok(SolveReport {
            status: SolveStatus::Infeasible,
            value: f64::INFINITY,
            x: vec![],
            kkt_residual: phase1_val,
            iterations: MAX_PIVOTS - budget,
            certificate: Some(y),
        });
    }
    // drive lingering artificials out of the basis where possible, pivoting
    // on the largest available element; rows with no usable pivot are
    // redundant and get neutralized so later pivots cannot touch them
    for i in 0..m {
        if tab.basis[i] >= total {
            let mut best: Option<(f64, usize)> = None;
            for j in 0..total {
                let a = tab.t[(i, j)].abs();
                if a > best.map_or(1e-7, |(b, _)| b) {
                    best = Some((a, j));
                }
            }
            match best {
                Some((_, j)) => tab.pivot(i, j),
                None => {
                    let w = tab.t.ncols();
                    let art = tab.basis[i];
                    for j in 0..w {
                        tab.t[(i, j)] = 0.0;
                    }
                    tab.t[(i, art)] = 1.0;
                }
            }
        }
    }

    // phase 2
    tab.set_costs(&sf.c, false);
    let outcome = tab.run(&structural, &mut budget);
    let iterations = MAX_PIVOTS - budget;

    let mut y_std = vec![0.0; total];
    for i in 0..m {
        if tab.basis[i] < total {
            y_std[tab.basis[i]] = tab.rhs(i);
        }
    }
    if let Err(col) = outcome {
        // unbounded ray: entering column decreases objective forever
        let mut dy = vec![0.0; total];
        dy[col] = 1.0;
        for i in 0..m {
            if tab.basis[i] < total {
                dy[tab.basis[i]] = -tab.t[(i, col)];
            }
        }
        let ray = recover_direction(&sf.maps, &dy[..sf.n_std]);
        return Ok(SolveReport {
            status: SolveStatus::Unbounded,
            value: f64::NEG_INFINITY,
            x: recover(&sf.maps, &y_std[..sf.n_std]),
            kkt_residual: f64::INFINITY,
            iterations,
            certificate: Some(ray),
        });
    }

    let x = recover(&sf.maps, &y_std[..sf.n_std]);
    let value: f64 = lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();

    // KKT residual: primal feasibility, dual feasibility, duality gap
    let dual: Vec<f64> = (0..m).map(|i| -tab.t[(m, total + i)]).collect();
    let mut primal_res: f64 = 0.0;
    for i in 0..m {
        let ax: f64 = (0..total).map(|j| sf.a[(i, j)] * y_std[j]).sum();
        primal_res = primal_res.max((ax - sf.b[i]).abs());
    }
    for v in &y_std {
        primal_res = primal_res.max(-v);
    }
    let mut dual_res: f64 = 0.0;
    for j in 0..total {
        let ya: f64 = (0..m).map(|i| dual[i] * sf.a[(i, j)]).sum();
        dual_res = dual_res.max(ya - sf.c[j]);
    }
    let dual_obj: f64 = (0..m).map(|i| dual[i] * sf.b[i]).sum();
    let std_obj: f64 = (0..total).map(|j| sf.c[j] * y_std[j]).sum();
    let gap = (std_obj - dual_obj).abs();
    let kkt = primal_res.max(dual_res).max(gap);

    let status = if budget == 0 || kkt > 1e-7 {
        SolveStatus::IterationLimit
    } else {
        SolveStatus::Optimal
    };
    Ok(SolveReport {
        status,
        value,
        x,
        kkt_residual: kkt,
        iterations,
        certificate: None,
    })
}
