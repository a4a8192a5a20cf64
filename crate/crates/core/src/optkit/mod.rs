//! Self-contained dense convex-optimization kernel.
//!
//! Provides the linear and quadratic programming, simplex projection, grid
//! Legendre–Fenchel transform, and convex-hull membership primitives used by
//! every other module. Instances are tiny (≲ 100 variables), so the solvers
//! are written for determinism and exactness of active-set identification
//! rather than speed: the LP is a dense two-phase simplex under Bland's rule,
//! the QP a primal active-set method over equality-reduced subproblems.

mod grid;
mod qp;
mod simplex;

pub use grid::{grid_conjugate, Grid, GridFn};
pub use qp::{solve_qp, QuadraticProgram};
pub use simplex::{solve_lp, LinearProgram};

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Terminal state of an LP/QP solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Outcome of a solver call.
///
/// `status == Optimal` guarantees the KKT residual is at or below the
/// solver's configured tolerance; otherwise `certificate` carries a Farkas
/// witness (infeasible) or an unbounded ray in the original variables.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub value: f64,
    pub x: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub certificate: Option<Vec<f64>>,
}

/// Per-variable bounds; `None` means unbounded on that side.
pub type Bounds = Vec<(Option<f64>, Option<f64>)>;

pub(crate) fn check_system_dims(
    n: usize,
    a_eq: &Mat,
    b_eq: &[f64],
    a_ub: &Mat,
    b_ub: &[f64],
    bounds: &Bounds,
) -> Result<()> {
    if a_eq.nrows() != b_eq.len() || a_ub.nrows() != b_ub.len() {
        return Err(Error::DimensionMismatch(
            "constraint matrix and rhs row counts differ".into(),
        ));
    }
    if (a_eq.nrows() > 0 && a_eq.ncols() != n) || (a_ub.nrows() > 0 && a_ub.ncols() != n) {
        return Err(Error::DimensionMismatch(
            "constraint matrix column count differs from variable count".into(),
        ));
    }
    if bounds.len() != n {
        return Err(Error::DimensionMismatch(
            "bounds length differs from variable count".into(),
        ));
    }
    Ok(())
}

/// Euclidean projection of `w` onto the unit simplex `{x ≥ 0, Σx = 1}`.
///
/// Sort-based exact algorithm; O(n log n).
pub fn project_simplex(w: &[f64]) -> Result<Vec<f64>> {
    if w.is_empty() {
        return Err(Error::InvalidInput("cannot project an empty vector".into()));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("entries must be finite".into()));
    }
    let mut u = w.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let cand = (cumsum - 1.0) / (j as f64 + 1.0);
        if uj - cand > 0.0 {
            theta = cand;
        }
    }
    Ok(w.iter().map(|&x| (x - theta).max(0.0)).collect())
}

/// Minimal l1 gap `‖Σ λ_i g_i − point‖₁` over simplex weights λ: zero (up to
/// LP tolerance) exactly on the convex hull of the generators.
pub fn hull_gap(point: &[f64], generators: &[Vec<f64>]) -> Result<f64> {
    hull_solve(point, generators).map(|(gap, _)| gap)
}

/// Tests whether `point` lies in the convex hull of `generators`.
///
/// Minimizes the l1 gap `‖Σ λ_i g_i − point‖₁` over simplex weights λ with a
/// single LP; membership holds when the gap is at most `tol`. Returns the
/// weights on success.
pub fn hull_membership(
    point: &[f64],
    generators: &[Vec<f64>],
    tol: f64,
) -> Result<(bool, Option<Vec<f64>>)> {
    let (gap, weights) = hull_solve(point, generators)?;
    if gap <= tol {
        Ok((true, Some(weights)))
    } else {
        Ok((false, None))
    }
}

fn hull_solve(point: &[f64], generators: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    if generators.is_empty() {
        return Err(Error::InvalidInput("empty generator list".into()));
    }
    let d = point.len();
    if generators.iter().any(|g| g.len() != d) {
        return Err(Error::DimensionMismatch(
            "generator dimension differs from point".into(),
        ));
    }
    let n = generators.len();
    // variables: λ_0..λ_{n-1}, t_0..t_{d-1}
    let nv = n + d;
    let mut cost = vec![0.0; nv];
    for tj in cost.iter_mut().skip(n) {
        *tj = 1.0;
    }
    let mut eq_rows = vec![vec![0.0; nv]];
    for lam in eq_rows[0].iter_mut().take(n) {
        *lam = 1.0;
    }
    let b_eq = vec![1.0];
    let mut ub_rows = Vec::with_capacity(2 * d);
    let mut b_ub = Vec::with_capacity(2 * d);
    for j in 0..d {
        // Σ λ_i g_i[j] − t_j ≤ p_j
        let mut row = vec![0.0; nv];
        for (i, g) in generators.iter().enumerate() {
            row[i] = g[j];
        }
        row[n + j] = -1.0;
        ub_rows.push(row.clone());
        b_ub.push(point[j]);
        // −Σ λ_i g_i[j] − t_j ≤ −p_j
        let mut neg = row;
        for v in neg.iter_mut().take(n) {
            *v = -*v;
        }
        ub_rows.push(neg);
        b_ub.push(-point[j]);
    }
    let bounds: Bounds = (0..nv).map(|_| (Some(0.0), None)).collect();
    let lp = LinearProgram::new(
        cost,
        Mat::from_rows(&eq_rows)?,
        b_eq,
        Mat::from_rows(&ub_rows)?,
        b_ub,
        bounds,
    )?;
    let report = solve_lp(&lp)?;
    if report.status != SolveStatus::Optimal {
        return Err(Error::InvalidInput(format!(
            "hull membership LP did not solve: {:?}",
            report.status
        )));
    }
    Ok((report.value, report.x[..n].to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn simplex_projection_examples() {
        let p = project_simplex(&[0.2, 0.8]).unwrap();
        assert_abs_diff_eq!(p[0], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.8, epsilon = 1e-12);

        let p = project_simplex(&[2.0, 0.0]).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-12);

        let p = project_simplex(&[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn simplex_projection_rejects_empty() {
        assert!(project_simplex(&[]).is_err());
    }

    #[test]
    fn simplex_projection_variational_inequality() {
        // ⟨w − w*, input − w*⟩ ≤ 1e-10 for feasible w
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(2..6);
            let input: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let star = project_simplex(&input).unwrap();
            // random simplex point
            let raw: Vec<f64> = (0..n).map(|_| -f64::ln(rng.gen_range(1e-9..1.0))).collect();
            let s: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let lhs: f64 = (0..n)
                .map(|i| (w[i] - star[i]) * (input[i] - star[i]))
                .sum();
            assert!(lhs <= 1e-10, "variational inequality violated: {lhs}");
        }
    }

    #[test]
    fn hull_membership_vertex_and_midpoint() {
        let gens = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let (inside, w) = hull_membership(&[0.0, 0.0], &gens, 1e-7).unwrap();
        assert!(inside);
        let w = w.unwrap();
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-7);

        let (inside, w) = hull_membership(&[0.5, 0.0], &gens, 1e-7).unwrap();
        assert!(inside);
        let w = w.unwrap();
        assert_abs_diff_eq!(w[1], 0.5, epsilon = 1e-7);

        let (inside, w) = hull_membership(&[2.0, 2.0], &gens, 1e-7).unwrap();
        assert!(!inside);
        assert!(w.is_none());
    }

    #[test]
    fn hull_membership_dimension_mismatch() {
        let gens = vec![vec![0.0, 0.0]];
        assert!(hull_membership(&[0.0], &gens, 1e-7).is_err());
    }
}
