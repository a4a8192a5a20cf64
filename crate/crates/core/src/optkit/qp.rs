//! Primal active-set method for linearly constrained convex QPs.
//!
//! Solves `min ½xᵀQx + cᵀx` subject to equalities, inequalities and bounds,
//! with `Q` symmetric positive semidefinite (zero eigenvalues accepted). Each
//! iteration reduces to an equality-constrained subproblem on the working
//! set, solved in the null space of the active constraints; the reduced
//! Hessian is eigen-decomposed so that flat directions are either followed as
//! descent rays or ignored as null components. All tie-breaking picks the
//! lowest index, so the iteration path is deterministic.

use super::{check_system_dims, solve_lp, Bounds, LinearProgram, SolveReport, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, ColPivQr, Mat};

const KKT_TOL: f64 = 1e-9;
const MAX_ITERS: usize = 10_000;

/// `min ½xᵀQx + cᵀx` subject to `A_eq x = b_eq`, `A_ub x ≤ b_ub`, bounds.
#[derive(Debug, Clone)]
pub struct QuadraticProgram {
    pub q: Mat,
    pub cost: Vec<f64>,
    pub a_eq: Mat,
    pub b_eq: Vec<f64>,
    pub a_ub: Mat,
    pub b_ub: Vec<f64>,
    pub bounds: Bounds,
}

impl QuadraticProgram {
    /// Validates symmetry (within 1e-12) and positive semidefiniteness
    /// (eigenvalue floor −1e-9) of the quadratic cost.
    pub fn new(
        q: Mat,
        cost: Vec<f64>,
        a_eq: Mat,
        b_eq: Vec<f64>,
        a_ub: Mat,
        b_ub: Vec<f64>,
        bounds: Bounds,
    ) -> Result<Self> {
        let n = cost.len();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::DimensionMismatch(
                "quadratic matrix size differs from cost length".into(),
            ));
        }
        check_system_dims(n, &a_eq, &b_eq, &a_ub, &b_ub, &bounds)?;
        if !q.is_symmetric(1e-12) {
            return Err(Error::InvalidInput(
                "quadratic matrix must be symmetric within 1e-12".into(),
            ));
        }
        let (vals, _) = crate::linalg::sym_eigen(&q);
        if let Some(min) = vals.first() {
            if *min < -1e-9 {
                return Err(Error::InvalidInput(format!(
                    "quadratic matrix is not positive semidefinite (λ_min = {min:.3e})"
                )));
            }
        }
        Ok(QuadraticProgram {
            q,
            cost,
            a_eq,
            b_eq,
            a_ub,
            b_ub,
            bounds,
        })
    }

    /// Internal constructor for programs assembled by this crate, where the
    /// quadratic block is symmetric PSD by construction.
    pub(crate) fn new_unchecked(
        q: Mat,
        cost: Vec<f64>,
        a_eq: Mat,
        b_eq: Vec<f64>,
        a_ub: Mat,
        b_ub: Vec<f64>,
        bounds: Bounds,
    ) -> Self {
        debug_assert!(q.is_symmetric(1e-10));
        QuadraticProgram {
            q,
            cost,
            a_eq,
            b_eq,
            a_ub,
            b_ub,
            bounds,
        }
    }

    fn objective(&self, x: &[f64]) -> f64 {
        0.5 * dot(&self.q.matvec(x), x) + dot(&self.cost, x)
    }
}

/// Inequality system with bounds folded in as extra rows.
struct IneqSystem {
    g: Mat,
    h: Vec<f64>,
}

fn fold_bounds(qp: &QuadraticProgram) -> IneqSystem {
    let n = qp.cost.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut h = Vec::new();
    for i in 0..qp.a_ub.nrows() {
        rows.push(qp.a_ub.row(i).to_vec());
        h.push(qp.b_ub[i]);
    }
    for (j, &(lo, hi)) in qp.bounds.iter().enumerate() {
        if let Some(u) = hi {
            let mut r = vec![0.0; n];
            r[j] = 1.0;
            rows.push(r);
            h.push(u);
        }
        if let Some(l) = lo {
            let mut r = vec![0.0; n];
            r[j] = -1.0;
            rows.push(r);
            h.push(-l);
        }
    }
    let g = if rows.is_empty() {
        Mat::zeros(0, n)
    } else {
        Mat::from_rows(&rows).expect("rows share the variable dimension")
    };
    IneqSystem { g, h }
}

fn feasible_start(qp: &QuadraticProgram) -> Result<std::result::Result<Vec<f64>, SolveReport>> {
    let n = qp.cost.len();
    let lp = LinearProgram::new(
        vec![0.0; n],
        qp.a_eq.clone(),
        qp.b_eq.clone(),
        qp.a_ub.clone(),
        qp.b_ub.clone(),
        qp.bounds.clone(),
    )?;
    let r = solve_lp(&lp)?;
    match r.status {
        SolveStatus::Optimal => Ok(Ok(r.x)),
        SolveStatus::Infeasible => Ok(Err(SolveReport {
            status: SolveStatus::Infeasible,
            value: f64::INFINITY,
            x: vec![],
            kkt_residual: r.kkt_residual,
            iterations: r.iterations,
            certificate: r.certificate,
        })),
        other => Err(Error::InvalidInput(format!(
            "feasibility LP terminated with {other:?}"
        ))),
    }
}

enum Subproblem {
    /// minimizer step within the working-set plane
    Step(Vec<f64>),
    /// direction of linear, unbounded descent within the plane
    Ray(Vec<f64>),
}

/// Minimizes `½pᵀQp + gᵀp` over `{p : C p = 0}` via the null-space basis of
/// `C`. Returns a descent ray when the reduced Hessian is singular along a
/// direction with nonzero reduced gradient.
fn solve_subproblem(q: &Mat, g: &[f64], qr: &ColPivQr) -> Subproblem {
    let n = g.len();
    let z = qr.null_basis();
    let nz = z.ncols();
    if nz == 0 {
        return Subproblem::Step(vec![0.0; n]);
    }
    // H = ZᵀQZ, g_z = Zᵀg
    let mut h = Mat::zeros(nz, nz);
    let mut qz = Mat::zeros(n, nz);
    for j in 0..nz {
        let col: Vec<f64> = (0..n).map(|i| z[(i, j)]).collect();
        let qcol = q.matvec(&col);
        for i in 0..n {
            qz[(i, j)] = qcol[i];
        }
    }
    for i in 0..nz {
        for j in 0..nz {
            let mut s = 0.0;
            for r in 0..n {
                s += z[(r, i)] * qz[(r, j)];
            }
            h[(i, j)] = s;
        }
    }
    // symmetrize away roundoff
    for i in 0..nz {
        for j in (i + 1)..nz {
            let avg = 0.5 * (h[(i, j)] + h[(j, i)]);
            h[(i, j)] = avg;
            h[(j, i)] = avg;
        }
    }
    let mut gz = vec![0.0; nz];
    for j in 0..nz {
        let mut s = 0.0;
        for i in 0..n {
            s += z[(i, j)] * g[i];
        }
        gz[j] = s;
    }
    let (vals, vecs) = crate::linalg::sym_eigen(&h);
    let scale = vals.last().map(|v| v.abs()).unwrap_or(0.0).max(1.0);
    let eig_tol = 1e-10 * scale;
    let mut pz = vec![0.0; nz];
    for (k, &lam) in vals.iter().enumerate() {
        let v: Vec<f64> = (0..nz).map(|i| vecs[(i, k)]).collect();
        let coeff = dot(&v, &gz);
        if lam > eig_tol {
            axpy(-coeff / lam, &v, &mut pz);
        } else if coeff.abs() > 1e-8 * scale.sqrt() {
            // flat direction with slope: unbounded descent within the plane
            let sign = if coeff > 0.0 { -1.0 } else { 1.0 };
            let mut p = vec![0.0; n];
            for i in 0..n {
                for jj in 0..nz {
                    p[i] += z[(i, jj)] * sign * v[jj];
                }
            }
            return Subproblem::Ray(p);
        }
    }
    let mut p = vec![0.0; n];
    for i in 0..n {
        for jj in 0..nz {
            p[i] += z[(i, jj)] * pz[jj];
        }
    }
    Subproblem::Step(p)
}

/// Solves the QP by the primal active-set method. The returned report's
/// `status == Optimal` certifies a KKT residual at or below 1e-8.
pub fn solve_qp(qp: &QuadraticProgram) -> Result<SolveReport> {
    let n = qp.cost.len();
    let ineq = fold_bounds(qp);
    let m_eq = qp.a_eq.nrows();
    let m_in = ineq.g.nrows();

    let mut x = match feasible_start(qp)? {
        Ok(x0) => x0,
        Err(report) => return Ok(report),
    };

    // initial working set: active inequality rows, added in index order while
    // they keep the stacked constraint matrix full row rank
    let mut working: Vec<usize> = Vec::new();
    {
        let mut rows: Vec<Vec<f64>> = (0..m_eq).map(|i| qp.a_eq.row(i).to_vec()).collect();
        for i in 0..m_in {
            let slack = ineq.h[i] - dot(ineq.g.row(i), &x);
            if slack.abs() <= 1e-8 {
                let mut cand = rows.clone();
                cand.push(ineq.g.row(i).to_vec());
                let cmat = Mat::from_rows(&cand).expect("constraint rows share dimension");
                let qr = ColPivQr::new(&cmat.transpose(), 1e-11);
                if qr.rank == cand.len() {
                    rows = cand;
                    working.push(i);
                }
            }
        }
    }

    let build_c = |working: &[usize]| -> Mat {
        let mut rows: Vec<Vec<f64>> = (0..m_eq).map(|i| qp.a_eq.row(i).to_vec()).collect();
        for &i in working {
            rows.push(ineq.g.row(i).to_vec());
        }
        if rows.is_empty() {
            Mat::zeros(0, n)
        } else {
            Mat::from_rows(&rows).expect("constraint rows share dimension")
        }
    };

    let mut iterations = 0usize;
    while iterations < MAX_ITERS {
        iterations += 1;
        let mut g = qp.q.matvec(&x);
        axpy(1.0, &qp.cost, &mut g);
        let c = build_c(&working);
        let qr = ColPivQr::new(&c.transpose(), 1e-11);

        let sub = solve_subproblem(&qp.q, &g, &qr);
        let (p, is_ray) = match sub {
            Subproblem::Step(p) => (p, false),
            Subproblem::Ray(p) => (p, true),
        };

        if !is_ray && norm(&p) <= 1e-11 * (1.0 + norm(&x)) {
            // stationary on the working-set plane: check multipliers
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            let mu = qr.solve_min_norm(&neg_g);
            let mut drop_idx = None;
            for (k, &wi) in working.iter().enumerate() {
                if mu[m_eq + k] < -KKT_TOL {
                    drop_idx = Some((k, wi));
                    break; // lowest working-set index wins
                }
            }
            match drop_idx {
                None => {
                    return Ok(finish(qp, &ineq, &x, &working, &mu, iterations));
                }
                Some((k, _)) => {
                    working.remove(k);
                    continue;
                }
            }
        }

        // ratio test against inactive inequality rows
        let mut alpha_block: Option<(f64, usize)> = None;
        for i in 0..m_in {
            if working.contains(&i) {
                continue;
            }
            let s = dot(ineq.g.row(i), &p);
            if s > 1e-12 {
                let slack = (ineq.h[i] - dot(ineq.g.row(i), &x)).max(0.0);
                let a = slack / s;
                match alpha_block {
                    None => alpha_block = Some((a, i)),
                    Some((best, _)) if a < best - 1e-12 => alpha_block = Some((a, i)),
                    _ => {}
                }
            }
        }

        if is_ray {
            match alpha_block {
                None => {
                    return Ok(SolveReport {
                        status: SolveStatus::Unbounded,
                        value: f64::NEG_INFINITY,
                        x,
                        kkt_residual: f64::INFINITY,
                        iterations,
                        certificate: Some(p),
                    });
                }
                Some((a, i)) => {
                    axpy(a, &p, &mut x);
                    insert_sorted(&mut working, i);
                }
            }
        } else {
            let (alpha, blocker) = match alpha_block {
                Some((a, i)) if a < 1.0 => (a, Some(i)),
                _ => (1.0, None),
            };
            axpy(alpha, &p, &mut x);
            if let Some(i) = blocker {
                insert_sorted(&mut working, i);
            }
        }
    }

    let kkt = kkt_residual(qp, &ineq, &x, &working, &[]);
    Ok(SolveReport {
        status: SolveStatus::IterationLimit,
        value: qp.objective(&x),
        x,
        kkt_residual: kkt,
        iterations,
        certificate: None,
    })
}

fn insert_sorted(working: &mut Vec<usize>, i: usize) {
    match working.binary_search(&i) {
        Ok(_) => {}
        Err(pos) => working.insert(pos, i),
    }
}

fn kkt_residual(
    qp: &QuadraticProgram,
    ineq: &IneqSystem,
    x: &[f64],
    working: &[usize],
    mu: &[f64],
) -> f64 {
    let m_eq = qp.a_eq.nrows();
    let mut stat = qp.q.matvec(x);
    axpy(1.0, &qp.cost, &mut stat);
    if mu.len() == m_eq + working.len() {
        for i in 0..m_eq {
            axpy(mu[i], qp.a_eq.row(i), &mut stat);
        }
        for (k, &wi) in working.iter().enumerate() {
            axpy(mu[m_eq + k], ineq.g.row(wi), &mut stat);
        }
    }
    let stat_res = stat.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut primal = 0.0f64;
    for i in 0..m_eq {
        primal = primal.max((dot(qp.a_eq.row(i), x) - qp.b_eq[i]).abs());
    }
    for i in 0..ineq.g.nrows() {
        primal = primal.max(dot(ineq.g.row(i), x) - ineq.h[i]);
    }
    let mut dual = 0.0f64;
    let mut compl = 0.0f64;
    if mu.len() == m_eq + working.len() {
        for (k, &wi) in working.iter().enumerate() {
            dual = dual.max(-mu[m_eq + k]);
            compl = compl.max((mu[m_eq + k] * (dot(ineq.g.row(wi), x) - ineq.h[wi])).abs());
        }
    }
    stat_res.max(primal).max(dual).max(compl)
}

fn finish(
    qp: &QuadraticProgram,
    ineq: &IneqSystem,
    x: &[f64],
    working: &[usize],
    mu: &[f64],
    iterations: usize,
) -> SolveReport {
    let kkt = kkt_residual(qp, ineq, x, working, mu);
    let status = if kkt <= 1e-8 {
        SolveStatus::Optimal
    } else {
        SolveStatus::IterationLimit
    };
    SolveReport {
        status,
        value: qp.objective(x),
        x: x.to_vec(),
        kkt_residual: kkt,
        iterations,
        certificate: None,
    }
}
