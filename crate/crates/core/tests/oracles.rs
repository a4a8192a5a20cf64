//! Independent-oracle cross-checks: brute-force vertex enumeration against
//! the simplex, nested (non-inlined) evaluation against the joint extension
//! QP, scalar line search against the joint resolvent QP, and property tests
//! for the projection and transport primitives.

use invmono::fitzpatrick::{ExtensionProgram, KernelPsi, MonotoneGraph};
use invmono::linalg::{dist, dot, Mat, Vector};
use invmono::optkit::{
    grid_conjugate, hull_gap, project_simplex, solve_lp, Grid, GridFn, LinearProgram, SolveStatus,
};
use proptest::prelude::*;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;

/// Brute-force LP oracle: enumerate all vertices (bases) of
/// `{A_ub x ≤ b_ub}` in R^n and take the best feasible objective.
fn brute_force_lp_min(cost: &[f64], a_ub: &Mat, b_ub: &[f64]) -> Option<f64> {
    let n = cost.len();
    let m = a_ub.nrows();
    let mut best: Option<f64> = None;
    let mut combo = Vec::new();
    enumerate_combinations(m, n, &mut combo, &mut |rows: &[usize]| {
        let mut sys = Mat::zeros(n, n);
        let mut rhs = vec![0.0; n];
        for (k, &r) in rows.iter().enumerate() {
            for j in 0..n {
                sys[(k, j)] = a_ub[(r, j)];
            }
            rhs[k] = b_ub[r];
        }
        if let Some(x) = invmono::linalg::lu_solve(&sys, &rhs) {
            let feasible = (0..m).all(|r| dot(a_ub.row(r), &x) <= b_ub[r] + 1e-8);
            if feasible {
                let v = dot(cost, &x);
                best = Some(match best {
                    None => v,
                    Some(b) => b.min(v),
                });
            }
        }
    });
    best
}

fn enumerate_combinations(m: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    let start = cur.last().map_or(0, |&l| l + 1);
    for i in start..m {
        cur.push(i);
        enumerate_combinations(m, k, cur, f);
        cur.pop();
    }
}

#[test]
fn lp_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut solved = 0;
    while solved < 25 {
        let n = rng.gen_range(2..=3usize);
        let m = rng.gen_range(n + 1..=n + 5);
        // random rows plus a bounding box to keep the region compact
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        for _ in 0..m {
            rows.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
            rhs.push(rng.gen_range(0.5..2.0));
        }
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            rows.push(e.clone());
            rhs.push(5.0);
            for v in e.iter_mut() {
                *v = -*v;
            }
            rows.push(e);
            rhs.push(5.0);
        }
        let a_ub = Mat::from_rows(&rows).unwrap();
        let cost: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lp = LinearProgram::inequality_form(
            cost.clone(),
            a_ub.clone(),
            rhs.clone(),
            vec![(None, None); n],
        )
        .unwrap();
        let report = solve_lp(&lp).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        let oracle = brute_force_lp_min(&cost, &a_ub, &rhs).expect("bounded feasible region");
        assert!(
            (report.value - oracle).abs() <= 1e-8,
            "simplex {} vs vertex enumeration {}",
            report.value,
            oracle
        );
        solved += 1;
    }
}

/// Nested (non-inlined) evaluation of the kernel average: for a candidate
/// `z₁`, the inner pieces are evaluated by their standalone oracles (exact
/// finite max for `F`, its own LP for `f*`, the closed-form kernel), with
/// `z₂ = 2(x, v) − z₁` eliminated by the averaging constraint.
fn nested_rf_value(graph: &MonotoneGraph, x: &[f64], v: &[f64], x1: &[f64], v1: &[f64]) -> f64 {
    let d = graph.dim();
    let x2: Vec<f64> = (0..d).map(|j| 2.0 * x[j] - x1[j]).collect();
    let v2: Vec<f64> = (0..d).map(|j| 2.0 * v[j] - v1[j]).collect();
    if hull_gap(x1, &graph.primal_points()).unwrap() > 1e-9 {
        return f64::INFINITY;
    }
    let f1 = graph.fitzpatrick(x1, v1).unwrap();
    let f2 = graph.fstar(&v2, &x2).unwrap();
    if !f2.is_finite() {
        return f64::INFINITY;
    }
    let dx: Vec<f64> = (0..d).map(|j| x1[j] - x2[j]).collect();
    let dv: Vec<f64> = (0..d).map(|j| v1[j] - v2[j]).collect();
    let psi = KernelPsi::quadratic().eval(&dx, &dv);
    0.5 * f1 + 0.5 * f2 + 0.25 * psi
}

#[test]
fn rf_agrees_with_nested_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7001);
    for instance in 0..20 {
        let d = rng.gen_range(1..=2usize);
        let n = rng.gen_range(1..=4usize);
        let graph = random_monotone_graph(&mut rng, d, n);
        let prog = ExtensionProgram::plain(graph.clone()).unwrap();
        // random in-hull query
        let (x, v) = random_in_hull_query(&mut rng, &graph);
        let Some(witness) = prog.rf_witness(&x, &v).unwrap() else {
            panic!("in-hull query must be feasible (instance {instance})");
        };
        // 1. value consistency at the optimizer
        let at_opt = nested_rf_value(&graph, &x, &v, &witness.z1.0, &witness.z1.1);
        assert!(
            (at_opt - witness.value).abs() <= 1e-6,
            "instance {instance}: nested value {at_opt} vs QP {}",
            witness.value
        );
        // 2. optimality: no sampled z₁ goes below the QP optimum
        for _ in 0..20 {
            let mut w: Vec<f64> = (0..graph.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let s: f64 = w.iter().sum();
            for t in w.iter_mut() {
                *t /= s;
            }
            let mut x1 = vec![0.0; d];
            for (wk, (xk, _)) in w.iter().zip(graph.pairs()) {
                for j in 0..d {
                    x1[j] += wk * xk[j];
                }
            }
            let v1: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let probe = nested_rf_value(&graph, &x, &v, &x1, &v1);
            assert!(
                probe >= witness.value - 1e-6,
                "instance {instance}: sampled nested value {probe} beats the QP optimum {}",
                witness.value
            );
        }
    }
}

fn random_monotone_graph(rng: &mut ChaCha8Rng, d: usize, n: usize) -> MonotoneGraph {
    // v = (GᵀG + S)x + b is monotone for any skew S
    let g = Mat::from_rows(
        &(0..d)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let mut m = g.transpose().matmul(&g);
    if d == 2 {
        let s = rng.gen_range(-1.0..1.0);
        m[(0, 1)] += s;
        m[(1, 0)] -= s;
    }
    let b: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let pairs: Vec<(Vector, Vector)> = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut v = m.matvec(&x);
            for (vi, bi) in v.iter_mut().zip(&b) {
                *vi += bi;
            }
            (Vector::new(x).unwrap(), Vector::new(v).unwrap())
        })
        .collect();
    MonotoneGraph::new(d, pairs).unwrap()
}

fn random_in_hull_query(rng: &mut ChaCha8Rng, graph: &MonotoneGraph) -> (Vec<f64>, Vec<f64>) {
    let d = graph.dim();
    let mut w: Vec<f64> = (0..graph.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let s: f64 = w.iter().sum();
    for t in w.iter_mut() {
        *t /= s;
    }
    let mut x = vec![0.0; d];
    for (wk, (xk, _)) in w.iter().zip(graph.pairs()) {
        for j in 0..d {
            x[j] += wk * xk[j];
        }
    }
    let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    (x, v)
}

/// Golden-section minimization of the scalar resolvent objective
/// `Φ(x) = R(x, (y−x)/τ) − ((y−x)/τ)·x` with `R` evaluated by its own QP:
/// the nested route to the same convex program the joint QP solves.
#[test]
fn resolvent_agrees_with_scalar_line_search() {
    let data = [
        (vec![(0.0, 0.0), (1.0, 1.0)], 1.0, 2.5),
        (vec![(-1.0, -1.0), (1.0, 1.0)], 1.0, 5.0f64 * std::f64::consts::SQRT_2),
        (vec![(0.0, -1.0), (0.5, 0.5), (1.0, 2.0)], 0.5, -2.0),
    ];
    for (pairs, tau, y) in data {
        let graph = MonotoneGraph::scalar(&pairs).unwrap();
        let prog = ExtensionProgram::plain(graph.clone()).unwrap();
        let joint = prog.resolvent(tau, &[y]).unwrap()[0];
        let phi = |x: f64| -> f64 {
            let v = (y - x) / tau;
            let r = prog.rf(&[x], &[v]).unwrap();
            if r.is_finite() {
                r - v * x
            } else {
                f64::INFINITY
            }
        };
        // bracket = domain hull
        let (mut lo, mut hi) = pairs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &(x, _)| {
                (l.min(x), h.max(x))
            });
        let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = phi(x1);
        let mut f2 = phi(x2);
        for _ in 0..80 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = phi(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = phi(x2);
            }
        }
        let nested = 0.5 * (lo + hi);
        assert!(
            (joint - nested).abs() <= 1e-6,
            "joint QP {joint} vs nested line search {nested} (y = {y})"
        );
    }
}

#[test]
fn grid_biconjugation_reproduces_convex_samples() {
    // f(x) = |x| + x²/4 sampled on [−2, 2]; biconjugation must return it
    let grid = Grid::new(vec![-2.0], vec![2.0], vec![81]).unwrap();
    let f = GridFn::sample(grid.clone(), |z| z[0].abs() + 0.25 * z[0] * z[0]).unwrap();
    let dual = Grid::new(vec![-4.0], vec![4.0], vec![161]).unwrap();
    let conj = grid_conjugate(&f, &dual).unwrap();
    let back = grid_conjugate(&conj, &grid).unwrap();
    for i in 0..grid.len() {
        assert!(
            (back.values[i] - f.values[i]).abs() <= 0.05,
            "node {i}: {} vs {}",
            back.values[i],
            f.values[i]
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_lands_on_simplex(w in prop::collection::vec(-5.0f64..5.0, 1..6)) {
        let p = project_simplex(&w).unwrap();
        let sum: f64 = p.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|&t| t >= 0.0));
        // projection is idempotent
        let pp = project_simplex(&p).unwrap();
        prop_assert!(dist(&p, &pp) <= 1e-12);
    }

    #[test]
    fn wasserstein_is_a_metric_on_diracs(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        use invmono::mps::{wasserstein, WeightedPoints};
        let mu = WeightedPoints::dirac(vec![a]);
        let nu = WeightedPoints::dirac(vec![b]);
        let (w, _) = wasserstein(2.0, &mu, &nu).unwrap();
        prop_assert!((w - (a - b).abs()).abs() <= 1e-9);
    }

    #[test]
    fn lifted_permutations_preserve_block_means(
        seed in 0u64..1000,
        k in 0u32..3,
    ) {
        use invmono::mps::{lift_permutation, EmpiricalSample, Permutation};
        let m = 4u32;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = EmpiricalSample::scalar(
            &(0..(1usize << m)).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>(),
        ).unwrap();
        let mut p: Vec<usize> = (0..(1usize << k)).collect();
        for i in (1..p.len()).rev() {
            p.swap(i, rng.gen_range(0..=i));
        }
        let sigma = Permutation::new(p).unwrap();
        let g = lift_permutation(&sigma, k, m).unwrap();
        // conditional expectation commutes with the lifted map
        let lhs = x.compose(&g).unwrap().coarsen(k).unwrap();
        let rhs = x.coarsen(k).unwrap().compose(&g).unwrap();
        for i in 0..x.len() {
            prop_assert!((lhs.value(i)[0] - rhs.value(i)[0]).abs() <= 1e-12);
        }
    }
}
