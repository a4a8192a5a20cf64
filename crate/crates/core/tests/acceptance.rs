//! Acceptance suite: every criterion runs at its stated tolerance and prints
//! one pass/fail line (visible under `cargo test -- --nocapture`). Each test
//! also enforces its wall-clock budget.

use invmono::dissipative::{
    builtin_operator, check_dissipative_sections, check_invariance_flow, euler_map_extract,
    flatten_sample, flow, flow_with_monitor, minimal_selection, probe_vectors, BlockAction,
    OperatorSpec,
};
use invmono::fitzpatrick::{
    saturate_orbit, ExtensionProgram, IsometryGroup, KernelPsi, MonotoneGraph,
};
use invmono::kirszbraun::{alm_extend, lip_constant, CayleyExtension, LipschitzData};
use invmono::linalg::{dist, dot, norm, Mat, Vector};
use invmono::mps::{
    align_same_law, approx_coupling, block_counts, coupling_discrepancy, monge_match,
    sample_distance, transport_lp, wasserstein, DoublyStochastic, EmpiricalSample, Permutation,
    WeightedPoints,
};
use invmono::optkit::{grid_conjugate, hull_gap, Grid};
use invmono::Error;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

struct Criterion {
    name: &'static str,
    budget_s: f64,
    start: Instant,
}

impl Criterion {
    fn new(name: &'static str, budget_s: f64) -> Criterion {
        Criterion {
            name,
            budget_s,
            start: Instant::now(),
        }
    }

    fn finish(self, worst: f64, bound: f64) {
        let runtime = self.start.elapsed().as_secs_f64();
        let pass = worst <= bound && runtime <= self.budget_s;
        println!(
            "acceptance {}: {} (worst {:.3e} vs bound {:.3e}, runtime {:.2}s of {:.0}s)",
            self.name,
            if pass { "PASS" } else { "FAIL" },
            worst,
            bound,
            runtime,
            self.budget_s
        );
        assert!(
            worst <= bound,
            "{}: residual {worst:.6e} exceeds {bound:.1e}",
            self.name
        );
        assert!(
            runtime <= self.budget_s,
            "{}: runtime {runtime:.2}s over budget {}s",
            self.name,
            self.budget_s
        );
    }
}

fn random_monotone_graph(rng: &mut ChaCha8Rng, d: usize, n: usize) -> MonotoneGraph {
    let g = Mat::from_rows(
        &(0..d)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let m = g.transpose().matmul(&g);
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

fn in_hull_point(rng: &mut ChaCha8Rng, graph: &MonotoneGraph) -> Vec<f64> {
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
    x
}

#[test]
fn acceptance_01_monotone_extension_suite() {
    let c = Criterion::new("01 monotone-extension suite", 20.0);
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let d = rng.gen_range(1..=3usize);
        let n = rng.gen_range(1..=6usize);
        let graph = random_monotone_graph(&mut rng, d, n);
        let prog = ExtensionProgram::plain(graph.clone()).unwrap();
        let points = graph.primal_points();
        // (a) contact on the graph
        for (x, v) in graph.pairs() {
            worst = worst.max((prog.rf(x, v).unwrap() - dot(v, x)).abs());
        }
        // (b) resolvent graph identity at τ = 0.5
        let tau = 0.5;
        for (x, v) in graph.pairs() {
            let y: Vec<f64> = x.iter().zip(v.iter()).map(|(a, b)| a + tau * b).collect();
            worst = worst.max(dist(&prog.resolvent(tau, &y).unwrap(), x));
        }
        // (c) domain confinement, arguments up to 10× the data diameter
        let mut diam: f64 = 0.0;
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                diam = diam.max(dist(&points[i], &points[j]));
            }
        }
        let radius = 10.0 * diam.max(1.0);
        for _ in 0..5 {
            let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-radius..radius)).collect();
            let j = prog.resolvent(tau, &y).unwrap();
            worst = worst.max(hull_gap(&j, &points).unwrap());
        }
        // (d) sandwich at in-hull queries
        let vscale = graph
            .pairs()
            .iter()
            .map(|(_, v)| norm(v))
            .fold(1.0f64, f64::max);
        for _ in 0..5 {
            let x = in_hull_point(&mut rng, &graph);
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0 * vscale..2.0 * vscale)).collect();
            let r = prog.rf(&x, &v).unwrap();
            if !r.is_finite() {
                continue;
            }
            worst = worst.max(graph.fitzpatrick(&x, &v).unwrap() - r);
            let p = graph.penot(&v, &x).unwrap();
            if p.is_finite() {
                worst = worst.max(r - p);
            }
        }
    }
    c.finish(worst, 1e-6);
}

#[test]
fn acceptance_02_forced_resolvent_values() {
    let c = Criterion::new("02 forced-value resolvent oracle", 1.0);
    let graph = MonotoneGraph::scalar(&[(0.0, 0.0), (1.0, 1.0)]).unwrap();
    let prog = ExtensionProgram::plain(graph).unwrap();
    let mut worst: f64 = 0.0;
    for (y, expect) in [(-3.0, 0.0), (0.0, 0.0), (2.0, 1.0), (2.5, 1.0)] {
        let j = prog.resolvent(1.0, &[y]).unwrap();
        worst = worst.max((j[0] - expect).abs());
    }
    c.finish(worst, 1e-6);
}

#[test]
fn acceptance_03_group_equivariance() {
    let c = Criterion::new("03 G-invariant resolvents", 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let mut cases: Vec<(MonotoneGraph, IsometryGroup)> = Vec::new();
    // sign flips in d = 1, 2, 3: odd monotone maps (no translation term)
    for d in 1..=3usize {
        let group = IsometryGroup::sign_flips(d);
        let g = Mat::from_rows(
            &(0..d)
                .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let m = g.transpose().matmul(&g);
        let pairs: Vec<(Vector, Vector)> = (0..2)
            .map(|_| {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let v = m.matvec(&x);
                (Vector::new(x).unwrap(), Vector::new(v).unwrap())
            })
            .collect();
        let base = MonotoneGraph::new(d, pairs).unwrap();
        cases.push((saturate_orbit(&base, &group).unwrap(), group));
    }
    // planar rotations of order 2 and 4: linear maps aI + bJ commute
    for order in [2usize, 4, 2, 4] {
        let group = IsometryGroup::planar_rotations(order).unwrap();
        let a = rng.gen_range(0.2..1.5);
        let b = rng.gen_range(-1.0..1.0);
        let m = Mat::from_rows(&[vec![a, -b], vec![b, a]]).unwrap();
        let pairs: Vec<(Vector, Vector)> = (0..2)
            .map(|_| {
                let x = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
                let v = m.matvec(&x);
                (Vector::new(x).unwrap(), Vector::new(v).unwrap())
            })
            .collect();
        let base = MonotoneGraph::new(2, pairs).unwrap();
        cases.push((saturate_orbit(&base, &group).unwrap(), group));
    }
    // two-block permutations in d = 4: block-exchangeable linear maps commute
    for _ in 0..3 {
        let group = IsometryGroup::block_permutations(2, 2).unwrap();
        let p = rng.gen_range(0.5..1.5);
        let q = rng.gen_range(-0.4..0.4);
        let s = rng.gen_range(-0.5..0.5);
        let m = Mat::from_rows(&[
            vec![p, s, q, 0.0],
            vec![-s, p, 0.0, q],
            vec![q, 0.0, p, s],
            vec![0.0, q, -s, p],
        ])
        .unwrap();
        let pairs: Vec<(Vector, Vector)> = (0..2)
            .map(|_| {
                let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.5..1.5)).collect();
                let v = m.matvec(&x);
                (Vector::new(x).unwrap(), Vector::new(v).unwrap())
            })
            .collect();
        let base = MonotoneGraph::new(4, pairs).unwrap();
        cases.push((saturate_orbit(&base, &group).unwrap(), group));
    }
    assert_eq!(cases.len(), 10);
    let mut worst: f64 = 0.0;
    let tau = 0.5;
    for (graph, group) in cases {
        let d = graph.dim();
        let prog =
            ExtensionProgram::new(graph, KernelPsi::quadratic(), Some(group.clone())).unwrap();
        for _ in 0..50 {
            let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let jy = prog.resolvent(tau, &y).unwrap();
            for u in group.elements() {
                let juy = prog.resolvent(tau, &u.matvec(&y)).unwrap();
                worst = worst.max(dist(&juy, &u.matvec(&jy)));
            }
        }
    }
    c.finish(worst, 1e-6);
}

#[test]
fn acceptance_04_self_duality_grid() {
    let c = Criterion::new("04 self-duality spot check", 10.0);
    let graph = MonotoneGraph::scalar(&[(0.0, 0.0), (1.0, 1.0)]).unwrap();
    let prog = ExtensionProgram::plain(graph).unwrap();
    let grid = Grid::new(vec![-2.0, -2.0], vec![2.0, 2.0], vec![81, 81]).unwrap();
    let table = prog.rf_table(&grid).unwrap();
    let conj = grid_conjugate(&table, &grid).unwrap();
    // self-duality: conj at (s, t) should equal the table at (t, s)
    let mut worst: f64 = 0.0;
    let npts = grid.npts()[0];
    for si in 0..npts {
        for ti in 0..npts {
            let flat = grid.flat(&[si, ti]);
            if !grid.is_interior(flat) {
                continue;
            }
            let transposed = table.values[grid.flat(&[ti, si])];
            if !transposed.is_finite() || !conj.values[flat].is_finite() {
                continue;
            }
            worst = worst.max((conj.values[flat] - transposed).abs());
        }
    }
    c.finish(worst, 0.2);
}

#[test]
fn acceptance_05_kirszbraun_suite() {
    let c = Criterion::new("05 Lipschitz extension suite", 15.0);
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5005);
    for _ in 0..20 {
        let d = rng.gen_range(1..=3usize);
        let n = rng.gen_range(1..=6usize);
        let sites: Vec<Vector> = (0..n)
            .map(|k| {
                let mut s: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                s[0] += k as f64 * 1e-3; // keep sites distinct
                Vector::new(s).unwrap()
            })
            .collect();
        let values: Vec<Vector> = (0..n)
            .map(|_| {
                Vector::new((0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
            })
            .collect();
        let lip = (lip_constant(&sites, &values).unwrap() * 1.05).max(0.5);
        let data = LipschitzData::new(d, sites, values, lip).unwrap();
        let cayley = CayleyExtension::new(&data).unwrap();
        // interpolation
        for (y, w) in data.sites().iter().zip(data.values()) {
            worst = worst.max(dist(&alm_extend(&data, y).unwrap().value, w));
            worst = worst.max(dist(&cayley.eval(y).unwrap(), w));
        }
        // sampled Lipschitz ratios (10 queries → 45 pairs per instance,
        // ~200 site/query pairs across the suite)
        let queries: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..d).map(|_| rng.gen_range(-4.0..4.0)).collect())
            .collect();
        let alm_vals: Vec<Vec<f64>> = queries
            .iter()
            .map(|x| alm_extend(&data, x).unwrap().value)
            .collect();
        let cay_vals: Vec<Vec<f64>> = queries.iter().map(|x| cayley.eval(x).unwrap()).collect();
        for i in 0..queries.len() {
            for j in (i + 1)..queries.len() {
                let bound = lip * dist(&queries[i], &queries[j]) * (1.0 + 1e-6);
                worst = worst.max(dist(&alm_vals[i], &alm_vals[j]) - bound);
                worst = worst.max(dist(&cay_vals[i], &cay_vals[j]) - bound);
            }
        }
    }
    // symmetric 1-d data vanishes at the origin on both routes
    let sym = LipschitzData::scalar(&[(-1.0, -0.7), (1.0, 0.7)], 1.0).unwrap();
    worst = worst.max(alm_extend(&sym, &[0.0]).unwrap().value[0].abs());
    worst = worst.max(CayleyExtension::new(&sym).unwrap().eval(&[0.0]).unwrap()[0].abs());
    c.finish(worst, 1e-6);

    // dense λ-grid oracle for the envelope route (convex in λ, so a coarse
    // global scan plus a fine local refinement reaches the 1e-4 resolution)
    let c2 = Criterion::new("05b envelope-route λ-grid oracle", 15.0);
    let mut worst2: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5055);
    for _ in 0..6 {
        let n = rng.gen_range(2..=3usize);
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| (k as f64 + rng.gen_range(-0.3..0.3), rng.gen_range(-1.0..1.0)))
            .collect();
        let raw_sites: Vec<Vector> = pairs.iter().map(|&(y, _)| Vector::new(vec![y]).unwrap()).collect();
        let raw_values: Vec<Vector> = pairs.iter().map(|&(_, w)| Vector::new(vec![w]).unwrap()).collect();
        let lip = (lip_constant(&raw_sites, &raw_values).unwrap() * 1.1).max(0.5);
        let data = LipschitzData::scalar(&pairs, lip).unwrap();
        let x = rng.gen_range(-3.0..3.0);
        let qp_value = alm_extend(&data, &[x]).unwrap().value[0];
        let oracle = alm_grid_oracle(&data, x);
        worst2 = worst2.max((qp_value - oracle).abs());
    }
    c2.finish(worst2, 1e-3);
}

/// Brute-force simplex scan of the envelope objective at resolution 1e-4
/// (global coarse pass + local refinement, exact for a convex objective).
fn alm_grid_oracle(data: &LipschitzData, x: f64) -> f64 {
    let n = data.len();
    let lip = data.lip();
    let objective = |lam: &[f64]| -> f64 {
        let ybar: f64 = lam
            .iter()
            .zip(data.sites())
            .map(|(l, y)| l * y[0])
            .sum();
        let wbar: f64 = lam
            .iter()
            .zip(data.values())
            .map(|(l, w)| l * w[0])
            .sum();
        let sy: f64 = lam
            .iter()
            .zip(data.sites())
            .map(|(l, y)| l * y[0] * y[0])
            .sum();
        let sw: f64 = lam
            .iter()
            .zip(data.values())
            .map(|(l, w)| l * w[0] * w[0])
            .sum();
        -lip * x * ybar + 0.25 * lip * ybar * ybar + 0.25 * wbar * wbar / lip
            + 0.25 * lip * sy
            - 0.25 * sw / lip
    };
    let wbar_of = |lam: &[f64]| -> f64 {
        lam.iter()
            .zip(data.values())
            .map(|(l, w)| l * w[0])
            .sum()
    };
    match n {
        2 => {
            let mut best = (f64::INFINITY, 0.0);
            let mut t = 0.0;
            while t <= 1.0 + 1e-12 {
                let v = objective(&[1.0 - t, t]);
                if v < best.0 {
                    best = (v, t);
                }
                t += 1e-4;
            }
            wbar_of(&[1.0 - best.1, best.1])
        }
        3 => {
            let coarse = 2e-3;
            let mut best = (f64::INFINITY, 0.0, 0.0);
            let mut a = 0.0;
            while a <= 1.0 + 1e-12 {
                let mut b = 0.0;
                while a + b <= 1.0 + 1e-12 {
                    let v = objective(&[a, b, 1.0 - a - b]);
                    if v < best.0 {
                        best = (v, a, b);
                    }
                    b += coarse;
                }
                a += coarse;
            }
            let (mut ba, mut bb) = (best.1, best.2);
            let lo_a = (ba - 2.0 * coarse).max(0.0);
            let hi_a = (ba + 2.0 * coarse).min(1.0);
            let mut a = lo_a;
            while a <= hi_a + 1e-12 {
                let lo_b = (bb - 2.0 * coarse).max(0.0);
                let hi_b = (bb + 2.0 * coarse).min(1.0 - a);
                let mut b = lo_b;
                while b <= hi_b + 1e-12 {
                    let v = objective(&[a, b, 1.0 - a - b]);
                    if v < best.0 {
                        best = (v, a, b);
                        ba = a;
                        bb = b;
                    }
                    b += 1e-4;
                }
                a += 1e-4;
            }
            let _ = (ba, bb);
            wbar_of(&[best.1, best.2, 1.0 - best.1 - best.2])
        }
        _ => unreachable!("oracle instances use n ≤ 3"),
    }
}

#[test]
fn acceptance_06_coupling_approximation() {
    let c = Criterion::new("06 coupling approximation", 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6006);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(2..=4usize);
        let terms = rng.gen_range(1..=4usize);
        let mut perms = Vec::new();
        let mut weights = Vec::new();
        for _ in 0..terms {
            let mut p: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                p.swap(i, rng.gen_range(0..=i));
            }
            perms.push(Permutation::new(p).unwrap());
            weights.push(rng.gen_range(0.1..1.0));
        }
        let b = DoublyStochastic::mixture(&weights, &perms).unwrap();
        for k in [1usize, 2, 4, 8] {
            let sigma = approx_coupling(&b, k).unwrap();
            let counts = block_counts(&sigma, n).unwrap();
            let nk = (n * k) as f64;
            let mut integral = true;
            for i in 0..n {
                for j in 0..n {
                    let target = b.entry(i, j) * nk;
                    // entrywise bound |C/(NK) − B| ≤ 1/(NK) ⇔ |C − NK·B| ≤ 1
                    worst = worst.max((counts[(i, j)] - target).abs() - 1.0);
                    if (target - target.round()).abs() > 1e-9 {
                        integral = false;
                    }
                }
            }
            if integral {
                for i in 0..n {
                    for j in 0..n {
                        worst = worst
                            .max((counts[(i, j)] - (b.entry(i, j) * nk).round()).abs() - 1e-9);
                    }
                }
            }
        }
    }
    // discrepancy nonincreasing in K on dyadic-rational matrices
    let rational = [
        DoublyStochastic::uniform(2),
        DoublyStochastic::new(
            2,
            Mat::from_rows(&[vec![0.375, 0.125], vec![0.125, 0.375]]).unwrap(),
        )
        .unwrap(),
    ];
    for b in &rational {
        let n = b.order();
        let z = EmpiricalSample::scalar(&(0..n).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        let mut prev: Option<f64> = None;
        for k in [1usize, 2, 4, 8] {
            let sigma = approx_coupling(b, k).unwrap();
            let disc = coupling_discrepancy(&sigma, b, &z, &z).unwrap();
            if let Some(p) = prev {
                worst = worst.max(disc - p - 1e-9);
            }
            prev = Some(disc);
        }
    }
    c.finish(worst.max(0.0), 1e-12);
}

#[test]
fn acceptance_07_wasserstein_oracle() {
    let c = Criterion::new("07 W_p permutation oracle", 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7007);
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let n = rng.gen_range(2..=6usize);
        let d = rng.gen_range(1..=2usize);
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let ys: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        for p in [1.0, 2.0] {
            let mu = WeightedPoints::uniform(xs.clone()).unwrap();
            let nu = WeightedPoints::uniform(ys.clone()).unwrap();
            let (w, plan) = wasserstein(p, &mu, &nu).unwrap();
            // brute force over all permutations
            let mut perm: Vec<usize> = (0..n).collect();
            let mut best = f64::INFINITY;
            loop {
                let cost: f64 = (0..n)
                    .map(|i| dist(&xs[i], &ys[perm[i]]).powf(p))
                    .sum::<f64>()
                    / n as f64;
                best = best.min(cost);
                if !next_permutation(&mut perm) {
                    break;
                }
            }
            worst = worst.max((w.powf(p) - best).abs());
            // the LP route must agree with the assignment route
            let mut cost_m = Mat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    cost_m[(i, j)] = dist(&xs[i], &ys[j]).powf(p);
                }
            }
            let un = vec![1.0 / n as f64; n];
            let (_, lp_val) = transport_lp(&un, &un, &cost_m).unwrap();
            worst = worst.max((lp_val - best).abs());
            // plan marginals
            for i in 0..n {
                let r: f64 = (0..n).map(|j| plan[(i, j)]).sum();
                worst = worst.max((r - 1.0 / n as f64).abs());
            }
        }
    }
    c.finish(worst, 1e-9);
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[test]
fn acceptance_08_monge_matching() {
    let c = Criterion::new("08 Monge matching", 5.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8008);
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let m = rng.gen_range(1..=3u32);
        let n = 1usize << m;
        let x = EmpiricalSample::scalar(
            &(0..n).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<_>>(),
        )
        .unwrap();
        // equal uniform sizes: ε = 0 must be achieved
        let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(-2.0..2.0)]).collect();
        let nu = WeightedPoints::uniform(pts).unwrap();
        for p in [1.0, 2.0] {
            let y = monge_match(&x, &nu, p, 0.0).unwrap();
            // pushforward exactness
            let law = y.law();
            for (pt, w) in nu.points.iter().zip(&nu.weights) {
                let idx = law
                    .points
                    .iter()
                    .position(|q| dist(q, pt) == 0.0)
                    .expect("target point realized");
                worst = worst.max((law.weights[idx] - w).abs());
            }
            let (wp, _) = wasserstein(p, &x.law(), &nu).unwrap();
            worst = worst.max(sample_distance(p, &x, &y).unwrap() - wp - 1e-9);
        }
    }
    c.finish(worst.max(0.0), 1e-9);
}

#[test]
fn acceptance_09_law_alignment() {
    let c = Criterion::new("09 law alignment", 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9009);
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let m = rng.gen_range(1..=4u32);
        let n = 1usize << m;
        let x = EmpiricalSample::scalar(
            &(0..n).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<_>>(),
        )
        .unwrap();
        let y = EmpiricalSample::scalar(
            &(0..n).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<_>>(),
        )
        .unwrap();
        let mut shuffle: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            shuffle.swap(i, rng.gen_range(0..=i));
        }
        let g0 = Permutation::new(shuffle).unwrap();
        let xp = x.compose(&g0).unwrap();
        let yp = y.compose(&g0).unwrap();
        let g = align_same_law(&x, Some(&y), &xp, Some(&yp)).unwrap();
        let xr = xp.compose(&g).unwrap();
        let yr = yp.compose(&g).unwrap();
        for i in 0..n {
            worst = worst.max(dist(xr.value(i), x.value(i)));
            worst = worst.max(dist(yr.value(i), y.value(i)));
        }
    }
    // mismatched laws are rejected with the offending row reported
    let a = EmpiricalSample::scalar(&[0.0, 1.0]).unwrap();
    let b = EmpiricalSample::scalar(&[0.0, 2.0]).unwrap();
    match align_same_law(&a, None, &b, None) {
        Err(Error::LawMismatch { row }) => assert!(!row.is_empty()),
        other => panic!("expected a law mismatch, got {other:?}"),
    }
    c.finish(worst, 1e-9);
}

#[test]
fn acceptance_10_evolution_suite() {
    let c = Criterion::new("10 evolution suite", 20.0);
    let mut worst_scaled: f64 = 0.0; // residual − bound, per sub-check

    // exponential formula vs e^{−t}
    let neg_id = builtin_operator("neg_id", 2, 1).unwrap();
    let x0 = vec![1.0, -2.0];
    let f = flow(&neg_id, &x0, 1.0, 1024).unwrap();
    let target: Vec<f64> = x0.iter().map(|t| t * (-1.0f64).exp()).collect();
    worst_scaled = worst_scaled.max(dist(&f, &target) - 5e-4 * norm(&x0));

    // linear flow vs the matrix-exponential oracle at n = 2048
    let m = Mat::from_rows(&[vec![-1.0, 0.4], vec![0.4, -2.0]]).unwrap();
    let linear = OperatorSpec::linear(-0.6, m.clone()).unwrap();
    let fl = flow(&linear, &x0, 1.0, 2048).unwrap();
    let oracle = expm_times(&m, 1.0, &x0);
    worst_scaled = worst_scaled.max(dist(&fl, &oracle) - 1e-3);

    // Yosida log nondecreasing along τ = 0.5, 0.25, …, 2⁻¹⁰
    let schedule: Vec<f64> = (0..=10).map(|k| 0.5 / (1u64 << k) as f64).collect();
    let graph_op = OperatorSpec::graph_extension(
        0.0,
        1,
        vec![
            (
                Vector::new(vec![0.0]).unwrap(),
                Vector::new(vec![0.0]).unwrap(),
            ),
            (
                Vector::new(vec![1.0]).unwrap(),
                Vector::new(vec![-1.0]).unwrap(),
            ),
        ],
    )
    .unwrap();
    for (op, probe) in [
        (&neg_id, vec![2.0, 0.5]),
        (&linear, vec![1.0, -1.0]),
        (&graph_op, vec![0.5]),
    ] {
        let rep = minimal_selection(op, &probe, &schedule).unwrap();
        for w in rep.norms.windows(2) {
            worst_scaled = worst_scaled.max(w[0] - w[1] - 1e-8);
        }
    }

    // contraction with the doubling monitor as truncation allowance
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let cases: Vec<(&OperatorSpec, f64, Vec<f64>, usize)> = vec![
        (&neg_id, -1.0, vec![0.1, 1.0, 5.0], 1024),
        (&linear, -0.6, vec![0.1, 1.0, 5.0], 1024),
        (&graph_op, 0.0, vec![0.5, 1.0], 256),
    ];
    for (op, lambda, ts, n) in cases {
        for t in ts {
            for _ in 0..2 {
                let a: Vec<f64> = (0..op.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let b: Vec<f64> = (0..op.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let (fa, ea) = flow_with_monitor(op, &a, t, n).unwrap();
                let (fb, eb) = flow_with_monitor(op, &b, t, n).unwrap();
                let bound = (lambda * t).exp() * dist(&a, &b) + 1e-6 + ea + eb;
                worst_scaled = worst_scaled.max(dist(&fa, &fb) - bound);
            }
        }
    }
    c.finish(worst_scaled.max(0.0), 0.0);
}

fn expm_times(m: &Mat, t: f64, x: &[f64]) -> Vec<f64> {
    let n = m.nrows();
    let mut scale = 0u32;
    let norm_est: f64 = (0..n)
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * t.abs();
    while norm_est / (1u64 << scale) as f64 > 0.5 {
        scale += 1;
    }
    let h = t / (1u64 << scale) as f64;
    let mut term = Mat::identity(n);
    let mut sum = Mat::identity(n);
    for k in 1..25 {
        term = term.matmul(m);
        for i in 0..n {
            for j in 0..n {
                term[(i, j)] *= h / k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                sum[(i, j)] += term[(i, j)];
            }
        }
    }
    let mut acc = sum;
    for _ in 0..scale {
        acc = acc.matmul(&acc);
    }
    acc.matvec(x)
}

#[test]
fn acceptance_11_invariance_structure_suite() {
    let c = Criterion::new("11 invariance/structure suite", 15.0);
    let mut worst: f64 = 0.0;
    let atoms = 16usize;
    let dim = 2usize;
    let ambient = atoms * dim;
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let mut perm: Vec<usize> = (0..atoms).collect();
    for i in (1..atoms).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let action = BlockAction::new(atoms, dim, Permutation::new(perm).unwrap()).unwrap();
    let probes = probe_vectors(ambient, 8);
    for name in ["componentwise_relu_neg", "meanfield"] {
        let op = builtin_operator(name, atoms, dim).unwrap();
        let rep = check_invariance_flow(&op, &action, &probes, 0.5, 1.0, 128).unwrap();
        worst = worst.max(rep.max());
    }
    assert!(worst <= 1e-6, "equivariance residual {worst}");

    // pointwise tables: well-definedness, Lipschitz contract, dissipativity
    let space = invmono::mps::DyadicSpace::new(3).unwrap();
    let mut values: Vec<Vector> = Vec::new();
    for i in 0..8usize {
        let row: Vec<f64> = if i == 7 {
            values[0].to_vec()
        } else {
            (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        values.push(Vector::new(row).unwrap());
    }
    let sample = EmpiricalSample::new(space, dim, values).unwrap();
    let mut table_worst: f64 = 0.0;
    for (name, lambda) in [
        ("neg_id", -1.0),
        ("centering", 1.0),
        ("meanfield", 0.0),
        ("componentwise_relu_neg", 0.0),
    ] {
        let op = builtin_operator(name, 8, dim).unwrap();
        let table =
            euler_map_extract(|x: &[f64]| op.apply(x).expect("explicit"), 1.0, &sample).unwrap();
        for i in 0..table.entries.len() {
            for j in (i + 1)..table.entries.len() {
                let dx = dist(&table.entries[i].0, &table.entries[j].0);
                let dv = dist(&table.entries[i].1, &table.entries[j].1);
                if dx <= 1e-9 {
                    table_worst = table_worst.max(dv);
                }
                table_worst = table_worst.max(dv - table.lip * dx);
            }
        }
        assert!(
            check_dissipative_sections(&table, lambda),
            "{name} sections fail at λ = {lambda}"
        );
    }
    assert!(table_worst <= 1e-7, "table contract residual {table_worst}");

    // law-invariance upgrade through alignment
    let op = builtin_operator("meanfield", 8, dim).unwrap();
    let mut shuffle: Vec<usize> = (0..8).collect();
    for i in (1..8usize).rev() {
        shuffle.swap(i, rng.gen_range(0..=i));
    }
    let g0 = Permutation::new(shuffle).unwrap();
    let shuffled = sample.compose(&g0).unwrap();
    let g = align_same_law(&sample, None, &shuffled, None).unwrap();
    let jx = op.resolvent(0.5, &flatten_sample(&sample)).unwrap();
    let jxp = op.resolvent(0.5, &flatten_sample(&shuffled)).unwrap();
    let act = BlockAction::new(8, dim, g).unwrap();
    worst = worst.max(dist(&jx, &act.apply(&jxp).unwrap()));
    c.finish(worst.max(table_worst), 1e-6);
}
