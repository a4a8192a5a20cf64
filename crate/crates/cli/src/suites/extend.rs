//! Monotone-extension suite: contact values, resolvent identities, forced
//! boundary values, domain confinement, the Fitzpatrick/Penot sandwich, and
//! group equivariance when a group file is supplied.

use super::uniform_vec;
use crate::config::ExperimentConfig;
use crate::report::{fmt, write_csv, Report};
use invmono::fitzpatrick::{ExtensionProgram, IsometryGroup, KernelPsi, MonotoneGraph};
use invmono::linalg::{dist, dot};
use invmono::optkit::hull_gap;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn run(config: &ExperimentConfig, report: &mut Report) -> anyhow::Result<()> {
    let tol = config.tolerance;
    let custom_graph = config.load_input::<MonotoneGraph>("graph")?;
    let is_default = custom_graph.is_none();
    let graph = match custom_graph {
        Some(g) => g,
        None => MonotoneGraph::scalar(&[(0.0, 0.0), (1.0, 1.0)])?,
    };
    let group = config.load_input::<IsometryGroup>("group")?;
    let program = ExtensionProgram::new(graph.clone(), KernelPsi::quadratic(), group.clone())?;
    let d = graph.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // contact on the graph: R(x_k, v_k) = ⟨v_k, x_k⟩
    let mut contact: f64 = 0.0;
    for (x, v) in graph.pairs() {
        contact = contact.max((program.rf(x, v)? - dot(v, x)).abs());
    }
    report.check("contact-on-graph", contact, tol);

    // resolvent graph identity at τ = 0.5
    let tau = 0.5;
    let mut identity: f64 = 0.0;
    for (x, v) in graph.pairs() {
        let y: Vec<f64> = x.iter().zip(v.iter()).map(|(a, b)| a + tau * b).collect();
        identity = identity.max(dist(&program.resolvent(tau, &y)?, x));
    }
    report.check("resolvent-graph-identity", identity, tol);

    // forced values for the built-in two-point graph (every minimal-domain
    // maximal extension must produce them)
    if is_default {
        let mut forced: f64 = 0.0;
        for (y, expect) in [(-3.0, 0.0), (0.0, 0.0), (2.0, 1.0), (2.5, 1.0)] {
            let j = program.resolvent(1.0, &[y])?;
            forced = forced.max((j[0] - expect).abs());
        }
        report.check("forced-resolvent-values", forced, tol);
    }

    // geometry of the data, for scaled sampling
    let points = graph.primal_points();
    let mut diam: f64 = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            diam = diam.max(dist(&points[i], &points[j]));
        }
    }
    let radius = 10.0 * diam.max(1.0);

    // domain confinement for far-out arguments
    let mut confinement: f64 = 0.0;
    let mut sweep_rows: Vec<Vec<String>> = Vec::new();
    let mut sweep_points: Vec<Vec<f64>> = Vec::new();
    if is_default {
        for y in [-3.0, 0.0, 2.0, 2.5] {
            sweep_points.push(vec![y]);
        }
    }
    for _ in 0..16 {
        sweep_points.push(uniform_vec(&mut rng, d, radius));
    }
    for _ in 0..100 {
        let y = uniform_vec(&mut rng, d, radius);
        let j = program.resolvent(tau, &y)?;
        confinement = confinement.max(hull_gap(&j, &points)?);
    }
    report.check("domain-confinement", confinement, tol);
    for y in &sweep_points {
        let j = program.resolvent(tau, y)?;
        let mut row: Vec<String> = y.iter().map(|t| fmt(*t)).collect();
        row.extend(j.iter().map(|t| fmt(*t)));
        sweep_rows.push(row);
    }
    let mut header: Vec<String> = (0..d).map(|k| format!("y{k}")).collect();
    header.extend((0..d).map(|k| format!("j{k}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&config.out, "resolvents.csv", &header_refs, &sweep_rows)?;

    // sandwich F ≤ R ≤ P∘switch at random in-hull queries
    let vscale = graph
        .pairs()
        .iter()
        .map(|(_, v)| v.iter().fold(0.0f64, |m, t| m.max(t.abs())))
        .fold(0.0f64, f64::max)
        .max(1.0);
    let mut sandwich: f64 = 0.0;
    for _ in 0..100 {
        // random convex combination of the primal points
        let mut w: Vec<f64> = (0..points.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s: f64 = w.iter().sum();
        for t in w.iter_mut() {
            *t /= s;
        }
        let mut x = vec![0.0; d];
        for (wk, pk) in w.iter().zip(&points) {
            for (xi, pi) in x.iter_mut().zip(pk) {
                *xi += wk * pi;
            }
        }
        let v = uniform_vec(&mut rng, d, 2.0 * vscale);
        let r = program.rf(&x, &v)?;
        if !r.is_finite() {
            continue;
        }
        let fa = graph.fitzpatrick(&x, &v)?;
        sandwich = sandwich.max(fa - r);
        let pa = graph.penot(&v, &x)?;
        if pa.is_finite() {
            sandwich = sandwich.max(r - pa);
        }
    }
    report.check("sandwich", sandwich, tol);

    // group equivariance of the resolvent
    if let Some(group) = &group {
        let mut equiv: f64 = 0.0;
        for _ in 0..50 {
            let y = uniform_vec(&mut rng, d, radius / 2.0);
            let jy = program.resolvent(tau, &y)?;
            for u in group.elements() {
                let uy = u.matvec(&y);
                let juy = program.resolvent(tau, &uy)?;
                equiv = equiv.max(dist(&juy, &u.matvec(&jy)));
            }
        }
        report.check("group-equivariance", equiv, tol);
    }
    Ok(())
}
