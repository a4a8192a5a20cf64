//! Lipschitz-extension suite: interpolation and sampled Lipschitz bounds for
//! both extension routes, plus the symmetry-forced value at the origin.

use super::uniform_vec;
use crate::config::ExperimentConfig;
use crate::report::{fmt, write_csv, Report};
use invmono::kirszbraun::{alm_extend, CayleyExtension, LipschitzData};
use invmono::linalg::{dist, norm};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn run(config: &ExperimentConfig, report: &mut Report) -> anyhow::Result<()> {
    let tol = config.tolerance;
    let data = match config.load_input::<LipschitzData>("data")? {
        Some(d) => d,
        None => LipschitzData::scalar(&[(-1.0, -1.0), (1.0, 1.0)], 1.0)?,
    };
    let d = data.dim();
    let lip = data.lip();
    let cayley = CayleyExtension::new(&data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // interpolation at the data sites
    let mut alm_interp: f64 = 0.0;
    let mut cay_interp: f64 = 0.0;
    for (y, w) in data.sites().iter().zip(data.values()) {
        alm_interp = alm_interp.max(dist(&alm_extend(&data, y)?.value, w));
        cay_interp = cay_interp.max(dist(&cayley.eval(y)?, w));
    }
    report.check("alm-interpolation", alm_interp, tol);
    report.check("cayley-interpolation", cay_interp, tol);

    // sampled Lipschitz ratios over random pairs and site/query pairs
    let scale = data
        .sites()
        .iter()
        .map(|s| norm(s))
        .fold(1.0f64, f64::max);
    let mut queries: Vec<Vec<f64>> = (0..40)
        .map(|_| uniform_vec(&mut rng, d, 3.0 * scale))
        .collect();
    for s in data.sites() {
        queries.push(s.to_vec());
    }
    let alm_vals: Vec<Vec<f64>> = queries
        .iter()
        .map(|x| alm_extend(&data, x).map(|p| p.value))
        .collect::<Result<_, _>>()?;
    let cay_vals: Vec<Vec<f64>> = queries
        .iter()
        .map(|x| cayley.eval(x))
        .collect::<Result<_, _>>()?;
    let mut alm_excess: f64 = 0.0;
    let mut cay_excess: f64 = 0.0;
    let mut pairs = 0;
    'outer: for i in 0..queries.len() {
        for j in (i + 1)..queries.len() {
            let dx = dist(&queries[i], &queries[j]);
            if dx <= 1e-9 {
                continue;
            }
            let bound = lip * dx * (1.0 + 1e-6);
            alm_excess = alm_excess.max(dist(&alm_vals[i], &alm_vals[j]) - bound);
            cay_excess = cay_excess.max(dist(&cay_vals[i], &cay_vals[j]) - bound);
            pairs += 1;
            if pairs >= 200 {
                break 'outer;
            }
        }
    }
    report.check("alm-lipschitz-bound", alm_excess.max(0.0), tol);
    report.check("cayley-lipschitz-bound", cay_excess.max(0.0), tol);

    // sign-symmetric data forces F(0) = 0 on both routes
    let symmetric = data.sites().iter().zip(data.values()).all(|(y, w)| {
        data.sites().iter().zip(data.values()).any(|(y2, w2)| {
            y.iter().zip(y2.iter()).all(|(a, b)| (a + b).abs() <= 1e-12)
                && w.iter().zip(w2.iter()).all(|(a, b)| (a + b).abs() <= 1e-12)
        })
    });
    if symmetric {
        let origin = vec![0.0; d];
        let a0 = norm(&alm_extend(&data, &origin)?.value);
        let c0 = norm(&cayley.eval(&origin)?);
        report.check("symmetric-origin-alm", a0, tol);
        report.check("symmetric-origin-cayley", c0, tol);
    }

    // ALM weights live on the simplex and reproduce the value
    let mut weight_residual: f64 = 0.0;
    for x in queries.iter().take(20) {
        let p = alm_extend(&data, x)?;
        let sum: f64 = p.weights.iter().sum();
        weight_residual = weight_residual.max((sum - 1.0).abs());
        weight_residual =
            weight_residual.max(-p.weights.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    report.check("alm-weights-on-simplex", weight_residual, 1e-10);

    // sampled values CSV
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (q, (a, c)) in queries.iter().zip(alm_vals.iter().zip(&cay_vals)) {
        let mut row: Vec<String> = q.iter().map(|t| fmt(*t)).collect();
        row.extend(a.iter().map(|t| fmt(*t)));
        row.extend(c.iter().map(|t| fmt(*t)));
        rows.push(row);
    }
    let mut header: Vec<String> = (0..d).map(|k| format!("x{k}")).collect();
    header.extend((0..d).map(|k| format!("alm{k}")));
    header.extend((0..d).map(|k| format!("cayley{k}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&config.out, "extension_samples.csv", &header_refs, &rows)?;
    Ok(())
}
