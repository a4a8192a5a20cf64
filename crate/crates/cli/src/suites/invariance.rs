//! Invariance and structure audit: equivariance of resolvents, Yosida
//! approximations and flows under block permutations; pointwise table
//! extraction with its well-definedness and Lipschitz contracts; section
//! dissipativity; and the law-invariance upgrade through alignment.

use crate::config::ExperimentConfig;
use crate::report::{fmt, write_csv, Report};
use invmono::dissipative::{
    builtin_operator, check_dissipative_sections, check_invariance_flow, euler_map_extract,
    flatten_sample, probe_vectors, BlockAction, EulerTable,
};
use invmono::linalg::dist;
use invmono::mps::{align_same_law, DyadicSpace, EmpiricalSample, Permutation};
use invmono::Vector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn run(config: &ExperimentConfig, report: &mut Report) -> anyhow::Result<()> {
    let tol = config.tolerance;
    let atoms = 8usize;
    let dim = 2usize;
    let ambient = atoms * dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut residual_rows: Vec<Vec<String>> = Vec::new();

    // seeded block permutation for the action
    let mut perm: Vec<usize> = (0..atoms).collect();
    for i in (1..atoms).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let action = BlockAction::new(atoms, dim, Permutation::new(perm)?)?;
    let probes = probe_vectors(ambient, 32);

    for name in ["componentwise_relu_neg", "meanfield"] {
        let op = builtin_operator(name, atoms, dim)?;
        let rep = check_invariance_flow(&op, &action, &probes, 0.5, 1.0, 128)?;
        report.check(&format!("flow-equivariance-{name}"), rep.max(), tol);
        residual_rows.push(vec![
            format!("resolvent-{name}"),
            fmt(rep.resolvent),
        ]);
        residual_rows.push(vec![format!("yosida-{name}"), fmt(rep.yosida)]);
        residual_rows.push(vec![format!("flow-{name}"), fmt(rep.flow)]);
    }

    // pointwise structure tables: a sample with a duplicated row exercises
    // well-definedness; the Lipschitz contract is recomputed explicitly
    let space = DyadicSpace::new(3)?;
    let mut values: Vec<Vector> = Vec::new();
    for i in 0..atoms {
        let row = if i == atoms - 1 {
            values[0].to_vec()
        } else {
            (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        values.push(Vector::new(row)?);
    }
    let sample = EmpiricalSample::new(space, dim, values)?;

    let mut tables: Vec<(String, EulerTable, f64)> = Vec::new();
    for (name, lambda) in [
        ("neg_id", -1.0),
        ("centering", 1.0),
        ("meanfield", 0.0),
        ("componentwise_relu_neg", 0.0),
    ] {
        let op = builtin_operator(name, atoms, dim)?;
        let table = euler_map_extract(|x: &[f64]| op.apply(x).expect("explicit map"), 1.0, &sample)?;
        tables.push((name.to_string(), table, lambda));
    }
    let mut well_defined: f64 = 0.0;
    let mut lip_excess: f64 = 0.0;
    for (_, table, _) in &tables {
        for i in 0..table.entries.len() {
            for j in (i + 1)..table.entries.len() {
                let dx = dist(&table.entries[i].0, &table.entries[j].0);
                let dv = dist(&table.entries[i].1, &table.entries[j].1);
                if dx <= 1e-9 {
                    well_defined = well_defined.max(dv);
                }
                lip_excess = lip_excess.max(dv - table.lip * dx);
            }
        }
    }
    report.check("euler-table-well-defined", well_defined, 1e-7);
    report.check("euler-table-lipschitz", lip_excess.max(0.0), 1e-7);

    // section dissipativity at each builtin's own constant
    for (name, table, lambda) in &tables {
        let ok = check_dissipative_sections(table, *lambda);
        report.check(
            &format!("dissipative-sections-{name}"),
            if ok { 0.0 } else { 1.0 },
            0.5,
        );
    }

    // law-invariance upgrade: align a shuffled copy, then resolvents commute
    let op = builtin_operator("meanfield", atoms, dim)?;
    let tau = 0.5;
    let mut shuffle: Vec<usize> = (0..atoms).collect();
    for i in (1..atoms).rev() {
        shuffle.swap(i, rng.gen_range(0..=i));
    }
    let g0 = Permutation::new(shuffle)?;
    let shuffled = sample.compose(&g0)?;
    let g = align_same_law(&sample, None, &shuffled, None)?;
    // X = X'∘g; compare J(X) with J(X')∘g
    let jx = op.resolvent(tau, &flatten_sample(&sample))?;
    let jxp = op.resolvent(tau, &flatten_sample(&shuffled))?;
    let action_g = BlockAction::new(atoms, dim, g)?;
    let upgraded = action_g.apply(&jxp)?;
    let law_residual = dist(&jx, &upgraded);
    report.check("law-invariance-upgrade", law_residual, tol);
    residual_rows.push(vec!["law-invariance-upgrade".into(), fmt(law_residual)]);

    write_csv(
        &config.out,
        "invariance_residuals.csv",
        &["check", "residual"],
        &residual_rows,
    )?;
    Ok(())
}
