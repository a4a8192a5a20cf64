//! Evolution suite: exponential-formula convergence against closed forms,
//! matrix-exponential cross-check, Yosida monotonicity log, and semigroup
//! contraction with the doubling monitor as truncation allowance.

use super::uniform_vec;
use crate::config::ExperimentConfig;
use crate::oracle::expm_times;
use crate::report::{fmt, write_csv, Report};
use invmono::dissipative::{
    builtin_operator, flow, flow_trajectory, flow_with_monitor, minimal_selection, OperatorFile,
    OperatorSpec,
};
use invmono::linalg::{dist, Mat, Vector};
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn run(config: &ExperimentConfig, report: &mut Report) -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // exponential formula against the scalar closed form
    let neg_id = builtin_operator("neg_id", 2, 1)?;
    let x0 = vec![1.0, -2.0];
    let f = flow(&neg_id, &x0, 1.0, 1024)?;
    let target: Vec<f64> = x0.iter().map(|t| t * (-1.0f64).exp()).collect();
    let x0_norm = dist(&x0, &[0.0, 0.0]);
    report.check("exp-formula-neg-id", dist(&f, &target), 5e-4 * x0_norm);

    // linear flow against the matrix-exponential oracle
    let m = Mat::from_rows(&[vec![-1.0, 0.3], vec![0.3, -2.0]])?;
    let linear = OperatorSpec::linear(-0.6, m.clone())?;
    let fl = flow(&linear, &x0, 1.0, 2048)?;
    let oracle = expm_times(&m, 1.0, &x0);
    report.check("linear-vs-matrix-exponential", dist(&fl, &oracle), 1e-3);

    // optional user-supplied operator: resolvent well-posedness spot check
    if let Some(file) = config.load_input::<OperatorFile>("operator")? {
        let op = file.build()?;
        let lambda_plus = op.lambda().max(0.0);
        let tau = if lambda_plus > 0.0 {
            0.5 / lambda_plus
        } else {
            0.5
        };
        let y = uniform_vec(&mut rng, op.dim(), 1.0);
        let j = op.resolvent(tau, &y)?;
        report.check(
            "custom-operator-resolvent-finite",
            if j.iter().all(|t| t.is_finite()) { 0.0 } else { 1.0 },
            0.5,
        );
    }

    // Yosida monotonicity log along a dyadic step schedule
    let schedule: Vec<f64> = (0..=10).map(|k| 0.5 / (1u64 << k) as f64).collect();
    let mut yosida_decrease: f64 = 0.0;
    let graph_op = OperatorSpec::graph_extension(
        0.0,
        1,
        vec![
            (Vector::new(vec![0.0])?, Vector::new(vec![0.0])?),
            (Vector::new(vec![1.0])?, Vector::new(vec![-1.0])?),
        ],
    )?;
    let mut yosida_rows: Vec<Vec<String>> = Vec::new();
    for (op, probe, label) in [
        (&neg_id, vec![2.0, 0.5], "neg_id"),
        (&graph_op, vec![0.5], "graph"),
    ] {
        let rep = minimal_selection(op, &probe, &schedule)?;
        for w in rep.norms.windows(2) {
            yosida_decrease = yosida_decrease.max(w[0] - w[1]);
        }
        for (tau, val) in schedule.iter().zip(&rep.norms) {
            yosida_rows.push(vec![label.to_string(), fmt(*tau), fmt(*val)]);
        }
    }
    report.check("yosida-log-nondecreasing", yosida_decrease, 1e-8);
    write_csv(
        &config.out,
        "yosida_log.csv",
        &["operator", "tau", "scaled_norm"],
        &yosida_rows,
    )?;

    // contraction |S_t x − S_t y| ≤ e^{λt}|x−y| + tol + truncation monitor
    let mut contraction: f64 = 0.0;
    let cases: Vec<(&OperatorSpec, f64, Vec<f64>, usize)> = vec![
        (&neg_id, -1.0, vec![0.1, 1.0, 5.0], 1024),
        (&linear, -0.6, vec![0.1, 1.0, 5.0], 1024),
        (&graph_op, 0.0, vec![0.5], 256),
    ];
    for (op, lambda, ts, n) in cases {
        for t in ts {
            for _ in 0..3 {
                let a = uniform_vec(&mut rng, op.dim(), 2.0);
                let b = uniform_vec(&mut rng, op.dim(), 2.0);
                let (fa, ea) = flow_with_monitor(op, &a, t, n)?;
                let (fb, eb) = flow_with_monitor(op, &b, t, n)?;
                let bound = (lambda * t).exp() * dist(&a, &b) + ea + eb;
                contraction = contraction.max(dist(&fa, &fb) - bound);
            }
        }
    }
    report.check("semigroup-contraction", contraction.max(0.0), config.tolerance);

    // trajectory CSV: columns t, index, coordinates
    let n_steps = 64usize;
    let t_final = 1.0;
    let states = flow_trajectory(&linear, &x0, t_final, n_steps)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (k, state) in states.iter().enumerate() {
        let t = t_final * k as f64 / n_steps as f64;
        for (idx, val) in state.iter().enumerate() {
            rows.push(vec![fmt(t), format!("{idx}"), fmt(*val)]);
        }
    }
    write_csv(&config.out, "trajectory.csv", &["t", "index", "c0"], &rows)?;
    Ok(())
}
