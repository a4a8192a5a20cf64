//! Coupling-approximation suite: count-matrix bounds for the permutation
//! approximation, exactness on integral data, discrepancy sweeps over the
//! refinement, and a Birkhoff reconstruction check.

use crate::config::ExperimentConfig;
use crate::report::{fmt, write_csv, Report};
use invmono::linalg::Mat;
use invmono::mps::{
    approx_coupling, birkhoff_decompose, block_counts, coupling_discrepancy, DoublyStochastic,
    EmpiricalSample,
};
use std::time::Instant;

const K_SWEEP: [usize; 4] = [1, 2, 4, 8];

pub fn run(config: &ExperimentConfig, report: &mut Report) -> anyhow::Result<()> {
    let couplings: Vec<DoublyStochastic> =
        match config.load_input::<DoublyStochastic>("coupling")? {
            Some(b) => vec![b],
            None => vec![
                DoublyStochastic::uniform(2),
                DoublyStochastic::new(
                    2,
                    Mat::from_rows(&[vec![0.375, 0.125], vec![0.125, 0.375]])?,
                )?,
                DoublyStochastic::uniform(4),
            ],
        };

    let mut count_bound: f64 = 0.0;
    let mut exactness: f64 = 0.0;
    let mut monotone_excess: f64 = 0.0;
    for (bi, b) in couplings.iter().enumerate() {
        let n = b.order();
        if !n.is_power_of_two() {
            anyhow::bail!("coupling order must be a power of two for the discrepancy sweep");
        }
        // evaluation samples: the integer ramp
        let z = EmpiricalSample::scalar(&(0..n).map(|i| i as f64).collect::<Vec<_>>())?;
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut previous: Option<f64> = None;
        for &k in &K_SWEEP {
            let start = Instant::now();
            let sigma = approx_coupling(b, k)?;
            let counts = block_counts(&sigma, n)?;
            let nk = (n * k) as f64;
            let mut integral = true;
            for i in 0..n {
                for j in 0..n {
                    let target = b.entry(i, j) * nk;
                    count_bound = count_bound.max((counts[(i, j)] - target).abs() / nk * nk);
                    if (target - target.round()).abs() > 1e-9 {
                        integral = false;
                    }
                }
            }
            if integral {
                for i in 0..n {
                    for j in 0..n {
                        exactness =
                            exactness.max((counts[(i, j)] - (b.entry(i, j) * nk).round()).abs());
                    }
                }
            }
            let disc = coupling_discrepancy(&sigma, b, &z, &z)?;
            if let Some(prev) = previous {
                monotone_excess = monotone_excess.max(disc - prev);
            }
            previous = Some(disc);
            let elapsed_ms = start.elapsed().as_millis();
            let mut row = vec![fmt(k as f64), fmt(disc)];
            if config.timings {
                row.push(format!("{elapsed_ms}"));
            }
            rows.push(row);
        }
        let header: Vec<&str> = if config.timings {
            vec!["K", "discrepancy", "runtime_ms"]
        } else {
            vec!["K", "discrepancy"]
        };
        write_csv(
            &config.out,
            &format!("coupling_sweep_{bi}.csv"),
            &header,
            &rows,
        )?;
    }
    // |C_ii'/(NK) − B_ii'| ≤ 1/(NK) entrywise ⇔ |C − NK·B| ≤ 1
    report.check("count-matrix-bound", count_bound, 1.0 + 1e-9);
    report.check("exact-when-integral", exactness, 1e-9);
    report.check("discrepancy-nonincreasing", monotone_excess, 1e-9);

    // Birkhoff reconstruction of every input coupling
    let mut recon: f64 = 0.0;
    for b in &couplings {
        let n = b.order();
        let terms = birkhoff_decompose(b)?;
        let mut rebuilt = Mat::zeros(n, n);
        for (w, p) in &terms {
            for i in 0..n {
                rebuilt[(i, p.apply(i))] += w / n as f64;
            }
        }
        recon = recon.max(rebuilt.max_abs_diff(b.mass()));
        let weight_sum: f64 = terms.iter().map(|(w, _)| w).sum();
        recon = recon.max((weight_sum - 1.0).abs());
    }
    report.check("birkhoff-reconstruction", recon, 1e-9);
    Ok(())
}
