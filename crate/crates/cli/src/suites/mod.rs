//! The named experiment suites. Each suite assembles its inputs (from the
//! config or built-in defaults), runs its checks with seeded randomness,
//! writes the report and sweep CSVs, and returns the failing check names.

mod coupling;
mod evolve;
mod extend;
mod invariance;
mod kirszbraun;

use crate::config::{ExperimentConfig, Suite};
use crate::report::Report;

pub struct SuiteOutcome {
    pub total: usize,
    pub failed: Vec<String>,
}

pub fn run(config: &ExperimentConfig) -> anyhow::Result<SuiteOutcome> {
    let mut report = Report::new(config.suite.name(), config.seed, config.tolerance);
    match config.suite {
        Suite::ExtendMonotone => extend::run(config, &mut report)?,
        Suite::Kirszbraun => kirszbraun::run(config, &mut report)?,
        Suite::CouplingApprox => coupling::run(config, &mut report)?,
        Suite::Evolve => evolve::run(config, &mut report)?,
        Suite::InvarianceAudit => invariance::run(config, &mut report)?,
    }
    report.write(&config.out)?;
    Ok(SuiteOutcome {
        total: report.checks.len(),
        failed: report.failed_names(),
    })
}

/// Seeded uniform vector in `[-r, r]^d`.
pub(crate) fn uniform_vec(rng: &mut rand_chacha::ChaCha8Rng, d: usize, r: f64) -> Vec<f64> {
    use rand::Rng;
    (0..d).map(|_| rng.gen_range(-r..r)).collect()
}
