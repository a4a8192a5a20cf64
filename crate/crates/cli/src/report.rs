//! Report assembly: an ordered list of named checks serialized to
//! `report.json`, plus diff-stable CSV output ('.' decimals, '\n' endings,
//! header row always present).

use serde::Serialize;
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub tolerance: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Report {
    pub fn new(suite: &str, seed: u64, tolerance: f64) -> Report {
        Report {
            suite: suite.to_string(),
            seed,
            tolerance,
            checks: Vec::new(),
            passed: true,
        }
    }

    /// Records a check that passes when `value ≤ bound`.
    pub fn check(&mut self, name: &str, value: f64, bound: f64) {
        let passed = value <= bound;
        log::info!("check {name}: value {value:.6e}, bound {bound:.6e}, passed {passed}");
        self.passed &= passed;
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            value,
            bound,
        });
    }

    pub fn failed_names(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn write(&self, out_dir: &Path) -> anyhow::Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(out_dir.join("report.json"), text)?;
        Ok(())
    }
}

/// Writes a CSV file with '.' decimal separators and '\n' line endings.
pub fn write_csv(
    out_dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> anyhow::Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(out_dir.join(name), text)?;
    Ok(())
}

/// Deterministic float formatting for CSV cells (shortest round-trip form).
pub fn fmt(v: f64) -> String {
    format!("{v}")
}
