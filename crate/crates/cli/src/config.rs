//! Experiment configuration: suite name, input file paths, tolerances, seed
//! and output directory, merged from an optional JSON file and CLI flags
//! (flags win).

use anyhow::{anyhow, bail, Context};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    ExtendMonotone,
    Kirszbraun,
    CouplingApprox,
    Evolve,
    InvarianceAudit,
}

impl Suite {
    pub fn parse(name: &str) -> Option<Suite> {
        match name {
            "extend-monotone" => Some(Suite::ExtendMonotone),
            "kirszbraun" => Some(Suite::Kirszbraun),
            "coupling-approx" => Some(Suite::CouplingApprox),
            "evolve" => Some(Suite::Evolve),
            "invariance-audit" => Some(Suite::InvarianceAudit),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Suite::ExtendMonotone => "extend-monotone",
            Suite::Kirszbraun => "kirszbraun",
            Suite::CouplingApprox => "coupling-approx",
            Suite::Evolve => "evolve",
            Suite::InvarianceAudit => "invariance-audit",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    suite: Option<String>,
    #[serde(default)]
    inputs: BTreeMap<String, String>,
    seed: Option<u64>,
    tolerance: Option<f64>,
    out: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub inputs: BTreeMap<String, PathBuf>,
    pub seed: u64,
    pub tolerance: f64,
    pub out: PathBuf,
    pub timings: bool,
}

impl ExperimentConfig {
    pub fn resolve(
        suite: Suite,
        config_path: Option<&Path>,
        out: Option<PathBuf>,
        seed: Option<u64>,
        tol: Option<f64>,
        timings: bool,
    ) -> anyhow::Result<ExperimentConfig> {
        let mut file_cfg: Option<ConfigFile> = None;
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            let parsed: ConfigFile = serde_json::from_str(&text).map_err(|e| {
                anyhow!(
                    "malformed JSON in {} at line {}, column {}: {e}",
                    path.display(),
                    e.line(),
                    e.column()
                )
            })?;
            if let Some(name) = &parsed.suite {
                let declared = Suite::parse(name)
                    .ok_or_else(|| anyhow!("unknown suite '{name}' in config"))?;
                if declared != suite {
                    bail!(
                        "config declares suite '{declared}' but the '{suite}' subcommand was invoked"
                    );
                }
            }
            file_cfg = Some(parsed);
        }
        let base_dir = config_path.and_then(|p| p.parent().map(Path::to_path_buf));
        let mut inputs = BTreeMap::new();
        if let Some(cfg) = &file_cfg {
            for (role, p) in &cfg.inputs {
                let path = PathBuf::from(p);
                let resolved = if path.is_relative() {
                    base_dir.clone().unwrap_or_default().join(&path)
                } else {
                    path
                };
                inputs.insert(role.clone(), resolved);
            }
        }
        let seed = seed
            .or(file_cfg.as_ref().and_then(|c| c.seed))
            .unwrap_or(42);
        let tolerance = tol
            .or(file_cfg.as_ref().and_then(|c| c.tolerance))
            .unwrap_or(1e-6);
        if !(tolerance > 0.0) {
            bail!("tolerance must be positive");
        }
        let out = out
            .or(file_cfg
                .as_ref()
                .and_then(|c| c.out.as_ref().map(PathBuf::from)))
            .unwrap_or_else(|| PathBuf::from("invmono-out"));
        Ok(ExperimentConfig {
            suite,
            inputs,
            seed,
            tolerance,
            out,
            timings,
        })
    }

    /// Parses a JSON input file of type `T` for a configured role.
    pub fn load_input<T: serde::de::DeserializeOwned>(
        &self,
        role: &str,
    ) -> anyhow::Result<Option<T>> {
        let Some(path) = self.inputs.get(role) else {
            return Ok(None);
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {} input {}", role, path.display()))?;
        let value: T = serde_json::from_str(&text).map_err(|e| match e.classify() {
            serde_json::error::Category::Data => {
                anyhow!("invalid {} input {}: {e}", role, path.display())
            }
            _ => anyhow!(
                "malformed JSON in {} at line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ),
        })?;
        Ok(Some(value))
    }
}
