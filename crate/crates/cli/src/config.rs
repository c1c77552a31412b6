//! Experiment configuration, read from TOML.
//!
//! ```toml
//! nq = [3, 4, 5]
//! statistics = ["pl", "mu2", "c2", "mu2@0"]
//! ln_eps = [-1.0, -2.0]
//! master_seed = 7
//! checkpoints = { start = 2.0, ratio = 1.4142135623730951, max = 200 }  # or a list
//! n_r = 1000                  # or: sizing = { a = 10, b = 20 }
//! workers = 4                 # 0 = all cores
//! output_dir = "runs/a"
//! max_nq = 24
//! p_single = 0.5
//! dump_histograms = false
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use ucesim_core::column::DEFAULT_MAX_QUBITS;
use ucesim_core::ensemble::{default_checkpoints, geometric_checkpoints};
use ucesim_core::gateset::{Sizing, DEFAULT_P_SINGLE};
use ucesim_core::stats::StatisticKind;

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "UCESIM_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "ucesim-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Checkpoints {
    List(Vec<usize>),
    Geometric { start: f64, ratio: f64, max: usize },
}

impl Checkpoints {
    pub fn resolve(&self) -> Result<Vec<usize>, CliError> {
        match self {
            Checkpoints::List(list) => Ok(list.clone()),
            Checkpoints::Geometric { start, ratio, max } => {
                geometric_checkpoints(*start, *ratio, *max).map_err(|e| CliError::Usage(e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizingRule {
    pub a: u64,
    pub b: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub nq: Vec<usize>,
    #[serde(default = "default_statistics")]
    pub statistics: Vec<String>,
    #[serde(default = "default_ln_eps")]
    pub ln_eps: Vec<f64>,
    #[serde(default)]
    pub master_seed: u64,
    /// `None` selects the per-`n_q` default grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Checkpoints>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_r: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizing: Option<SizingRule>,
    #[serde(default = "default_max_nq")]
    pub max_nq: usize,
    #[serde(default = "default_p_single")]
    pub p_single: f64,
    /// Also write the log-intensity histogram at every checkpoint (needs `pl`).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub dump_histograms: bool,
    /// Execution-only; not echoed to the manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_statistics() -> Vec<String> {
    vec!["pl".into()]
}

fn default_ln_eps() -> Vec<f64> {
    vec![-1.0]
}

fn default_max_nq() -> usize {
    DEFAULT_MAX_QUBITS
}

fn default_p_single() -> f64 {
    DEFAULT_P_SINGLE
}

impl ExperimentConfig {
    pub fn new(nq: Vec<usize>) -> Self {
        ExperimentConfig {
            nq,
            statistics: default_statistics(),
            ln_eps: default_ln_eps(),
            master_seed: 0,
            checkpoints: None,
            n_r: None,
            sizing: None,
            max_nq: default_max_nq(),
            p_single: default_p_single(),
            dump_histograms: false,
            workers: None,
            output_dir: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            let message = e.message().to_string();
            match line {
                Some(line) => CliError::Usage(format!("config line {line}: {message}")),
                None => CliError::Usage(format!("config: {message}")),
            }
        })
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn statistic_kinds(&self) -> Result<Vec<StatisticKind>, CliError> {
        self.statistics.iter().map(|s| s.parse::<StatisticKind>().map_err(|e| CliError::Usage(e.to_string()))).collect()
    }

    pub fn sizing_rule(&self) -> Result<Sizing, CliError> {
        match (self.n_r, self.sizing) {
            (Some(_), Some(_)) => Err(CliError::Usage("set either n_r or sizing, not both".into())),
            (Some(n), None) => Ok(Sizing::Explicit(n)),
            (None, Some(SizingRule { a, b })) => Ok(Sizing::Rule { a, b }),
            (None, None) => Ok(Sizing::default()),
        }
    }

    pub fn checkpoints_for(&self, n_qubits: usize) -> Result<Vec<usize>, CliError> {
        match &self.checkpoints {
            Some(c) => c.resolve(),
            None => Ok(default_checkpoints(n_qubits)),
        }
    }

    /// Output directory: config value, then the environment, then a fixed fallback.
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR))
    }

    /// The part of the config that determines results.
    pub fn result_defining(&self) -> ExperimentConfig {
        ExperimentConfig { workers: None, output_dir: None, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.nq.is_empty() {
            return Err(CliError::Usage("nq list is empty".into()));
        }
        if let Some(&n) = self.nq.iter().find(|&&n| n > self.max_nq) {
            return Err(CliError::Usage(format!("nq = {n} exceeds the memory cap max_nq = {}", self.max_nq)));
        }
        if self.nq.contains(&0) {
            return Err(CliError::Usage("nq must be at least 1".into()));
        }
        if self.statistics.is_empty() {
            return Err(CliError::Usage("statistics list is empty".into()));
        }
        if !(0.0..=1.0).contains(&self.p_single) {
            return Err(CliError::Usage(format!("p_single = {} is not a probability", self.p_single)));
        }
        let kinds = self.statistic_kinds()?;
        for &n in &self.nq {
            for kind in &kinds {
                kind.validate(1 << n).map_err(|e| CliError::Usage(format!("{kind} at nq = {n}: {e}")))?;
            }
            let checkpoints = self.checkpoints_for(n)?;
            if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::Usage("checkpoints must be non-empty and strictly increasing".into()));
            }
        }
        if self.ln_eps.iter().any(|e| !e.is_finite()) {
            return Err(CliError::Usage("ln_eps values must be finite".into()));
        }
        if self.sizing_rule()? == Sizing::Explicit(0) {
            return Err(CliError::Usage("n_r must be positive".into()));
        }
        if self.dump_histograms && !kinds.contains(&StatisticKind::DistPl) {
            return Err(CliError::Usage("dump_histograms needs the `pl` statistic".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_example() {
        let cfg = ExperimentConfig::from_toml(
            "nq = [3, 4]\nstatistics = [\"pl\", \"mu2@1\"]\nmaster_seed = 9\n\
             checkpoints = { start = 2.0, ratio = 2.0, max = 32 }\nsizing = { a = 5, b = 10 }\nworkers = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.nq, [3, 4]);
        assert_eq!(cfg.checkpoints_for(3).unwrap(), [2, 4, 8, 16, 32]);
        assert_eq!(cfg.sizing_rule().unwrap(), Sizing::Rule { a: 5, b: 10 });
        assert_eq!(cfg.workers, Some(2));
        cfg.validate().unwrap();
    }

    #[test]
    fn explicit_checkpoint_list_and_defaults() {
        let cfg = ExperimentConfig::from_toml("nq = [2]\ncheckpoints = [1, 5, 9]\nn_r = 10\n").unwrap();
        assert_eq!(cfg.checkpoints_for(2).unwrap(), [1, 5, 9]);
        assert_eq!(cfg.statistics, ["pl"]);
        assert_eq!(cfg.max_nq, 24);
        assert_eq!(cfg.sizing_rule().unwrap(), Sizing::Explicit(10));
    }

    #[test]
    fn parse_error_reports_line() {
        let err = ExperimentConfig::from_toml("nq = [3]\nmaster_seed = \"x\"\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = ExperimentConfig::from_toml("nq = [3]\n\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = ExperimentConfig::new(vec![30]);
        assert!(cfg.validate().unwrap_err().to_string().contains("memory cap"));
        cfg.nq = vec![2];
        cfg.statistics = vec!["c5".into()];
        assert!(cfg.validate().is_err());
        cfg.statistics = vec!["mu9".into()];
        assert!(cfg.validate().is_err());
        cfg.statistics = vec!["mu2".into()];
        cfg.n_r = Some(5);
        cfg.sizing = Some(SizingRule { a: 1, b: 1 });
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = ExperimentConfig::new(vec![2, 5]);
        cfg.ln_eps = vec![-0.1, -std::f64::consts::LN_10];
        cfg.checkpoints = Some(Checkpoints::Geometric { start: 2.0, ratio: std::f64::consts::SQRT_2, max: 80 });
        cfg.sizing = Some(SizingRule { a: 10, b: 16 });
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
