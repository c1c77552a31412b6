//! `converge`: ensemble runs across `n_q` and statistics.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use ucesim_core::ensemble::{curves_to_csv, run_ensemble};
use ucesim_core::gateset::EnsembleConfig;
use ucesim_core::stats::StatisticKind;

use crate::{with_workers, CliError, ExperimentConfig};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub nq: usize,
    pub n_r: u64,
    pub checkpoints: Vec<usize>,
}

/// Record of a `converge` run, written next to its curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub master_seed: u64,
    /// Effective config without execution-only fields.
    pub config: ExperimentConfig,
    pub runs: Vec<ManifestRun>,
    /// Output files, relative to the manifest.
    pub files: Vec<String>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Manifest, CliError> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone)]
pub struct ConvergeOutput {
    pub output_dir: PathBuf,
    pub curve_files: Vec<PathBuf>,
    pub histogram_files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

/// `mu2@3` becomes `mu2-row3`.
fn file_stem(statistic: &StatisticKind) -> String {
    statistic.to_string().replace('@', "-row")
}

pub fn curve_file_name(n_qubits: usize, statistic: &StatisticKind) -> String {
    format!("curve_nq{n_qubits}_{}.csv", file_stem(statistic))
}

pub fn histogram_file_name(n_qubits: usize, n_gates: usize) -> String {
    format!("hist_nq{n_qubits}_ng{n_gates}.csv")
}

pub fn cmd_converge(config: &ExperimentConfig) -> Result<ConvergeOutput, CliError> {
    config.validate()?;
    let statistics = config.statistic_kinds()?;
    let sizing = config.sizing_rule()?;
    let output_dir = config.resolved_output_dir();
    std::fs::create_dir_all(&output_dir).with_context(|| format!("creating {}", output_dir.display()))?;

    let mut runs = Vec::new();
    let mut files = Vec::new();
    let mut curve_files = Vec::new();
    let mut histogram_files = Vec::new();
    for &n_qubits in &config.nq {
        let mut ensemble =
            EnsembleConfig::new(n_qubits, sizing, config.checkpoints_for(n_qubits)?, config.master_seed)?
                .with_p_single(config.p_single)?;
        ensemble.max_qubits = config.max_nq;
        ensemble.validate()?;

        let run = with_workers(config.workers.unwrap_or(0), || run_ensemble(&ensemble, &statistics))??;
        for curve in run.curves()? {
            let name = curve_file_name(n_qubits, &curve.statistic);
            let path = output_dir.join(&name);
            write(&path, &curves_to_csv([&curve]))?;
            files.push(name);
            curve_files.push(path);
        }
        if config.dump_histograms {
            for (n_gates, histogram) in run.histograms().unwrap_or_default() {
                let name = histogram_file_name(n_qubits, n_gates);
                let path = output_dir.join(&name);
                write(&path, &histogram.to_csv())?;
                files.push(name);
                histogram_files.push(path);
            }
        }
        runs.push(ManifestRun { nq: n_qubits, n_r: ensemble.n_realizations, checkpoints: ensemble.checkpoints });
    }

    let manifest = Manifest {
        tool: "ucesim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        master_seed: config.master_seed,
        config: config.result_defining(),
        runs,
        files,
    };
    let manifest_path = output_dir.join(MANIFEST_FILE);
    write(&manifest_path, &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"))?;
    Ok(ConvergeOutput { output_dir, curve_files, histogram_files, manifest: manifest_path })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
