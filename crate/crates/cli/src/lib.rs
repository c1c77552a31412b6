//! Experiment runner for random-circuit ensembles: convergence curves, `n*`
//! tables and scaling fits, moment-operator gaps and self-checks.

pub mod config;
pub mod converge;
pub mod nstar_fit;
pub mod oracle;

use std::fmt;

use ucesim_core::gateset::sample_circuit;
use ucesim_core::moment_op::{build_moment_operator, exact_moment_operator, spectral_gap, GapReport};

pub use config::ExperimentConfig;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(e) => write!(f, "error: {e:#}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<ucesim_core::Error> for CliError {
    fn from(e: ucesim_core::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

/// Runs `f` on a pool of `workers` threads (0 = one per core).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Spectral gap of the gate-set moment operator. `samples = 0` uses the
/// closed-form single-qubit average instead of sampling.
pub fn cmd_gap(samples: usize, seed: u64) -> Result<GapReport, CliError> {
    let op = if samples == 0 {
        exact_moment_operator()
    } else {
        let mut rng = ucesim_core::gateset::realization_rng(seed, 0);
        build_moment_operator(samples, &mut rng)?
    };
    Ok(GapReport::from(&spectral_gap(&op)?))
}

pub fn gap_json(report: &GapReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}

/// Text form of realization `index` of the ensemble with `master_seed`.
pub fn cmd_dump_circuit(
    n_qubits: usize,
    n_gates: usize,
    master_seed: u64,
    index: u64,
    p_single: f64,
) -> Result<String, CliError> {
    if n_qubits == 0 {
        return Err(CliError::Usage("nq must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p_single) {
        return Err(CliError::Usage(format!("p_single = {p_single} is not a probability")));
    }
    Ok(sample_circuit(master_seed, index, n_qubits, n_gates, p_single)?.to_text())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 1);
        assert_eq!(CliError::Runtime(anyhow::anyhow!("x")).exit_code(), 2);
        assert_eq!(CliError::Verification(String::new()).exit_code(), 3);
    }

    #[test]
    fn exact_gap_report() {
        let report = cmd_gap(0, 0).unwrap();
        assert_eq!(report.multiplicity, 2);
        assert!((report.gap - 0.232703).abs() < 1e-6);
        assert_eq!(report.samples, 0);
    }

    #[test]
    fn dump_circuit_parses_back() {
        let text = cmd_dump_circuit(3, 12, 5, 2, 0.5).unwrap();
        let circuit: ucesim_core::gateset::Circuit = text.parse().unwrap();
        assert_eq!(circuit.len(), 12);
        assert_eq!(circuit.realization_index, 2);
        assert!(cmd_dump_circuit(0, 1, 0, 0, 0.5).is_err());
    }
}
