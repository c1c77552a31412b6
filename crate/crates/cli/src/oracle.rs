//! `oracle-check`: column simulator against the dense oracle, and the
//! ensemble estimators against exact Haar columns.

use std::fmt;

use statrs::distribution::{DiscreteCDF, Poisson};
use statrs::function::erf::erfc_inv;
use ucesim_core::column::{dense_unitary_oracle, StateColumn, ORACLE_MAX_QUBITS};
use ucesim_core::cue::{cue_bin_mass, sample_haar_unitary, HAAR_MAX_DIM};
use ucesim_core::gateset::{realization_rng, sample_circuit, Circuit, Gate, DEFAULT_P_SINGLE};
use ucesim_core::stats::{correlator_estimate, moment_estimate, CompensatedSum, Histogram, StatisticKind};
use ucesim_core::C64;

use crate::CliError;

pub const ORACLE_GATES: usize = 30;
pub const ORACLE_TOLERANCE: f64 = 1e-12;
/// Haar draws per trial in the estimator suite.
const DRAWS_PER_TRIAL: usize = 1000;
const ESTIMATOR_SIGMAS: f64 = 4.0;
/// Expected bin count above which the Gaussian z-score is used.
const SPARSE_BIN_COUNT: f64 = 25.0;

/// Deliberate simulator bugs, used to show that the checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Exchange control and target of every CNOT.
    SwapCnot,
}

impl std::str::FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "swap-cnot" => Ok(Fault::SwapCnot),
            _ => Err(format!("unknown fault `{s}` (known: swap-cnot)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CaseResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub cases: Vec<CaseResult>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.cases.iter().filter(|c| !c.passed).count()
    }
}

/// First column after `circuit`, optionally with a fault injected.
pub fn simulate_with_fault(circuit: &Circuit, fault: Option<Fault>) -> Result<StateColumn, CliError> {
    let mut state = StateColumn::zero(circuit.n_qubits)?;
    for gate in &circuit.gates {
        match (gate, fault) {
            (Gate::Cnot { control, target }, Some(Fault::SwapCnot)) => state.apply_cnot(*target, *control)?,
            _ => state.apply_gate(gate)?,
        }
    }
    Ok(state)
}

/// Largest element-wise deviation between the simulated first column and
/// the dense oracle over `trials` circuits of `n_gates` gates.
pub fn oracle_max_error(
    n_qubits: usize,
    n_gates: usize,
    trials: usize,
    seed: u64,
    fault: Option<Fault>,
) -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for trial in 0..trials as u64 {
        let circuit = sample_circuit(seed, trial, n_qubits, n_gates, DEFAULT_P_SINGLE)?;
        let simulated = simulate_with_fault(&circuit, fault)?;
        let dense = dense_unitary_oracle(&circuit)?;
        for (row, amp) in simulated.amplitudes().iter().enumerate() {
            worst = worst.max((amp - dense[(row, 0)]).norm());
        }
    }
    Ok(worst)
}

/// First columns of `draws` exact Haar unitaries of size `dim`.
pub fn haar_columns(dim: usize, draws: usize, seed: u64) -> Result<Vec<StateColumn>, CliError> {
    let mut rng = realization_rng(seed, dim as u64);
    (0..draws)
        .map(|_| {
            let u = sample_haar_unitary(dim, &mut rng)?;
            let column: Vec<C64> = u.column(0).iter().copied().collect();
            Ok(StateColumn::from_amplitudes(column)?)
        })
        .collect()
}

/// Mean and standard error of a per-column statistic; the estimator's own
/// pooled value is returned as the mean.
fn pooled_with_error(
    columns: &[StateColumn],
    estimate: impl Fn(&[&StateColumn]) -> ucesim_core::Result<f64>,
) -> Result<(f64, f64), CliError> {
    let all: Vec<&StateColumn> = columns.iter().collect();
    let pooled = estimate(&all)?;
    let mut sum = CompensatedSum::default();
    let mut sum_sq = CompensatedSum::default();
    for column in columns {
        let v = estimate(&[column])?;
        sum.add(v);
        sum_sq.add(v * v);
    }
    let n = columns.len() as f64;
    let mean = sum.value() / n;
    let variance = (sum_sq.value() / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok((pooled, (variance / n).sqrt()))
}

/// Checks a moment or correlator estimate on Haar columns against its CUE
/// value within `n_sigma` standard errors.
pub fn haar_statistic_case(columns: &[StateColumn], kind: StatisticKind, n_sigma: f64) -> Result<CaseResult, CliError> {
    let dim = columns.first().map(|c| c.dim()).ok_or_else(|| CliError::Usage("no Haar columns".into()))?;
    let reference =
        kind.cue_reference(dim as u64).ok_or_else(|| CliError::Usage(format!("{kind} has no scalar reference")))?;
    let (estimate, error) = match kind {
        StatisticKind::Moment(k) => pooled_with_error(columns, |s| moment_estimate(s.iter().copied(), k))?,
        StatisticKind::Correlator(k) => pooled_with_error(columns, |s| correlator_estimate(s.iter().copied(), k))?,
        _ => return Err(CliError::Usage(format!("{kind} is not a moment or correlator"))),
    };
    let deviation = (estimate - reference).abs();
    // A statistic with no spread (mu1 is identically 1) must match exactly.
    let bound = (n_sigma * error).max(1e-12 * reference);
    Ok(CaseResult {
        name: format!("haar {kind} N={dim}"),
        passed: deviation <= bound,
        detail: format!("estimate {estimate:.6} vs {reference:.6}, |diff| {deviation:.2e} <= {bound:.2e}"),
    })
}

/// Gaussian z with the same two-sided tail probability as `count` under a
/// Poisson law with mean `expected`.
fn poisson_equivalent_z(count: u64, expected: f64) -> f64 {
    if expected <= 0.0 {
        return if count == 0 { 0.0 } else { f64::INFINITY };
    }
    let poisson = Poisson::new(expected).expect("positive mean");
    let tail = if count as f64 >= expected {
        if count == 0 {
            1.0
        } else {
            poisson.sf(count - 1)
        }
    } else {
        poisson.cdf(count)
    };
    let two_sided = (2.0 * tail).min(1.0);
    if two_sided <= 0.0 {
        f64::INFINITY
    } else {
        std::f64::consts::SQRT_2 * erfc_inv(two_sided)
    }
}

/// Log-intensity histogram of Haar columns against the CUE bin masses.
///
/// A bin passes when its count is no less likely than an `n_sigma` Gaussian
/// deviation. Well-filled bins are judged by the usual z-score; sparse bins
/// (expected count below 25) by the exact Poisson tail, where the Gaussian
/// approximation would flag a single event in a nearly empty bin.
pub fn haar_histogram_case(columns: &[StateColumn], n_sigma: f64) -> Result<CaseResult, CliError> {
    let dim = columns.first().map(|c| c.dim()).ok_or_else(|| CliError::Usage("no Haar columns".into()))?;
    let mut histogram = Histogram::new(dim as u64);
    for column in columns {
        histogram.observe(column)?;
    }
    let total = histogram.total() as f64;
    let mut observed = vec![histogram.underflow()];
    observed.extend_from_slice(histogram.counts());
    let mut expected = vec![ucesim_core::cue::cue_log_cumulative(histogram.l_min(), dim as u64)];
    expected.extend((0..histogram.bin_count()).map(|b| {
        let (lo, hi) = histogram.bin_edges(b);
        cue_bin_mass(lo, hi, dim as u64)
    }));
    let mut worst = (0.0f64, 0usize);
    let mut failing = 0;
    let mut sparse = 0;
    for (bin, (&count, &p)) in observed.iter().zip(&expected).enumerate() {
        let mean = total * p;
        let z = if mean >= SPARSE_BIN_COUNT {
            (count as f64 - mean).abs() / (mean * (1.0 - p)).sqrt()
        } else {
            sparse += 1;
            poisson_equivalent_z(count, mean)
        };
        if z > n_sigma {
            failing += 1;
        }
        if z > worst.0 {
            worst = (z, bin);
        }
    }
    Ok(CaseResult {
        name: format!("haar histogram N={dim}"),
        passed: failing == 0,
        detail: format!(
            "{failing} of {} bins beyond {n_sigma} sigma ({sparse} sparse bins by Poisson tail), worst z {:.2} in bin {}",
            observed.len(),
            worst.0,
            worst.1
        ),
    })
}

pub fn cmd_oracle_check(
    nq_max: usize,
    trials: usize,
    seed: u64,
    fault: Option<Fault>,
) -> Result<OracleReport, CliError> {
    if trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    if nq_max == 0 || nq_max > ORACLE_MAX_QUBITS {
        return Err(CliError::Usage(format!("nq-max must be in 1..={ORACLE_MAX_QUBITS}, got {nq_max}")));
    }
    let mut cases = Vec::new();
    for n_qubits in 1..=nq_max {
        let worst = oracle_max_error(n_qubits, ORACLE_GATES, trials, seed, fault)?;
        cases.push(CaseResult {
            name: format!("oracle nq={n_qubits}"),
            passed: worst <= ORACLE_TOLERANCE,
            detail: format!("{trials} circuits of {ORACLE_GATES} gates, max |diff| {worst:.2e}"),
        });
    }
    let draws = trials * DRAWS_PER_TRIAL;
    for dim in [4usize, 8].into_iter().filter(|&d| d <= (1 << nq_max).min(HAAR_MAX_DIM)) {
        let columns = haar_columns(dim, draws, seed)?;
        for kind in [StatisticKind::Moment(1), StatisticKind::Moment(2), StatisticKind::Correlator(2)] {
            cases.push(haar_statistic_case(&columns, kind, ESTIMATOR_SIGMAS)?);
        }
    }
    Ok(OracleReport { cases })
}
