//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string; the page parses it with `JSON.parse`.

use serde::Serialize;
use ucesim_core::cue::cue_log_density;
use ucesim_core::ensemble::{geometric_checkpoints, run_ensemble};
use ucesim_core::gateset::{realization_rng, EnsembleConfig, Sizing};
use ucesim_core::moment_op::{build_moment_operator, exact_moment_operator, spectral_gap, GapReport};
use ucesim_core::stats::StatisticKind;
use wasm_bindgen::prelude::*;

/// Limits that keep a single call within a few seconds in the browser.
pub const MAX_QUBITS: usize = 12;
pub const MAX_REALIZATIONS: u64 = 200_000;
pub const MAX_GATES: usize = 2_000;
pub const MAX_GAP_SAMPLES: usize = 1_000_000;

#[derive(Debug, Serialize)]
pub struct HistogramView {
    pub n_qubits: usize,
    pub n_gates: usize,
    pub centers: Vec<f64>,
    /// Empirical density of `l`, normalized over the plotted bins.
    pub empirical: Vec<f64>,
    pub cue: Vec<f64>,
    pub distance: f64,
}

#[derive(Debug, Serialize)]
pub struct CurveView {
    pub statistic: String,
    pub gates: Vec<usize>,
    pub values: Vec<f64>,
    pub d_min: Option<f64>,
}

fn check_sizes(n_qubits: usize, n_realizations: u64, n_gates: usize) -> Result<(), String> {
    if !(1..=MAX_QUBITS).contains(&n_qubits) {
        return Err(format!("qubits must be in 1..={MAX_QUBITS}"));
    }
    if !(1..=MAX_REALIZATIONS).contains(&n_realizations) {
        return Err(format!("realizations must be in 1..={MAX_REALIZATIONS}"));
    }
    if !(1..=MAX_GATES).contains(&n_gates) {
        return Err(format!("gates must be in 1..={MAX_GATES}"));
    }
    Ok(())
}

/// Log-intensity histogram after `n_gates` gates, with the CUE density.
pub fn histogram_view(
    n_qubits: usize,
    n_gates: usize,
    n_realizations: u64,
    seed: u64,
) -> Result<HistogramView, String> {
    check_sizes(n_qubits, n_realizations, n_gates)?;
    let config = EnsembleConfig::new(n_qubits, Sizing::Explicit(n_realizations), vec![n_gates], seed)
        .map_err(|e| e.to_string())?;
    let run = run_ensemble(&config, &[StatisticKind::DistPl]).map_err(|e| e.to_string())?;
    let histograms = run.histograms().ok_or("histogram missing")?;
    let (_, histogram) = histograms[0];
    let dim = histogram.dim();
    let width = histogram.bin_width();
    let total = histogram.total() as f64;
    let mut view = HistogramView {
        n_qubits,
        n_gates,
        centers: Vec::with_capacity(histogram.bin_count()),
        empirical: Vec::with_capacity(histogram.bin_count()),
        cue: Vec::with_capacity(histogram.bin_count()),
        distance: histogram.hellinger_distance().map_err(|e| e.to_string())?,
    };
    for (bin, &count) in histogram.counts().iter().enumerate() {
        let (lo, hi) = histogram.bin_edges(bin);
        let center = 0.5 * (lo + hi);
        view.centers.push(center);
        view.empirical.push(count as f64 / (total * width));
        view.cue.push(cue_log_density(center, dim));
    }
    Ok(view)
}

/// Convergence curve of `statistic` on a geometric grid up to `max_gates`.
pub fn curve_view(
    n_qubits: usize,
    statistic: &str,
    max_gates: usize,
    n_realizations: u64,
    seed: u64,
) -> Result<CurveView, String> {
    check_sizes(n_qubits, n_realizations, max_gates)?;
    let kind: StatisticKind = statistic.parse().map_err(|e: ucesim_core::Error| e.to_string())?;
    let checkpoints = geometric_checkpoints(1.0, std::f64::consts::SQRT_2, max_gates).map_err(|e| e.to_string())?;
    let config = EnsembleConfig::new(n_qubits, Sizing::Explicit(n_realizations), checkpoints, seed)
        .map_err(|e| e.to_string())?;
    let curve = run_ensemble(&config, &[kind]).and_then(|run| run.curves()).map_err(|e| e.to_string())?.remove(0);
    Ok(CurveView {
        statistic: curve.statistic.to_string(),
        gates: curve.points.iter().map(|p| p.0).collect(),
        values: curve.distances(),
        d_min: curve.d_min,
    })
}

/// Moment-operator gap; `samples = 0` uses the closed-form average.
pub fn gap_report(samples: usize, seed: u64) -> Result<GapReport, String> {
    if samples > MAX_GAP_SAMPLES {
        return Err(format!("samples must be at most {MAX_GAP_SAMPLES}"));
    }
    let op = if samples == 0 {
        exact_moment_operator()
    } else {
        build_moment_operator(samples, &mut realization_rng(seed, 0)).map_err(|e| e.to_string())?
    };
    Ok(GapReport::from(&spectral_gap(&op).map_err(|e| e.to_string())?))
}

fn to_json<T: Serialize>(value: Result<T, String>) -> Result<String, JsError> {
    value.map(|v| serde_json::to_string(&v).expect("view serializes")).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = intensityHistogram)]
pub fn intensity_histogram(n_qubits: usize, n_gates: usize, n_realizations: u32, seed: u32) -> Result<String, JsError> {
    to_json(histogram_view(n_qubits, n_gates, n_realizations.into(), seed.into()))
}

#[wasm_bindgen(js_name = convergenceCurve)]
pub fn convergence_curve(
    n_qubits: usize,
    statistic: &str,
    max_gates: usize,
    n_realizations: u32,
    seed: u32,
) -> Result<String, JsError> {
    to_json(curve_view(n_qubits, statistic, max_gates, n_realizations.into(), seed.into()))
}

#[wasm_bindgen(js_name = spectralGap)]
pub fn spectral_gap_json(samples: usize, seed: u32) -> Result<String, JsError> {
    to_json(gap_report(samples, seed.into()))
}
