//! Ensemble driver: many realizations, one convergence curve per statistic.
//!
//! Each realization samples its circuit lazily and is simulated once up to
//! the last checkpoint; snapshots at intermediate checkpoints feed the
//! accumulators, so successive points of a curve share circuit prefixes.
//!
//! Realizations are grouped into fixed-size blocks. Blocks may run on any
//! thread, but partial accumulators are always merged in block order, so the
//! output does not depend on the number of workers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::column::StateColumn;
use crate::gateset::{EnsembleConfig, GateStream};
use crate::stats::{saturation_floor, Histogram, StatAccumulator, StatisticKind};
use crate::{Error, Result};

/// Realizations handled sequentially by one work item.
const BLOCK_SIZE: u64 = 64;
/// Blocks evaluated concurrently before their results are folded.
const WAVE_SIZE: usize = 256;

/// `D(n_g)` for one statistic at fixed `n_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCurve {
    pub n_qubits: usize,
    pub statistic: StatisticKind,
    /// `(n_g, D)`, sorted by `n_g`.
    pub points: Vec<(usize, f64)>,
    pub n_realizations: u64,
    /// Saturation floor; `None` when the curve has fewer than four points.
    pub d_min: Option<f64>,
    pub master_seed: u64,
}

impl ConvergenceCurve {
    pub fn new(
        n_qubits: usize,
        statistic: StatisticKind,
        points: Vec<(usize, f64)>,
        n_realizations: u64,
        master_seed: u64,
    ) -> Self {
        let distances: Vec<f64> = points.iter().map(|p| p.1).collect();
        let d_min = saturation_floor(&distances).ok();
        ConvergenceCurve { n_qubits, statistic, points, n_realizations, d_min, master_seed }
    }

    pub fn distances(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }
}

/// Header of the curve CSV format.
pub const CURVE_CSV_HEADER: &str = "nq,ng,statistic,value,n_r,seed";

/// Writes curves as CSV, 17 significant digits per value.
pub fn curves_to_csv<'a, I: IntoIterator<Item = &'a ConvergenceCurve>>(curves: I) -> String {
    let mut out = format!("{CURVE_CSV_HEADER}\n");
    for curve in curves {
        for (n_gates, value) in &curve.points {
            let _ = writeln!(
                out,
                "{},{},{},{:.16e},{},{}",
                curve.n_qubits, n_gates, curve.statistic, value, curve.n_realizations, curve.master_seed
            );
        }
    }
    out
}

/// `(nq, statistic, n_r, seed)`.
type CurveKey = (usize, String, u64, u64);

/// Parses curve CSV; rows sharing `(nq, statistic, n_r, seed)` form one curve.
pub fn curves_from_csv(text: &str) -> Result<Vec<ConvergenceCurve>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == CURVE_CSV_HEADER => {}
        _ => return Err(Error::Parse { line: 1, message: format!("expected header `{CURVE_CSV_HEADER}`") }),
    }
    let mut order = Vec::new();
    let mut grouped: BTreeMap<CurveKey, Vec<(usize, f64)>> = BTreeMap::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let err = |message: String| Error::Parse { line: line_no, message };
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", fields.len())));
        }
        let n_qubits: usize = fields[0].parse().map_err(|_| err(format!("bad nq `{}`", fields[0])))?;
        let n_gates: usize = fields[1].parse().map_err(|_| err(format!("bad ng `{}`", fields[1])))?;
        fields[2].parse::<StatisticKind>().map_err(|e| err(e.to_string()))?;
        let value: f64 = fields[3].parse().map_err(|_| err(format!("bad value `{}`", fields[3])))?;
        let n_r: u64 = fields[4].parse().map_err(|_| err(format!("bad n_r `{}`", fields[4])))?;
        let seed: u64 = fields[5].parse().map_err(|_| err(format!("bad seed `{}`", fields[5])))?;
        let key = (n_qubits, fields[2].to_string(), n_r, seed);
        if !grouped.contains_key(&key) {
            order.push(key.clone());
        }
        grouped.entry(key).or_default().push((n_gates, value));
    }
    order
        .into_iter()
        .map(|key| {
            let mut points = grouped.remove(&key).unwrap_or_default();
            points.sort_by_key(|p| p.0);
            let statistic = key.1.parse()?;
            Ok(ConvergenceCurve::new(key.0, statistic, points, key.2, key.3))
        })
        .collect()
}

/// Merged accumulators of a full ensemble run.
#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub config: EnsembleConfig,
    pub statistics: Vec<StatisticKind>,
    /// `accumulators[checkpoint][statistic]`.
    pub accumulators: Vec<Vec<StatAccumulator>>,
}

impl EnsembleRun {
    pub fn curves(&self) -> Result<Vec<ConvergenceCurve>> {
        self.statistics
            .iter()
            .enumerate()
            .map(|(s, &statistic)| {
                let points = self
                    .config
                    .checkpoints
                    .iter()
                    .zip(&self.accumulators)
                    .map(|(&n_gates, row)| Ok((n_gates, row[s].distance()?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(ConvergenceCurve::new(
                    self.config.n_qubits,
                    statistic,
                    points,
                    self.config.n_realizations,
                    self.config.master_seed,
                ))
            })
            .collect()
    }

    /// Log-intensity histograms per checkpoint, if `pl` was requested.
    pub fn histograms(&self) -> Option<Vec<(usize, &Histogram)>> {
        let s = self.statistics.iter().position(|k| *k == StatisticKind::DistPl)?;
        Some(
            self.config
                .checkpoints
                .iter()
                .zip(&self.accumulators)
                .map(|(&n_gates, row)| match &row[s] {
                    StatAccumulator::Histogram(h) => (n_gates, h),
                    StatAccumulator::Mean { .. } => unreachable!("pl uses a histogram"),
                })
                .collect(),
        )
    }
}

fn empty_accumulators(config: &EnsembleConfig, statistics: &[StatisticKind]) -> Result<Vec<Vec<StatAccumulator>>> {
    let dim = 1usize << config.n_qubits;
    config
        .checkpoints
        .iter()
        .map(|_| statistics.iter().map(|&kind| StatAccumulator::new(kind, dim)).collect())
        .collect()
}

fn merge_into(total: &mut [Vec<StatAccumulator>], part: &[Vec<StatAccumulator>]) {
    for (row, part_row) in total.iter_mut().zip(part) {
        for (acc, part_acc) in row.iter_mut().zip(part_row) {
            acc.merge(part_acc);
        }
    }
}

/// Runs realizations `range` sequentially, returning their merged accumulators.
fn run_block(
    config: &EnsembleConfig,
    statistics: &[StatisticKind],
    range: std::ops::Range<u64>,
) -> Result<Vec<Vec<StatAccumulator>>> {
    let mut accumulators = empty_accumulators(config, statistics)?;
    for index in range {
        let mut gates = GateStream::new(config.master_seed, index, config.n_qubits, config.p_single);
        let mut state = StateColumn::zero_with_cap(config.n_qubits, config.max_qubits)?;
        let mut applied = 0;
        for (&checkpoint, row) in config.checkpoints.iter().zip(accumulators.iter_mut()) {
            while applied < checkpoint {
                let gate = gates.next().expect("gate stream is endless");
                state.apply_gate(&gate)?;
                applied += 1;
            }
            for acc in row.iter_mut() {
                acc.observe(&state)?;
            }
        }
    }
    Ok(accumulators)
}

/// Simulates the whole ensemble and accumulates every requested statistic at
/// every checkpoint.
pub fn run_ensemble(config: &EnsembleConfig, statistics: &[StatisticKind]) -> Result<EnsembleRun> {
    config.validate()?;
    if statistics.is_empty() {
        return Err(Error::InvalidParameter("no statistics requested".into()));
    }
    let mut total = empty_accumulators(config, statistics)?;
    let blocks: Vec<std::ops::Range<u64>> = (0..config.n_realizations.div_ceil(BLOCK_SIZE))
        .map(|b| b * BLOCK_SIZE..((b + 1) * BLOCK_SIZE).min(config.n_realizations))
        .collect();

    for wave in blocks.chunks(WAVE_SIZE) {
        #[cfg(feature = "parallel")]
        let parts: Vec<Result<Vec<Vec<StatAccumulator>>>> =
            wave.par_iter().map(|range| run_block(config, statistics, range.clone())).collect();
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<Result<Vec<Vec<StatAccumulator>>>> =
            wave.iter().map(|range| run_block(config, statistics, range.clone())).collect();
        for part in parts {
            merge_into(&mut total, &part?);
        }
    }
    Ok(EnsembleRun { config: config.clone(), statistics: statistics.to_vec(), accumulators: total })
}

/// Convergence curve of a single statistic.
pub fn convergence_curve(config: &EnsembleConfig, statistic: StatisticKind) -> Result<ConvergenceCurve> {
    let mut curves = run_ensemble(config, &[statistic])?.curves()?;
    Ok(curves.remove(0))
}

/// Geometric checkpoint grid `round(start · ratio^j)` up to `max`, deduplicated.
pub fn geometric_checkpoints(start: f64, ratio: f64, max: usize) -> Result<Vec<usize>> {
    if start.is_nan() || ratio.is_nan() || start <= 0.0 || ratio <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "geometric grid needs start > 0 and ratio > 1 (got {start}, {ratio})"
        )));
    }
    let mut grid: Vec<usize> = Vec::new();
    let mut value = start;
    while value.round() as usize <= max {
        let point = value.round() as usize;
        if grid.last() != Some(&point) {
            grid.push(point);
        }
        value *= ratio;
    }
    Ok(grid)
}

/// Default grid `{2, 3, 4, 6, 8, 11, 16, …}` up to `40 n_q`.
pub fn default_checkpoints(n_qubits: usize) -> Vec<usize> {
    geometric_checkpoints(2.0, std::f64::consts::SQRT_2, 40 * n_qubits).expect("valid constants")
}
