//! Ensemble statistics of first-column intensities.
//!
//! Every estimator averages over realizations *and* over the elements of the
//! column. Accumulators are plain monoids: `merge` is associative, so partial
//! results from parallel workers can be combined in a fixed order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::column::StateColumn;
use crate::cue::{cue_bin_mass, cue_correlator, cue_moment};
use crate::{Error, Result};

/// Width of the binned range below `ln N`.
pub const DEFAULT_LOG_SPAN: f64 = 30.0;
pub const DEFAULT_BIN_COUNT: usize = 200;
/// Highest moment / correlator order supported (`|U|^16`).
pub const MAX_ORDER: usize = 8;

/// Slack allowed above `ln N` before a value is treated as a normalization bug.
const LOG_TOLERANCE: f64 = 1e-9;

/// `l_i = ln(N |a_i|²)`; exact zeros give `−∞`.
pub fn log_intensities(state: &StateColumn) -> Vec<f64> {
    let n = state.dim() as f64;
    state.amplitudes().iter().map(|a| (n * a.norm_sqr()).ln()).collect()
}

/// Binned log-intensity distribution with an underflow bin.
///
/// Bins are uniform on `[l_min, ln N]`; everything below `l_min`, including
/// `−∞`, lands in the underflow bin, so the bins cover `(−∞, ln N]` once.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    dim: u64,
    l_min: f64,
    l_max: f64,
    counts: Vec<u64>,
    underflow: u64,
    total: u64,
}

impl Histogram {
    pub fn new(dim: u64) -> Self {
        let l_max = (dim as f64).ln();
        Self::with_geometry(dim, l_max - DEFAULT_LOG_SPAN, DEFAULT_BIN_COUNT)
    }

    pub fn with_geometry(dim: u64, l_min: f64, bin_count: usize) -> Self {
        let l_max = (dim as f64).ln();
        assert!(dim >= 2 && l_min < l_max && bin_count >= 1, "invalid histogram geometry");
        Histogram { dim, l_min, l_max, counts: vec![0; bin_count], underflow: 0, total: 0 }
    }

    pub fn dim(&self) -> u64 {
        self.dim
    }

    pub fn l_min(&self) -> f64 {
        self.l_min
    }

    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn underflow(&self) -> u64 {
        self.underflow
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn bin_width(&self) -> f64 {
        (self.l_max - self.l_min) / self.counts.len() as f64
    }

    /// `(lo, hi)` of regular bin `b`.
    pub fn bin_edges(&self, bin: usize) -> (f64, f64) {
        let width = self.bin_width();
        let lo = self.l_min + bin as f64 * width;
        let hi = if bin + 1 == self.counts.len() { self.l_max } else { lo + width };
        (lo, hi)
    }

    /// Adds every value; the histogram is left untouched if any value lies
    /// above `ln N`.
    pub fn accumulate<I: IntoIterator<Item = f64>>(&mut self, values: I) -> Result<()> {
        let width = self.bin_width();
        let last = self.counts.len() - 1;
        let mut staged = self.clone();
        for l in values {
            if l > self.l_max + LOG_TOLERANCE || l.is_nan() {
                return Err(Error::NotNormalized { value: l, bound: self.l_max });
            }
            if l < self.l_min {
                staged.underflow += 1;
            } else {
                let bin = (((l - self.l_min) / width) as usize).min(last);
                staged.counts[bin] += 1;
            }
            staged.total += 1;
        }
        *self = staged;
        Ok(())
    }

    pub fn observe(&mut self, state: &StateColumn) -> Result<()> {
        self.check_dim(state)?;
        self.accumulate(log_intensities(state))
    }

    fn check_dim(&self, state: &StateColumn) -> Result<()> {
        if state.dim() as u64 != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim as usize, got: state.dim() });
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Histogram) {
        assert!(
            self.dim == other.dim && self.l_min == other.l_min && self.counts.len() == other.counts.len(),
            "merging histograms of different geometry"
        );
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.total += other.total;
    }

    /// Empirical masses, underflow first.
    pub fn empirical_masses(&self) -> Result<Vec<f64>> {
        if self.total == 0 {
            return Err(Error::EmptyHistogram);
        }
        let total = self.total as f64;
        Ok(std::iter::once(self.underflow).chain(self.counts.iter().copied()).map(|c| c as f64 / total).collect())
    }

    /// CUE masses of the same bins, underflow first; they sum to one.
    pub fn cue_masses(&self) -> Vec<f64> {
        let mut masses = Vec::with_capacity(self.counts.len() + 1);
        masses.push(cue_bin_mass(f64::NEG_INFINITY, self.l_min, self.dim));
        for bin in 0..self.counts.len() {
            let (lo, hi) = self.bin_edges(bin);
            masses.push(cue_bin_mass(lo, hi, self.dim));
        }
        masses
    }

    /// `D_P = 2(1 − Σ_b √(p̃_b p_b))` against the CUE bin masses.
    pub fn hellinger_distance(&self) -> Result<f64> {
        Ok(hellinger_from_masses(&self.empirical_masses()?, &self.cue_masses()))
    }

    /// CSV dump with columns `bin_lo,bin_hi,count,cue_mass`.
    pub fn to_csv(&self) -> String {
        let masses = self.cue_masses();
        let mut out = String::from("bin_lo,bin_hi,count,cue_mass\n");
        out.push_str(&format!("-inf,{:.16e},{},{:.16e}\n", self.l_min, self.underflow, masses[0]));
        for (bin, count) in self.counts.iter().enumerate() {
            let (lo, hi) = self.bin_edges(bin);
            out.push_str(&format!("{lo:.16e},{hi:.16e},{count},{:.16e}\n", masses[bin + 1]));
        }
        out
    }
}

/// `2(1 − Σ √(p̃ p))`, clamped to the admissible range `[0, 2]`.
pub fn hellinger_from_masses(empirical: &[f64], reference: &[f64]) -> f64 {
    assert_eq!(empirical.len(), reference.len(), "mass vectors differ in length");
    let overlap: f64 = empirical.iter().zip(reference).map(|(p, q)| (p * q).sqrt()).sum();
    (2.0 * (1.0 - overlap)).clamp(0.0, 2.0)
}

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Which convergence statistic a curve tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StatisticKind {
    /// Distribution of `l`, compared through `D_P`.
    DistPl,
    /// `μ_k`, averaged over the column and the realizations.
    Moment(usize),
    /// `c_k`, products over disjoint consecutive blocks of `k` elements.
    Correlator(usize),
    /// `μ'_k` of a single element of the column, realization average only.
    FixedElementMoment { k: usize, row: usize },
}

impl StatisticKind {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let check_order = |k: usize| if (1..=MAX_ORDER).contains(&k) { Ok(()) } else { Err(Error::InvalidOrder(k)) };
        match *self {
            StatisticKind::DistPl => Ok(()),
            StatisticKind::Moment(k) => check_order(k),
            StatisticKind::Correlator(k) => {
                check_order(k)?;
                if k > dim {
                    return Err(Error::OrderExceedsDimension { k, dim });
                }
                Ok(())
            }
            StatisticKind::FixedElementMoment { k, row } => {
                check_order(k)?;
                if row >= dim {
                    return Err(Error::RowOutOfRange { row, dim });
                }
                Ok(())
            }
        }
    }

    /// CUE value of the statistic; `None` for the distribution.
    pub fn cue_reference(&self, dim: u64) -> Option<f64> {
        match *self {
            StatisticKind::DistPl => None,
            StatisticKind::Moment(k) | StatisticKind::FixedElementMoment { k, .. } => Some(cue_moment(k as u32, dim)),
            StatisticKind::Correlator(k) => Some(cue_correlator(k as u32, dim)),
        }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatisticKind::DistPl => write!(f, "pl"),
            StatisticKind::Moment(k) => write!(f, "mu{k}"),
            StatisticKind::Correlator(k) => write!(f, "c{k}"),
            StatisticKind::FixedElementMoment { k, row } => write!(f, "mu{k}@{row}"),
        }
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    /// Accepts `pl`, `mu<k>`, `c<k>` and `mu<k>@<row>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown statistic `{s}`"));
        let order = |digits: &str| -> Result<usize> {
            let k: usize = digits.parse().map_err(|_| bad())?;
            if (1..=MAX_ORDER).contains(&k) {
                Ok(k)
            } else {
                Err(Error::InvalidOrder(k))
            }
        };
        if s == "pl" {
            Ok(StatisticKind::DistPl)
        } else if let Some(rest) = s.strip_prefix("mu") {
            match rest.split_once('@') {
                Some((k, row)) => {
                    Ok(StatisticKind::FixedElementMoment { k: order(k)?, row: row.parse().map_err(|_| bad())? })
                }
                None => Ok(StatisticKind::Moment(order(rest)?)),
            }
        } else if let Some(rest) = s.strip_prefix('c') {
            Ok(StatisticKind::Correlator(order(rest)?))
        } else {
            Err(bad())
        }
    }
}

impl TryFrom<String> for StatisticKind {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<StatisticKind> for String {
    fn from(kind: StatisticKind) -> String {
        kind.to_string()
    }
}

/// Running mean of a scalar statistic over realizations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    sum: CompensatedSum,
    count: u64,
}

impl MeanAccumulator {
    pub fn merge(&mut self, other: &MeanAccumulator) {
        self.sum.merge(&other.sum);
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::EmptyEnsemble);
        }
        Ok(self.sum.value() / self.count as f64)
    }
}

fn intensities(state: &StateColumn) -> impl Iterator<Item = f64> + '_ {
    let n = state.dim() as f64;
    state.amplitudes().iter().map(move |a| n * a.norm_sqr())
}

impl MeanAccumulator {
    /// Adds `y_i^k` for every element of the column.
    pub fn observe_moment(&mut self, state: &StateColumn, k: usize) {
        let mut column = CompensatedSum::default();
        for y in intensities(state) {
            column.add(y.powi(k as i32));
        }
        self.sum.merge(&column);
        self.count += state.dim() as u64;
    }

    /// Adds `y_row^k` only.
    pub fn observe_fixed_element(&mut self, state: &StateColumn, k: usize, row: usize) {
        let y = state.dim() as f64 * state.amplitudes()[row].norm_sqr();
        self.sum.add(y.powi(k as i32));
        self.count += 1;
    }

    /// Adds `∏ y_j` over each of the `⌊N/k⌋` consecutive blocks; the last
    /// `N mod k` elements are unused.
    pub fn observe_correlator(&mut self, state: &StateColumn, k: usize) {
        let y: Vec<f64> = intensities(state).collect();
        let mut column = CompensatedSum::default();
        let mut blocks = 0u64;
        for block in y.chunks_exact(k) {
            column.add(block.iter().product());
            blocks += 1;
        }
        self.sum.merge(&column);
        self.count += blocks;
    }
}

fn common_dim<'a, I: IntoIterator<Item = &'a StateColumn>>(states: I) -> Result<(Vec<&'a StateColumn>, usize)> {
    let states: Vec<&StateColumn> = states.into_iter().collect();
    let dim = states.first().ok_or(Error::EmptyEnsemble)?.dim();
    if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: bad.dim() });
    }
    Ok((states, dim))
}

/// `μ̃_k`: mean of `(N|a_i|²)^k` over all elements and all states.
pub fn moment_estimate<'a, I: IntoIterator<Item = &'a StateColumn>>(states: I, k: usize) -> Result<f64> {
    StatisticKind::Moment(k).validate(usize::MAX)?;
    let (states, _) = common_dim(states)?;
    let mut acc = MeanAccumulator::default();
    for state in states {
        acc.observe_moment(state, k);
    }
    acc.mean()
}

/// `μ'_k` of element `row`, averaged over states only.
pub fn fixed_element_moment_estimate<'a, I: IntoIterator<Item = &'a StateColumn>>(
    states: I,
    k: usize,
    row: usize,
) -> Result<f64> {
    let (states, dim) = common_dim(states)?;
    StatisticKind::FixedElementMoment { k, row }.validate(dim)?;
    let mut acc = MeanAccumulator::default();
    for state in states {
        acc.observe_fixed_element(state, k, row);
    }
    acc.mean()
}

/// `c̃_k`: mean over disjoint consecutive blocks and states.
pub fn correlator_estimate<'a, I: IntoIterator<Item = &'a StateColumn>>(states: I, k: usize) -> Result<f64> {
    let (states, dim) = common_dim(states)?;
    StatisticKind::Correlator(k).validate(dim)?;
    let mut acc = MeanAccumulator::default();
    for state in states {
        acc.observe_correlator(state, k);
    }
    acc.mean()
}

/// `|estimate − reference| / reference`.
pub fn relative_deviation(estimate: f64, reference: f64) -> Result<f64> {
    if reference <= 0.0 || reference.is_nan() {
        return Err(Error::NonPositiveReference(reference));
    }
    Ok((estimate - reference).abs() / reference)
}

/// Median of the distances in the last quarter of a curve (at least one
/// point), used as the finite-sample floor `d_min`.
pub fn saturation_floor(distances: &[f64]) -> Result<f64> {
    if distances.len() < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: distances.len() });
    }
    let tail_len = distances.len().div_ceil(4);
    let mut tail = distances[distances.len() - tail_len..].to_vec();
    tail.sort_by(f64::total_cmp);
    let mid = tail.len() / 2;
    Ok(if tail.len() % 2 == 1 { tail[mid] } else { 0.5 * (tail[mid - 1] + tail[mid]) })
}

/// Accumulator for one [`StatisticKind`] at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub enum StatAccumulator {
    Histogram(Histogram),
    Mean { kind: StatisticKind, dim: u64, acc: MeanAccumulator },
}

impl StatAccumulator {
    pub fn new(kind: StatisticKind, dim: usize) -> Result<Self> {
        kind.validate(dim)?;
        Ok(match kind {
            StatisticKind::DistPl => StatAccumulator::Histogram(Histogram::new(dim as u64)),
            _ => StatAccumulator::Mean { kind, dim: dim as u64, acc: MeanAccumulator::default() },
        })
    }

    pub fn observe(&mut self, state: &StateColumn) -> Result<()> {
        match self {
            StatAccumulator::Histogram(hist) => hist.observe(state),
            StatAccumulator::Mean { kind, dim, acc } => {
                if state.dim() as u64 != *dim {
                    return Err(Error::DimensionMismatch { expected: *dim as usize, got: state.dim() });
                }
                match *kind {
                    StatisticKind::Moment(k) => acc.observe_moment(state, k),
                    StatisticKind::Correlator(k) => acc.observe_correlator(state, k),
                    StatisticKind::FixedElementMoment { k, row } => acc.observe_fixed_element(state, k, row),
                    StatisticKind::DistPl => unreachable!("histogram statistic in mean accumulator"),
                }
                Ok(())
            }
        }
    }

    pub fn merge(&mut self, other: &StatAccumulator) {
        match (self, other) {
            (StatAccumulator::Histogram(a), StatAccumulator::Histogram(b)) => a.merge(b),
            (
                StatAccumulator::Mean { kind, acc, .. },
                StatAccumulator::Mean { kind: other_kind, acc: other_acc, .. },
            ) => {
                assert_eq!(kind, other_kind, "merging different statistics");
                acc.merge(other_acc);
            }
            _ => panic!("merging different statistics"),
        }
    }

    /// Ensemble estimate for scalar statistics; `None` for the histogram.
    pub fn estimate(&self) -> Option<Result<f64>> {
        match self {
            StatAccumulator::Histogram(_) => None,
            StatAccumulator::Mean { acc, .. } => Some(acc.mean()),
        }
    }

    /// Distance from the CUE: `D_P` or the relative deviation.
    pub fn distance(&self) -> Result<f64> {
        match self {
            StatAccumulator::Histogram(hist) => hist.hellinger_distance(),
            StatAccumulator::Mean { kind, dim, acc } => {
                let reference = kind.cue_reference(*dim).expect("scalar statistic has a CUE value");
                relative_deviation(acc.mean()?, reference)
            }
        }
    }
}
