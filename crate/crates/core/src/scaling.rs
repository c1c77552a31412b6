//! Gate counts `n*` needed to reach a precision `ε`, and the two-parameter
//! scaling laws fitted to `n*(n_q)`:
//!
//! ```text
//! f1 = a·n_q + b
//! f2 = a·n_q·ln(n_q/ε) + b
//! f3 = a·n_q·(n_q + ln(1/ε)) + b
//! ```
//!
//! All three are linear in `(a, b)` once the regressor is fixed, so each fit
//! is an ordinary least-squares line.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::ConvergenceCurve;
use crate::{Error, Result};

pub const DEFAULT_GUARD_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NStarPoint {
    pub n_qubits: usize,
    pub ln_eps: f64,
    /// Gate count; integral when extracted from a curve, real for synthetic data.
    pub n_star: f64,
}

/// Why `n*` could not be extracted from a curve.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NStarError {
    #[error("eps = {eps} is below {guard} x the saturation floor {floor}")]
    BelowFloor { eps: f64, floor: f64, guard: f64 },
    #[error("curve never drops to eps = {eps}")]
    NoCrossing { eps: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl NStarError {
    /// True for the two "choose a larger ε or n_r" outcomes.
    pub fn is_unreachable(&self) -> bool {
        !matches!(self, NStarError::InvalidParameter(_))
    }
}

/// First gate count at which the curve reaches `D ≤ eps`.
///
/// Between bracketing checkpoints the crossing is linearly interpolated and
/// rounded up. `eps` must stay at least `guard_factor · d_min` above the
/// saturation floor; closer to the floor `n*` is dominated by sampling noise.
pub fn n_star(curve: &ConvergenceCurve, eps: f64, guard_factor: f64) -> Result<u64, NStarError> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(NStarError::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    if guard_factor.is_nan() || guard_factor <= 1.0 {
        return Err(NStarError::InvalidParameter(format!("guard factor must exceed 1, got {guard_factor}")));
    }
    if let Some(floor) = curve.d_min {
        if eps < guard_factor * floor {
            return Err(NStarError::BelowFloor { eps, floor, guard: guard_factor });
        }
    }
    let first = curve.points.iter().position(|&(_, d)| d <= eps).ok_or(NStarError::NoCrossing { eps })?;
    let (n_hi, d_hi) = curve.points[first];
    let crossing = if first == 0 {
        n_hi as f64
    } else {
        let (n_lo, d_lo) = curve.points[first - 1];
        n_lo as f64 + (d_lo - eps) / (d_lo - d_hi) * (n_hi - n_lo) as f64
    };
    // Absorb rounding noise so an exact hit on a checkpoint is not bumped up.
    Ok(((crossing - 1e-9).ceil() as u64).clamp(1, n_hi.max(1) as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingModel {
    F1,
    F2,
    F3,
}

impl ScalingModel {
    pub const ALL: [ScalingModel; 3] = [ScalingModel::F1, ScalingModel::F2, ScalingModel::F3];

    /// The regressor `x(n_q)` multiplying `a`.
    pub fn regressor(&self, n_qubits: f64, ln_eps: f64) -> f64 {
        match self {
            ScalingModel::F1 => n_qubits,
            ScalingModel::F2 => n_qubits * (n_qubits.ln() - ln_eps),
            ScalingModel::F3 => n_qubits * (n_qubits - ln_eps),
        }
    }

    pub fn evaluate(&self, a: f64, b: f64, n_qubits: f64, ln_eps: f64) -> f64 {
        a * self.regressor(n_qubits, ln_eps) + b
    }
}

impl fmt::Display for ScalingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalingModel::F1 => "f1",
            ScalingModel::F2 => "f2",
            ScalingModel::F3 => "f3",
        })
    }
}

impl FromStr for ScalingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f1" => Ok(ScalingModel::F1),
            "f2" => Ok(ScalingModel::F2),
            "f3" => Ok(ScalingModel::F3),
            _ => Err(Error::InvalidParameter(format!("unknown model `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ScalingModel,
    pub ln_eps: f64,
    pub a: f64,
    pub b: f64,
    /// Sum of squared deviations, unweighted.
    pub chi2: f64,
}

/// Least-squares fit of `model` to points sharing one `ln ε`.
pub fn fit_model(points: &[NStarPoint], model: ScalingModel) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: points.len() });
    }
    let ln_eps = points[0].ln_eps;
    if points.iter().any(|p| (p.ln_eps - ln_eps).abs() > 1e-12) {
        return Err(Error::MixedEpsilon);
    }
    let xs: Vec<f64> = points.iter().map(|p| model.regressor(p.n_qubits as f64, ln_eps)).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.n_star).collect();
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    if sxx <= 1e-12 * xs.iter().map(|x| x * x).sum::<f64>() {
        return Err(Error::DegenerateRegressor);
    }
    let a = sxy / sxx;
    let b = mean_y - a * mean_x;
    let chi2 = xs.iter().zip(&ys).map(|(x, y)| (y - a * x - b).powi(2)).sum();
    Ok(FitResult { model, ln_eps, a, b, chi2 })
}

/// One fit per `(model, ln ε)`, ordered by `ln ε` then model.
pub fn coefficient_table(points: &[NStarPoint], models: &[ScalingModel]) -> Result<Vec<FitResult>> {
    let groups = group_by_ln_eps(points);
    if groups.len() < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 distinct ln(eps) values, got {}", groups.len())));
    }
    let mut table = Vec::with_capacity(groups.len() * models.len());
    for group in groups.values() {
        for &model in models {
            table.push(fit_model(group, model)?);
        }
    }
    Ok(table)
}

/// Points keyed by the bit pattern of `ln ε`, in ascending `ln ε`.
pub fn group_by_ln_eps(points: &[NStarPoint]) -> BTreeMap<OrderedLnEps, Vec<NStarPoint>> {
    let mut groups: BTreeMap<OrderedLnEps, Vec<NStarPoint>> = BTreeMap::new();
    for p in points {
        groups.entry(OrderedLnEps(p.ln_eps)).or_default().push(*p);
    }
    groups
}

/// Total-order wrapper so `ln ε` can key a map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedLnEps(pub f64);

impl Eq for OrderedLnEps {}

impl PartialOrd for OrderedLnEps {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedLnEps {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

pub const FIT_CSV_HEADER: &str = "model,ln_eps,a,b,chi2";
pub const NSTAR_CSV_HEADER: &str = "nq,ln_eps,n_star";

pub fn fits_to_csv(fits: &[FitResult]) -> String {
    let mut out = format!("{FIT_CSV_HEADER}\n");
    for fit in fits {
        let _ = writeln!(out, "{},{:.16e},{:.16e},{:.16e},{:.16e}", fit.model, fit.ln_eps, fit.a, fit.b, fit.chi2);
    }
    out
}

pub fn nstar_to_csv(points: &[NStarPoint]) -> String {
    let mut out = format!("{NSTAR_CSV_HEADER}\n");
    for p in points {
        let _ = writeln!(out, "{},{:.16e},{}", p.n_qubits, p.ln_eps, p.n_star);
    }
    out
}
