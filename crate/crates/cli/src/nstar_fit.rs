//! `nstar-fit`: `n*` extraction from curve files and per-`ln ε` scaling fits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use ucesim_core::ensemble::{curves_from_csv, ConvergenceCurve};
use ucesim_core::scaling::{
    fit_model, fits_to_csv, group_by_ln_eps, n_star, nstar_to_csv, FitResult, NStarPoint, ScalingModel,
};
use ucesim_core::stats::StatisticKind;

use crate::CliError;

pub const NSTAR_FILE: &str = "nstar.csv";
pub const FITS_FILE: &str = "fits.csv";
pub const WARNINGS_FILE: &str = "warnings.csv";
pub const WARNINGS_CSV_HEADER: &str = "nq,ln_eps,reason";

/// A point or fit that could not be produced. `n_qubits` is `None` for a
/// skipped fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Warning {
    pub n_qubits: Option<usize>,
    pub ln_eps: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct NStarFitOutput {
    pub points: Vec<NStarPoint>,
    pub fits: Vec<FitResult>,
    pub warnings: Vec<Warning>,
}

impl NStarFitOutput {
    pub fn warnings_csv(&self) -> String {
        let mut out = format!("{WARNINGS_CSV_HEADER}\n");
        for w in &self.warnings {
            let nq = w.n_qubits.map(|n| n.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{nq},{:.16e},{}", w.ln_eps, w.reason.replace(',', ";"));
        }
        out
    }

    pub fn write(&self, output_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(output_dir).with_context(|| format!("creating {}", output_dir.display()))?;
        let files = [
            (NSTAR_FILE, nstar_to_csv(&self.points)),
            (FITS_FILE, fits_to_csv(&self.fits)),
            (WARNINGS_FILE, self.warnings_csv()),
        ];
        let mut paths = Vec::new();
        for (name, contents) in files {
            let path = output_dir.join(name);
            std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
            paths.push(path);
        }
        Ok(paths)
    }
}

pub fn read_curves(paths: &[PathBuf]) -> Result<Vec<ConvergenceCurve>, CliError> {
    if paths.is_empty() {
        return Err(CliError::Usage("no curve files given".into()));
    }
    let mut curves = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let parsed = curves_from_csv(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        curves.extend(parsed);
    }
    Ok(curves)
}

/// Extracts `n*` for every curve and `ln ε`, then fits f1, f2 and f3 per
/// `ln ε`. Unreachable points and skipped fits become warnings.
pub fn cmd_nstar_fit(
    curves: &[ConvergenceCurve],
    ln_eps: &[f64],
    statistic: Option<StatisticKind>,
    guard_factor: f64,
) -> Result<NStarFitOutput, CliError> {
    if ln_eps.is_empty() {
        return Err(CliError::Usage("no ln_eps values given".into()));
    }
    if ln_eps.iter().any(|e| !e.is_finite()) {
        return Err(CliError::Usage("ln_eps values must be finite".into()));
    }
    let mut unique: Vec<f64> = Vec::new();
    for &le in ln_eps {
        if !unique.contains(&le) {
            unique.push(le);
        }
    }
    let ln_eps = unique.as_slice();
    let selected: Vec<&ConvergenceCurve> =
        curves.iter().filter(|c| statistic.is_none_or(|s| c.statistic == s)).collect();
    let mut kinds: Vec<String> = selected.iter().map(|c| c.statistic.to_string()).collect();
    kinds.sort();
    kinds.dedup();
    match kinds.len() {
        0 => return Err(CliError::Usage("no curves match the requested statistic".into())),
        1 => {}
        _ => return Err(CliError::Usage(format!("curves mix statistics {kinds:?}; pick one with --statistic"))),
    }
    let mut by_nq: BTreeMap<usize, &ConvergenceCurve> = BTreeMap::new();
    for curve in selected {
        if by_nq.insert(curve.n_qubits, curve).is_some() {
            return Err(CliError::Usage(format!("more than one curve for nq = {}", curve.n_qubits)));
        }
    }

    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for &le in ln_eps {
        for (&n_qubits, curve) in &by_nq {
            match n_star(curve, le.exp(), guard_factor) {
                Ok(n) => points.push(NStarPoint { n_qubits, ln_eps: le, n_star: n as f64 }),
                Err(e) if e.is_unreachable() => {
                    warnings.push(Warning { n_qubits: Some(n_qubits), ln_eps: le, reason: format!("unreachable: {e}") })
                }
                Err(e) => return Err(CliError::Usage(e.to_string())),
            }
        }
    }

    let groups = group_by_ln_eps(&points);
    let mut fits = Vec::new();
    for &le in ln_eps {
        let group = groups.iter().find(|(k, _)| k.0 == le).map(|(_, g)| g.as_slice()).unwrap_or(&[]);
        let mut skipped = None;
        let mut row = Vec::new();
        for model in ScalingModel::ALL {
            match fit_model(group, model) {
                Ok(fit) => row.push(fit),
                Err(e) => {
                    skipped = Some(e);
                    break;
                }
            }
        }
        match skipped {
            Some(e) => warnings.push(Warning { n_qubits: None, ln_eps: le, reason: format!("fit skipped: {e}") }),
            None => fits.extend(row),
        }
    }
    Ok(NStarFitOutput { points, fits, warnings })
}
