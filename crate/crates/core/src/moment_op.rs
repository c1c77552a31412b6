//! Two-copy moment operator of the two-qubit gate set and its spectral gap.
//!
//! With gates written as 4x4 matrices the gate set is
//! `{A ⊗ 1, 1 ⊗ A, CNOT₁₂, CNOT₂₁}`, each with weight 1/4 and `A` Haar on
//! `U(2)`. The operator `G = E[U ⊗ U ⊗ Ū ⊗ Ū]` is 256x256. Only the
//! single-qubit average `T = E[A ⊗ A ⊗ Ā ⊗ Ā]` (16x16) needs sampling; it is
//! then embedded on either qubit. The CNOT terms are exact.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cue::sample_haar_unitary;
use crate::{Error, Result, C64};

pub const MOMENT_DIM: usize = 256;

/// Eigenvalues within `TAU_SIGMAS · σ` of modulus one count as unit modulus.
const TAU_SIGMAS: f64 = 10.0;
const TAU_FLOOR: f64 = 1e-9;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// `U ⊗ U ⊗ Ū ⊗ Ū`.
pub fn four_copy(u: &DMatrix<C64>) -> DMatrix<C64> {
    let conj = u.map(|z| z.conj());
    u.kronecker(u).kronecker(&conj).kronecker(&conj)
}

/// Exact `E_Haar[U ⊗ U ⊗ Ū ⊗ Ū]` on `U(d)`: the orthogonal projector onto
/// the span of the two pairing vectors `Σ|x y x y⟩` and `Σ|x y y x⟩`.
pub fn haar_twirl_exact(d: usize) -> DMatrix<C64> {
    let dim = d.pow(4);
    let index = |a: usize, b: usize, c: usize, e: usize| ((a * d + b) * d + c) * d + e;
    let mut pairings = DMatrix::<C64>::zeros(dim, 2);
    for x in 0..d {
        for y in 0..d {
            pairings[(index(x, y, x, y), 0)] += one();
            pairings[(index(x, y, y, x), 1)] += one();
        }
    }
    let gram = pairings.adjoint() * &pairings;
    let gram_inv = gram.try_inverse().expect("pairing vectors are independent for d >= 2");
    &pairings * gram_inv * pairings.adjoint()
}

/// Monte Carlo estimate of the single-qubit average `T` with the largest
/// per-entry standard error.
pub fn single_qubit_twirl_mc<R: Rng + ?Sized>(sample_count: usize, rng: &mut R) -> Result<(DMatrix<C64>, f64)> {
    if sample_count < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 samples, got {sample_count}")));
    }
    let mut sum = DMatrix::<C64>::zeros(16, 16);
    let mut sum_sq = DMatrix::<f64>::zeros(16, 16);
    for _ in 0..sample_count {
        let term = four_copy(&sample_haar_unitary(2, rng)?);
        sum += &term;
        sum_sq += term.map(|z| z.norm_sqr());
    }
    let n = sample_count as f64;
    let mean = sum / C64::new(n, 0.0);
    let sigma = mean
        .iter()
        .zip(sum_sq.iter())
        .map(|(m, s2)| ((s2 / n - m.norm_sqr()).max(0.0) / (n - 1.0)).sqrt())
        .fold(0.0, f64::max);
    Ok((mean, sigma))
}

/// Lifts a 16x16 single-qubit operator to the 256x256 two-qubit space,
/// acting on `qubit` 0 (first tensor factor) or 1, identity on the other.
pub fn embed_single_qubit(t: &DMatrix<C64>, qubit: usize) -> DMatrix<C64> {
    assert!(t.nrows() == 16 && t.ncols() == 16 && qubit < 2);
    // Two-qubit copy index i = 2·p + q with p the first factor.
    let split = |idx: usize| -> ([usize; 4], [usize; 4]) {
        let mut acted = [0; 4];
        let mut spectator = [0; 4];
        for c in 0..4 {
            let digit = (idx >> (2 * (3 - c))) & 3;
            let (p, q) = (digit >> 1, digit & 1);
            (acted[c], spectator[c]) = if qubit == 0 { (p, q) } else { (q, p) };
        }
        (acted, spectator)
    };
    let pack = |bits: [usize; 4]| ((bits[0] * 2 + bits[1]) * 2 + bits[2]) * 2 + bits[3];
    DMatrix::from_fn(MOMENT_DIM, MOMENT_DIM, |row, col| {
        let (row_acted, row_spec) = split(row);
        let (col_acted, col_spec) = split(col);
        if row_spec == col_spec {
            t[(pack(row_acted), pack(col_acted))]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// CNOT as a 4x4 matrix, control on the first tensor factor when
/// `control_first`.
pub fn cnot4(control_first: bool) -> DMatrix<C64> {
    DMatrix::from_fn(4, 4, |row, col| {
        let (p, q) = (col >> 1, col & 1);
        let (p2, q2) = if control_first { (p, q ^ p) } else { (p ^ q, q) };
        if row == 2 * p2 + q2 {
            one()
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `(1/4)(T on qubit 0 + T on qubit 1 + CNOT₁₂⊗4 + CNOT₂₁⊗4)`.
pub fn assemble_moment_operator(single_qubit_twirl: &DMatrix<C64>) -> DMatrix<C64> {
    let quarter = C64::new(0.25, 0.0);
    (embed_single_qubit(single_qubit_twirl, 0)
        + embed_single_qubit(single_qubit_twirl, 1)
        + four_copy(&cnot4(true))
        + four_copy(&cnot4(false)))
        * quarter
}

#[derive(Debug, Clone)]
pub struct MomentOperator {
    /// Hermitian part of the estimate.
    pub matrix: DMatrix<C64>,
    pub sample_count: usize,
    /// Largest standard error of a single-qubit average entry; zero when exact.
    pub sigma_estimate: f64,
    /// `max |G − G†|` before symmetrization.
    pub asymmetry: f64,
}

fn hermitian_part(m: &DMatrix<C64>) -> (DMatrix<C64>, f64) {
    let adjoint = m.adjoint();
    let asymmetry = (m - &adjoint).iter().map(|z| z.norm()).fold(0.0, f64::max);
    ((m + adjoint) * C64::new(0.5, 0.0), asymmetry)
}

/// Monte Carlo moment operator from `sample_count` Haar `U(2)` draws.
pub fn build_moment_operator<R: Rng + ?Sized>(sample_count: usize, rng: &mut R) -> Result<MomentOperator> {
    let (twirl, sigma_estimate) = single_qubit_twirl_mc(sample_count, rng)?;
    let (matrix, asymmetry) = hermitian_part(&assemble_moment_operator(&twirl));
    Ok(MomentOperator { matrix, sample_count, sigma_estimate, asymmetry })
}

/// Moment operator with the single-qubit average in closed form.
pub fn exact_moment_operator() -> MomentOperator {
    let (matrix, asymmetry) = hermitian_part(&assemble_moment_operator(&haar_twirl_exact(2)));
    MomentOperator { matrix, sample_count: 0, sigma_estimate: 0.0, asymmetry }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapResult {
    pub leading: f64,
    /// Eigenvalues counted as modulus one.
    pub multiplicity: usize,
    /// `1 − |λ|` of the largest remaining eigenvalue; 0 when degenerate.
    pub gap: f64,
    /// Every eigenvalue has modulus one, so no gap exists.
    pub degenerate: bool,
    pub sample_count: usize,
    pub sigma_estimate: f64,
}

/// JSON report: `{gap, multiplicity, samples, sigma_estimate}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub gap: f64,
    pub multiplicity: usize,
    pub samples: usize,
    pub sigma_estimate: f64,
}

impl From<&GapResult> for GapReport {
    fn from(r: &GapResult) -> Self {
        GapReport {
            gap: r.gap,
            multiplicity: r.multiplicity,
            samples: r.sample_count,
            sigma_estimate: r.sigma_estimate,
        }
    }
}

/// Eigenvalue magnitudes of a Hermitian matrix, descending.
pub fn hermitian_spectrum_magnitudes(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::InvalidParameter(format!("matrix is {}x{}, need square", m.nrows(), m.ncols())));
    }
    // A Hermitian H = A + iB has the same spectrum as [[A, -B], [B, A]],
    // with every eigenvalue doubled.
    let n = m.nrows();
    let real = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut eigenvalues = symmetric_eigenvalues(real)?;
    eigenvalues.sort_by(|a, b| a.total_cmp(b));
    let mut magnitudes: Vec<f64> = eigenvalues.iter().step_by(2).map(|v| v.abs()).collect();
    magnitudes.sort_by(|a, b| b.total_cmp(a));
    Ok(magnitudes)
}

/// Eigenvalues of a real symmetric matrix: Householder reduction to
/// tridiagonal form, then implicit QL with Wilkinson shifts.
fn symmetric_eigenvalues(mut a: DMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let scale: f64 = (0..=l).map(|k| a[(i, k)].abs()).sum();
        if l == 0 || scale == 0.0 {
            e[i] = a[(i, l)];
            d[i] = 0.0;
            continue;
        }
        let mut h = 0.0;
        for k in 0..=l {
            a[(i, k)] /= scale;
            h += a[(i, k)] * a[(i, k)];
        }
        let f = a[(i, l)];
        let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h -= f * g;
        a[(i, l)] = f - g;
        let mut p = vec![0.0; i];
        let mut f_acc = 0.0;
        for j in 0..=l {
            let mut g = 0.0;
            for k in 0..=j {
                g += a[(j, k)] * a[(i, k)];
            }
            for k in j + 1..=l {
                g += a[(k, j)] * a[(i, k)];
            }
            p[j] = g / h;
            f_acc += p[j] * a[(i, j)];
        }
        let hh = f_acc / (h + h);
        for j in 0..=l {
            let f = a[(i, j)];
            p[j] -= hh * f;
            let g = p[j];
            for k in 0..=j {
                a[(j, k)] -= f * p[k] + g * a[(i, k)];
            }
        }
        d[i] = h;
    }
    for i in 0..n {
        d[i] = a[(i, i)];
    }
    e.rotate_left(1);
    e[n - 1] = 0.0;
    let norm = d.iter().zip(&e).map(|(x, y)| x.abs() + y.abs()).fold(0.0, f64::max);
    let tol = f64::EPSILON * norm;

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= tol {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 60 {
                return Err(Error::InvalidParameter("eigensolver did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                let t = (d[i] - g) * s + 2.0 * c * b;
                p = s * t;
                d[i + 1] = g + p;
                g = c * t - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("eigensolver returned non-finite values".into()));
    }
    Ok(d)
}

/// Spectral gap with unit-modulus tolerance `tau`.
pub fn spectral_gap_with_tolerance(m: &DMatrix<C64>, tau: f64) -> Result<GapResult> {
    let magnitudes = hermitian_spectrum_magnitudes(m)?;
    let multiplicity = magnitudes.iter().take_while(|&&v| v > 1.0 - tau).count();
    let degenerate = multiplicity == magnitudes.len();
    let gap = if degenerate { 0.0 } else { (1.0 - magnitudes[multiplicity]).clamp(0.0, 1.0) };
    Ok(GapResult { leading: magnitudes[0], multiplicity, gap, degenerate, sample_count: 0, sigma_estimate: 0.0 })
}

/// Spectral gap of a moment operator, with `τ = 10σ`.
pub fn spectral_gap(op: &MomentOperator) -> Result<GapResult> {
    let tau = (TAU_SIGMAS * op.sigma_estimate).max(TAU_FLOOR);
    let mut result = spectral_gap_with_tolerance(&op.matrix, tau)?;
    result.sample_count = op.sample_count;
    result.sigma_estimate = op.sigma_estimate;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateset::realization_rng;

    #[test]
    fn exact_twirl_is_projector_and_matches_sampling() {
        let p = haar_twirl_exact(2);
        assert!((&p * &p - &p).iter().all(|z| z.norm() < 1e-12));
        let trace: C64 = p.diagonal().iter().sum();
        assert!((trace - C64::new(2.0, 0.0)).norm() < 1e-12);

        let (mc, sigma) = single_qubit_twirl_mc(20_000, &mut realization_rng(1, 0)).unwrap();
        let worst = (&mc - &p).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(worst < 6.0 * sigma, "{worst} vs sigma {sigma}");
    }

    #[test]
    fn embedding_matches_kronecker_construction() {
        let mut rng = realization_rng(3, 0);
        let a = sample_haar_unitary(2, &mut rng).unwrap();
        let id = DMatrix::<C64>::identity(2, 2);
        let t = four_copy(&a);
        assert!((embed_single_qubit(&t, 0) - four_copy(&a.kronecker(&id))).iter().all(|z| z.norm() < 1e-13));
        assert!((embed_single_qubit(&t, 1) - four_copy(&id.kronecker(&a))).iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn identity_gate_set_is_degenerate() {
        let g = DMatrix::<C64>::identity(MOMENT_DIM, MOMENT_DIM);
        let result = spectral_gap_with_tolerance(&g, 1e-9).unwrap();
        assert_eq!(result.multiplicity, 256);
        assert!(result.degenerate);
        assert_eq!(result.gap, 0.0);
    }

    #[test]
    fn diagonal_example() {
        let mut diag = vec![1.0, 1.0, 0.75];
        diag.extend((3..MOMENT_DIM).map(|i| 0.5 / i as f64));
        let g = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            MOMENT_DIM,
            diag.into_iter().map(|v| C64::new(v, 0.0)),
        ));
        let result = spectral_gap_with_tolerance(&g, 1e-9).unwrap();
        assert_eq!(result.multiplicity, 2);
        assert!((result.gap - 0.25).abs() < 1e-12);
    }

    #[test]
    fn full_two_qubit_haar_has_unit_gap() {
        let result = spectral_gap_with_tolerance(&haar_twirl_exact(4), 1e-9).unwrap();
        assert_eq!(result.multiplicity, 2);
        assert!((result.gap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exact_gate_set_gap() {
        let result = spectral_gap(&exact_moment_operator()).unwrap();
        assert_eq!(result.multiplicity, 2);
        assert!((result.gap - 0.232703).abs() < 1e-6, "{}", result.gap);
    }

    #[test]
    fn sampled_operator_is_nearly_hermitian_and_bounded() {
        let samples = 20_000;
        let op = build_moment_operator(samples, &mut realization_rng(4, 0)).unwrap();
        assert!(op.asymmetry < 5.0 / (samples as f64).sqrt(), "{}", op.asymmetry);
        let spectrum = hermitian_spectrum_magnitudes(&op.matrix).unwrap();
        assert!(spectrum[0] < 1.0 + 10.0 * op.sigma_estimate);
    }

    #[test]
    fn eigensolver_recovers_planted_spectrum() {
        let mut rng = crate::gateset::realization_rng(5, 0);
        let u = sample_haar_unitary(12, &mut rng).unwrap();
        let planted = [0.9, -0.7, 0.5, 0.5, -0.3, 0.2, 0.1, 0.0, 0.0, -0.05, 0.01, 1.0];
        let diag =
            DMatrix::<C64>::from_fn(12, 12, |i, j| if i == j { C64::new(planted[i], 0.0) } else { C64::new(0.0, 0.0) });
        let h = &u * diag * u.adjoint();
        let got = hermitian_spectrum_magnitudes(&h).unwrap();
        let mut want: Vec<f64> = planted.iter().map(|v: &f64| v.abs()).collect();
        want.sort_by(|a, b| b.total_cmp(a));
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "{got:?}");
        }
    }

    #[test]
    fn gap_report_json_keys() {
        let result = spectral_gap(&exact_moment_operator()).unwrap();
        let json = serde_json::to_value(GapReport::from(&result)).unwrap();
        let mut keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(keys, ["gap", "multiplicity", "samples", "sigma_estimate"]);
    }
}
