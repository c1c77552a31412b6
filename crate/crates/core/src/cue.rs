//! Circular unitary ensemble reference values.
//!
//! For `U` Haar-distributed on `U(N)` every element intensity `y = N|U_ij|²`
//! has the same law. In terms of the log-intensity `l = ln y`:
//!
//! ```text
//! P(l)  = (N−1)/N · e^l · (1 − e^l/N)^(N−2),          l ≤ ln N
//! CDF   = 1 − (1 − e^l/N)^(N−1)
//! μ_k   = ⟨y^k⟩ = k! · ∏_{j=1}^{k−1} N/(N+j)
//! c_k   = ⟨y_1 ⋯ y_k⟩ = μ_k / k!
//! ```

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result, C64};

/// Largest dimension accepted by [`sample_haar_unitary`].
pub const HAAR_MAX_DIM: usize = 64;

/// Density of `l = ln(N|U_ij|²)` under the CUE. Zero above `ln N`.
pub fn cue_log_density(l: f64, dim: u64) -> f64 {
    let n = dim as f64;
    if l.is_nan() || l > n.ln() || l == f64::NEG_INFINITY {
        return 0.0;
    }
    let t = (l.exp() / n).min(1.0);
    let tail = if dim == 2 { 0.0 } else { (n - 2.0) * (-t).ln_1p() };
    (n - 1.0) / n * (l + tail).exp()
}

/// `(1 − e^l/N)^(N−1)`, the CUE mass above `l`.
fn survival(l: f64, dim: u64) -> f64 {
    let n = dim as f64;
    if l == f64::NEG_INFINITY {
        return 1.0;
    }
    let t = l.exp() / n;
    if t >= 1.0 {
        return 0.0;
    }
    ((n - 1.0) * (-t).ln_1p()).exp()
}

/// CUE probability of `l_lo < l ≤ l_hi`, from the closed-form CDF.
pub fn cue_bin_mass(l_lo: f64, l_hi: f64, dim: u64) -> f64 {
    debug_assert!(l_lo <= l_hi);
    survival(l_lo, dim) - survival(l_hi, dim)
}

/// `P(l' ≤ l)` under the CUE.
pub fn cue_log_cumulative(l: f64, dim: u64) -> f64 {
    1.0 - survival(l, dim)
}

/// `μ_k = ⟨(N|U_ij|²)^k⟩`, evaluated as a product so that `N!` never appears.
pub fn cue_moment(k: u32, dim: u64) -> f64 {
    assert!(k >= 1, "moment order must be >= 1");
    let n = dim as f64;
    (1..k).fold(1.0, |acc, j| acc * (j + 1) as f64 * n / (n + j as f64))
}

/// `c_k = μ_k / k!`.
pub fn cue_correlator(k: u32, dim: u64) -> f64 {
    assert!(k >= 1, "correlator order must be >= 1");
    let n = dim as f64;
    (1..k).fold(1.0, |acc, j| acc * n / (n + j as f64))
}

/// Haar-random `dim × dim` unitary.
///
/// QR of a complex Ginibre matrix, with the phases of `diag(R)` moved into
/// `Q` so the result is invariant under left and right multiplication.
pub fn sample_haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DMatrix<C64>> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if dim > HAAR_MAX_DIM {
        return Err(Error::DimensionTooLarge { dim, max: HAAR_MAX_DIM });
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let ginibre = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    });
    let qr = ginibre.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut column) in q.column_iter_mut().enumerate() {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        column *= phase;
    }
    Ok(q)
}
