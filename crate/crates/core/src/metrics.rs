//! Participation-number metrics.
//!
//! The effective number of singular values of a matrix with spectrum `σᵢ` is
//! `M = (Σσᵢ²)² / Σσᵢ⁴`, which lies in `[1, min(rows, cols)]` for any nonzero
//! matrix and is invariant to a global nonzero scalar.

use crate::error::{Error, Result};
use crate::linalg::{column_space_projector, singular_values, CMatrix};
use crate::network::{
    closed_form_jacobian, Illumination, JacobianMatrix, LoadConfiguration, ScatteringBlocks,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ParticipationResult {
    pub m: f64,
    pub singular_values: Vec<f64>,
    pub n_tilde: usize,
}

/// `M` from a spectrum; the order of `sigma` does not matter.
///
/// Values are normalized by `σ_max` before forming the power sums, so tiny or
/// huge spectra neither underflow nor overflow.
pub fn participation_from_spectrum(sigma: &[f64]) -> Result<f64> {
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    if !(smax > 1e-300) || !smax.is_finite() {
        return Err(Error::Degenerate(format!(
            "participation number undefined for spectrum with max {smax:e}"
        )));
    }
    let (mut s2, mut s4) = (0.0, 0.0);
    for &s in sigma {
        let t = s / smax;
        let t2 = t * t;
        s2 += t2;
        s4 += t2 * t2;
    }
    Ok(s2 * s2 / s4)
}

/// Participation number of `matrix` from its full singular spectrum.
pub fn participation_number(matrix: &CMatrix) -> Result<ParticipationResult> {
    let singular_values = singular_values(matrix);
    let m = participation_from_spectrum(&singular_values)?;
    Ok(ParticipationResult {
        m,
        n_tilde: matrix.nrows().min(matrix.ncols()),
        singular_values,
    })
}

/// SVD-free evaluation through `Σσ² = ‖A‖_F²` and `Σσ⁴ = ‖A A†‖_F²`, using
/// whichever Gram matrix is smaller. Agrees with [`participation_number`] to
/// rounding and is what inner optimization loops use.
pub fn participation_from_gram(matrix: &CMatrix) -> Result<f64> {
    let amax = matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(amax > 1e-300) || !amax.is_finite() {
        return Err(Error::Degenerate(
            "participation number of a zero matrix".into(),
        ));
    }
    let a = matrix / num_complex::Complex64::new(amax, 0.0);
    let gram = if a.nrows() <= a.ncols() {
        &a * a.adjoint()
    } else {
        a.adjoint() * &a
    };
    let s2: f64 = gram.diagonal().iter().map(|z| z.re).sum();
    let s4 = gram.norm_squared();
    Ok(s2 * s2 / s4)
}

/// Conventional MIMO: the Jacobian of `y = Hx` with respect to `x` is `H`.
pub fn conventional_eemdof(h: &CMatrix) -> Result<ParticipationResult> {
    participation_number(h)
}

/// Benchmark where the backscatter ports are fed coherently: `M(S_RS)`.
pub fn benchmark_eemdof(blocks: &ScatteringBlocks) -> Result<ParticipationResult> {
    participation_number(&blocks.s_rs)
}

/// Participation number of the closed-form Jacobian at one operating point.
pub fn bs_eemdof_point(
    blocks: &ScatteringBlocks,
    r0: &LoadConfiguration,
    x: &Illumination,
) -> Result<ParticipationResult> {
    let jac = closed_form_jacobian(blocks, r0, x)?;
    let m = participation_from_spectrum(&jac.singular_values)?;
    Ok(ParticipationResult {
        m,
        n_tilde: jac.j.nrows().min(jac.j.ncols()),
        singular_values: jac.singular_values,
    })
}

/// `‖(I − P) J‖_F / ‖J‖_F` with `P` the orthogonal projector onto `col(S_RS)`.
pub fn column_space_residual(j: &JacobianMatrix, s_rs: &CMatrix) -> Result<f64> {
    let norm = j.j.norm();
    if !(norm > 0.0) {
        return Err(Error::Degenerate(
            "column-space residual of a zero Jacobian".into(),
        ));
    }
    if s_rs.nrows() != j.j.nrows() {
        return Err(Error::Dimension(format!(
            "S_RS has {} rows, Jacobian has {}",
            s_rs.nrows(),
            j.j.nrows()
        )));
    }
    let p = column_space_projector(s_rs);
    let residual = &j.j - p * &j.j;
    Ok((residual.norm() / norm).min(1.0))
}
