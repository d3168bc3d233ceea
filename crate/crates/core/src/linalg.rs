//! Dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Smallest admissible reciprocal condition number for a linear solve.
pub const MIN_RCOND: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Singular values in nonincreasing order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Maximum absolute column sum.
pub fn norm_1(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `‖a − b‖_F / ‖b‖_F`, or the absolute error when `b` is zero.
pub fn rel_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = (a - b).norm();
    let base = b.norm();
    if base == 0.0 {
        diff
    } else {
        diff / base
    }
}

/// Inverse of `a` from an LU factorization with partial pivoting, together
/// with the exact 1-norm reciprocal condition number `1 / (‖a‖₁ ‖a⁻¹‖₁)`.
pub fn inverse_with_rcond(a: &CMatrix) -> Result<(CMatrix, f64)> {
    let inv = Lu::factor(a)?.inverse();
    let denom = norm_1(a) * norm_1(&inv);
    let rcond = if denom.is_finite() && denom > 0.0 {
        1.0 / denom
    } else {
        0.0
    };
    if !(rcond > MIN_RCOND) || inv.iter().any(|z| !z.is_finite()) {
        return Err(Error::Singular { rcond });
    }
    Ok((inv, rcond))
}

/// Dense LU factorization with partial pivoting, `P A = L U`, stored row-major.
///
/// Unlike nalgebra's LU it solves with `A`, `Aᵀ` and `A†`, which the
/// Jacobian needs (`G b` and `S_RS G`) without forming `G`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<Complex64>,
    /// Row `i` of `P A` is row `perm[i]` of `A`.
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &CMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!(
                "LU of a {}x{} matrix",
                n,
                a.ncols()
            )));
        }
        let mut lu: Vec<Complex64> = (0..n * n).map(|k| a[(k / n, k % n)]).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            if !(pmax > 0.0) || !pmax.is_finite() {
                return Err(Error::Singular { rcond: 0.0 });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv_pivot = Complex64::new(1.0, 0.0) / lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] * inv_pivot;
                lu[i * n + k] = f;
                if f != Complex64::new(0.0, 0.0) {
                    let (top, bottom) = lu.split_at_mut(i * n);
                    let pivot_row = &top[k * n + k + 1..k * n + n];
                    for (dst, &src) in bottom[k + 1..n].iter_mut().zip(pivot_row) {
                        *dst -= f * src;
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// In place `b ← A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        let mut y: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: Complex64 = row.iter().zip(&y[..i]).map(|(l, v)| l * v).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: Complex64 = row.iter().zip(&y[i + 1..]).map(|(u, v)| u * v).sum();
            y[i] = (y[i] - s) / self.lu[i * n + i];
        }
        b.copy_from_slice(&y);
    }

    /// In place `b ← A⁻ᵀ b`, or `A⁻† b` when `adjoint` is set.
    fn solve_transposed_in_place(&self, b: &mut [Complex64], adjoint: bool) {
        let n = self.n;
        let at = |i: usize, j: usize| {
            let z = self.lu[i * n + j];
            if adjoint {
                z.conj()
            } else {
                z
            }
        };
        // Aᵀ = Uᵀ Lᵀ P: solve Uᵀ w = b, Lᵀ v = w, then undo the permutation.
        let mut w = b.to_vec();
        for i in 0..n {
            let s: Complex64 = w[..i].iter().enumerate().map(|(k, v)| at(k, i) * v).sum();
            w[i] = (w[i] - s) / at(i, i);
        }
        for i in (0..n).rev() {
            let s: Complex64 = w[i + 1..]
                .iter()
                .enumerate()
                .map(|(k, v)| at(i + 1 + k, i) * v)
                .sum();
            w[i] -= s;
        }
        for (i, &p) in self.perm.iter().enumerate() {
            b[p] = w[i];
        }
    }

    pub fn solve_transpose_in_place(&self, b: &mut [Complex64]) {
        self.solve_transposed_in_place(b, false)
    }

    pub fn solve_adjoint_in_place(&self, b: &mut [Complex64]) {
        self.solve_transposed_in_place(b, true)
    }

    pub fn inverse(&self) -> CMatrix {
        let n = self.n;
        let mut inv = CMatrix::zeros(n, n);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            col.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            col[j] = Complex64::new(1.0, 0.0);
            self.solve_in_place(&mut col);
            inv.set_column(j, &CVector::from_column_slice(&col));
        }
        inv
    }

    /// Hager–Higham lower estimate of `‖A⁻¹‖₁` (the LAPACK `xLACON` scheme).
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        let one = Complex64::new(1.0, 0.0);
        let mut x = vec![one / n as f64; n];
        let mut estimate = 0.0f64;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(&mut y);
            let norm: f64 = y.iter().map(|z| z.norm()).sum();
            if norm <= estimate && last_j != usize::MAX {
                break;
            }
            estimate = estimate.max(norm);
            let mut z: Vec<Complex64> = y
                .iter()
                .map(|v| if v.norm() > 0.0 { v / v.norm() } else { one })
                .collect();
            self.solve_adjoint_in_place(&mut z);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            let zx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= zx || j == last_j {
                break;
            }
            last_j = j;
            x.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            x[j] = one;
        }
        // Alternating test vector guards against the known failure cases.
        let mut alt: Vec<Complex64> = (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let mag = if n > 1 {
                    1.0 + i as f64 / (n - 1) as f64
                } else {
                    1.0
                };
                Complex64::new(sign * mag, 0.0)
            })
            .collect();
        self.solve_in_place(&mut alt);
        let alt_norm: f64 = alt.iter().map(|z| z.norm()).sum::<f64>() * 2.0 / (3.0 * n as f64);
        estimate.max(alt_norm)
    }

    /// Estimated reciprocal 1-norm condition number given `‖A‖₁`.
    pub fn rcond_estimate(&self, a_norm1: f64) -> f64 {
        let inv = self.inverse_norm1_estimate();
        if inv.is_finite() && inv > 0.0 && a_norm1 > 0.0 {
            1.0 / (a_norm1 * inv)
        } else {
            0.0
        }
    }
}

/// Orthogonal projector onto the column space of `a`, built from the left
/// singular vectors whose singular value exceeds `1e-12 · σ_max`.
pub fn column_space_projector(a: &CMatrix) -> CMatrix {
    let m = a.nrows();
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut p = CMatrix::zeros(m, m);
    if smax == 0.0 {
        return p;
    }
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-12 * smax {
            let col = u.column(k);
            p += col * col.adjoint();
        }
    }
    p
}

/// Haar-distributed unitary from the QR decomposition of a complex Ginibre
/// matrix, with the phase correction that makes the distribution exact.
pub fn random_unitary(n: usize, stream: &mut crate::rng::Stream) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| stream.complex_normal());
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}
