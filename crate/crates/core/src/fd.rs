//! Finite-difference Jacobian oracles.
//!
//! These work on any [`ChannelMap`], i.e. anything that predicts the
//! end-to-end channel for a load vector, and never look inside it. They back
//! the closed form up in tests and replace it in the toggle-based
//! "experimental" sampling mode.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::loads::{toggle, LoadConstraint};
use crate::network::{Illumination, JacobianMatrix, LoadConfiguration, ScatteringBlocks};

/// Pure evaluator `r ↦ H(r)`.
pub trait ChannelMap: Sync {
    fn n_r(&self) -> usize;
    fn n_t(&self) -> usize;
    fn n_s(&self) -> usize;

    /// Must accept points slightly outside the unit disk (oracle steps).
    fn channel(&self, r: &CVector) -> Result<CMatrix>;

    /// `H(r)x` and, for each `(k, value)`, `H(r')x` where `r'` equals `r`
    /// except `r'ₖ = value`.
    fn single_change_responses(
        &self,
        r: &CVector,
        x: &CVector,
        changes: &[(usize, Complex64)],
    ) -> Result<(CVector, Vec<Result<CVector>>)> {
        let base = self.channel(r)? * x;
        let responses = changes
            .iter()
            .map(|&(k, value)| {
                let mut rk = r.clone();
                rk[k] = value;
                Ok(self.channel(&rk)? * x)
            })
            .collect();
        Ok((base, responses))
    }
}

impl ChannelMap for ScatteringBlocks {
    fn n_r(&self) -> usize {
        ScatteringBlocks::n_r(self)
    }
    fn n_t(&self) -> usize {
        ScatteringBlocks::n_t(self)
    }
    fn n_s(&self) -> usize {
        ScatteringBlocks::n_s(self)
    }
    fn channel(&self, r: &CVector) -> Result<CMatrix> {
        self.channel_at(r)
    }
    fn single_change_responses(
        &self,
        r: &CVector,
        x: &CVector,
        changes: &[(usize, Complex64)],
    ) -> Result<(CVector, Vec<Result<CVector>>)> {
        self.responses_after_single_changes(r, x, changes)
    }
}

/// Wraps a closure as a [`ChannelMap`].
pub struct FnChannelMap<F> {
    f: F,
    dims: (usize, usize, usize),
}

impl<F> FnChannelMap<F>
where
    F: Fn(&CVector) -> Result<CMatrix> + Sync,
{
    pub fn new(n_r: usize, n_t: usize, n_s: usize, f: F) -> Self {
        Self {
            f,
            dims: (n_r, n_t, n_s),
        }
    }
}

impl<F> ChannelMap for FnChannelMap<F>
where
    F: Fn(&CVector) -> Result<CMatrix> + Sync,
{
    fn n_r(&self) -> usize {
        self.dims.0
    }
    fn n_t(&self) -> usize {
        self.dims.1
    }
    fn n_s(&self) -> usize {
        self.dims.2
    }
    fn channel(&self, r: &CVector) -> Result<CMatrix> {
        (self.f)(r)
    }
}

/// Base step of the complex-step oracle; coordinate `i` uses `step·(1 + |r₀ᵢ|)`.
pub const DEFAULT_STEP: f64 = 1e-6;

/// Forward difference of a holomorphic vector map `f` at `z0` along each
/// coordinate, with per-coordinate step `step·(1 + |z0ᵢ|)`.
pub fn holomorphic_fd_jacobian<F>(f: F, z0: &CVector, step: f64) -> Result<CMatrix>
where
    F: Fn(&CVector) -> Result<CVector>,
{
    if !(step > 0.0) {
        return Err(Error::Config(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let base = f(z0)?;
    let mut jac = CMatrix::zeros(base.len(), z0.len());
    for i in 0..z0.len() {
        let h = step * (1.0 + z0[i].norm());
        let mut z = z0.clone();
        z[i] += Complex64::new(h, 0.0);
        let y = f(&z).map_err(|e| Error::Oracle {
            index: i,
            source: Box::new(e),
        })?;
        if y.len() != base.len() {
            return Err(Error::Dimension(format!(
                "map output length changed from {} to {} at coordinate {i}",
                base.len(),
                y.len()
            )));
        }
        jac.set_column(i, &((y - &base) / Complex64::new(h, 0.0)));
    }
    Ok(jac)
}

fn check_dims<M: ChannelMap + ?Sized>(
    map: &M,
    r0: &LoadConfiguration,
    x: &Illumination,
) -> Result<()> {
    if r0.len() != map.n_s() || x.len() != map.n_t() {
        return Err(Error::Dimension(format!(
            "map expects {} loads and {} transmit ports, got {} and {}",
            map.n_s(),
            map.n_t(),
            r0.len(),
            x.len()
        )));
    }
    Ok(())
}

/// Complex-step forward-difference estimate of `∂(H(r)x)/∂r` at `r₀`.
pub fn complex_step_jacobian<M: ChannelMap + ?Sized>(
    map: &M,
    r0: &LoadConfiguration,
    x: &Illumination,
    step: f64,
) -> Result<JacobianMatrix> {
    check_dims(map, r0, x)?;
    let xv = x.as_vector();
    let j = holomorphic_fd_jacobian(|r| Ok(map.channel(r)? * xv), r0.as_vector(), step)?;
    Ok(JacobianMatrix::new(j))
}

/// Secant columns `(H(toggle(r₀, i)) x − H(r₀) x) / Δᵢ` for a discrete constraint.
fn toggle_columns<M, D>(
    map: &M,
    r0: &LoadConfiguration,
    x: &Illumination,
    constraint: &LoadConstraint,
    denominator: D,
) -> Result<JacobianMatrix>
where
    M: ChannelMap + ?Sized,
    D: Fn(Complex64, Complex64) -> Complex64,
{
    if !constraint.is_discrete() {
        return Err(Error::Unsupported(
            "discrete-toggle differencing requires a PIN or PM constraint".into(),
        ));
    }
    check_dims(map, r0, x)?;
    let changes: Vec<(usize, Complex64)> = (0..r0.len())
        .map(|i| Ok((i, toggle(r0, i, constraint)?.as_vector()[i])))
        .collect::<Result<_>>()?;
    let (base, responses) = map.single_change_responses(r0.as_vector(), x.as_vector(), &changes)?;
    let mut jac = CMatrix::zeros(base.len(), r0.len());
    for ((i, new), y) in changes.into_iter().zip(responses) {
        let y = y.map_err(|e| Error::Oracle {
            index: i,
            source: Box::new(e),
        })?;
        let d = denominator(r0.as_vector()[i], new);
        jac.set_column(i, &((y - &base) / d));
    }
    Ok(JacobianMatrix::new(jac))
}

/// Secant Jacobian with respect to the binary control variables (ON = 1,
/// OFF = 0): each column is divided by the signed control step `±1`.
pub fn discrete_toggle_jacobian<M: ChannelMap + ?Sized>(
    map: &M,
    r0: &LoadConfiguration,
    x: &Illumination,
    constraint: &LoadConstraint,
) -> Result<JacobianMatrix> {
    toggle_columns(map, r0, x, constraint, |old, new| {
        let step = constraint.control_of(new).unwrap_or(0) as f64
            - constraint.control_of(old).unwrap_or(0) as f64;
        Complex64::new(step, 0.0)
    })
}

/// Secant Jacobian with respect to the reflection coefficients: each column
/// is divided by `r_new − r_old`. Equals [`discrete_toggle_jacobian`] divided
/// by `r_ON − r_OFF`.
pub fn discrete_toggle_jacobian_reflection<M: ChannelMap + ?Sized>(
    map: &M,
    r0: &LoadConfiguration,
    x: &Illumination,
    constraint: &LoadConstraint,
) -> Result<JacobianMatrix> {
    toggle_columns(map, r0, x, constraint, |old, new| new - old)
}
