//! Multiport-network channel model of a backscatter MIMO link.
//!
//! The environment is one `N × N` scattering matrix whose ports are split
//! into transmitter (`T`), receiver (`R`) and backscatter (`S`) sets. With
//! the backscatter ports terminated by loads `r` and `Φ(r) = diag(r)`:
//!
//! ```text
//! G(r) = (I − Φ(r) S_SS)⁻¹
//! H(r) = S_RT + S_RS G(r) Φ(r) S_ST
//! W(r) = S_SS G(r) Φ(r) S_ST + S_ST
//! J(r, x) = ∂(H(r) x)/∂r = S_RS G(r) diag(W(r) x)
//! ```
//!
//! `r ↦ H(r)x` is rational in `r`, hence holomorphic, and `J` is its complex
//! derivative (the conjugate Wirtinger derivative vanishes).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    inverse_with_rcond, norm_1, singular_values, spectral_norm, CMatrix, CVector, Lu, MIN_RCOND,
};

/// Slack allowed on the passivity check of loaded files.
pub const PASSIVITY_TOL: f64 = 1e-9;

/// Slack on `|rᵢ| ≤ 1`. The rounded PIN-diode OFF state sits at |r| ≈ 1 + 4.5e-6.
pub const LOAD_MAGNITUDE_TOL: f64 = 1e-5;

pub const UNIT_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSystem {
    matrix: CMatrix,
    tx_ports: Vec<usize>,
    rx_ports: Vec<usize>,
    bs_ports: Vec<usize>,
    reference_impedance: f64,
}

fn validate_partition(n: usize, tx: &[usize], rx: &[usize], bs: &[usize]) -> Result<()> {
    for (name, set) in [("tx", tx), ("rx", rx), ("bs", bs)] {
        if set.is_empty() {
            return Err(Error::Partition(format!("{name} port set is empty")));
        }
    }
    let mut seen = vec![false; n];
    for &p in tx.iter().chain(rx).chain(bs) {
        if p >= n {
            return Err(Error::Partition(format!(
                "port {p} out of range for N = {n}"
            )));
        }
        if seen[p] {
            return Err(Error::Partition(format!(
                "port {p} assigned more than once"
            )));
        }
        seen[p] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Partition(format!(
            "port {missing} not assigned to any set"
        )));
    }
    Ok(())
}

impl ScatteringSystem {
    /// Validates the partition and passivity (`‖S‖₂ ≤ 1`).
    pub fn new(
        matrix: CMatrix,
        tx_ports: Vec<usize>,
        rx_ports: Vec<usize>,
        bs_ports: Vec<usize>,
        reference_impedance: f64,
    ) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!(
                "scattering matrix is {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !(reference_impedance > 0.0 && reference_impedance.is_finite()) {
            return Err(Error::Config(format!(
                "reference impedance must be positive, got {reference_impedance}"
            )));
        }
        if matrix.iter().any(|z| !z.is_finite()) {
            return Err(Error::Degenerate(
                "scattering matrix has non-finite entries".into(),
            ));
        }
        validate_partition(matrix.nrows(), &tx_ports, &rx_ports, &bs_ports)?;
        let norm = spectral_norm(&matrix);
        if norm > 1.0 + PASSIVITY_TOL {
            return Err(Error::NotPassive { norm });
        }
        Ok(Self {
            matrix,
            tx_ports,
            rx_ports,
            bs_ports,
            reference_impedance,
        })
    }

    /// Same matrix, different port assignment.
    pub fn with_partition(&self, tx: Vec<usize>, rx: Vec<usize>, bs: Vec<usize>) -> Result<Self> {
        validate_partition(self.n_total(), &tx, &rx, &bs)?;
        Ok(Self {
            matrix: self.matrix.clone(),
            tx_ports: tx,
            rx_ports: rx,
            bs_ports: bs,
            reference_impedance: self.reference_impedance,
        })
    }

    /// Same partition, different matrix; used by transforms that keep passivity.
    pub(crate) fn with_matrix(&self, matrix: CMatrix) -> Result<Self> {
        Self::new(
            matrix,
            self.tx_ports.clone(),
            self.rx_ports.clone(),
            self.bs_ports.clone(),
            self.reference_impedance,
        )
    }

    pub fn n_total(&self) -> usize {
        self.matrix.nrows()
    }
    pub fn n_t(&self) -> usize {
        self.tx_ports.len()
    }
    pub fn n_r(&self) -> usize {
        self.rx_ports.len()
    }
    pub fn n_s(&self) -> usize {
        self.bs_ports.len()
    }
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
    pub fn tx_ports(&self) -> &[usize] {
        &self.tx_ports
    }
    pub fn rx_ports(&self) -> &[usize] {
        &self.rx_ports
    }
    pub fn bs_ports(&self) -> &[usize] {
        &self.bs_ports
    }
    pub fn reference_impedance(&self) -> f64 {
        self.reference_impedance
    }

    pub fn blocks(&self) -> ScatteringBlocks {
        extract_blocks(self)
    }
}

/// The four sub-blocks of `S` that enter the channel model.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringBlocks {
    pub s_rt: CMatrix,
    pub s_rs: CMatrix,
    pub s_ss: CMatrix,
    pub s_st: CMatrix,
}

fn submatrix(m: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Row/column selection in the declared port order, e.g. `T = {2, 4, 5}`
/// yields `S_ST` columns 2, 4, 5 in that order.
pub fn extract_blocks(system: &ScatteringSystem) -> ScatteringBlocks {
    let s = &system.matrix;
    let (t, r, b) = (&system.tx_ports, &system.rx_ports, &system.bs_ports);
    ScatteringBlocks {
        s_rt: submatrix(s, r, t),
        s_rs: submatrix(s, r, b),
        s_ss: submatrix(s, b, b),
        s_st: submatrix(s, b, t),
    }
}

impl ScatteringBlocks {
    /// Assemble blocks directly, checking that the shapes agree.
    pub fn new(s_rt: CMatrix, s_rs: CMatrix, s_ss: CMatrix, s_st: CMatrix) -> Result<Self> {
        let (n_r, n_t) = s_rt.shape();
        let n_s = s_ss.nrows();
        if n_r == 0 || n_t == 0 || n_s == 0 {
            return Err(Error::Dimension("empty block".into()));
        }
        if s_ss.ncols() != n_s || s_rs.shape() != (n_r, n_s) || s_st.shape() != (n_s, n_t) {
            return Err(Error::Dimension(format!(
                "inconsistent blocks: S_RT {:?}, S_RS {:?}, S_SS {:?}, S_ST {:?}",
                s_rt.shape(),
                s_rs.shape(),
                s_ss.shape(),
                s_st.shape()
            )));
        }
        Ok(Self {
            s_rt,
            s_rs,
            s_ss,
            s_st,
        })
    }

    pub fn n_t(&self) -> usize {
        self.s_rt.ncols()
    }
    pub fn n_r(&self) -> usize {
        self.s_rt.nrows()
    }
    pub fn n_s(&self) -> usize {
        self.s_ss.nrows()
    }

    fn check_loads(&self, r: &CVector) -> Result<()> {
        if r.len() != self.n_s() {
            return Err(Error::Dimension(format!(
                "load vector has {} entries, system has {} backscatter ports",
                r.len(),
                self.n_s()
            )));
        }
        Ok(())
    }

    fn check_illumination(&self, x: &CVector) -> Result<()> {
        if x.len() != self.n_t() {
            return Err(Error::Dimension(format!(
                "illumination has {} entries, system has {} transmit ports",
                x.len(),
                self.n_t()
            )));
        }
        Ok(())
    }

    /// `G(r)` for an arbitrary (not necessarily passive) load vector.
    pub fn resolvent_at(&self, r: &CVector) -> Result<CMatrix> {
        self.check_loads(r)?;
        inverse_with_rcond(&self.system_matrix(r)).map(|(inv, _)| inv)
    }

    /// `I − Φ(r) S_SS`.
    fn system_matrix(&self, r: &CVector) -> CMatrix {
        let n = self.n_s();
        let mut a = CMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] -= r[i] * self.s_ss[(i, j)];
            }
        }
        a
    }

    /// LU of `I − Φ(r) S_SS`, rejected when the estimated rcond is too small.
    fn factor_at(&self, r: &CVector) -> Result<Lu> {
        self.check_loads(r)?;
        let a = self.system_matrix(r);
        let lu = Lu::factor(&a)?;
        let rcond = lu.rcond_estimate(norm_1(&a));
        if !(rcond > MIN_RCOND) {
            return Err(Error::Singular { rcond });
        }
        Ok(lu)
    }

    /// `G(r) Φ(r) S_ST`, shared by `H` and `W`.
    fn loaded_forward(&self, g: &CMatrix, r: &CVector) -> CMatrix {
        let mut phi_st = self.s_st.clone();
        for (i, mut row) in phi_st.row_iter_mut().enumerate() {
            row *= r[i];
        }
        g * phi_st
    }

    /// `H(r)` for an arbitrary load vector; used by perturbation oracles
    /// that step outside the unit disk.
    pub fn channel_at(&self, r: &CVector) -> Result<CMatrix> {
        let lu = self.factor_at(r)?;
        let mut v = self.s_st.clone();
        for (i, mut row) in v.row_iter_mut().enumerate() {
            row *= r[i];
        }
        for mut col in v.column_iter_mut() {
            lu.solve_in_place(col.as_mut_slice());
        }
        Ok(&self.s_rt + &self.s_rs * v)
    }

    /// `H(r') x` for each `r'` obtained from `r` by one change `(k, value)`.
    ///
    /// Factors once and applies a Sherman–Morrison correction per change, so
    /// each extra response costs `O(N_R)` after an `O(N_S³)` setup.
    pub fn responses_after_single_changes(
        &self,
        r: &CVector,
        x: &CVector,
        changes: &[(usize, Complex64)],
    ) -> Result<(CVector, Vec<Result<CVector>>)> {
        self.check_illumination(x)?;
        let g = self.resolvent_at(r)?;
        let n = self.n_s();
        let u = &self.s_st * x;
        let phi_u = CVector::from_fn(n, |i, _| r[i] * u[i]);
        let p = &g * &phi_u;
        let sp = &self.s_ss * &p;
        let k_mat = &self.s_rs * &g;
        let base = &self.s_rt * x + &self.s_rs * &p;
        let one = Complex64::new(1.0, 0.0);
        let responses = changes
            .iter()
            .map(|&(k, value)| {
                if k >= n {
                    return Err(Error::Dimension(format!(
                        "load index {k} out of range for {n} loads"
                    )));
                }
                let delta = value - r[k];
                // s_kᵀ G e_k
                let skgk: Complex64 = (0..n).map(|j| self.s_ss[(k, j)] * g[(j, k)]).sum();
                let denom = one - delta * skgk;
                if denom.norm() < 1e-12 {
                    return Err(Error::Singular {
                        rcond: denom.norm(),
                    });
                }
                // G' b' = G b' + c (G e_k)(s_kᵀ G b') with b' = Φ u + δ u_k e_k.
                let du = delta * u[k];
                let s_gb = sp[k] + du * skgk;
                let coeff = du + delta / denom * s_gb;
                Ok(&base + k_mat.column(k) * coeff)
            })
            .collect();
        Ok((base, responses))
    }

    fn channel_from_resolvent(&self, g: &CMatrix, r: &CVector) -> CMatrix {
        &self.s_rt + &self.s_rs * self.loaded_forward(g, r)
    }

    fn illumination_from_resolvent(&self, g: &CMatrix, r: &CVector) -> CMatrix {
        &self.s_ss * self.loaded_forward(g, r) + &self.s_st
    }

    /// `B(r₀, x) = G diag(W x)` given `G`.
    fn b_from_resolvent(&self, g: &CMatrix, r: &CVector, x: &CVector) -> CMatrix {
        let wx = self.illumination_from_resolvent(g, r) * x;
        let mut b = g.clone();
        for (j, mut col) in b.column_iter_mut().enumerate() {
            col *= wx[j];
        }
        b
    }

    /// Closed-form Jacobian at an arbitrary load vector.
    ///
    /// Uses `J = K diag(W x)` with `K = S_RS G` obtained from transposed
    /// solves, so `G` itself is never formed.
    pub fn jacobian_at(&self, r: &CVector, x: &CVector) -> Result<CMatrix> {
        self.check_illumination(x)?;
        let (k, wx) = self.gram_factors_at(r, x)?;
        let mut j = k;
        for (col, mut c) in j.column_iter_mut().enumerate() {
            c *= wx[col];
        }
        Ok(j)
    }

    /// `(S_RS G, W x)` at `r`.
    pub fn gram_factors_at(&self, r: &CVector, x: &CVector) -> Result<(CMatrix, CVector)> {
        self.check_illumination(x)?;
        let lu = self.factor_at(r)?;
        let n = self.n_s();
        let u = &self.s_st * x;
        let mut v: Vec<Complex64> = (0..n).map(|i| r[i] * u[i]).collect();
        lu.solve_in_place(&mut v);
        let wx = &self.s_ss * CVector::from_column_slice(&v) + u;
        let mut k = CMatrix::zeros(self.n_r(), n);
        let mut row = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..self.n_r() {
            for (j, z) in row.iter_mut().enumerate() {
                *z = self.s_rs[(i, j)];
            }
            lu.solve_transpose_in_place(&mut row);
            for (j, z) in row.iter().enumerate() {
                k[(i, j)] = *z;
            }
        }
        Ok((k, wx))
    }
}

/// Passive load reflection coefficients, `|rᵢ| ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadConfiguration(CVector);

impl LoadConfiguration {
    pub fn new(r: CVector) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::InvalidLoad("empty load vector".into()));
        }
        for (i, z) in r.iter().enumerate() {
            if !z.is_finite() || z.norm() > 1.0 + LOAD_MAGNITUDE_TOL {
                return Err(Error::InvalidLoad(format!(
                    "|r[{i}]| = {} exceeds 1",
                    z.norm()
                )));
            }
        }
        Ok(Self(r))
    }

    pub fn from_slice(r: &[Complex64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(r))
    }

    pub fn zeros(n_s: usize) -> Self {
        Self(CVector::zeros(n_s))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &CVector {
        &self.0
    }

    pub fn into_vector(self) -> CVector {
        self.0
    }

    pub(crate) fn with_entry(&self, index: usize, value: Complex64) -> Result<Self> {
        if index >= self.len() {
            return Err(Error::Dimension(format!(
                "load index {index} out of range for {} elements",
                self.len()
            )));
        }
        let mut v = self.0.clone();
        v[index] = value;
        Self::new(v)
    }
}

/// Unit-norm transmit wavefront.
#[derive(Debug, Clone, PartialEq)]
pub struct Illumination(CVector);

impl Illumination {
    /// Accepts `x` only when `‖x‖₂ = 1` within `1e-12`.
    pub fn new(x: CVector) -> Result<Self> {
        let norm = x.norm();
        if x.is_empty() || (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidIllumination(format!(
                "expected unit norm, got {norm}"
            )));
        }
        Ok(Self(x))
    }

    /// Scales `x` onto the unit sphere.
    pub fn normalized(x: CVector) -> Result<Self> {
        let norm = x.norm();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::Degenerate(format!(
                "cannot normalize vector of norm {norm}"
            )));
        }
        Ok(Self(x / Complex64::new(norm, 0.0)))
    }

    /// Unit vector `e_k` of length `n`.
    pub fn basis(n: usize, k: usize) -> Self {
        let mut v = CVector::zeros(n);
        v[k] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &CVector {
        &self.0
    }
}

/// Jacobian `∂y/∂r` with its singular spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    pub j: CMatrix,
    /// Nonincreasing, length `min(N_R, N_S)`.
    pub singular_values: Vec<f64>,
}

impl JacobianMatrix {
    pub fn new(j: CMatrix) -> Self {
        let singular_values = singular_values(&j);
        Self { j, singular_values }
    }
}

/// `G(r) = (I − Φ(r) S_SS)⁻¹`.
pub fn coupling_resolvent(blocks: &ScatteringBlocks, r: &LoadConfiguration) -> Result<CMatrix> {
    blocks.resolvent_at(r.as_vector())
}

/// `H(r) = S_RT + S_RS G(r) Φ(r) S_ST`.
pub fn end_to_end_channel(blocks: &ScatteringBlocks, r: &LoadConfiguration) -> Result<CMatrix> {
    blocks.channel_at(r.as_vector())
}

/// `y = H x`.
pub fn output_wavefront(h: &CMatrix, x: &Illumination) -> Result<CVector> {
    if h.ncols() != x.len() {
        return Err(Error::Dimension(format!(
            "channel has {} columns, illumination has {} entries",
            h.ncols(),
            x.len()
        )));
    }
    Ok(h * x.as_vector())
}

/// `W(r) = S_SS G(r) Φ(r) S_ST + S_ST`: the incident waves on the loaded
/// elements per unit transmit excitation.
pub fn illumination_matrix(blocks: &ScatteringBlocks, r: &LoadConfiguration) -> Result<CMatrix> {
    let g = coupling_resolvent(blocks, r)?;
    Ok(blocks.illumination_from_resolvent(&g, r.as_vector()))
}

/// `J(r₀, x) = S_RS G(r₀) diag(W(r₀) x)`.
pub fn closed_form_jacobian(
    blocks: &ScatteringBlocks,
    r0: &LoadConfiguration,
    x: &Illumination,
) -> Result<JacobianMatrix> {
    blocks
        .jacobian_at(r0.as_vector(), x.as_vector())
        .map(JacobianMatrix::new)
}

/// `B(r₀, x) = G(r₀) diag(W(r₀) x)`, so that `J = S_RS B`.
pub fn b_factor(
    blocks: &ScatteringBlocks,
    r0: &LoadConfiguration,
    x: &Illumination,
) -> Result<CMatrix> {
    blocks.check_illumination(x.as_vector())?;
    let g = coupling_resolvent(blocks, r0)?;
    Ok(blocks.b_from_resolvent(&g, r0.as_vector(), x.as_vector()))
}

/// Result of changing one load on top of a known resolvent.
#[derive(Debug, Clone, PartialEq)]
pub struct WoodburyUpdate {
    pub resolvent: CMatrix,
    pub channel: CMatrix,
    pub loads: LoadConfiguration,
}

/// Rank-one (Sherman–Morrison) refresh of `G` and `H` after setting
/// `r[changed_index] = new_value`.
///
/// With `δ = new − old` and `s_kᵀ` the k-th row of `S_SS`, the system matrix
/// changes by `−δ e_k s_kᵀ`, giving
/// `G' = G + δ (G e_k)(s_kᵀ G) / (1 − δ s_kᵀ G e_k)`. Cost is `O(N_S² N_T)`.
pub fn woodbury_channel_update(
    blocks: &ScatteringBlocks,
    base_resolvent: &CMatrix,
    base_r: &LoadConfiguration,
    changed_index: usize,
    new_value: Complex64,
) -> Result<WoodburyUpdate> {
    let n = blocks.n_s();
    if base_resolvent.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "resolvent is {:?}, expected ({n}, {n})",
            base_resolvent.shape()
        )));
    }
    blocks.check_loads(base_r.as_vector())?;
    let loads = base_r.with_entry(changed_index, new_value)?;
    let delta = new_value - base_r.as_vector()[changed_index];
    let g = base_resolvent;
    let mut g_new = g.clone();
    if delta != Complex64::new(0.0, 0.0) {
        let k = changed_index;
        // s_kᵀ G
        let row = blocks.s_ss.row(k) * g;
        let denom = Complex64::new(1.0, 0.0) - delta * row[k];
        if denom.norm() < 1e-12 {
            return Err(Error::Singular {
                rcond: denom.norm(),
            });
        }
        let scale = delta / denom;
        for j in 0..n {
            let rj = row[j] * scale;
            for i in 0..n {
                g_new[(i, j)] += g[(i, k)] * rj;
            }
        }
    }
    let channel = blocks.channel_from_resolvent(&g_new, loads.as_vector());
    Ok(WoodburyUpdate {
        resolvent: g_new,
        channel,
        loads,
    })
}
