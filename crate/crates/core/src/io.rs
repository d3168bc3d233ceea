//! JSON formats. Complex numbers are always `[re, im]` pairs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::network::{Illumination, ScatteringSystem};

pub fn to_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn from_pair(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// On-disk scattering system; `matrix` is row-major with `n_total²` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub n_total: usize,
    pub tx_ports: Vec<usize>,
    pub rx_ports: Vec<usize>,
    pub bs_ports: Vec<usize>,
    pub reference_impedance_ohms: f64,
    pub matrix: Vec<[f64; 2]>,
}

impl From<&ScatteringSystem> for SystemFile {
    fn from(sys: &ScatteringSystem) -> Self {
        let n = sys.n_total();
        let m = sys.matrix();
        let matrix = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|ij| to_pair(m[ij]))
            .collect();
        Self {
            n_total: n,
            tx_ports: sys.tx_ports().to_vec(),
            rx_ports: sys.rx_ports().to_vec(),
            bs_ports: sys.bs_ports().to_vec(),
            reference_impedance_ohms: sys.reference_impedance(),
            matrix,
        }
    }
}

impl TryFrom<SystemFile> for ScatteringSystem {
    type Error = Error;

    fn try_from(f: SystemFile) -> Result<Self> {
        let n = f.n_total;
        if f.matrix.len() != n * n {
            return Err(Error::Dimension(format!(
                "matrix has {} entries, expected n_total² = {}",
                f.matrix.len(),
                n * n
            )));
        }
        let entries: Vec<Complex64> = f.matrix.into_iter().map(from_pair).collect();
        let m = CMatrix::from_row_slice(n, n, &entries);
        ScatteringSystem::new(
            m,
            f.tx_ports,
            f.rx_ports,
            f.bs_ports,
            f.reference_impedance_ohms,
        )
    }
}

pub fn system_to_json(sys: &ScatteringSystem) -> String {
    serde_json::to_string_pretty(&SystemFile::from(sys)).expect("system file serializes")
}

pub fn system_from_json(text: &str) -> Result<ScatteringSystem> {
    let f: SystemFile = serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))?;
    f.try_into()
}

pub fn read_system(path: impl AsRef<Path>) -> Result<ScatteringSystem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Serde(format!("{}: {e}", path.display())))?;
    system_from_json(&text)
}

pub fn write_system(path: impl AsRef<Path>, sys: &ScatteringSystem) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, system_to_json(sys))
        .map_err(|e| Error::Serde(format!("{}: {e}", path.display())))
}

pub fn illumination_to_pairs(x: &Illumination) -> Vec<[f64; 2]> {
    x.as_vector().iter().map(|&z| to_pair(z)).collect()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IlluminationFile {
    Pairs(Vec<[f64; 2]>),
    Named { x: Vec<[f64; 2]> },
    Result { best_x: Vec<[f64; 2]> },
}

/// Parses a plain `[[re, im], ...]` list, `{"x": [...]}`, or an optimizer
/// result with `best_x`. The vector must already have unit norm.
pub fn illumination_from_json(text: &str) -> Result<Illumination> {
    let f: IlluminationFile =
        serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))?;
    let pairs = match f {
        IlluminationFile::Pairs(p)
        | IlluminationFile::Named { x: p }
        | IlluminationFile::Result { best_x: p } => p,
    };
    Illumination::new(CVector::from_iterator(
        pairs.len(),
        pairs.into_iter().map(from_pair),
    ))
}
