//! Load-constraint families and load sampling.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::network::{LoadConfiguration, LOAD_MAGNITUDE_TOL};
use crate::rng::Stream;

/// PIN-diode reflection coefficients at 60 GHz.
pub const PIN_ON: Complex64 = Complex64::new(-0.8116, 0.0);
#[allow(clippy::approx_constant)]
pub const PIN_OFF: Complex64 = Complex64::new(0.6366, -0.7712);
pub const PM_ON: Complex64 = Complex64::new(1.0, 0.0);
pub const PM_OFF: Complex64 = Complex64::new(-1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ConstraintKind {
    Pin,
    Pm,
    Uni,
}

impl std::fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConstraintKind::Pin => "PIN",
            ConstraintKind::Pm => "PM",
            ConstraintKind::Uni => "UNI",
        })
    }
}

/// Which values each load may take.
///
/// PIN and PM are two-state alphabets (custom states allowed, e.g. measured
/// diode values); UNI draws `|r| ~ U[0, 1]` and `arg r ~ U[0, 2π)`
/// independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConstraintSpec", into = "ConstraintSpec")]
pub struct LoadConstraint {
    kind: ConstraintKind,
    states: Option<(Complex64, Complex64)>,
}

/// Wire form: `{"kind": "PIN"|"PM"|"UNI", "on": [re, im]?, "off": [re, im]?}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConstraintSpec {
    kind: ConstraintKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    on: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    off: Option<[f64; 2]>,
}

impl TryFrom<ConstraintSpec> for LoadConstraint {
    type Error = Error;

    fn try_from(spec: ConstraintSpec) -> Result<Self> {
        let to_c = |p: [f64; 2]| Complex64::new(p[0], p[1]);
        match spec.kind {
            ConstraintKind::Uni => {
                if spec.on.is_some() || spec.off.is_some() {
                    return Err(Error::Config(
                        "UNI constraint takes no on/off values".into(),
                    ));
                }
                Ok(Self::uni())
            }
            kind => {
                let default = Self::defaults(kind);
                let on = spec.on.map(to_c).unwrap_or(default.0);
                let off = spec.off.map(to_c).unwrap_or(default.1);
                Self::discrete(kind, on, off)
            }
        }
    }
}

impl From<LoadConstraint> for ConstraintSpec {
    fn from(c: LoadConstraint) -> Self {
        let pair = |z: Complex64| [z.re, z.im];
        Self {
            kind: c.kind,
            on: c.states.map(|s| pair(s.0)),
            off: c.states.map(|s| pair(s.1)),
        }
    }
}

impl LoadConstraint {
    fn defaults(kind: ConstraintKind) -> (Complex64, Complex64) {
        match kind {
            ConstraintKind::Pm => (PM_ON, PM_OFF),
            _ => (PIN_ON, PIN_OFF),
        }
    }

    pub fn pin() -> Self {
        Self {
            kind: ConstraintKind::Pin,
            states: Some((PIN_ON, PIN_OFF)),
        }
    }

    pub fn pm() -> Self {
        Self {
            kind: ConstraintKind::Pm,
            states: Some((PM_ON, PM_OFF)),
        }
    }

    pub fn uni() -> Self {
        Self {
            kind: ConstraintKind::Uni,
            states: None,
        }
    }

    /// Two-state constraint with custom values.
    pub fn discrete(kind: ConstraintKind, on: Complex64, off: Complex64) -> Result<Self> {
        if kind == ConstraintKind::Uni {
            return Err(Error::Config("UNI is not a discrete constraint".into()));
        }
        for (name, z) in [("on", on), ("off", off)] {
            if !z.is_finite() || z.norm() > 1.0 + LOAD_MAGNITUDE_TOL {
                return Err(Error::Config(format!("{name} state |{z}| exceeds 1")));
            }
        }
        if on == off {
            return Err(Error::Config("on and off states coincide".into()));
        }
        Ok(Self {
            kind,
            states: Some((on, off)),
        })
    }

    pub fn from_kind(kind: ConstraintKind) -> Self {
        match kind {
            ConstraintKind::Pin => Self::pin(),
            ConstraintKind::Pm => Self::pm(),
            ConstraintKind::Uni => Self::uni(),
        }
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    /// `(on, off)` for discrete constraints.
    pub fn states(&self) -> Option<(Complex64, Complex64)> {
        self.states
    }

    pub fn is_discrete(&self) -> bool {
        self.states.is_some()
    }

    fn discrete_states(&self, op: &str) -> Result<(Complex64, Complex64)> {
        self.states.ok_or_else(|| {
            Error::Unsupported(format!("{op} requires a discrete (PIN/PM) constraint"))
        })
    }

    /// Binary control variable of a discrete state: 1 for ON, 0 for OFF.
    pub fn control_of(&self, value: Complex64) -> Result<u8> {
        let (on, off) = self.discrete_states("control lookup")?;
        if value == on {
            Ok(1)
        } else if value == off {
            Ok(0)
        } else {
            Err(Error::InconsistentState(format!(
                "load value {value} is neither the on ({on}) nor the off ({off}) state"
            )))
        }
    }
}

/// One random load configuration: fair coin flips for PIN/PM, independent
/// uniform magnitude and phase for UNI.
pub fn sample_loads(
    constraint: &LoadConstraint,
    n_s: usize,
    stream: &mut Stream,
) -> LoadConfiguration {
    let r = match constraint.states {
        Some((on, off)) => CVector::from_fn(n_s, |_, _| if stream.coin() { on } else { off }),
        None => CVector::from_fn(n_s, |_, _| {
            let magnitude = stream.uniform();
            let phase = TAU * stream.uniform();
            Complex64::from_polar(magnitude, phase)
        }),
    };
    LoadConfiguration::new(r).expect("constraint states are validated passive")
}

/// Swap load `index` to the other discrete state.
pub fn toggle(
    r: &LoadConfiguration,
    index: usize,
    constraint: &LoadConstraint,
) -> Result<LoadConfiguration> {
    let (on, off) = constraint.discrete_states("toggle")?;
    let current = *r.as_vector().get(index).ok_or_else(|| {
        Error::Dimension(format!(
            "load index {index} out of range for {} elements",
            r.len()
        ))
    })?;
    let next = if constraint.control_of(current)? == 1 {
        off
    } else {
        on
    };
    r.with_entry(index, next)
}
