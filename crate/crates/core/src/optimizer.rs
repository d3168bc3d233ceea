//! Choice of the fixed illumination that maximizes or minimizes the mean
//! participation number over random loads.
//!
//! The search runs Nelder–Mead over `v = [Re x; Im x] ∈ ℝ^{2N_T}` and
//! projects onto the unit sphere inside the objective, which is legitimate
//! because `M` is invariant to any global scalar on the Jacobian.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::loads::{sample_loads, LoadConstraint};
use crate::metrics::bs_eemdof_point;
use crate::nelder_mead::{minimize, NelderMeadParams};
use crate::network::{
    coupling_resolvent, illumination_matrix, Illumination, LoadConfiguration, ScatteringSystem,
};
use crate::rng::{Domain, Stream};
use crate::sampler::sample_random_illumination;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Direction {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationConfig {
    pub direction: Direction,
    pub n_objective_samples: usize,
    pub n_starts: usize,
    pub max_iterations: usize,
    pub x_tolerance: f64,
    pub f_tolerance: f64,
    pub seed: u64,
    /// Draw a fresh load set for every objective evaluation instead of
    /// freezing one for the whole run.
    #[serde(default)]
    pub redraw_load_set: bool,
}

impl OptimizationConfig {
    pub fn new(direction: Direction, seed: u64) -> Self {
        Self {
            direction,
            n_objective_samples: 1500,
            n_starts: 3,
            max_iterations: 2000,
            x_tolerance: 1e-6,
            f_tolerance: 1e-8,
            seed,
            redraw_load_set: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_objective_samples == 0 || self.n_starts == 0 || self.max_iterations == 0 {
            return Err(Error::Config("optimizer counts must be at least 1".into()));
        }
        if !(self.x_tolerance > 0.0 && self.f_tolerance > 0.0) {
            return Err(Error::Config(
                "optimizer tolerances must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn nelder_mead(&self) -> NelderMeadParams {
        NelderMeadParams {
            max_iterations: self.max_iterations,
            x_tolerance: self.x_tolerance,
            f_tolerance: self.f_tolerance,
            ..NelderMeadParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartTrace {
    pub start_index: usize,
    pub final_objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_x: Illumination,
    pub best_objective: f64,
    pub direction: Direction,
    pub per_start_trace: Vec<StartTrace>,
    pub objective_evaluations: usize,
    pub nelder_mead: NelderMeadParams,
    pub config: OptimizationConfig,
}

/// `[Re x; Im x]`.
pub fn embed(x: &Illumination) -> Vec<f64> {
    let v = x.as_vector();
    v.iter()
        .map(|z| z.re)
        .chain(v.iter().map(|z| z.im))
        .collect()
}

/// Inverse of [`embed`] followed by normalization to the unit sphere.
pub fn project(v: &[f64]) -> Result<Illumination> {
    if !v.len().is_multiple_of(2) || v.is_empty() {
        return Err(Error::Dimension(format!(
            "real parametrization has odd length {}",
            v.len()
        )));
    }
    let n = v.len() / 2;
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !(norm >= 1e-30) || !norm.is_finite() {
        return Err(Error::Degenerate(format!(
            "cannot project point of norm {norm:e}"
        )));
    }
    Illumination::normalized(CVector::from_fn(n, |i, _| Complex64::new(v[i], v[n + i])))
}

/// Load realizations that admit a resolvent, drawn from `(seed, LoadSet, i)`.
pub fn build_load_set(
    system: &ScatteringSystem,
    constraint: &LoadConstraint,
    n: usize,
    seed: u64,
    domain: Domain,
) -> Result<Vec<LoadConfiguration>> {
    let blocks = system.blocks();
    (0..n as u64)
        .map(|i| {
            for attempt in 0..64 {
                let mut stream = Stream::with_attempt(seed, domain, i, attempt);
                let r = sample_loads(constraint, system.n_s(), &mut stream);
                match coupling_resolvent(&blocks, &r) {
                    Ok(_) => return Ok(r),
                    Err(Error::Singular { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::PathologicalEnvironment {
                singular: 64,
                attempts: 64,
            })
        })
        .collect()
}

/// Mean participation number over a fixed load set, each point through the
/// closed-form Jacobian and its SVD.
pub fn mean_dof_objective(
    system: &ScatteringSystem,
    x: &Illumination,
    constraint: &LoadConstraint,
    load_set: &[LoadConfiguration],
) -> Result<f64> {
    if load_set.is_empty() {
        return Err(Error::Config("empty load set".into()));
    }
    check_membership(constraint, load_set)?;
    let blocks = system.blocks();
    let ms: Vec<f64> = load_set
        .par_iter()
        .map(|r| bs_eemdof_point(&blocks, r, x).map(|p| p.m))
        .collect::<Result<_>>()?;
    Ok(ms.iter().sum::<f64>() / ms.len() as f64)
}

fn check_membership(constraint: &LoadConstraint, load_set: &[LoadConfiguration]) -> Result<()> {
    if constraint.is_discrete() {
        for r in load_set {
            for &z in r.as_vector().iter() {
                constraint.control_of(z)?;
            }
        }
    }
    Ok(())
}

/// Per-load cache for repeated evaluation at many illuminations.
///
/// For a load `r`, `J(x) = K diag(W x)` with `K = S_RS G(r)` and `W = W(r)`
/// independent of `x`. Moreover `J J† = K diag(|Wx|²) K†`, so `M` follows
/// from one `N_R × N_R` Hermitian Gram matrix without an SVD.
pub struct FrozenObjective {
    n_r: usize,
    n_s: usize,
    n_t: usize,
    /// Row-major `N_R × N_S` per load.
    k: Vec<Vec<Complex64>>,
    /// Row-major `N_S × N_T` per load.
    w: Vec<Vec<Complex64>>,
}

impl FrozenObjective {
    pub fn new(system: &ScatteringSystem, load_set: &[LoadConfiguration]) -> Result<Self> {
        if load_set.is_empty() {
            return Err(Error::Config("empty load set".into()));
        }
        let blocks = system.blocks();
        let parts: Vec<(Vec<Complex64>, Vec<Complex64>)> = load_set
            .par_iter()
            .map(|r| {
                let g = coupling_resolvent(&blocks, r)?;
                let k = &blocks.s_rs * g;
                let w = illumination_matrix(&blocks, r)?;
                let k_rows = (0..k.nrows()).flat_map(|i| (0..k.ncols()).map(move |j| (i, j)));
                let w_rows = (0..w.nrows()).flat_map(|i| (0..w.ncols()).map(move |j| (i, j)));
                Ok((
                    k_rows.map(|ij| k[ij]).collect(),
                    w_rows.map(|ij| w[ij]).collect(),
                ))
            })
            .collect::<Result<_>>()?;
        let (k, w) = parts.into_iter().unzip();
        Ok(Self {
            n_r: system.n_r(),
            n_s: system.n_s(),
            n_t: system.n_t(),
            k,
            w,
        })
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    fn point(
        &self,
        idx: usize,
        x: &[Complex64],
        q: &mut [f64],
        gram: &mut [Complex64],
    ) -> Result<f64> {
        let (n_r, n_s, n_t) = (self.n_r, self.n_s, self.n_t);
        let w = &self.w[idx];
        let k = &self.k[idx];
        for s in 0..n_s {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..n_t {
                acc += w[s * n_t + t] * x[t];
            }
            q[s] = acc.norm_sqr();
        }
        let mut trace = 0.0;
        let mut frob = 0.0;
        for a in 0..n_r {
            for b in a..n_r {
                let mut acc = Complex64::new(0.0, 0.0);
                let (ra, rb) = (&k[a * n_s..(a + 1) * n_s], &k[b * n_s..(b + 1) * n_s]);
                for s in 0..n_s {
                    acc += ra[s] * rb[s].conj() * q[s];
                }
                gram[a * n_r + b] = acc;
                if a == b {
                    trace += acc.re;
                    frob += acc.re * acc.re;
                } else {
                    frob += 2.0 * acc.norm_sqr();
                }
            }
        }
        if !(frob > 0.0) {
            return Err(Error::Degenerate("zero Jacobian in objective".into()));
        }
        Ok(trace * trace / frob)
    }

    /// Mean participation number at `x`.
    pub fn value(&self, x: &Illumination) -> Result<f64> {
        if x.len() != self.n_t {
            return Err(Error::Dimension(format!(
                "illumination has {} entries, expected {}",
                x.len(),
                self.n_t
            )));
        }
        let xs = x.as_vector().as_slice();
        let ms: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map_init(
                || {
                    (
                        vec![0.0; self.n_s],
                        vec![Complex64::new(0.0, 0.0); self.n_r * self.n_r],
                    )
                },
                |(q, gram), i| self.point(i, xs, q, gram),
            )
            .collect::<Result<_>>()?;
        Ok(ms.iter().sum::<f64>() / ms.len() as f64)
    }
}

/// Multistart Nelder–Mead search for `x_MAX` / `x_MIN`.
pub fn optimize_illumination(
    system: &ScatteringSystem,
    constraint: &LoadConstraint,
    config: &OptimizationConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    let load_set = build_load_set(
        system,
        constraint,
        config.n_objective_samples,
        config.seed,
        Domain::LoadSet,
    )?;
    let frozen = FrozenObjective::new(system, &load_set)?;
    // MIN is MAX of −objective; Nelder–Mead then minimizes the negation of that.
    let sign = match config.direction {
        Direction::Max => 1.0,
        Direction::Min => -1.0,
    };
    let params = config.nelder_mead();
    let mut redraw_counter = 0u64;

    let mut traces = Vec::with_capacity(config.n_starts);
    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    let mut total_evals = 0;
    for start in 0..config.n_starts {
        let mut stream = Stream::new(config.seed, Domain::Starts, start as u64);
        let x0 = sample_random_illumination(system.n_t(), &mut stream);
        let objective = |v: &[f64]| -> f64 {
            let Ok(x) = project(v) else {
                return f64::INFINITY;
            };
            let value = if config.redraw_load_set {
                redraw_counter += 1;
                build_load_set(
                    system,
                    constraint,
                    config.n_objective_samples,
                    crate::rng::derive_seed(config.seed, redraw_counter),
                    Domain::Redraw,
                )
                .and_then(|set| FrozenObjective::new(system, &set))
                .and_then(|obj| obj.value(&x))
            } else {
                frozen.value(&x)
            };
            match value {
                Ok(m) => -sign * m,
                Err(_) => f64::INFINITY,
            }
        };
        let res = minimize(objective, &embed(&x0), &params);
        total_evals += res.evaluations;
        let final_objective = project(&res.x)
            .and_then(|x| frozen.value(&x))
            .unwrap_or(f64::NAN);
        traces.push(StartTrace {
            start_index: start,
            final_objective,
            iterations: res.iterations,
            evaluations: res.evaluations,
            converged: res.converged,
        });
        if final_objective.is_finite() {
            let better = match &best {
                None => true,
                Some((_, _, b)) => sign * final_objective > sign * b,
            };
            if better {
                best = Some((start, res.x, final_objective));
            }
        }
    }
    let Some((_, v, best_objective)) = best else {
        return Err(Error::OptimizationFailed(format!("{traces:?}")));
    };
    Ok(OptimizationResult {
        best_x: project(&v)?,
        best_objective,
        direction: config.direction,
        per_start_trace: traces,
        objective_evaluations: total_evals,
        nelder_mead: params,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{synth_environment, EnvironmentSpec};
    use crate::linalg::c;

    fn system(n_t: usize, n_s: usize, seed: u64) -> ScatteringSystem {
        synth_environment(&EnvironmentSpec::new(n_t, 4, n_s, 0.9, 1.0, seed)).unwrap()
    }

    #[test]
    fn embed_project_round_trip() {
        let mut s = Stream::new(1, Domain::Test, 0);
        let x = sample_random_illumination(3, &mut s);
        let v = embed(&x);
        let back = project(&v).unwrap();
        assert!((back.as_vector() - x.as_vector()).norm() < 1e-15);
        let doubled: Vec<f64> = v.iter().map(|a| 2.0 * a).collect();
        assert!((project(&doubled).unwrap().as_vector() - x.as_vector()).norm() < 1e-15);
        let random = [0.3, -1.2, 4.0, 0.01];
        assert!((project(&random).unwrap().as_vector().norm() - 1.0).abs() < 1e-12);
        assert!(matches!(project(&[0.0, 0.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn single_transmitter_phase_invariance() {
        let sys = system(1, 8, 2);
        let set = build_load_set(&sys, &LoadConstraint::uni(), 50, 1, Domain::LoadSet).unwrap();
        let x1 = Illumination::basis(1, 0);
        let x2 = Illumination::normalized(CVector::from_element(
            1,
            Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3),
        ))
        .unwrap();
        let a = mean_dof_objective(&sys, &x1, &LoadConstraint::uni(), &set).unwrap();
        let b = mean_dof_objective(&sys, &x2, &LoadConstraint::uni(), &set).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn singleton_load_set_is_the_point_value() {
        let sys = system(3, 8, 3);
        let set = build_load_set(&sys, &LoadConstraint::pin(), 1, 2, Domain::LoadSet).unwrap();
        let x = Illumination::normalized(CVector::from_element(3, c(1.0, -0.5))).unwrap();
        let obj = mean_dof_objective(&sys, &x, &LoadConstraint::pin(), &set).unwrap();
        let point = bs_eemdof_point(&sys.blocks(), &set[0], &x).unwrap().m;
        assert_eq!(obj, point);
    }

    #[test]
    fn frozen_objective_matches_reaveraged_points() {
        let sys = system(3, 16, 4);
        let set = build_load_set(&sys, &LoadConstraint::uni(), 1500, 3, Domain::LoadSet).unwrap();
        let mut s = Stream::new(4, Domain::Test, 0);
        let x = sample_random_illumination(3, &mut s);
        let blocks = sys.blocks();
        let oracle = set
            .iter()
            .map(|r| bs_eemdof_point(&blocks, r, &x).unwrap().m)
            .sum::<f64>()
            / set.len() as f64;
        let frozen = FrozenObjective::new(&sys, &set).unwrap().value(&x).unwrap();
        let direct = mean_dof_objective(&sys, &x, &LoadConstraint::uni(), &set).unwrap();
        assert!((frozen - oracle).abs() < 1e-12);
        assert!((direct - oracle).abs() < 1e-12);
    }

    #[test]
    fn frozen_objective_wide_receiver() {
        // N_R > N_S exercises the Gram route on the larger side.
        let sys = synth_environment(&EnvironmentSpec::new(2, 6, 3, 0.8, 1.0, 9)).unwrap();
        let set = build_load_set(&sys, &LoadConstraint::uni(), 20, 3, Domain::LoadSet).unwrap();
        let x = Illumination::basis(2, 1);
        let frozen = FrozenObjective::new(&sys, &set).unwrap().value(&x).unwrap();
        let direct = mean_dof_objective(&sys, &x, &LoadConstraint::uni(), &set).unwrap();
        assert!((frozen - direct).abs() < 1e-12);
    }

    #[test]
    fn membership_checked_for_discrete_constraints() {
        let sys = system(2, 4, 5);
        let set = build_load_set(&sys, &LoadConstraint::uni(), 3, 3, Domain::LoadSet).unwrap();
        let x = Illumination::basis(2, 0);
        assert!(mean_dof_objective(&sys, &x, &LoadConstraint::pin(), &set).is_err());
        assert!(mean_dof_objective(&sys, &x, &LoadConstraint::pin(), &[]).is_err());
    }

    #[test]
    fn global_phase_invariance() {
        let sys = system(3, 16, 6);
        let set = build_load_set(&sys, &LoadConstraint::uni(), 200, 3, Domain::LoadSet).unwrap();
        let frozen = FrozenObjective::new(&sys, &set).unwrap();
        let mut s = Stream::new(6, Domain::Test, 0);
        let x = sample_random_illumination(3, &mut s);
        let base = frozen.value(&x).unwrap();
        for phi in [0.3, 1.7, -2.9] {
            let rotated =
                Illumination::normalized(x.as_vector() * Complex64::from_polar(1.0, phi)).unwrap();
            assert!((frozen.value(&rotated).unwrap() - base).abs() < 1e-10);
        }
    }

    #[test]
    fn max_beats_min_and_is_reproducible() {
        let sys = system(3, 16, 7);
        let mut cfg = OptimizationConfig::new(Direction::Max, 11);
        cfg.n_objective_samples = 200;
        cfg.n_starts = 2;
        let max = optimize_illumination(&sys, &LoadConstraint::uni(), &cfg).unwrap();
        let again = optimize_illumination(&sys, &LoadConstraint::uni(), &cfg).unwrap();
        assert_eq!(max.best_x, again.best_x);
        cfg.direction = Direction::Min;
        let min = optimize_illumination(&sys, &LoadConstraint::uni(), &cfg).unwrap();
        assert!(max.best_objective > min.best_objective);

        let set = build_load_set(&sys, &LoadConstraint::uni(), 200, 11, Domain::LoadSet).unwrap();
        let re = FrozenObjective::new(&sys, &set)
            .unwrap()
            .value(&max.best_x)
            .unwrap();
        assert!((re - max.best_objective).abs() < 1e-12);
        assert!((max.best_x.as_vector().norm() - 1.0).abs() < 1e-12);
        assert_eq!(max.per_start_trace.len(), 2);
    }

    #[test]
    fn single_transmitter_has_no_freedom() {
        let sys = system(1, 8, 8);
        let mut cfg = OptimizationConfig::new(Direction::Max, 3);
        cfg.n_objective_samples = 100;
        let res = optimize_illumination(&sys, &LoadConstraint::uni(), &cfg).unwrap();
        let set = build_load_set(&sys, &LoadConstraint::uni(), 100, 3, Domain::LoadSet).unwrap();
        let mut s = Stream::new(8, Domain::Test, 0);
        let rand_mean = set
            .iter()
            .map(|r| {
                bs_eemdof_point(&sys.blocks(), r, &sample_random_illumination(1, &mut s))
                    .unwrap()
                    .m
            })
            .sum::<f64>()
            / set.len() as f64;
        assert!((res.best_objective - rand_mean).abs() < 1e-9);
    }

    #[test]
    fn redraw_mode_runs() {
        let sys = system(2, 4, 9);
        let mut cfg = OptimizationConfig::new(Direction::Max, 1);
        cfg.n_objective_samples = 20;
        cfg.n_starts = 1;
        cfg.max_iterations = 10;
        cfg.redraw_load_set = true;
        let res = optimize_illumination(&sys, &LoadConstraint::pm(), &cfg).unwrap();
        assert!(res.best_objective >= 1.0);
    }

    #[test]
    fn config_validation() {
        let sys = system(2, 4, 9);
        let mut cfg = OptimizationConfig::new(Direction::Max, 1);
        cfg.n_starts = 0;
        assert!(optimize_illumination(&sys, &LoadConstraint::pm(), &cfg).is_err());
    }
}
