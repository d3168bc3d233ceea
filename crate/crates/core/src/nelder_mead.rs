//! Nelder–Mead simplex minimizer (Lagarias et al. variant).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadParams {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub max_iterations: usize,
    /// Stop once every vertex is within this ∞-norm distance of the best one...
    pub x_tolerance: f64,
    /// ...and every vertex value is within this of the best value.
    pub f_tolerance: f64,
    /// Edge length of the axis-aligned initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMeadParams {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            max_iterations: 2000,
            x_tolerance: 1e-6,
            f_tolerance: 1e-8,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn affine(c: &[f64], d: &[f64], t: f64) -> Vec<f64> {
    // c + t (d − c)
    c.iter().zip(d).map(|(a, b)| a + t * (b - a)).collect()
}

/// Minimize `f` starting from `x0`.
pub fn minimize<F>(mut f: F, x0: &[f64], params: &NelderMeadParams) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evaluations)));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += params.initial_step;
        let fv = eval(&v, &mut evaluations);
        simplex.push((v, fv));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let f_spread = simplex[1..]
            .iter()
            .map(|(_, fv)| (fv - best.1).abs())
            .fold(0.0, f64::max);
        if x_spread <= params.x_tolerance && f_spread <= params.f_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let f_best = simplex[0].1;
        let f_second = simplex[n - 1].1;
        let (worst, f_worst) = simplex[n].clone();

        let xr = affine(&centroid, &worst, -params.reflection);
        let fr = eval(&xr, &mut evaluations);
        if fr < f_best {
            let xe = affine(&centroid, &xr, params.expansion);
            let fe = eval(&xe, &mut evaluations);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < f_second {
            simplex[n] = (xr, fr);
            continue;
        }
        if fr < f_worst {
            let xc = affine(&centroid, &xr, params.contraction);
            let fc = eval(&xc, &mut evaluations);
            if fc <= fr {
                simplex[n] = (xc, fc);
                continue;
            }
        } else {
            let xcc = affine(&centroid, &worst, params.contraction);
            let fcc = eval(&xcc, &mut evaluations);
            if fcc < f_worst {
                simplex[n] = (xcc, fcc);
                continue;
            }
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let v = affine(&anchor, &vertex.0, params.shrink);
            let fv = eval(&v, &mut evaluations);
            *vertex = (v, fv);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        f,
        iterations,
        evaluations,
        converged,
    }
}
