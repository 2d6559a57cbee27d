//! Derivative-free minimization and one-dimensional root bracketing.

use serde::{Deserialize, Serialize};

use super::FitError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexConfig {
    pub max_iterations: usize,
    pub x_tol: f64,
    pub f_tol: f64,
    /// Edge length of the initial simplex, in the optimizer's coordinates.
    pub initial_step: f64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            x_tol: 1e-6,
            f_tol: 1e-9,
            initial_step: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Nelder–Mead minimization of `objective` starting from `x0`.
///
/// Non-finite objective values are treated as +∞ so the simplex backs away
/// from invalid regions. Converges once the simplex diameter is below `x_tol`
/// and the spread of vertex values is below `f_tol`; both are required since
/// a simplex straddling the minimum symmetrically has zero spread. After
/// `max_iterations` it stops with `converged` false and returns the best
/// vertex.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut objective: F,
    x0: &[f64],
    cfg: &SimplexConfig,
) -> Result<SimplexOutcome, FitError> {
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let f0 = eval(x0);
    if !f0.is_finite() {
        return Err(FitError::NonFiniteStart);
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += cfg.initial_step;
        let f = eval(&x);
        simplex.push((x, f));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&best.0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let spread = simplex[n].1 - simplex[0].1;
        if diameter < cfg.x_tol && spread < cfg.f_tol {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(REFLECT);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(REFLECT * EXPAND);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc, accept) = if fr < worst.1 {
            let xc = along(REFLECT * CONTRACT);
            let fc = eval(&xc);
            (xc, fc, fc <= fr)
        } else {
            let xc = along(-CONTRACT);
            let fc = eval(&xc);
            (xc, fc, fc < worst.1)
        };
        if accept {
            simplex[n] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = anchor
                .iter()
                .zip(&vertex.0)
                .map(|(a, v)| a + SHRINK * (v - a))
                .collect();
            let f = eval(&x);
            *vertex = (x, f);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Ok(SimplexOutcome {
        x,
        f,
        iterations,
        converged,
    })
}

/// Root of `f` on `[lo, hi]` by bisection; the bracket is halved until its
/// width is at most `tol` and the midpoint is returned.
pub fn bisection<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64, FitError> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo * fhi < 0.0) {
        return Err(FitError::NoSignChange { lo, hi });
    }
    while (hi - lo).abs() > tol {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
