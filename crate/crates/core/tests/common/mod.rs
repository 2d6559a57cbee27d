#![allow(dead_code)]

use std::path::PathBuf;

use gigavol::quad::{integrate, QuadratureConfig};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

const NORM_QUAD: QuadratureConfig = QuadratureConfig {
    rel_tol: 1e-10,
    abs_tol: 1e-13,
    max_subdivisions: 2000,
};

/// ∫₀^∞ f(x) dx via x = scale·e^u over a wide u window.
pub fn integrate_positive<F: FnMut(f64) -> f64>(mut f: F, scale: f64) -> f64 {
    integrate(
        |u| {
            let x = scale * u.exp();
            let v = f(x) * x;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        -200.0,
        200.0,
        64,
        &NORM_QUAD,
    )
    .expect("normalization quadrature")
}

/// ∫ f over the real line, split at `center`.
pub fn integrate_line<F: FnMut(f64) -> f64>(mut f: F, center: f64, scale: f64) -> f64 {
    integrate_positive(|t| f(center + t), scale) + integrate_positive(|t| f(center - t), scale)
}

/// Geometric grid of `n` points on [lo, hi].
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
        .collect()
}

/// Sample mean and sample standard deviation.
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}
