//! Maximum-likelihood fitting.
//!
//! Positive-data fits use the profile equations of the generalized gamma
//! likelihood: for a trial exponent γ the shape α and scale β follow in closed
//! form, leaving a single scalar equation in γ that is solved by bisection.
//! Product fits maximize the quadrature likelihood with a simplex.

mod optim;
mod product_fit;
mod table;

pub use optim::{bisection, nelder_mead, SimplexConfig, SimplexOutcome};
pub use product_fit::{fit_product, fit_product_from, fit_student_direct, BaseKind};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DistError, DistModel};
use crate::product::{ProductError, ProductModel};
use crate::quad::QuadratureConfig;
use crate::specfun::digamma_unchecked;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {needed} data points, got {got}")]
    TooFewData { needed: usize, got: usize },
    #[error("datum {index} = {value} is outside the support")]
    OutOfSupport { index: usize, value: f64 },
    #[error("degenerate data: {0}")]
    Degenerate(&'static str),
    #[error("no root of the likelihood equations in the searched range")]
    NoRoot,
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("objective is not finite at the starting point")]
    NonFiniteStart,
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Product(#[from] ProductError),
}

/// A fitted model of either kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FittedModel {
    Product(ProductModel),
    Dist(DistModel),
}

impl From<DistModel> for FittedModel {
    fn from(m: DistModel) -> Self {
        FittedModel::Dist(m)
    }
}

impl From<ProductModel> for FittedModel {
    fn from(m: ProductModel) -> Self {
        FittedModel::Product(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Display label, e.g. "GIGa" or "GIGa(gamma=2)*N".
    pub family: String,
    pub model: FittedModel,
    pub mean_loglik: f64,
    pub rel_loglik: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    /// Sets `rel_loglik` to the difference from `baseline_mean_loglik`.
    pub fn relative_to(mut self, baseline_mean_loglik: f64) -> Self {
        self.rel_loglik = Some(self.mean_loglik - baseline_mean_loglik);
        self
    }
}

/// Anything with a log-density usable as a likelihood.
pub trait LogDensity {
    fn log_density(&self, x: f64) -> Result<f64, FitError>;
}

impl LogDensity for DistModel {
    fn log_density(&self, x: f64) -> Result<f64, FitError> {
        Ok(self.log_pdf(x))
    }
}

/// Quadrature tolerance used for exact product likelihoods.
pub(crate) const LIKELIHOOD_QUAD: QuadratureConfig = QuadratureConfig {
    rel_tol: 1e-11,
    abs_tol: 1e-14,
    max_subdivisions: 400,
};

impl LogDensity for ProductModel {
    fn log_density(&self, x: f64) -> Result<f64, FitError> {
        Ok(self.log_pdf(x, &LIKELIHOOD_QUAD)?)
    }
}

impl LogDensity for FittedModel {
    fn log_density(&self, x: f64) -> Result<f64, FitError> {
        match self {
            FittedModel::Dist(m) => m.log_density(x),
            FittedModel::Product(m) => m.log_density(x),
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

pub(crate) fn compensated_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    let mut n = 0usize;
    for v in values {
        acc.add(v);
        n += 1;
    }
    acc.total() / n as f64
}

/// (1/n) Σ log f(xᵢ). A datum with zero density makes the result −∞.
pub fn mean_loglik<M: LogDensity + ?Sized>(model: &M, data: &[f64]) -> Result<f64, FitError> {
    if data.is_empty() {
        return Err(FitError::TooFewData { needed: 1, got: 0 });
    }
    let mut acc = CompensatedSum::default();
    for &x in data {
        let l = model.log_density(x)?;
        if l == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        acc.add(l);
    }
    Ok(acc.total() / data.len() as f64)
}

fn require_len(data: &[f64], needed: usize) -> Result<(), FitError> {
    if data.len() < needed {
        Err(FitError::TooFewData {
            needed,
            got: data.len(),
        })
    } else {
        Ok(())
    }
}

/// Logs of strictly positive data.
fn positive_logs(data: &[f64]) -> Result<Vec<f64>, FitError> {
    data.iter()
        .enumerate()
        .map(|(index, &value)| {
            if value > 0.0 && value.is_finite() {
                Ok(value.ln())
            } else {
                Err(FitError::OutOfSupport { index, value })
            }
        })
        .collect()
}

/// Closed-form log-normal fit (population variance of ln x).
pub fn fit_ln(data: &[f64]) -> Result<FitResult, FitError> {
    require_len(data, 2)?;
    let logs = positive_logs(data)?;
    let mu = compensated_mean(logs.iter().copied());
    let var = compensated_mean(logs.iter().map(|l| (l - mu) * (l - mu)));
    if !(var > 0.0) {
        return Err(FitError::Degenerate("zero variance of ln x"));
    }
    let model = DistModel::ln(mu, var.sqrt())?;
    Ok(FitResult {
        family: "LN".into(),
        model: model.into(),
        mean_loglik: mean_loglik(&model, data)?,
        rel_loglik: None,
        converged: true,
        iterations: 0,
    })
}

/// Centered logs of the data, with the removed mean. Fitting works on
/// ln x − mean(ln x) so that powers x^γ stay in range for |γ| up to 8.
struct LogSample {
    centered: Vec<f64>,
    shift: f64,
}

impl LogSample {
    fn new(data: &[f64], needed: usize) -> Result<Self, FitError> {
        require_len(data, needed)?;
        let logs = positive_logs(data)?;
        let shift = compensated_mean(logs.iter().copied());
        let centered: Vec<f64> = logs.iter().map(|l| l - shift).collect();
        let spread = centered.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if !(spread > 0.0) {
            return Err(FitError::Degenerate("all data equal"));
        }
        Ok(Self { centered, shift })
    }

    /// For signed exponent g, with u = x^g: returns (ln mean(u) − mean(ln u),
    /// mean(u ln u)/mean(u) − mean(ln u)), both in centered units.
    fn moments(&self, g: f64) -> (f64, f64) {
        let top = self
            .centered
            .iter()
            .fold(f64::NEG_INFINITY, |m, &c| m.max(g * c));
        let mut w_sum = CompensatedSum::default();
        let mut wl_sum = CompensatedSum::default();
        let mut l_sum = CompensatedSum::default();
        for &c in &self.centered {
            let l = g * c;
            let w = (l - top).exp();
            w_sum.add(w);
            wl_sum.add(w * l);
            l_sum.add(l);
        }
        let n = self.centered.len() as f64;
        let mean_l = l_sum.total() / n;
        let ln_mean_u = top + (w_sum.total() / n).ln();
        let weighted = wl_sum.total() / w_sum.total();
        (ln_mean_u - mean_l, weighted - mean_l)
    }

    /// α from the second profile equation, or None when it is not positive.
    fn profile_alpha(&self, g: f64) -> Option<f64> {
        let (_, d) = self.moments(g);
        let alpha = 1.0 / d;
        (alpha > 0.0 && alpha.is_finite()).then_some(alpha)
    }

    /// First profile equation evaluated at α(γ).
    fn profile_residual(&self, g: f64) -> f64 {
        let (c, d) = self.moments(g);
        let alpha = 1.0 / d;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return f64::NAN;
        }
        -c + alpha.ln() - digamma_unchecked(alpha)
    }

    /// Model for signed exponent g and shape α, with β from β^γ = mean(u)/α.
    fn model(&self, g: f64, alpha: f64) -> Result<DistModel, FitError> {
        let (c, _) = self.moments(g);
        // ln mean(u) in original units = c + mean(ln u) = c + g·shift
        let ln_beta = (c + g * self.shift - alpha.ln()) / g;
        let beta = ln_beta.exp();
        Ok(if g < 0.0 {
            DistModel::giga(alpha, beta, -g)?
        } else {
            DistModel::gga(alpha, beta, g)?
        })
    }
}

/// Search settings for the free-exponent fit: |γ| ranges over
/// `[min_abs, max_abs]` for both signs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSearch {
    pub min_abs: f64,
    pub max_abs: f64,
    pub subintervals: usize,
    pub tol: f64,
}

impl Default for GammaSearch {
    fn default() -> Self {
        Self {
            min_abs: 0.05,
            max_abs: 8.0,
            subintervals: 64,
            tol: 1e-10,
        }
    }
}

fn family_label(model: &DistModel) -> String {
    model.family().name().to_string()
}

/// Free-exponent fit over the GGa (γ > 0) and GIGa (γ < 0) branches.
///
/// Each branch is scanned on `subintervals` equal pieces for sign changes of
/// the profile equation; every bracketed root is refined by bisection and the
/// root with the highest likelihood wins.
pub fn fit_gga_giga(data: &[f64], search: &GammaSearch) -> Result<FitResult, FitError> {
    let sample = LogSample::new(data, 10)?;
    let mut best: Option<(DistModel, f64)> = None;
    let mut iterations = 0;
    for sign in [-1.0, 1.0] {
        let step = (search.max_abs - search.min_abs) / search.subintervals as f64;
        let grid: Vec<f64> = (0..=search.subintervals)
            .map(|k| sign * (search.min_abs + k as f64 * step))
            .collect();
        let values: Vec<f64> = grid.iter().map(|&g| sample.profile_residual(g)).collect();
        for k in 0..search.subintervals {
            let (h0, h1) = (values[k], values[k + 1]);
            if !(h0.is_finite() && h1.is_finite()) || h0.signum() == h1.signum() {
                continue;
            }
            let mut evals = 0;
            let g = bisection(
                |g| {
                    evals += 1;
                    sample.profile_residual(g)
                },
                grid[k],
                grid[k + 1],
                search.tol,
            )?;
            iterations += evals;
            let Some(alpha) = sample.profile_alpha(g) else {
                continue;
            };
            let model = sample.model(g, alpha)?;
            let ll = mean_loglik(&model, data)?;
            if ll.is_finite() && best.as_ref().is_none_or(|(_, b)| ll > *b) {
                best = Some((model, ll));
            }
        }
    }
    let (model, ll) = best.ok_or(FitError::NoRoot)?;
    Ok(FitResult {
        family: family_label(&model),
        model: model.into(),
        mean_loglik: ll,
        rel_loglik: None,
        converged: true,
        iterations,
    })
}

/// Fit with the exponent held at `gamma`; `inverse` selects the GIGa branch.
/// γ = 1 gives IGa / Ga, which are reported under those kinds.
pub fn fit_fixed_gamma(data: &[f64], gamma: f64, inverse: bool) -> Result<FitResult, FitError> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(FitError::Dist(DistError::InvalidParameter {
            family: if inverse { "GIGa" } else { "GGa" },
            name: "gamma",
            value: gamma,
        }));
    }
    let sample = LogSample::new(data, 10)?;
    let g = if inverse { -gamma } else { gamma };
    let (c, _) = sample.moments(g);
    // ln α − ψ(α) = c, decreasing from +∞ to 0 in α
    if !(c > 0.0) {
        return Err(FitError::Degenerate("ln mean(x^γ) equals mean(ln x^γ)"));
    }
    let eq = |ln_a: f64| {
        let a = ln_a.exp();
        a.ln() - digamma_unchecked(a) - c
    };
    let (mut lo, mut hi) = (-2.0, 2.0);
    while eq(lo) < 0.0 {
        lo -= 4.0;
    }
    while eq(hi) > 0.0 {
        hi += 4.0;
    }
    let mut iterations = 0;
    let ln_alpha = bisection(
        |x| {
            iterations += 1;
            eq(x)
        },
        lo,
        hi,
        1e-14,
    )?;
    let alpha = ln_alpha.exp();
    let fitted = sample.model(g, alpha)?;
    let model = if gamma == 1.0 {
        let beta = match *fitted.params() {
            crate::dist::Params::Giga { beta, .. } | crate::dist::Params::Gga { beta, .. } => beta,
            _ => unreachable!(),
        };
        if inverse {
            DistModel::iga(alpha, beta)?
        } else {
            DistModel::ga(alpha, beta)?
        }
    } else {
        fitted
    };
    Ok(FitResult {
        family: family_label(&model),
        model: model.into(),
        mean_loglik: mean_loglik(&model, data)?,
        rel_loglik: None,
        converged: true,
        iterations,
    })
}

/// Residuals of the two profile equations at (α, β, γ) with signed γ
/// (negative for GIGa): [mean(ln u) − ln mean(u) + ln α − ψ(α),
/// 1/α − (mean(u ln u)/mean(u) − mean(ln u))] plus the scale equation
/// ln β^γ − ln(mean(u)/α). All vanish at a profile-likelihood stationary point.
pub fn stationarity_residuals(
    data: &[f64],
    alpha: f64,
    beta: f64,
    signed_gamma: f64,
) -> Result<[f64; 3], FitError> {
    let sample = LogSample::new(data, 2)?;
    let (c, d) = sample.moments(signed_gamma);
    let r1 = -c + alpha.ln() - digamma_unchecked(alpha);
    let r2 = 1.0 / alpha - d;
    let ln_mean_u = c + signed_gamma * sample.shift;
    let r3 = signed_gamma * beta.ln() - (ln_mean_u - alpha.ln());
    Ok([r1, r2, r3])
}

/// Detrended unit-variance log-returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessed {
    pub returns: Vec<f64>,
    /// Mean raw log-return that was removed.
    pub mean: f64,
    /// Population standard deviation that was divided out.
    pub stdev: f64,
}

/// Log-differences of `levels`, minus their mean, divided by their
/// population standard deviation.
pub fn preprocess_returns(levels: &[f64]) -> Result<Preprocessed, FitError> {
    require_len(levels, 3)?;
    let logs = positive_logs(levels)?;
    let raw: Vec<f64> = logs.windows(2).map(|w| w[1] - w[0]).collect();
    standardize(&raw)
}

/// Centers and scales already-differenced returns.
pub fn standardize(raw: &[f64]) -> Result<Preprocessed, FitError> {
    require_len(raw, 2)?;
    let mean = compensated_mean(raw.iter().copied());
    let var = compensated_mean(raw.iter().map(|r| (r - mean) * (r - mean)));
    if !(var > 0.0) {
        return Err(FitError::Degenerate("zero variance of returns"));
    }
    let stdev = var.sqrt();
    Ok(Preprocessed {
        returns: raw.iter().map(|r| (r - mean) / stdev).collect(),
        mean,
        stdev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Params;
    use std::f64::consts::E;

    fn params3(m: &FittedModel) -> (f64, f64, f64) {
        let FittedModel::Dist(d) = m else { panic!() };
        match *d.params() {
            Params::Giga { alpha, beta, gamma } | Params::Gga { alpha, beta, gamma } => {
                (alpha, beta, gamma)
            }
            Params::Iga { alpha, beta } | Params::Ga { alpha, beta } => (alpha, beta, 1.0),
            _ => panic!(),
        }
    }

    #[test]
    fn mean_loglik_examples() {
        let ln = DistModel::ln(0.0, 1.0).unwrap();
        let v = mean_loglik(&ln, &[1.0, 1.0, 1.0]).unwrap();
        assert!((v + 0.918_938_533_204_672_8).abs() < 1e-14);
        let iga = DistModel::iga(2.0, 1.0).unwrap();
        assert!((mean_loglik(&iga, &[1.0]).unwrap() + 1.0).abs() < 1e-14);
        assert_eq!(mean_loglik(&iga, &[1.0, -2.0]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut acc = CompensatedSum::default();
        for v in [1e16, 1.0, -1e16] {
            acc.add(v);
        }
        assert_eq!(acc.total(), 1.0);
    }

    #[test]
    fn fit_ln_examples() {
        let r = fit_ln(&[1.0, E * E]).unwrap();
        let FittedModel::Dist(m) = r.model else {
            panic!()
        };
        let Params::Ln { mu, sigma } = *m.params() else {
            panic!()
        };
        assert!((mu - 1.0).abs() < 1e-14 && (sigma - 1.0).abs() < 1e-14);
        assert!(matches!(fit_ln(&[E; 4]), Err(FitError::Degenerate(_))));
        assert!(matches!(
            fit_ln(&[1.0, 0.0]),
            Err(FitError::OutOfSupport { index: 1, .. })
        ));
    }

    #[test]
    fn free_gamma_recovers_iga() {
        let data = DistModel::iga(3.0, 2.0).unwrap().sample(50_000, 1);
        let r = fit_gga_giga(&data, &GammaSearch::default()).unwrap();
        assert_eq!(r.family, "GIGa");
        let (a, _, g) = params3(&r.model);
        assert!((a * g / 3.0 - 1.0).abs() < 0.1, "a {a} g {g}");
        assert!((g - 1.0).abs() < 0.15, "g {g}");
    }

    #[test]
    fn free_gamma_recovers_ga() {
        let data = DistModel::ga(2.0, 1.0).unwrap().sample(50_000, 2);
        let r = fit_gga_giga(&data, &GammaSearch::default()).unwrap();
        assert_eq!(r.family, "GGa");
        let (a, _, g) = params3(&r.model);
        assert!((g - 1.0).abs() < 0.15, "g {g}");
        assert!((a / 2.0 - 1.0).abs() < 0.1, "a {a}");
    }

    #[test]
    fn constant_data_is_degenerate() {
        assert!(matches!(
            fit_gga_giga(&[3.0; 20], &GammaSearch::default()),
            Err(FitError::Degenerate(_))
        ));
    }

    #[test]
    fn fixed_gamma_consistent_with_free_fit() {
        let data = DistModel::giga(1.2, 3.0, 2.5).unwrap().sample(5_000, 3);
        let free = fit_gga_giga(&data, &GammaSearch::default()).unwrap();
        let (a, b, g) = params3(&free.model);
        let fixed = fit_fixed_gamma(&data, g, true).unwrap();
        let (a2, b2, _) = params3(&fixed.model);
        assert!(
            (a - a2).abs() < 1e-6 && (b - b2).abs() < 1e-6,
            "{a} {a2} {b} {b2}"
        );
        let res = stationarity_residuals(&data, a, b, -g).unwrap();
        assert!(res.iter().all(|r| r.abs() < 1e-8), "{res:?}");
    }

    #[test]
    fn fixed_gamma_recovers_iga_and_ga() {
        let data = DistModel::iga(7.22, 127.0).unwrap().sample(50_000, 4);
        let r = fit_fixed_gamma(&data, 1.0, true).unwrap();
        assert_eq!(r.family, "IGa");
        let (a, _, _) = params3(&r.model);
        assert!((a / 7.22 - 1.0).abs() < 0.1, "{a}");
        let data = DistModel::ga(2.0, 1.0).unwrap().sample(50_000, 5);
        let r = fit_fixed_gamma(&data, 1.0, false).unwrap();
        assert_eq!(r.family, "Ga");
        let (a, _, _) = params3(&r.model);
        assert!((a / 2.0 - 1.0).abs() < 0.1, "{a}");
    }

    #[test]
    fn bisection_replays_fixed_gamma_internals() {
        let data = DistModel::ga(2.0, 1.0).unwrap().sample(2_000, 6);
        let fit = fit_fixed_gamma(&data, 1.0, false).unwrap();
        let (a_fit, _, _) = params3(&fit.model);
        let n = data.len() as f64;
        let mean_ln = data.iter().map(|x| x.ln()).sum::<f64>() / n;
        let ln_mean = (data.iter().sum::<f64>() / n).ln();
        let c = mean_ln - ln_mean;
        let a = bisection(|a| digamma_unchecked(a) - a.ln() - c, 0.1, 50.0, 1e-12).unwrap();
        assert!((a - a_fit).abs() < 1e-8, "{a} {a_fit}");
    }

    #[test]
    fn preprocess_example() {
        let p = preprocess_returns(&[1.0, E, E]).unwrap();
        assert!((p.returns[0] - 1.0).abs() < 1e-12 && (p.returns[1] + 1.0).abs() < 1e-12);
        assert!((p.mean - 0.5).abs() < 1e-15 && (p.stdev - 0.5).abs() < 1e-15);
        assert!(preprocess_returns(&[1.0, -1.0, 2.0]).is_err());
        assert!(matches!(
            preprocess_returns(&[2.0; 5]),
            Err(FitError::Degenerate(_))
        ));
    }

    #[test]
    fn fit_result_json_round_trip() {
        let r = fit_ln(&[1.0, 2.0, 3.0]).unwrap().relative_to(-1.25);
        let s = serde_json::to_string(&r).unwrap();
        let back: FitResult = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["model"]["kind"], "LN");
    }
}
