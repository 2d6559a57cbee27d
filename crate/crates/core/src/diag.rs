//! Empirical diagnostics: ECDF and log-log tail fits, theoretical local
//! slopes, spectral noise colour, KS tests, half-widths and histogram tables.

use std::io::Write;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DistError, DistModel};
use crate::product::ProductModel;
use crate::quad::QuadratureConfig;
use crate::specfun::{lgamma_unchecked, ln_normal_sf, ln_reg_gamma_p};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("CDF window [{lo}, {hi}] must satisfy 0 < lo < hi < 1")]
    InvalidWindow { lo: f64, hi: f64 },
    #[error("non-positive value {0} inside the tail window")]
    NonPositiveInWindow(f64),
    #[error("series is constant")]
    ConstantSeries,
    #[error("density is not unimodal around the mode")]
    NotUnimodal,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("io: {0}")]
    Io(String),
}

/// Sorted data paired with F_i = i/(n+1). Ties keep distinct ranks.
pub fn empirical_cdf(data: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let denom = (sorted.len() + 1) as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, x)| (x, (i + 1) as f64 / denom))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailSide {
    Right,
    /// Left tail, fitted on the negated data.
    LeftAbs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub cdf_lo: f64,
    pub cdf_hi: f64,
    pub n_points: usize,
    pub side: TailSide,
}

/// Least squares of y on x; returns (slope, intercept).
fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// OLS of log10(1 − F) on log10 x over the ECDF points with F in
/// [cdf_lo, cdf_hi]. A PDF tail x^(−1−k) gives slope ≈ −k.
pub fn tail_loglog_fit(
    data: &[f64],
    cdf_lo: f64,
    cdf_hi: f64,
    side: TailSide,
) -> Result<TailFit, DiagError> {
    if !(0.0 < cdf_lo && cdf_lo < cdf_hi && cdf_hi < 1.0) {
        return Err(DiagError::InvalidWindow {
            lo: cdf_lo,
            hi: cdf_hi,
        });
    }
    let oriented: Vec<f64> = match side {
        TailSide::Right => data.to_vec(),
        TailSide::LeftAbs => data.iter().map(|v| -v).collect(),
    };
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (x, f) in empirical_cdf(&oriented) {
        if f >= cdf_lo && f <= cdf_hi {
            if !(x > 0.0) {
                return Err(DiagError::NonPositiveInWindow(x));
            }
            lx.push(x.log10());
            ly.push((1.0 - f).log10());
        }
    }
    if lx.len() < 5 {
        return Err(DiagError::TooFewPoints {
            needed: 5,
            got: lx.len(),
        });
    }
    let (slope, intercept) = ols(&lx, &ly);
    Ok(TailFit {
        slope,
        intercept,
        cdf_lo,
        cdf_hi,
        n_points: lx.len(),
        side,
    })
}

/// d log(1 − CDF)/d log x for GIGa(α, β, γ); tends to −αγ as x → ∞.
pub fn local_slope_giga(alpha: f64, beta: f64, gamma: f64, x: f64) -> f64 {
    let u = (beta / x).powf(gamma);
    // 1 − CDF = P(α, u)
    let ln_ratio = gamma.ln() + alpha * u.ln()
        - u
        - lgamma_unchecked(alpha)
        - ln_reg_gamma_p(alpha, u).unwrap_or(f64::NAN);
    -ln_ratio.exp()
}

/// d log(1 − CDF)/d log x for LN(μ, σ); keeps steepening without bound.
pub fn local_slope_ln(mu: f64, sigma: f64, x: f64) -> f64 {
    let t = (x.ln() - mu) / sigma;
    let ln_phi = -0.5 * t * t - crate::specfun::HALF_LN_2PI;
    -(ln_phi - ln_normal_sf(t)).exp() / sigma
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseColor {
    White,
    Brown,
    Other,
}

impl NoiseColor {
    pub fn classify(slope: f64) -> Self {
        if slope > -0.5 && slope < 0.5 {
            NoiseColor::White
        } else if slope > -2.5 && slope < -1.5 {
            NoiseColor::Brown
        } else {
            NoiseColor::Other
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFit {
    pub slope: f64,
    pub classification: NoiseColor,
    pub n_freqs: usize,
    /// Which spectrum was fitted; always "power" (|X_k|²).
    pub spectrum: String,
}

/// Power |X_k|² at the positive frequencies k/n, k = 1..⌊n/2⌋.
pub fn power_spectrum(series: &[f64]) -> Vec<(f64, f64)> {
    let n = series.len();
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    (1..=n / 2)
        .map(|k| (k as f64 / n as f64, buf[k].norm_sqr()))
        .collect()
}

/// Log-log least-squares slope of the power spectrum, skipping the two lowest
/// frequencies and the top 10%.
pub fn spectrum_slope(series: &[f64]) -> Result<SpectrumFit, DiagError> {
    if series.len() < 64 {
        return Err(DiagError::TooFewPoints {
            needed: 64,
            got: series.len(),
        });
    }
    let first = series[0];
    if series.iter().all(|v| *v == first) {
        return Err(DiagError::ConstantSeries);
    }
    let spec = power_spectrum(series);
    let keep = spec.len() - spec.len() / 10;
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for &(f, p) in &spec[2..keep] {
        if p > 0.0 {
            lx.push(f.log10());
            ly.push(p.log10());
        }
    }
    if lx.len() < 2 {
        return Err(DiagError::ConstantSeries);
    }
    let (slope, _) = ols(&lx, &ly);
    Ok(SpectrumFit {
        slope,
        classification: NoiseColor::classify(slope),
        n_freqs: lx.len(),
        spectrum: "power".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Kolmogorov distribution tail P(K > λ).
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series, fast for small λ
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=6)
            .map(|k| (c * ((2 * k - 1) as f64).powi(2)).exp())
            .sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// p-value for statistic `d` at effective size `n` (Stephens' correction).
fn ks_p_value(d: f64, n: f64) -> f64 {
    let sn = n.sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

/// One-sample KS test against an arbitrary continuous CDF.
pub fn ks_test_cdf<F: FnMut(f64) -> f64>(data: &[f64], mut cdf: F) -> KsResult {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let d = d.clamp(0.0, 1.0);
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
        n: sorted.len(),
    }
}

/// One-sample KS test of `data` against `model`.
pub fn ks_test(data: &[f64], model: &DistModel) -> KsResult {
    ks_test_cdf(data, |x| model.cdf(x))
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n * m / (n + m)),
        n: x.len() + y.len(),
    }
}

/// Full width at half maximum, by bisection on each side of the mode.
pub fn half_width(model: &DistModel) -> Result<f64, DiagError> {
    let mode = model.mode();
    let peak = model.pdf(mode);
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(DiagError::NotUnimodal);
    }
    let half = 0.5 * peak;
    let below = |x: f64| model.pdf(x) < half;
    let scale = match model.mean_var() {
        Ok((_, v)) if v.is_finite() && v > 0.0 => v.sqrt(),
        _ => mode.abs().max(1.0),
    };
    // left edge
    let mut lo_out = if model.family().positive_support() {
        0.0
    } else {
        mode - scale
    };
    if model.family().positive_support() {
        if !below(lo_out.max(f64::MIN_POSITIVE)) && mode <= 0.0 {
            return Err(DiagError::NotUnimodal);
        }
    } else {
        let mut step = scale;
        while !below(lo_out) {
            step *= 2.0;
            lo_out = mode - step;
            if !lo_out.is_finite() {
                return Err(DiagError::NotUnimodal);
            }
        }
    }
    let mut hi_out = mode + scale;
    let mut step = scale;
    while !below(hi_out) {
        step *= 2.0;
        hi_out = mode + step;
        if !hi_out.is_finite() {
            return Err(DiagError::NotUnimodal);
        }
    }
    let edge = |mut inside: f64, mut outside: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if below(mid) {
                outside = mid;
            } else {
                inside = mid;
            }
        }
        0.5 * (inside + outside)
    };
    let left = edge(mode, lo_out);
    let right = edge(mode, hi_out);
    let width = right - left;
    for k in 1..64 {
        let x = left + width * k as f64 / 64.0;
        if model.pdf(x) < half * (1.0 - 1e-9) {
            return Err(DiagError::NotUnimodal);
        }
    }
    Ok(width)
}

/// Grid on which scaling-profile spreads are measured.
pub const SCALING_GRID: (f64, f64, usize) = (0.005, 5.0, 1000);

/// Sup over the grid of max − min of the unit-mean GIGa densities with
/// γ = locus_c/η and α = η/γ across `eta_list`.
pub fn giga_scaling_profile(eta_list: &[f64], locus_c: f64) -> Result<f64, DiagError> {
    if eta_list.iter().any(|e| !(*e > 1.0)) || !(locus_c > 0.0) {
        return Err(DiagError::InvalidArgument(
            "eta must exceed 1 and locus_c be positive",
        ));
    }
    let models = eta_list
        .iter()
        .map(|&eta| {
            let gamma = locus_c / eta;
            DistModel::giga(eta / gamma, 1.0, gamma)?.scaled_to_unit_mean()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (lo, hi, n) = SCALING_GRID;
    let mut spread: f64 = 0.0;
    for k in 0..n {
        let x = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
        for m in &models {
            let p = m.pdf(x);
            mn = mn.min(p);
            mx = mx.max(p);
        }
        if !models.is_empty() {
            spread = spread.max(mx - mn);
        }
    }
    Ok(spread)
}

/// A density evaluated over histogram bin centres.
#[derive(Debug, Clone)]
pub enum Overlay {
    Dist(DistModel),
    Product(ProductModel),
}

impl Overlay {
    fn label(&self) -> String {
        match self {
            Overlay::Dist(m) => m.family().name().to_string(),
            Overlay::Product(p) => format!("{}*N", p.base().family().name()),
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        match self {
            Overlay::Dist(m) => m.pdf(x),
            Overlay::Product(p) => p.pdf(x, &QuadratureConfig::default()).unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub centers: Vec<f64>,
    pub density: Vec<f64>,
    pub overlays: Vec<(String, Vec<f64>)>,
}

/// Density-normalized histogram over [min, max] with overlay densities at
/// the bin centres.
pub fn histogram_export(
    data: &[f64],
    bins: usize,
    overlays: &[Overlay],
) -> Result<Histogram, DiagError> {
    if bins < 2 {
        return Err(DiagError::InvalidArgument("bins must be at least 2"));
    }
    if data.is_empty() {
        return Err(DiagError::TooFewPoints { needed: 1, got: 0 });
    }
    let lo = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(DiagError::ConstantSeries);
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| lo + width * k as f64).collect();
    let centers: Vec<f64> = (0..bins).map(|k| lo + width * (k as f64 + 0.5)).collect();
    let mut counts = vec![0usize; bins];
    for &v in data {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let norm = data.len() as f64 * width;
    let density = counts.iter().map(|&c| c as f64 / norm).collect();
    let overlays = overlays
        .iter()
        .map(|o| (o.label(), centers.iter().map(|&x| o.pdf(x)).collect()))
        .collect();
    Ok(Histogram {
        edges,
        centers,
        density,
        overlays,
    })
}

impl Histogram {
    /// CSV with columns x, density and one column per overlay.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DiagError> {
        let mut header = vec!["x".to_string(), "density".to_string()];
        header.extend(self.overlays.iter().map(|(name, _)| name.clone()));
        let rows = (0..self.centers.len()).map(|k| {
            let mut row = vec![self.centers[k], self.density[k]];
            row.extend(self.overlays.iter().map(|(_, v)| v[k]));
            row
        });
        write_table_csv(out, &header, rows)
    }
}

/// Writes a header and numeric rows as CSV.
pub fn write_table_csv<W, S, I>(out: W, header: &[S], rows: I) -> Result<(), DiagError>
where
    W: Write,
    S: AsRef<str>,
    I: IntoIterator<Item = Vec<f64>>,
{
    let io = |e: csv::Error| DiagError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header.iter().map(|h| h.as_ref()))
        .map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v}")))
            .map_err(io)?;
    }
    w.flush().map_err(|e| DiagError::Io(e.to_string()))
}

/// Plot table of log10 x against log10(1 − F) for one tail.
pub fn tail_table(data: &[f64], side: TailSide) -> Vec<Vec<f64>> {
    let oriented: Vec<f64> = match side {
        TailSide::Right => data.to_vec(),
        TailSide::LeftAbs => data.iter().map(|v| -v).collect(),
    };
    empirical_cdf(&oriented)
        .into_iter()
        .filter(|(x, _)| *x > 0.0)
        .map(|(x, f)| vec![x.log10(), (1.0 - f).log10()])
        .collect()
}
