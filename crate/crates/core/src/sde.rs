//! Volatility SDEs: Euler–Maruyama simulation, closed-form stationary laws,
//! the generic Fokker–Planck stationary density and the ensemble relaxation
//! experiment.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::ks_test;
use crate::dist::{DistError, DistModel};
use crate::rng::{standard_normal, stream_rng, StreamRng};
use crate::specfun::{digamma_unchecked, lgamma_unchecked, trigamma_unchecked};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdeError {
    #[error("parameter {name} = {value} must be positive and finite")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("starting value {0} must be positive for this process")]
    NonPositiveStart(f64),
    #[error("{0} has no stationary law for these parameters")]
    NoStationaryLaw(&'static str),
    #[error("grid must be strictly increasing with positive diffusion")]
    InvalidGrid,
    #[error("stationary density is not normalizable on the grid")]
    NonIntegrable,
    #[error("no relaxation within the horizon {horizon}; last p = {last_p}")]
    HorizonExceeded {
        horizon: f64,
        last_p: f64,
        trace: Vec<(f64, f64)>,
    },
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("io: {0}")]
    Io(String),
}

fn check(name: &'static str, value: f64) -> Result<(), SdeError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(SdeError::InvalidParameter { name, value })
    }
}

/// The supported processes. `sigma` is the noise amplitude Σ (or σ for the
/// OU/LN kinds); `theta` is the level parameter θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SdeSpec {
    /// dσ = J(θσ^(1−γ) − σ)dt + Σσ dW
    GigaVol {
        j: f64,
        theta: f64,
        sigma: f64,
        gamma: f64,
    },
    /// dV = J̃(V̄ − V)dt + Σ̃V dW
    VarianceIga {
        j_tilde: f64,
        v_bar: f64,
        sigma_tilde: f64,
    },
    /// dV = J(1 − V/V̄)dt + φ√V dW
    HestonVariance { j: f64, v_bar: f64, phi: f64 },
    /// dσ = J(σ − θσ^(1+γ))dt + Σσ dW
    GgaVolA {
        j: f64,
        theta: f64,
        sigma: f64,
        gamma: f64,
    },
    /// dσ = J(1 − θσ^γ)dt + Σ√σ dW
    GgaVolB {
        j: f64,
        theta: f64,
        sigma: f64,
        gamma: f64,
    },
    /// dσ = J(σ⁻¹ − θσ^(γ−1))dt + Σ dW
    GgaVolC {
        j: f64,
        theta: f64,
        sigma: f64,
        gamma: f64,
    },
    /// dx = θ(μ − x)dt + σ dW
    OuLog { theta: f64, mu: f64, sigma: f64 },
    /// dX = θX(μ − ln X)dt + ½σ²X dt + σX dW
    LnVol { theta: f64, mu: f64, sigma: f64 },
}

impl SdeSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SdeSpec::GigaVol { .. } => "GigaVol",
            SdeSpec::VarianceIga { .. } => "VarianceIGa",
            SdeSpec::HestonVariance { .. } => "HestonVariance",
            SdeSpec::GgaVolA { .. } => "GgaVolA",
            SdeSpec::GgaVolB { .. } => "GgaVolB",
            SdeSpec::GgaVolC { .. } => "GgaVolC",
            SdeSpec::OuLog { .. } => "OuLog",
            SdeSpec::LnVol { .. } => "LnVol",
        }
    }

    pub fn validate(&self) -> Result<(), SdeError> {
        match *self {
            SdeSpec::GigaVol {
                j,
                theta,
                sigma,
                gamma,
            }
            | SdeSpec::GgaVolA {
                j,
                theta,
                sigma,
                gamma,
            }
            | SdeSpec::GgaVolB {
                j,
                theta,
                sigma,
                gamma,
            }
            | SdeSpec::GgaVolC {
                j,
                theta,
                sigma,
                gamma,
            } => {
                check("J", j)?;
                check("theta", theta)?;
                check("Sigma", sigma)?;
                check("gamma", gamma)
            }
            SdeSpec::VarianceIga {
                j_tilde,
                v_bar,
                sigma_tilde,
            } => {
                check("J_tilde", j_tilde)?;
                check("V_bar", v_bar)?;
                check("Sigma_tilde", sigma_tilde)
            }
            SdeSpec::HestonVariance { j, v_bar, phi } => {
                check("J", j)?;
                check("V_bar", v_bar)?;
                check("phi", phi)
            }
            SdeSpec::OuLog { theta, mu, sigma } | SdeSpec::LnVol { theta, mu, sigma } => {
                check("theta", theta)?;
                if !mu.is_finite() {
                    return Err(SdeError::InvalidParameter {
                        name: "mu",
                        value: mu,
                    });
                }
                check("sigma", sigma)
            }
        }
    }

    pub fn positive_support(&self) -> bool {
        !matches!(self, SdeSpec::OuLog { .. })
    }

    pub fn drift(&self, x: f64) -> f64 {
        match *self {
            SdeSpec::GigaVol {
                j, theta, gamma, ..
            } => j * (theta * x.powf(1.0 - gamma) - x),
            SdeSpec::VarianceIga { j_tilde, v_bar, .. } => j_tilde * (v_bar - x),
            SdeSpec::HestonVariance { j, v_bar, .. } => j * (1.0 - x / v_bar),
            SdeSpec::GgaVolA {
                j, theta, gamma, ..
            } => j * (x - theta * x.powf(1.0 + gamma)),
            SdeSpec::GgaVolB {
                j, theta, gamma, ..
            } => j * (1.0 - theta * x.powf(gamma)),
            SdeSpec::GgaVolC {
                j, theta, gamma, ..
            } => j * (1.0 / x - theta * x.powf(gamma - 1.0)),
            SdeSpec::OuLog { theta, mu, .. } => theta * (mu - x),
            SdeSpec::LnVol { theta, mu, sigma } => {
                theta * x * (mu - x.ln()) + 0.5 * sigma * sigma * x
            }
        }
    }

    pub fn diffusion(&self, x: f64) -> f64 {
        match *self {
            SdeSpec::GigaVol { sigma, .. } | SdeSpec::GgaVolA { sigma, .. } => sigma * x,
            SdeSpec::VarianceIga { sigma_tilde, .. } => sigma_tilde * x,
            SdeSpec::HestonVariance { phi, .. } => phi * x.max(0.0).sqrt(),
            SdeSpec::GgaVolB { sigma, .. } => sigma * x.max(0.0).sqrt(),
            SdeSpec::GgaVolC { sigma, .. } | SdeSpec::OuLog { sigma, .. } => sigma,
            SdeSpec::LnVol { sigma, .. } => sigma * x,
        }
    }

    /// Linearized mean-reversion rate near the stationary level (1/time).
    pub fn relaxation_rate(&self) -> f64 {
        match *self {
            SdeSpec::GigaVol { j, gamma, .. } | SdeSpec::GgaVolA { j, gamma, .. } => j * gamma,
            SdeSpec::VarianceIga { j_tilde, .. } => j_tilde,
            SdeSpec::HestonVariance { j, v_bar, .. } => j / v_bar,
            SdeSpec::GgaVolB {
                j, theta, gamma, ..
            } => j * gamma * theta.powf(1.0 / gamma),
            SdeSpec::GgaVolC {
                j, theta, gamma, ..
            } => j * gamma * theta.powf(2.0 / gamma),
            SdeSpec::OuLog { theta, .. } | SdeSpec::LnVol { theta, .. } => theta,
        }
    }

    /// One Euler–Maruyama step with the positivity guard of the kind.
    ///
    /// Multiplicative-noise kinds clamp a non-positive proposal to 1e-8 of the
    /// current value. Square-root kinds use full truncation: drift and
    /// diffusion see max(x, 0) and the raw state is kept. GgaVolC reflects at
    /// zero, where its drift is singular.
    #[inline]
    fn step(&self, x: f64, dt: f64, sqrt_dt: f64, xi: f64) -> f64 {
        match self {
            SdeSpec::HestonVariance { .. } | SdeSpec::GgaVolB { .. } => {
                let xp = x.max(0.0);
                x + self.drift(xp) * dt + self.diffusion(xp) * sqrt_dt * xi
            }
            SdeSpec::GgaVolC { .. } => {
                (x + self.drift(x) * dt + self.diffusion(x) * sqrt_dt * xi).abs()
            }
            SdeSpec::OuLog { .. } => x + self.drift(x) * dt + self.diffusion(x) * sqrt_dt * xi,
            _ => {
                let next = x + self.drift(x) * dt + self.diffusion(x) * sqrt_dt * xi;
                if next > 0.0 {
                    next
                } else {
                    x * 1e-8
                }
            }
        }
    }

    /// Observable value of the state (truncated kinds report max(x, 0)).
    #[inline]
    fn observe(&self, x: f64) -> f64 {
        match self {
            SdeSpec::HestonVariance { .. } | SdeSpec::GgaVolB { .. } => x.max(0.0),
            _ => x,
        }
    }

    /// Closed-form stationary law.
    pub fn stationary(&self) -> Result<DistModel, SdeError> {
        self.validate()?;
        let name = self.name();
        Ok(match *self {
            SdeSpec::GigaVol {
                j,
                theta,
                sigma,
                gamma,
            } => {
                let k = 2.0 * j / (sigma * sigma);
                DistModel::giga(
                    (1.0 + k) / gamma,
                    (theta * k / gamma).powf(1.0 / gamma),
                    gamma,
                )?
            }
            SdeSpec::VarianceIga {
                j_tilde,
                v_bar,
                sigma_tilde,
            } => {
                let k = 2.0 * j_tilde / (sigma_tilde * sigma_tilde);
                DistModel::iga(1.0 + k, v_bar * k)?
            }
            SdeSpec::HestonVariance { j, v_bar, phi } => {
                let k = 2.0 * j / (phi * phi);
                DistModel::ga(k, v_bar / k)?
            }
            SdeSpec::GgaVolA {
                j,
                theta,
                sigma,
                gamma,
            }
            | SdeSpec::GgaVolB {
                j,
                theta,
                sigma,
                gamma,
            }
            | SdeSpec::GgaVolC {
                j,
                theta,
                sigma,
                gamma,
            } => {
                let k = 2.0 * j / (sigma * sigma);
                let shape_k = match self {
                    SdeSpec::GgaVolA { .. } => k - 1.0,
                    SdeSpec::GgaVolB { .. } => k,
                    _ => k + 1.0,
                };
                if shape_k <= 0.0 {
                    return Err(SdeError::NoStationaryLaw(name));
                }
                DistModel::gga(
                    shape_k / gamma,
                    (gamma / (theta * k)).powf(1.0 / gamma),
                    gamma,
                )?
            }
            SdeSpec::OuLog { theta, mu, sigma } => {
                DistModel::normal(mu, sigma / (2.0 * theta).sqrt())?
            }
            SdeSpec::LnVol { theta, mu, sigma } => DistModel::ln(mu, sigma / (2.0 * theta).sqrt())?,
        })
    }
}

pub fn stationary_of(spec: &SdeSpec) -> Result<DistModel, SdeError> {
    spec.stationary()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Scheme {
    #[default]
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub steps: usize,
    pub x0: f64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl SimConfig {
    /// True when dt·rate exceeds 0.1, where the Euler scheme is coarse.
    pub fn is_coarse_for(&self, spec: &SdeSpec) -> bool {
        self.dt * spec.relaxation_rate() > 0.1
    }
}

fn check_start(spec: &SdeSpec, x0: f64) -> Result<(), SdeError> {
    if !x0.is_finite() || (spec.positive_support() && x0 <= 0.0) {
        return Err(SdeError::NonPositiveStart(x0));
    }
    Ok(())
}

/// Simulates one path on stream 0 of `cfg.seed`. Returns the `steps` values
/// at t = dt, 2dt, …, steps·dt (the start value is not included).
pub fn simulate(spec: &SdeSpec, cfg: &SimConfig) -> Result<Vec<f64>, SdeError> {
    simulate_stream(spec, cfg, 0)
}

/// As [`simulate`], on an explicit substream of the seed.
pub fn simulate_stream(spec: &SdeSpec, cfg: &SimConfig, stream: u64) -> Result<Vec<f64>, SdeError> {
    spec.validate()?;
    check("dt", cfg.dt)?;
    check_start(spec, cfg.x0)?;
    let mut rng = stream_rng(cfg.seed, stream);
    let sqrt_dt = cfg.dt.sqrt();
    let mut x = cfg.x0;
    let mut path = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        x = spec.step(x, cfg.dt, sqrt_dt, standard_normal(&mut rng));
        path.push(spec.observe(x));
    }
    Ok(path)
}

/// Burn-in and thinning used for stationary sampling, in multiples of
/// 1/relaxation_rate.
pub const BURN_IN_RATES: f64 = 10.0;
pub const THIN_RATES: f64 = 5.0;

/// `n` approximately independent draws from the simulated steady state: one
/// path started at the stationary mean (or median for laws without a mean),
/// burned in for 10/rate and sampled every 5/rate.
pub fn stationary_samples(
    spec: &SdeSpec,
    dt: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, SdeError> {
    let law = spec.stationary()?;
    let x0 = law
        .mean_var()
        .map(|(m, _)| m)
        .unwrap_or_else(|_| law.mode().max(1e-3));
    let rate = spec.relaxation_rate();
    let burn = (BURN_IN_RATES / rate / dt).ceil() as usize;
    let thin = ((THIN_RATES / rate / dt).ceil() as usize).max(1);
    check("dt", dt)?;
    check_start(spec, x0)?;
    let mut rng = stream_rng(seed, 0);
    let sqrt_dt = dt.sqrt();
    let mut x = x0;
    for _ in 0..burn {
        x = spec.step(x, dt, sqrt_dt, standard_normal(&mut rng));
    }
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        for _ in 0..thin {
            x = spec.step(x, dt, sqrt_dt, standard_normal(&mut rng));
        }
        out.push(spec.observe(x));
    }
    Ok(out)
}

/// Writes a path as `time,value` CSV rows with t = dt, 2dt, ….
pub fn write_path_csv<W: Write>(out: W, dt: f64, path: &[f64]) -> Result<(), SdeError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| SdeError::Io(e.to_string());
    w.write_record(["time", "value"]).map_err(io)?;
    for (k, v) in path.iter().enumerate() {
        w.write_record([format!("{}", (k + 1) as f64 * dt), format!("{v}")])
            .map_err(io)?;
    }
    w.flush().map_err(|e| SdeError::Io(e.to_string()))
}

/// θ giving stationary mean `mean_sigma` for the GigaVol process.
pub fn theta_from_mean(mean_sigma: f64, j: f64, sigma: f64, gamma: f64) -> f64 {
    let k = 2.0 * j / (sigma * sigma);
    let ratio =
        mean_sigma * (lgamma_unchecked((1.0 + k) / gamma) - lgamma_unchecked(k / gamma)).exp();
    gamma / k * ratio.powf(gamma)
}

/// GigaVol parameters (γ = 2) of σ = √V for the VarianceIGa process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolParams {
    pub j: f64,
    pub theta: f64,
    pub sigma: f64,
    pub gamma: f64,
}

impl VolParams {
    pub fn spec(&self) -> SdeSpec {
        SdeSpec::GigaVol {
            j: self.j,
            theta: self.theta,
            sigma: self.sigma,
            gamma: self.gamma,
        }
    }
}

pub fn variance_to_vol_params(j_tilde: f64, sigma_tilde: f64, v_bar: f64) -> VolParams {
    let j = 0.5 * j_tilde + sigma_tilde * sigma_tilde / 8.0;
    VolParams {
        j,
        theta: v_bar * 0.5 * j_tilde / j,
        sigma: 0.5 * sigma_tilde,
        gamma: 2.0,
    }
}

/// Stationary mean of σ = √V for the VarianceIGa process.
pub fn mean_sigma_from_variance(j_tilde: f64, sigma_tilde: f64, v_bar: f64) -> f64 {
    let k = 2.0 * j_tilde / (sigma_tilde * sigma_tilde);
    v_bar.sqrt() * k.sqrt() * (lgamma_unchecked(k + 0.5) - lgamma_unchecked(k + 1.0)).exp()
}

/// Stationary Fokker–Planck density P ∝ (2/g²)·exp(∫ 2f/g²) on `grid`,
/// integrated by the cumulative trapezoid rule and normalized by the
/// trapezoid rule on the same grid.
pub fn fp_stationary_pdf<F, G>(drift: F, diffusion: G, grid: &[f64]) -> Result<Vec<f64>, SdeError>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SdeError::InvalidGrid);
    }
    let mut ratio = Vec::with_capacity(grid.len());
    let mut log_pre = Vec::with_capacity(grid.len());
    for &x in grid {
        let g = diffusion(x);
        if !(g > 0.0 && g.is_finite()) {
            return Err(SdeError::InvalidGrid);
        }
        ratio.push(2.0 * drift(x) / (g * g));
        log_pre.push((2.0 / (g * g)).ln());
    }
    let mut log_p = Vec::with_capacity(grid.len());
    let mut integral = 0.0;
    log_p.push(log_pre[0]);
    for k in 1..grid.len() {
        integral += 0.5 * (ratio[k] + ratio[k - 1]) * (grid[k] - grid[k - 1]);
        log_p.push(log_pre[k] + integral);
    }
    let top = log_p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(SdeError::NonIntegrable);
    }
    let mut p: Vec<f64> = log_p.iter().map(|l| (l - top).exp()).collect();
    let norm: f64 = (1..grid.len())
        .map(|k| 0.5 * (p[k] + p[k - 1]) * (grid[k] - grid[k - 1]))
        .sum();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(SdeError::NonIntegrable);
    }
    for v in &mut p {
        *v /= norm;
    }
    Ok(p)
}

/// Estimated mean relaxation time of the IGa process,
/// (2c₁/σ²)·[ln(2J/σ²) − ψ(2J/σ²)]. This is the magnitude of the printed
/// expression, which carries a leading minus sign but must be positive.
pub fn relax_mean_estimate(j: f64, sigma2: f64, c1: f64) -> f64 {
    let k = 2.0 * j / sigma2;
    2.0 * c1 / sigma2 * (k.ln() - digamma_unchecked(k))
}

/// Estimated standard deviation of the relaxation time, (c₂/σ²)·ψ¹(1 + 2J/σ²).
pub fn relax_stdev_estimate(j: f64, sigma2: f64, c2: f64) -> f64 {
    c2 / sigma2 * trigamma_unchecked(1.0 + 2.0 * j / sigma2)
}

/// Initial condition of the relaxation ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxStart {
    /// Every path starts at this value.
    Fixed(f64),
    /// Paths start from independent draws of the stationary law.
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxConfig {
    pub j: f64,
    pub sigma: f64,
    pub n_paths: usize,
    pub start: RelaxStart,
    pub dt: f64,
    pub p_threshold: f64,
    /// Time between KS checks; defaults to 0.05/J.
    pub sample_every: f64,
    /// Give up after this much simulated time.
    pub horizon: f64,
    pub seed: u64,
}

impl RelaxConfig {
    pub fn new(j: f64, sigma: f64) -> Self {
        Self {
            j,
            sigma,
            n_paths: 5000,
            start: RelaxStart::Fixed(1.0),
            dt: 0.01,
            p_threshold: 0.1,
            sample_every: 0.05 / j,
            horizon: 100.0 / j,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxResult {
    pub relax_time: f64,
    /// (time, KS p-value) at every check up to and including the crossing.
    pub p_value_trace: Vec<(f64, f64)>,
    pub n_paths: usize,
    pub test: String,
}

/// Ensemble relaxation experiment for dX = J(1 − X)dt + ΣX dW.
///
/// All paths advance together; every `sample_every` time units the
/// cross-section is compared with the stationary IGa(1 + 2J/Σ², 2J/Σ²) by a
/// one-sample KS test, and the first time p exceeds `p_threshold` is the
/// relaxation time. Path k uses substream k of the seed.
pub fn relaxation_experiment(cfg: &RelaxConfig) -> Result<RelaxResult, SdeError> {
    check("J", cfg.j)?;
    check("Sigma", cfg.sigma)?;
    check("dt", cfg.dt)?;
    check("sample_every", cfg.sample_every)?;
    if cfg.n_paths < 8 {
        return Err(SdeError::InvalidParameter {
            name: "n_paths",
            value: cfg.n_paths as f64,
        });
    }
    let spec = SdeSpec::GigaVol {
        j: cfg.j,
        theta: 1.0,
        sigma: cfg.sigma,
        gamma: 1.0,
    };
    let law = spec.stationary()?;
    let mut rngs: Vec<StreamRng> = (0..cfg.n_paths as u64)
        .map(|k| stream_rng(cfg.seed, k))
        .collect();
    let mut xs: Vec<f64> = match cfg.start {
        RelaxStart::Fixed(x0) => {
            check_start(&spec, x0)?;
            vec![x0; cfg.n_paths]
        }
        RelaxStart::Stationary => rngs.iter_mut().map(|r| law.draw(r)).collect(),
    };
    let steps_per_check = ((cfg.sample_every / cfg.dt).round() as usize).max(1);
    let dt = cfg.dt;
    let sqrt_dt = dt.sqrt();
    let mut trace = Vec::new();
    let mut t = 0.0;
    let mut check_index = 0usize;
    while t < cfg.horizon {
        for (x, rng) in xs.iter_mut().zip(rngs.iter_mut()) {
            for _ in 0..steps_per_check {
                *x = spec.step(*x, dt, sqrt_dt, standard_normal(rng));
            }
        }
        check_index += 1;
        t = check_index as f64 * steps_per_check as f64 * dt;
        let ks = ks_test(&xs, &law);
        trace.push((t, ks.p_value));
        if ks.p_value > cfg.p_threshold {
            return Ok(RelaxResult {
                relax_time: t,
                p_value_trace: trace,
                n_paths: cfg.n_paths,
                test: "one-sample Kolmogorov-Smirnov".into(),
            });
        }
    }
    let last_p = trace.last().map_or(f64::NAN, |&(_, p)| p);
    Err(SdeError::HorizonExceeded {
        horizon: cfg.horizon,
        last_p,
        trace,
    })
}
