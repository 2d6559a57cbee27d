//! The GIGa family and its relatives: GIGa, IGa, GGa, Ga, LN, Normal and the
//! location-scale Student-t.
//!
//! A [`DistModel`] is validated once at construction and is immutable
//! afterwards. IGa and Ga are stored as their own kinds but evaluate exactly as
//! GIGa and GGa with γ = 1.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::quad::{self, QuadratureConfig};
use crate::rng::{standard_gamma, standard_normal, stream_rng};
use crate::specfun::{
    erfc, lgamma_unchecked, reg_gamma_p_unchecked, reg_gamma_q_unchecked, DomainError, HALF_LN_2PI,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("{family}: parameter {name} = {value} is invalid")]
    InvalidParameter {
        family: &'static str,
        name: &'static str,
        value: f64,
    },
    #[error("{family}: mean is undefined for these parameters")]
    UndefinedMean { family: &'static str },
    #[error("unknown distribution kind {0:?}")]
    UnknownKind(String),
    #[error("{kind}: missing parameter {name}")]
    MissingParameter { kind: String, name: &'static str },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Distribution kind, without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Giga,
    Iga,
    Gga,
    Ga,
    Ln,
    Normal,
    StudentT,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Giga => "GIGa",
            Family::Iga => "IGa",
            Family::Gga => "GGa",
            Family::Ga => "Ga",
            Family::Ln => "LN",
            Family::Normal => "Normal",
            Family::StudentT => "StudentT",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            Family::Giga,
            Family::Iga,
            Family::Gga,
            Family::Ga,
            Family::Ln,
            Family::Normal,
            Family::StudentT,
        ]
        .into_iter()
        .find(|f| f.name() == name)
    }

    pub fn positive_support(self) -> bool {
        !matches!(self, Family::Normal | Family::StudentT)
    }
}

/// Parameter view of a model. Construct models through [`DistModel::new`] or
/// the per-family constructors so that parameters are validated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Params {
    Giga { alpha: f64, beta: f64, gamma: f64 },
    Iga { alpha: f64, beta: f64 },
    Gga { alpha: f64, beta: f64, gamma: f64 },
    Ga { alpha: f64, beta: f64 },
    Ln { mu: f64, sigma: f64 },
    Normal { mu: f64, sigma: f64 },
    StudentT { loc: f64, scale: f64, dof: f64 },
}

impl Params {
    pub fn family(&self) -> Family {
        match self {
            Params::Giga { .. } => Family::Giga,
            Params::Iga { .. } => Family::Iga,
            Params::Gga { .. } => Family::Gga,
            Params::Ga { .. } => Family::Ga,
            Params::Ln { .. } => Family::Ln,
            Params::Normal { .. } => Family::Normal,
            Params::StudentT { .. } => Family::StudentT,
        }
    }

    /// Named parameter values in a fixed order.
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Params::Giga { alpha, beta, gamma } | Params::Gga { alpha, beta, gamma } => {
                vec![("alpha", alpha), ("beta", beta), ("gamma", gamma)]
            }
            Params::Iga { alpha, beta } | Params::Ga { alpha, beta } => {
                vec![("alpha", alpha), ("beta", beta)]
            }
            Params::Ln { mu, sigma } | Params::Normal { mu, sigma } => {
                vec![("mu", mu), ("sigma", sigma)]
            }
            Params::StudentT { loc, scale, dof } => {
                vec![("loc", loc), ("scale", scale), ("dof", dof)]
            }
        }
    }
}

/// (α, β, γ, inverse) for the generalized-gamma-type kinds.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GenGamma {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub inverse: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistModel(Params);

fn positive(family: &'static str, name: &'static str, value: f64) -> Result<(), DistError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(DistError::InvalidParameter {
            family,
            name,
            value,
        })
    }
}

fn finite(family: &'static str, name: &'static str, value: f64) -> Result<(), DistError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(DistError::InvalidParameter {
            family,
            name,
            value,
        })
    }
}

impl DistModel {
    pub fn new(params: Params) -> Result<Self, DistError> {
        let fam = params.family().name();
        match params {
            Params::Giga { alpha, beta, gamma } | Params::Gga { alpha, beta, gamma } => {
                positive(fam, "alpha", alpha)?;
                positive(fam, "beta", beta)?;
                positive(fam, "gamma", gamma)?;
            }
            Params::Iga { alpha, beta } | Params::Ga { alpha, beta } => {
                positive(fam, "alpha", alpha)?;
                positive(fam, "beta", beta)?;
            }
            Params::Ln { mu, sigma } | Params::Normal { mu, sigma } => {
                finite(fam, "mu", mu)?;
                positive(fam, "sigma", sigma)?;
            }
            Params::StudentT { loc, scale, dof } => {
                finite(fam, "loc", loc)?;
                positive(fam, "scale", scale)?;
                positive(fam, "dof", dof)?;
            }
        }
        Ok(Self(params))
    }

    pub fn giga(alpha: f64, beta: f64, gamma: f64) -> Result<Self, DistError> {
        Self::new(Params::Giga { alpha, beta, gamma })
    }
    pub fn iga(alpha: f64, beta: f64) -> Result<Self, DistError> {
        Self::new(Params::Iga { alpha, beta })
    }
    pub fn gga(alpha: f64, beta: f64, gamma: f64) -> Result<Self, DistError> {
        Self::new(Params::Gga { alpha, beta, gamma })
    }
    pub fn ga(alpha: f64, beta: f64) -> Result<Self, DistError> {
        Self::new(Params::Ga { alpha, beta })
    }
    pub fn ln(mu: f64, sigma: f64) -> Result<Self, DistError> {
        Self::new(Params::Ln { mu, sigma })
    }
    pub fn normal(mu: f64, sigma: f64) -> Result<Self, DistError> {
        Self::new(Params::Normal { mu, sigma })
    }
    pub fn student_t(loc: f64, scale: f64, dof: f64) -> Result<Self, DistError> {
        Self::new(Params::StudentT { loc, scale, dof })
    }

    pub fn params(&self) -> &Params {
        &self.0
    }

    pub fn family(&self) -> Family {
        self.0.family()
    }

    pub(crate) fn gen_gamma(&self) -> Option<GenGamma> {
        match self.0 {
            Params::Giga { alpha, beta, gamma } => Some(GenGamma {
                alpha,
                beta,
                gamma,
                inverse: true,
            }),
            Params::Iga { alpha, beta } => Some(GenGamma {
                alpha,
                beta,
                gamma: 1.0,
                inverse: true,
            }),
            Params::Gga { alpha, beta, gamma } => Some(GenGamma {
                alpha,
                beta,
                gamma,
                inverse: false,
            }),
            Params::Ga { alpha, beta } => Some(GenGamma {
                alpha,
                beta,
                gamma: 1.0,
                inverse: false,
            }),
            _ => None,
        }
    }

    /// Natural log of the density; −∞ outside the support.
    pub fn log_pdf(&self, x: f64) -> f64 {
        if let Some(g) = self.gen_gamma() {
            if !(x > 0.0) {
                return f64::NEG_INFINITY;
            }
            let norm = g.gamma.ln() - g.beta.ln() - lgamma_unchecked(g.alpha);
            return if g.inverse {
                let l = (g.beta / x).ln();
                norm - (g.gamma * l).exp() + (1.0 + g.alpha * g.gamma) * l
            } else {
                let l = (x / g.beta).ln();
                norm - (g.gamma * l).exp() + (g.alpha * g.gamma - 1.0) * l
            };
        }
        match self.0 {
            Params::Ln { mu, sigma } => {
                if !(x > 0.0) {
                    return f64::NEG_INFINITY;
                }
                let z = (x.ln() - mu) / sigma;
                -x.ln() - sigma.ln() - HALF_LN_2PI - 0.5 * z * z
            }
            Params::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                -sigma.ln() - HALF_LN_2PI - 0.5 * z * z
            }
            Params::StudentT { loc, scale, dof } => {
                let z = (x - loc) / scale;
                lgamma_unchecked(0.5 * (dof + 1.0))
                    - lgamma_unchecked(0.5 * dof)
                    - 0.5 * (dof * PI).ln()
                    - scale.ln()
                    - 0.5 * (dof + 1.0) * (z * z / dof).ln_1p()
            }
            _ => unreachable!("generalized gamma kinds handled above"),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if let Some(g) = self.gen_gamma() {
            if !(x > 0.0) {
                return 0.0;
            }
            return if g.inverse {
                reg_gamma_q_unchecked(g.alpha, (g.beta / x).powf(g.gamma))
            } else {
                reg_gamma_p_unchecked(g.alpha, (x / g.beta).powf(g.gamma))
            };
        }
        match self.0 {
            Params::Ln { mu, sigma } => {
                if !(x > 0.0) {
                    return 0.0;
                }
                0.5 * erfc(-(x.ln() - mu) / (sigma * std::f64::consts::SQRT_2))
            }
            Params::Normal { mu, sigma } => {
                0.5 * erfc(-(x - mu) / (sigma * std::f64::consts::SQRT_2))
            }
            Params::StudentT { loc, scale, .. } => {
                let half = self.student_t_central_mass((x - loc) / scale);
                if x >= loc {
                    0.5 + half
                } else {
                    0.5 - half
                }
            }
            _ => unreachable!("generalized gamma kinds handled above"),
        }
    }

    /// 1 − CDF, computed on the side that avoids cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        if let Some(g) = self.gen_gamma() {
            if !(x > 0.0) {
                return 1.0;
            }
            return if g.inverse {
                reg_gamma_p_unchecked(g.alpha, (g.beta / x).powf(g.gamma))
            } else {
                reg_gamma_q_unchecked(g.alpha, (x / g.beta).powf(g.gamma))
            };
        }
        match self.0 {
            Params::Ln { mu, sigma } => {
                if !(x > 0.0) {
                    return 1.0;
                }
                0.5 * erfc((x.ln() - mu) / (sigma * std::f64::consts::SQRT_2))
            }
            Params::Normal { mu, sigma } => {
                0.5 * erfc((x - mu) / (sigma * std::f64::consts::SQRT_2))
            }
            Params::StudentT { loc, scale, .. } => {
                let half = self.student_t_central_mass((x - loc) / scale);
                if x >= loc {
                    0.5 - half
                } else {
                    0.5 + half
                }
            }
            _ => unreachable!("generalized gamma kinds handled above"),
        }
    }

    /// ∫₀^|z| of the standardized Student-t density, by quadrature in
    /// θ = atan(y) so that the range is finite.
    fn student_t_central_mass(&self, z: f64) -> f64 {
        let Params::StudentT { dof, .. } = self.0 else {
            unreachable!()
        };
        let z = z.abs();
        if z == 0.0 {
            return 0.0;
        }
        let ln_norm = lgamma_unchecked(0.5 * (dof + 1.0))
            - lgamma_unchecked(0.5 * dof)
            - 0.5 * (dof * PI).ln();
        let cfg = QuadratureConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-15,
            max_subdivisions: 500,
        };
        let top = z.atan();
        let integrand = |theta: f64| {
            let y = theta.tan();
            let c = theta.cos();
            (ln_norm - 0.5 * (dof + 1.0) * (y * y / dof).ln_1p()).exp() / (c * c)
        };
        match quad::integrate(integrand, 0.0, top, 2, &cfg) {
            Ok(v) => v.min(0.5),
            Err(e) => e.estimate.min(0.5),
        }
    }

    /// Mean and variance. Variance is +∞ when the second moment diverges.
    pub fn mean_var(&self) -> Result<(f64, f64), DistError> {
        let fam = self.family().name();
        if let Some(g) = self.gen_gamma() {
            let sign = if g.inverse { -1.0 } else { 1.0 };
            let a1 = g.alpha + sign / g.gamma;
            if a1 <= 0.0 {
                return Err(DistError::UndefinedMean { family: fam });
            }
            let lg = lgamma_unchecked(g.alpha);
            let mean = g.beta * (lgamma_unchecked(a1) - lg).exp();
            let a2 = g.alpha + 2.0 * sign / g.gamma;
            let var = if a2 <= 0.0 {
                f64::INFINITY
            } else {
                // β²[Γ(α)Γ(a2) − Γ(a1)²]/Γ(α)²
                let second = g.beta * g.beta * (lgamma_unchecked(a2) - lg).exp();
                (second - mean * mean).max(0.0)
            };
            return Ok((mean, var));
        }
        match self.0 {
            Params::Ln { mu, sigma } => {
                let s2 = sigma * sigma;
                Ok(((mu + 0.5 * s2).exp(), s2.exp_m1() * (2.0 * mu + s2).exp()))
            }
            Params::Normal { mu, sigma } => Ok((mu, sigma * sigma)),
            Params::StudentT { loc, scale, dof } => {
                if dof <= 1.0 {
                    return Err(DistError::UndefinedMean { family: fam });
                }
                let var = if dof > 2.0 {
                    scale * scale * dof / (dof - 2.0)
                } else {
                    f64::INFINITY
                };
                Ok((loc, var))
            }
            _ => unreachable!("generalized gamma kinds handled above"),
        }
    }

    /// Location of the density maximum (0 for GGa/Ga when the density is
    /// monotone decreasing).
    pub fn mode(&self) -> f64 {
        if let Some(g) = self.gen_gamma() {
            let ag = g.alpha * g.gamma;
            return if g.inverse {
                g.beta * (g.gamma / (1.0 + ag)).powf(1.0 / g.gamma)
            } else if ag > 1.0 {
                g.beta * ((ag - 1.0) / g.gamma).powf(1.0 / g.gamma)
            } else {
                0.0
            };
        }
        match self.0 {
            Params::Ln { mu, sigma } => (mu - sigma * sigma).exp(),
            Params::Normal { mu, .. } => mu,
            Params::StudentT { loc, .. } => loc,
            _ => unreachable!("generalized gamma kinds handled above"),
        }
    }

    /// One draw from the model.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if let Some(g) = self.gen_gamma() {
            let v = standard_gamma(rng, g.alpha);
            return if g.inverse {
                g.beta * v.powf(-1.0 / g.gamma)
            } else {
                g.beta * v.powf(1.0 / g.gamma)
            };
        }
        match self.0 {
            Params::Ln { mu, sigma } => (mu + sigma * standard_normal(rng)).exp(),
            Params::Normal { mu, sigma } => mu + sigma * standard_normal(rng),
            Params::StudentT { loc, scale, dof } => {
                let chi2_over_dof = 2.0 * standard_gamma(rng, 0.5 * dof) / dof;
                loc + scale * standard_normal(rng) / chi2_over_dof.sqrt()
            }
            _ => unreachable!("generalized gamma kinds handled above"),
        }
    }

    /// `n` draws, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }

    /// The law of X / E[X]: rescales β (μ for LN; location and scale for the
    /// symmetric kinds) so that the mean is one.
    pub fn scaled_to_unit_mean(&self) -> Result<Self, DistError> {
        let (mean, _) = self.mean_var()?;
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(DistError::UndefinedMean {
                family: self.family().name(),
            });
        }
        let p = match self.0 {
            Params::Giga { alpha, beta, gamma } => Params::Giga {
                alpha,
                beta: beta / mean,
                gamma,
            },
            Params::Iga { alpha, beta } => Params::Iga {
                alpha,
                beta: beta / mean,
            },
            Params::Gga { alpha, beta, gamma } => Params::Gga {
                alpha,
                beta: beta / mean,
                gamma,
            },
            Params::Ga { alpha, beta } => Params::Ga {
                alpha,
                beta: beta / mean,
            },
            Params::Ln { mu, sigma } => Params::Ln {
                mu: mu - mean.ln(),
                sigma,
            },
            Params::Normal { mu, sigma } => Params::Normal {
                mu: mu / mean,
                sigma: sigma / mean,
            },
            Params::StudentT { loc, scale, dof } => Params::StudentT {
                loc: loc / mean,
                scale: scale / mean,
                dof,
            },
        };
        Self::new(p)
    }
}

/// Mode and modal density of the unit-mean IGa with shape `alpha`.
pub fn iga_mode_stats(alpha: f64) -> Result<(f64, f64), DistError> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(DistError::InvalidParameter {
            family: "IGa",
            name: "alpha",
            value: alpha,
        });
    }
    let mode = (alpha - 1.0) / (alpha + 1.0);
    let ln_pdf = (1.0 + alpha) * (1.0 + alpha).ln()
        - (1.0 + alpha)
        - lgamma_unchecked(alpha)
        - (alpha - 1.0).ln();
    Ok((mode, ln_pdf.exp()))
}

/// Log-normal-limit parameterization of GIGa: α = 1/λ², β = e^μ λ^(−2σ/λ),
/// γ = λ/σ. As λ → 0 the GIGa density approaches LN(μ, σ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReparamLN {
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
}

impl ReparamLN {
    pub fn to_giga_params(&self) -> (f64, f64, f64) {
        let alpha = 1.0 / (self.lambda * self.lambda);
        let beta = (self.mu - 2.0 * self.sigma / self.lambda * self.lambda.ln()).exp();
        let gamma = self.lambda / self.sigma;
        (alpha, beta, gamma)
    }

    pub fn from_giga_params(alpha: f64, beta: f64, gamma: f64) -> Self {
        let lambda = 1.0 / alpha.sqrt();
        Self {
            mu: beta.ln() - alpha.ln() / gamma,
            sigma: lambda / gamma,
            lambda,
        }
    }
}

/// The GIGa obtained from `rp` together with its LN limit LN(μ, σ).
pub fn ln_limit_of_giga(rp: ReparamLN) -> Result<(DistModel, DistModel), DistError> {
    positive("GIGa", "lambda", rp.lambda)?;
    positive("LN", "sigma", rp.sigma)?;
    let (a, b, g) = rp.to_giga_params();
    Ok((DistModel::giga(a, b, g)?, DistModel::ln(rp.mu, rp.sigma)?))
}

#[derive(Serialize, Deserialize)]
struct DistModelRepr {
    kind: String,
    params: BTreeMap<String, f64>,
}

impl From<&DistModel> for DistModelRepr {
    fn from(m: &DistModel) -> Self {
        Self {
            kind: m.family().name().to_string(),
            params: m
                .params()
                .named()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        }
    }
}

impl TryFrom<DistModelRepr> for DistModel {
    type Error = DistError;

    fn try_from(r: DistModelRepr) -> Result<Self, DistError> {
        let family =
            Family::from_name(&r.kind).ok_or_else(|| DistError::UnknownKind(r.kind.clone()))?;
        let get = |name: &'static str| {
            r.params
                .get(name)
                .copied()
                .ok_or_else(|| DistError::MissingParameter {
                    kind: r.kind.clone(),
                    name,
                })
        };
        let params = match family {
            Family::Giga => Params::Giga {
                alpha: get("alpha")?,
                beta: get("beta")?,
                gamma: get("gamma")?,
            },
            Family::Gga => Params::Gga {
                alpha: get("alpha")?,
                beta: get("beta")?,
                gamma: get("gamma")?,
            },
            Family::Iga => Params::Iga {
                alpha: get("alpha")?,
                beta: get("beta")?,
            },
            Family::Ga => Params::Ga {
                alpha: get("alpha")?,
                beta: get("beta")?,
            },
            Family::Ln => Params::Ln {
                mu: get("mu")?,
                sigma: get("sigma")?,
            },
            Family::Normal => Params::Normal {
                mu: get("mu")?,
                sigma: get("sigma")?,
            },
            Family::StudentT => Params::StudentT {
                loc: get("loc")?,
                scale: get("scale")?,
                dof: get("dof")?,
            },
        };
        DistModel::new(params)
    }
}

impl Serialize for DistModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        DistModelRepr::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DistModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = DistModelRepr::deserialize(deserializer)?;
        DistModel::try_from(repr).map_err(serde::de::Error::custom)
    }
}
