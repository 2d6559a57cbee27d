//! Product distributions z = x·y with x from a positive-support [`DistModel`]
//! and y ~ N(0, 1).
//!
//! Densities are evaluated by quadrature in u = ln x. In that variable both
//! the density integrand and the tail integrand are log-concave, so
//! [`quad::ln_integrate_log_concave`] can locate the single bump and work in
//! log space; far-tail values therefore do not underflow.

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::dist::{DistModel, Params};
use crate::quad::{self, QuadratureConfig, QuadratureError};
use crate::rng::{standard_normal, stream_rng};
use crate::specfun::{lgamma_unchecked, ln_normal_sf, HALF_LN_2PI};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProductError {
    #[error("product base must have positive support, got {0}")]
    BaseSupport(&'static str),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductModel {
    base: DistModel,
}

impl ProductModel {
    pub fn new(base: DistModel) -> Result<Self, ProductError> {
        if !base.family().positive_support() {
            return Err(ProductError::BaseSupport(base.family().name()));
        }
        Ok(Self { base })
    }

    pub fn base(&self) -> &DistModel {
        &self.base
    }

    /// Rough location of the base in u = ln x, used to seed the peak search.
    fn log_scale(&self) -> f64 {
        match *self.base.params() {
            Params::Giga { beta, .. }
            | Params::Iga { beta, .. }
            | Params::Gga { beta, .. }
            | Params::Ga { beta, .. } => beta.ln(),
            Params::Ln { mu, .. } => mu,
            _ => 0.0,
        }
    }

    pub fn log_pdf(&self, z: f64, cfg: &QuadratureConfig) -> Result<f64, ProductError> {
        let z2 = z * z;
        let base = &self.base;
        let log_integrand = |u: f64| {
            let x = u.exp();
            base.log_pdf(x) - 0.5 * z2 / (x * x) - HALF_LN_2PI
        };
        let guess = self.log_scale().max(z.abs().max(f64::MIN_POSITIVE).ln());
        Ok(quad::ln_integrate_log_concave(log_integrand, guess, cfg)?)
    }

    pub fn pdf(&self, z: f64, cfg: &QuadratureConfig) -> Result<f64, ProductError> {
        Ok(self.log_pdf(z, cfg)?.exp())
    }

    /// ln P(Z > |z|) = ln ∫ f(x) Φ̄(|z|/x) dx.
    pub fn ln_tail(&self, z: f64, cfg: &QuadratureConfig) -> Result<f64, ProductError> {
        let z = z.abs();
        if z == 0.0 {
            return Ok(-std::f64::consts::LN_2);
        }
        let base = &self.base;
        let log_integrand = |u: f64| {
            let x = u.exp();
            base.log_pdf(x) + u + ln_normal_sf(z / x)
        };
        let guess = self.log_scale().max(z.ln());
        Ok(quad::ln_integrate_log_concave(log_integrand, guess, cfg)?)
    }

    pub fn cdf(&self, z: f64, cfg: &QuadratureConfig) -> Result<f64, ProductError> {
        let tail = self.ln_tail(z, cfg)?.exp();
        Ok(if z < 0.0 { tail } else { 1.0 - tail })
    }

    pub fn sf(&self, z: f64, cfg: &QuadratureConfig) -> Result<f64, ProductError> {
        let tail = self.ln_tail(z, cfg)?.exp();
        Ok(if z > 0.0 { tail } else { 1.0 - tail })
    }

    /// E[z²] = E[x²]; the mean is 0.
    pub fn variance(&self) -> f64 {
        if let Some(g) = self.base.gen_gamma() {
            let shift = if g.inverse { -2.0 } else { 2.0 } / g.gamma;
            if g.alpha + shift <= 0.0 {
                return f64::INFINITY;
            }
            return g.beta
                * g.beta
                * (lgamma_unchecked(g.alpha + shift) - lgamma_unchecked(g.alpha)).exp();
        }
        match *self.base.params() {
            Params::Ln { mu, sigma } => (2.0 * mu + 2.0 * sigma * sigma).exp(),
            _ => unreachable!("base validated to positive support"),
        }
    }

    /// αγ for a GIGa/IGa base, whose density tail is |z|^(−1−αγ).
    pub fn tail_exponent(&self) -> Option<f64> {
        self.base
            .gen_gamma()
            .filter(|g| g.inverse)
            .map(|g| g.alpha * g.gamma)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.base.draw(rng) * standard_normal(rng)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }
}

pub fn product_pdf(pm: &ProductModel, z: f64, cfg: &QuadratureConfig) -> Result<f64, ProductError> {
    pm.pdf(z, cfg)
}

pub fn product_log_pdf(
    pm: &ProductModel,
    z: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, ProductError> {
    pm.log_pdf(z, cfg)
}

pub fn product_cdf(pm: &ProductModel, z: f64, cfg: &QuadratureConfig) -> Result<f64, ProductError> {
    pm.cdf(z, cfg)
}

pub fn product_variance(pm: &ProductModel) -> f64 {
    pm.variance()
}

pub fn product_tail_exponent(pm: &ProductModel) -> Option<f64> {
    pm.tail_exponent()
}

/// Closed-form density of GIGa(α, β, 2)·N(0, 1), i.e. T(0, β/√α, 2α).
pub fn student_t_pdf(alpha: f64, beta: f64, z: f64) -> f64 {
    student_t_log_pdf(alpha, beta, z).exp()
}

pub fn student_t_log_pdf(alpha: f64, beta: f64, z: f64) -> f64 {
    if !(alpha > 0.0 && beta > 0.0) {
        return f64::NAN;
    }
    let two_b2 = 2.0 * beta * beta;
    lgamma_unchecked(0.5 + alpha)
        - lgamma_unchecked(alpha)
        - HALF_LN_2PI
        - beta.ln()
        - (0.5 + alpha) * (z * z / two_b2).ln_1p()
}

#[derive(Serialize, Deserialize)]
struct ProductRepr {
    kind: String,
    base: DistModel,
}

impl Serialize for ProductModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ProductRepr {
            kind: "product".into(),
            base: self.base,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ProductModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = ProductRepr::deserialize(deserializer)?;
        if repr.kind != "product" {
            return Err(serde::de::Error::custom(format!(
                "expected kind \"product\", got {:?}",
                repr.kind
            )));
        }
        ProductModel::new(repr.base).map_err(serde::de::Error::custom)
    }
}
