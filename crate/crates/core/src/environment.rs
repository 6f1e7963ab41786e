//! The i.i.d. space-time environment ω(n, x).
//!
//! Site values are a pure function of `(seed, replica, n, x)`: the key is
//! derived from `(seed, replica)`, and one Philox block at counter
//! `(⌊x/2⌋, n)` supplies the 64-bit uniforms of the sites `2⌊x/2⌋` and
//! `2⌊x/2⌋ + 1`. Gaussian values use the AS241 inverse normal CDF, so they
//! are bit-identical on every IEEE-754 platform.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, domain, join, mix64, philox4x32, unit_open};
use crate::special::{inv_norm_cdf, log_sum_exp};

/// Default half-width of the declared finiteness interval of λ.
pub const DEFAULT_BETA_MAX: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum EnvFamily {
    Gaussian,
    Rademacher,
    /// Finite law; standardized to mean 0 and variance 1 on construction.
    Tabulated { values: Vec<f64>, probs: Vec<f64> },
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvModel {
    family: EnvFamily,
    beta_max: f64,
    #[serde(skip)]
    cdf: Vec<f64>,
}

impl EnvModel {
    pub fn gaussian() -> Self {
        Self::new(EnvFamily::Gaussian, DEFAULT_BETA_MAX).expect("valid family")
    }

    pub fn rademacher() -> Self {
        Self::new(EnvFamily::Rademacher, DEFAULT_BETA_MAX).expect("valid family")
    }

    pub fn new(family: EnvFamily, beta_max: f64) -> Result<Self> {
        if !(beta_max.is_finite() && beta_max > 0.0) {
            return Err(Error::invalid("env.beta_max", "must be a positive real"));
        }
        let (family, cdf) = match family {
            EnvFamily::Tabulated { values, probs } => {
                let (values, probs) = standardize(values, probs)?;
                let mut acc = 0.0;
                let mut cdf: Vec<f64> = probs
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                *cdf.last_mut().expect("non-empty") = 1.0;
                (EnvFamily::Tabulated { values, probs }, cdf)
            }
            other => (other, Vec::new()),
        };
        Ok(EnvModel {
            family,
            beta_max,
            cdf,
        })
    }

    pub fn family(&self) -> &EnvFamily {
        &self.family
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.family, EnvFamily::Gaussian)
    }

    pub fn beta_max(&self) -> f64 {
        self.beta_max
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            EnvFamily::Gaussian => "gaussian",
            EnvFamily::Rademacher => "rademacher",
            EnvFamily::Tabulated { .. } => "tabulated",
        }
    }

    pub fn check_beta(&self, beta: f64) -> Result<()> {
        if beta.is_finite() && beta.abs() <= self.beta_max {
            Ok(())
        } else {
            Err(Error::BetaOutOfRange {
                beta,
                limit: self.beta_max,
            })
        }
    }

    /// λ(β) = log E[exp(βω)].
    pub fn lambda(&self, beta: f64) -> Result<f64> {
        self.check_beta(beta)?;
        Ok(self.lambda_unchecked(beta))
    }

    fn lambda_unchecked(&self, beta: f64) -> f64 {
        match &self.family {
            EnvFamily::Gaussian => 0.5 * beta * beta,
            EnvFamily::Rademacher => {
                let b = beta.abs();
                b + (-2.0 * b).exp().ln_1p() - std::f64::consts::LN_2
            }
            EnvFamily::Tabulated { values, probs } => {
                let terms: Vec<f64> = values
                    .iter()
                    .zip(probs)
                    .map(|(v, p)| beta * v + p.ln())
                    .collect();
                log_sum_exp(&terms)
            }
        }
    }

    /// λ'(β); central difference with a Richardson check for tabulated laws.
    pub fn lambda_prime(&self, beta: f64) -> Result<f64> {
        if !(beta.is_finite() && beta.abs() < self.beta_max) {
            return Err(Error::BetaOutOfRange {
                beta,
                limit: self.beta_max,
            });
        }
        Ok(match &self.family {
            EnvFamily::Gaussian => beta,
            EnvFamily::Rademacher => beta.tanh(),
            EnvFamily::Tabulated { .. } => {
                let h = 1e-6_f64.min(0.5 * (self.beta_max - beta.abs()));
                let d = |h: f64| {
                    (self.lambda_unchecked(beta + h) - self.lambda_unchecked(beta - h)) / (2.0 * h)
                };
                let coarse = d(h);
                let fine = d(0.5 * h);
                let richardson = (4.0 * fine - coarse) / 3.0;
                if (coarse - richardson).abs() <= 1e-8 * richardson.abs().max(1.0) {
                    coarse
                } else {
                    richardson
                }
            }
        })
    }

    /// Maps a 64-bit uniform word to one standardized draw.
    #[inline]
    pub fn draw(&self, bits: u64) -> f64 {
        match &self.family {
            EnvFamily::Gaussian => inv_norm_cdf(unit_open(bits)),
            EnvFamily::Rademacher => {
                if bits >> 63 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            EnvFamily::Tabulated { values, .. } => {
                let u = unit_open(bits);
                let i = self.cdf.partition_point(|&c| c < u).min(values.len() - 1);
                values[i]
            }
        }
    }
}

fn standardize(values: Vec<f64>, probs: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    if values.len() != probs.len() || values.len() < 2 {
        return Err(Error::invalid(
            "env.values",
            "values and probs must have equal length of at least 2",
        ));
    }
    if values.iter().chain(&probs).any(|v| !v.is_finite()) || probs.iter().any(|&p| p <= 0.0) {
        return Err(Error::invalid("env.probs", "probabilities must be positive and finite"));
    }
    let total: f64 = probs.iter().sum();
    let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
    let mean: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
    let var: f64 = values
        .iter()
        .zip(&probs)
        .map(|(v, p)| (v - mean).powi(2) * p)
        .sum();
    if var <= 0.0 {
        return Err(Error::invalid("env.values", "law is degenerate (zero variance)"));
    }
    let sd = var.sqrt();
    let values = values.iter().map(|v| (v - mean) / sd).collect();
    Ok((values, probs))
}

/// Read access to a space-time field.
pub trait Environment: Sync {
    fn omega(&self, n: u64, x: i64) -> f64;

    /// Writes ω(n, x0), …, ω(n, x0 + out.len() − 1).
    fn fill_row(&self, n: u64, x0: i64, out: &mut [f64]) {
        for (i, v) in out.iter_mut().enumerate() {
            *v = self.omega(n, x0 + i as i64);
        }
    }
}

/// A keyed realization of the environment for one replica.
#[derive(Debug, Clone)]
pub struct EnvField {
    model: Arc<EnvModel>,
    seed: u64,
    replica: u64,
    key: [u32; 2],
}

impl EnvField {
    pub fn new(model: Arc<EnvModel>, seed: u64, replica: u64) -> Self {
        let key = rng::key_for(seed ^ mix64(replica ^ 0x7265_706c_6963_6100), domain::ENVIRONMENT);
        EnvField {
            model,
            seed,
            replica,
            key,
        }
    }

    pub fn model(&self) -> &EnvModel {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica(&self) -> u64 {
        self.replica
    }

    #[inline]
    fn block(&self, n: u64, pair: i64) -> [u32; 4] {
        let p = pair as u64;
        philox4x32([p as u32, (p >> 32) as u32, n as u32, (n >> 32) as u32], self.key)
    }
}

impl Environment for EnvField {
    #[inline]
    fn omega(&self, n: u64, x: i64) -> f64 {
        let b = self.block(n, x.div_euclid(2));
        let bits = if x.rem_euclid(2) == 0 {
            join(b[0], b[1])
        } else {
            join(b[2], b[3])
        };
        self.model.draw(bits)
    }

    fn fill_row(&self, n: u64, x0: i64, out: &mut [f64]) {
        let mut i = 0;
        let len = out.len();
        if len == 0 {
            return;
        }
        if x0.rem_euclid(2) == 1 {
            out[0] = self.omega(n, x0);
            i = 1;
        }
        while i + 1 < len {
            let x = x0 + i as i64;
            let b = self.block(n, x.div_euclid(2));
            out[i] = self.model.draw(join(b[0], b[1]));
            out[i + 1] = self.model.draw(join(b[2], b[3]));
            i += 2;
        }
        if i < len {
            out[i] = self.omega(n, x0 + i as i64);
        }
    }
}

impl<E: Environment + ?Sized> Environment for &E {
    fn omega(&self, n: u64, x: i64) -> f64 {
        (**self).omega(n, x)
    }

    fn fill_row(&self, n: u64, x0: i64, out: &mut [f64]) {
        (**self).fill_row(n, x0, out)
    }
}
