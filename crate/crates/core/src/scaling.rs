//! Large-deviation scale `γ_n`, weak-limit scale `κ_n = μ^(n/α)` and speed
//! `r_n = (μ^n P(|X_1| > γ_n))^(-1)`.
//!
//! All three sequences are tabulated in log-space so that `n` in the
//! sixties does not overflow.

use std::fmt;
use std::str::FromStr;

use crate::displacement::DisplacementModel;
use crate::error::{Error, Result};

/// Minimum `γ_n / κ_n` expected at the last generation of a scheme; below this the
/// scheme is accepted but a warning is logged.
pub const REGIME_RATIO_TARGET: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSpec {
    /// `γ_n = c·g^n`.
    Geometric { c: f64, g: f64 },
    /// `γ_n = n^a·μ^(n/α)`.
    PolynomialBoost { a: f64 },
}

impl fmt::Display for GammaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaSpec::Geometric { c, g } => write!(f, "geom:c={c},g={g}"),
            GammaSpec::PolynomialBoost { a } => write!(f, "poly:a={a}"),
        }
    }
}

impl FromStr for GammaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, body) = s
            .split_once(':')
            .ok_or_else(|| Error::parse(s, "expected `geom:c=..,g=..` or `poly:a=..`"))?;
        let params = crate::spec::key_values(body)?;
        match head.trim() {
            "geom" => {
                let (mut c, mut g) = (1.0, None);
                for (k, v) in params {
                    match k.as_str() {
                        "c" => c = crate::spec::number(&k, &v)?,
                        "g" => g = Some(crate::spec::number(&k, &v)?),
                        _ => return Err(Error::parse(k, "unknown geometric parameter")),
                    }
                }
                let g = g.ok_or_else(|| Error::parse(s, "missing g"))?;
                Ok(GammaSpec::Geometric { c, g })
            }
            "poly" => {
                let mut a = None;
                for (k, v) in params {
                    match k.as_str() {
                        "a" => a = Some(crate::spec::number(&k, &v)?),
                        _ => return Err(Error::parse(k, "unknown polynomial parameter")),
                    }
                }
                Ok(GammaSpec::PolynomialBoost {
                    a: a.ok_or_else(|| Error::parse(s, "missing a"))?,
                })
            }
            other => Err(Error::parse(other, "unknown scaling family")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingScheme {
    alpha: f64,
    mu: f64,
    spec: GammaSpec,
    ln_gamma: Vec<f64>,
    ln_kappa: Vec<f64>,
    ln_r: Vec<f64>,
}

impl ScalingScheme {
    /// Tabulates the sequences for `n = 0..=n_max` and validates the growth regime.
    pub fn build(
        alpha: f64,
        mu: f64,
        model: &DisplacementModel,
        spec: GammaSpec,
        n_max: usize,
    ) -> Result<Self> {
        if !(mu > 1.0) {
            return Err(Error::InvalidRegime(format!("mean offspring {mu} must exceed 1")));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidRegime(format!("tail index {alpha} must be positive")));
        }
        if let Some(model_alpha) = model.alpha() {
            if model_alpha != alpha {
                return Err(Error::Contract(format!(
                    "scheme tail index {alpha} differs from the displacement tail index {model_alpha}"
                )));
            }
        }
        let ln_mu = mu.ln();
        match spec {
            GammaSpec::Geometric { c, g } => {
                if !(c > 0.0) || !c.is_finite() {
                    return Err(Error::InvalidRegime(format!("γ_0 = {c} must be positive")));
                }
                // γ_n/κ_n = c·(g/μ^{1/α})^n must diverge
                if !(g.ln() > ln_mu / alpha + 1e-12) {
                    return Err(Error::InvalidRegime(format!(
                        "g = {g} does not outgrow κ_n = μ^(n/α) (need g > {})",
                        (ln_mu / alpha).exp()
                    )));
                }
            }
            GammaSpec::PolynomialBoost { a } => {
                if !(a > 0.0) || !a.is_finite() {
                    return Err(Error::InvalidRegime(format!(
                        "polynomial boost exponent {a} must be positive"
                    )));
                }
            }
        }
        let mut ln_gamma = Vec::with_capacity(n_max + 1);
        let mut ln_kappa = Vec::with_capacity(n_max + 1);
        let mut ln_r = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let nf = n as f64;
            let lk = nf * ln_mu / alpha;
            let lg = match spec {
                GammaSpec::Geometric { c, g } => c.ln() + nf * g.ln(),
                GammaSpec::PolynomialBoost { a } => a * nf.ln() + lk,
            };
            let ln_tail = model.ln_tail_prob(lg.exp());
            if !ln_tail.is_finite() {
                return Err(Error::InvalidRegime(format!(
                    "P(|X| > γ_{n}) = 0, so r_{n} is infinite"
                )));
            }
            ln_gamma.push(lg);
            ln_kappa.push(lk);
            ln_r.push(-(nf * ln_mu + ln_tail));
        }
        let last_ratio = (ln_gamma[n_max] - ln_kappa[n_max]).exp();
        if n_max > 0 && last_ratio <= REGIME_RATIO_TARGET {
            log::warn!(
                "γ_n/κ_n = {last_ratio:.3} at n = {n_max}; the scheme is still close to the weak-limit scale"
            );
        }
        Ok(Self {
            alpha,
            mu,
            spec,
            ln_gamma,
            ln_kappa,
            ln_r,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn spec(&self) -> GammaSpec {
        self.spec
    }

    pub fn n_max(&self) -> usize {
        self.ln_gamma.len() - 1
    }

    fn check(&self, n: usize) -> Result<()> {
        if n > self.n_max() {
            return Err(Error::OutOfRange {
                n,
                n_max: self.n_max(),
            });
        }
        Ok(())
    }

    pub fn gamma(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        Ok(self.ln_gamma[n].exp())
    }

    pub fn kappa(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        Ok(self.ln_kappa[n].exp())
    }

    pub fn r(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        Ok(self.ln_r[n].exp())
    }

    pub fn ln_r(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        Ok(self.ln_r[n])
    }

    /// `κ_n / γ_n`.
    pub fn regime_ratio(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        Ok((self.ln_kappa[n] - self.ln_gamma[n]).exp())
    }
}
