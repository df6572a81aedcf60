//! Energy-harvesting transfer functions.
//!
//! The non-linear model is a logistic curve in the received RF power with a
//! saturation level `m`, steepness `a` and turn-on threshold `b`. The
//! normalized curve [`phi_nonlinear`] subtracts the zero-input offset so that
//! no power is harvested from no input; the optimizer works with the raw
//! logistic [`psi`], which differs from it only by an affine map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent magnitude beyond which `exp` is saturated.
const EXP_LIMIT: f64 = 700.0;

/// Per-receiver harvesting constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EhParams {
    /// Saturation power (W).
    pub m: f64,
    /// Steepness (1/W).
    pub a: f64,
    /// Turn-on threshold (W).
    pub b: f64,
    /// Conversion efficiency of the linear model.
    pub eta: f64,
}

impl EhParams {
    pub fn new(m: f64, a: f64, b: f64, eta: f64) -> Result<Self> {
        let p = Self { m, a, b, eta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.m.is_finite()
            && self.m > 0.0
            && self.a.is_finite()
            && self.a > 0.0
            && self.b.is_finite()
            && self.b >= 0.0
            && (0.0..=1.0).contains(&self.eta);
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "EH parameters need m > 0, a > 0, b >= 0, 0 <= eta <= 1, got {self:?}"
            )))
        }
    }

    /// Zero-input offset of the logistic curve, `1 / (1 + exp(a b))`.
    pub fn omega(&self) -> f64 {
        logistic(-self.a * self.b)
    }

    /// Denominator of the logistic ratio, `1 + exp(-a (p - b))`.
    pub fn denominator(&self, p_rf: f64) -> f64 {
        1.0 + (-self.a * (p_rf - self.b)).min(EXP_LIMIT).exp()
    }

    /// `exp(-a (p - b))`, the varying part of [`Self::denominator`].
    pub fn decay(&self, p_rf: f64) -> f64 {
        (-self.a * (p_rf - self.b)).min(EXP_LIMIT).exp()
    }
}

impl Default for EhParams {
    /// The per-receiver constants of the reference simulation scenario.
    fn default() -> Self {
        Self {
            m: 0.02,
            a: 6400.0,
            b: 0.003,
            eta: 0.8,
        }
    }
}

/// Logistic function `1 / (1 + exp(-x))` evaluated without overflow.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.max(-EXP_LIMIT).exp();
        e / (1.0 + e)
    }
}

/// Raw logistic harvested power `M / (1 + exp(-a (p - b)))`.
pub fn psi(p_rf: f64, params: &EhParams) -> f64 {
    params.m * logistic(params.a * (p_rf - params.b))
}

/// Harvested power of the non-linear model, zero at zero input.
pub fn phi_nonlinear(p_rf: f64, params: &EhParams) -> f64 {
    let omega = params.omega();
    (psi(p_rf, params) - params.m * omega) / (1.0 - omega)
}

/// Harvested power of the linear model.
pub fn phi_linear(p_rf: f64, params: &EhParams) -> f64 {
    params.eta * p_rf
}

/// Derivative of [`psi`] with respect to the received power.
pub fn psi_derivative(p_rf: f64, params: &EhParams) -> f64 {
    let x = params.a * (p_rf - params.b);
    params.m * params.a * logistic(x) * logistic(-x)
}
