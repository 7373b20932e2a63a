//! Activations and the iterable kernel `k(‖u‖², ‖v‖², uᵀv)` associated with
//! standard Gaussian weights.

mod activation;
mod closed_form;
mod quadrature;

use std::sync::Arc;

pub use activation::Activation;
pub use closed_form::kernel_closed_form;
pub use quadrature::{kernel_quadrature, tensor_hermite, GaussRule, QuadratureRule, DEFAULT_ORDER};

use crate::{Error, Result};

/// Relative slack allowed on the Cauchy-Schwarz bound `uv² ≤ nu·nv`.
pub const CAUCHY_SCHWARZ_TOL: f64 = 1e-9;

/// The three scalar arguments of an iterable kernel: `‖u‖²`, `‖v‖²`, `uᵀv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelArgs {
    pub nu: f64,
    pub nv: f64,
    pub uv: f64,
}

impl KernelArgs {
    pub fn new(nu: f64, nv: f64, uv: f64) -> Result<Self> {
        if !(nu.is_finite() && nv.is_finite() && uv.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite kernel arguments ({nu}, {nv}, {uv})"
            )));
        }
        if nu < 0.0 || nv < 0.0 {
            return Err(Error::Domain(format!("negative squared norm ({nu}, {nv})")));
        }
        if uv * uv > nu * nv * (1.0 + CAUCHY_SCHWARZ_TOL) + f64::MIN_POSITIVE {
            return Err(Error::Domain(format!(
                "Cauchy-Schwarz violated: uv² = {} > nu·nv = {}",
                uv * uv,
                nu * nv
            )));
        }
        Ok(KernelArgs { nu, nv, uv })
    }

    pub fn swapped(self) -> Self {
        KernelArgs {
            nu: self.nv,
            nv: self.nu,
            uv: self.uv,
        }
    }

    /// Cosine of the angle between the two arguments, clamped to `[−1, 1]`.
    /// Zero when either norm vanishes.
    pub fn correlation(self) -> f64 {
        let denom = (self.nu * self.nv).sqrt();
        if denom == 0.0 {
            0.0
        } else {
            (self.uv / denom).clamp(-1.0, 1.0)
        }
    }
}

/// How a [`KernelFunction`] is evaluated.
#[derive(Debug, Clone)]
pub enum Evaluator {
    ClosedForm,
    Quadrature(Arc<QuadratureRule>),
}

impl PartialEq for Evaluator {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Evaluator::ClosedForm, Evaluator::ClosedForm) => true,
            (Evaluator::Quadrature(a), Evaluator::Quadrature(b)) => a.order() == b.order(),
            _ => false,
        }
    }
}

/// An activation together with the way its kernel is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFunction {
    pub activation: Activation,
    pub evaluator: Evaluator,
}

impl KernelFunction {
    /// Closed form; every supported activation has one.
    pub fn new(activation: Activation) -> Self {
        KernelFunction {
            activation,
            evaluator: Evaluator::ClosedForm,
        }
    }

    pub fn quadrature(activation: Activation, rule: Arc<QuadratureRule>) -> Self {
        KernelFunction {
            activation,
            evaluator: Evaluator::Quadrature(rule),
        }
    }

    pub fn eval(&self, nu: f64, nv: f64, uv: f64) -> Result<f64> {
        let args = KernelArgs::new(nu, nv, uv)?;
        match &self.evaluator {
            Evaluator::ClosedForm => kernel_closed_form(self.activation, args),
            Evaluator::Quadrature(rule) => kernel_quadrature(self.activation, args, rule),
        }
    }
}
