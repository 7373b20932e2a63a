use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Element-wise nonlinearity of a reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// Gauss error function: odd, bounded, differentiable.
    Erf,
    /// Rectified linear unit: unbounded, kink at the origin.
    Relu,
    /// Sign function, with `sign(0) = 0`: bounded, jump at the origin.
    Sign,
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Erf, Activation::Relu, Activation::Sign];

    /// Unchecked evaluation for hot loops. Non-finite input propagates.
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Erf => libm::erf(x),
            Activation::Relu => {
                if x <= 0.0 {
                    0.0
                } else {
                    x
                }
            }
            Activation::Sign => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else if x == 0.0 {
                    0.0
                } else {
                    x
                }
            }
        }
    }

    pub fn activate(self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("{self} applied to non-finite input {x}")));
        }
        Ok(self.apply(x))
    }

    /// Whether the activation is infinitely differentiable. The others are
    /// smooth everywhere except at the origin.
    pub fn is_smooth(self) -> bool {
        matches!(self, Activation::Erf)
    }

    /// Odd activations have zero mean under a centred Gaussian.
    pub fn is_odd(self) -> bool {
        matches!(self, Activation::Erf | Activation::Sign)
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Erf => "erf",
            Activation::Relu => "relu",
            Activation::Sign => "sign",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "erf" => Ok(Activation::Erf),
            "relu" => Ok(Activation::Relu),
            "sign" => Ok(Activation::Sign),
            other => Err(Error::invalid(
                "activation",
                format!("unknown activation `{other}` (expected erf, relu or sign)"),
            )),
        }
    }
}
