//! Finite-size reservoir simulators: weight sampling, vanilla/leaky/sparse
//! and deep state updates, state Gram matrices and a ridge readout.

mod dynamics;
mod readout;
mod weights;

pub use dynamics::{
    deep_rc_gram, deep_run, features, init_state, rc_gram, run, step, State, StateTrajectory,
    WeightMode,
};
pub use readout::train_readout;
pub use weights::{
    sample_weights, CsrMatrix, DenseMatrix, LatentWeights, Layout, RecurrentWeights, WeightSet,
    CSR_MAX_SPARSITY,
};

use serde::{Deserialize, Serialize};

use crate::kernelcore::Activation;
use crate::{Error, Result};

/// Hyperparameters of one reservoir layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirConfig {
    /// Number of neurons `N`.
    pub n: usize,
    /// Input dimension.
    pub d: usize,
    /// Reservoir weight scale `σ_r`.
    pub sigma_r: f64,
    /// Input weight scale `σ_i`.
    pub sigma_i: f64,
    pub activation: Activation,
    /// Leak rate `a` in `[0, 1]`; 1 means no leak.
    pub leak: f64,
    /// Fraction `s` of non-zero recurrent weights in `(0, 1]`; 1 is dense.
    pub sparsity: f64,
    pub seed: u64,
}

impl ReservoirConfig {
    /// Dense, non-leaky layer with unit scales.
    pub fn new(n: usize, d: usize, activation: Activation) -> Self {
        ReservoirConfig {
            n,
            d,
            sigma_r: 1.0,
            sigma_i: 1.0,
            activation,
            leak: 1.0,
            sparsity: 1.0,
            seed: 0,
        }
    }

    pub fn with_scales(mut self, sigma_r: f64, sigma_i: f64) -> Self {
        self.sigma_r = sigma_r;
        self.sigma_i = sigma_i;
        self
    }

    pub fn with_leak(mut self, leak: f64) -> Self {
        self.leak = leak;
        self
    }

    pub fn with_sparsity(mut self, sparsity: f64) -> Self {
        self.sparsity = sparsity;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n", "reservoir size must be >= 1"));
        }
        if self.d == 0 {
            return Err(Error::invalid("d", "input dimension must be >= 1"));
        }
        if !(self.sigma_r.is_finite() && self.sigma_r > 0.0) {
            return Err(Error::invalid("sigma_r", format!("must be positive, got {}", self.sigma_r)));
        }
        if !(self.sigma_i.is_finite() && self.sigma_i > 0.0) {
            return Err(Error::invalid("sigma_i", format!("must be positive, got {}", self.sigma_i)));
        }
        if !(0.0..=1.0).contains(&self.leak) {
            return Err(Error::invalid("leak", format!("must lie in [0, 1], got {}", self.leak)));
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return Err(Error::invalid(
                "sparsity",
                format!("must lie in (0, 1], got {}", self.sparsity),
            ));
        }
        Ok(())
    }
}

/// Stack of layers; layer `l > 0` is driven by the states of layer `l − 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepConfig {
    pub layers: Vec<ReservoirConfig>,
}

impl DeepConfig {
    pub fn new(layers: Vec<ReservoirConfig>) -> Result<Self> {
        let deep = DeepConfig { layers };
        deep.validate()?;
        Ok(deep)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::invalid("layers", "a deep reservoir needs at least one layer"));
        }
        for (l, cfg) in self.layers.iter().enumerate() {
            cfg.validate()?;
            if l > 0 && cfg.d != self.layers[l - 1].n {
                return Err(Error::Shape(format!(
                    "layer {l} expects input dimension {} but layer {} has {} neurons",
                    cfg.d,
                    l - 1,
                    self.layers[l - 1].n
                )));
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }
}
