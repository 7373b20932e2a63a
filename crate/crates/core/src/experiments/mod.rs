//! Monte-Carlo engine and the studies built on it.
//!
//! Every study takes a [`ScanSpec`] (or a few extra lists), derives one seed
//! per repetition from the master seed, evaluates repetitions in parallel and
//! reduces them in repetition order. Results are therefore bit-identical for
//! any number of workers.

mod convergence;
mod deep;
mod kernel_check;
mod nelder_mead;
mod random_features;
mod result;
mod sparsity;

pub use convergence::{convergence_scan, cross_term_probe};
pub use deep::{deep_size_scan, optimize_deep_sizes, optimize_deep_sizes_with, size_options, DeepSizeOptimum};
pub use kernel_check::{kernel_check, random_kernel_args, KernelCheckSpec};
pub use nelder_mead::{nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use random_features::{loglog_slope, rf_error_curve, sparse_rf_experiment, RandomFeatureSpec};
pub use result::{Axis, AxisValues, Column, ExperimentResult, ExperimentSpec};
pub use sparsity::{sparsity_scan, SparsityReport};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gram::GramMatrix;
use crate::kernelcore::Activation;
use crate::reservoir::{deep_rc_gram, deep_run, init_state, sample_weights, DeepConfig, ReservoirConfig, State, WeightMode, WeightSet};
use crate::rkernel::{rk_gram, RKParams, RkTopology};
use crate::rng::{rep_seeds, stream_rng, Stream};
use crate::{Error, Result};

/// Reservoir topology of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Topology {
    Vanilla,
    Sparse { sparsity: f64 },
    Leaky { leak: f64 },
    /// Stacked dense reservoirs; `sizes` replaces the scan's `n`.
    Deep { sizes: Vec<usize> },
}

/// Everything that defines a Monte-Carlo scan over `(σ_r, σ_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub topology: Topology,
    pub activation: Activation,
    pub sigma_r_grid: Vec<f64>,
    pub sigma_i_grid: Vec<f64>,
    /// Reservoir size.
    pub n: usize,
    /// Sequence length.
    pub t: usize,
    /// Number of input sequences.
    pub m: usize,
    /// Input dimension.
    pub d: usize,
    pub reps: usize,
    pub master_seed: u64,
}

impl ScanSpec {
    /// Two inputs of length 10 and dimension 100, reservoirs of 200 neurons,
    /// one operating point `σ_r = σ_i = 1`, 100 repetitions.
    pub fn reference_setting(topology: Topology, activation: Activation) -> Self {
        ScanSpec {
            topology,
            activation,
            sigma_r_grid: vec![1.0],
            sigma_i_grid: vec![1.0],
            n: 200,
            t: 10,
            m: 2,
            d: 100,
            reps: 100,
            master_seed: 0,
        }
    }

    pub fn with_point(mut self, sigma_r: f64, sigma_i: f64) -> Self {
        self.sigma_r_grid = vec![sigma_r];
        self.sigma_i_grid = vec![sigma_i];
        self
    }

    pub fn with_grids(mut self, sigma_r_grid: Vec<f64>, sigma_i_grid: Vec<f64>) -> Self {
        self.sigma_r_grid = sigma_r_grid;
        self.sigma_i_grid = sigma_i_grid;
        self
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps = reps;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, grid) in [("sigma_r", &self.sigma_r_grid), ("sigma_i", &self.sigma_i_grid)] {
            if grid.is_empty() {
                return Err(Error::invalid(name, "grid must not be empty"));
            }
            if let Some(bad) = grid.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
                return Err(Error::invalid(name, format!("must be positive, got {bad}")));
            }
        }
        if self.reps == 0 {
            return Err(Error::invalid("reps", "must be >= 1"));
        }
        for (name, v) in [("n", self.n), ("t", self.t), ("m", self.m), ("d", self.d)] {
            if v == 0 {
                return Err(Error::invalid(name, "must be >= 1"));
            }
        }
        match &self.topology {
            Topology::Vanilla => {}
            Topology::Sparse { sparsity } => {
                if !(*sparsity > 0.0 && *sparsity <= 1.0) {
                    return Err(Error::invalid("sparsity", format!("must lie in (0, 1], got {sparsity}")));
                }
            }
            Topology::Leaky { leak } => {
                if !(0.0..=1.0).contains(leak) {
                    return Err(Error::invalid("leak", format!("must lie in [0, 1], got {leak}")));
                }
            }
            Topology::Deep { sizes } => {
                if sizes.is_empty() {
                    return Err(Error::invalid("layers", "need at least one layer size"));
                }
                if sizes.contains(&0) {
                    return Err(Error::invalid("layers", "layer sizes must be >= 1"));
                }
            }
        }
        Ok(())
    }

    /// Neurons per layer.
    pub fn layer_sizes(&self) -> Vec<usize> {
        match &self.topology {
            Topology::Deep { sizes } => sizes.clone(),
            _ => vec![self.n],
        }
    }

    /// The single `(σ_r, σ_i)` of a study that does not scan scales.
    pub fn operating_point(&self) -> Result<(f64, f64)> {
        for (name, grid) in [("sigma_r", &self.sigma_r_grid), ("sigma_i", &self.sigma_i_grid)] {
            if grid.len() != 1 {
                return Err(Error::invalid(
                    name,
                    format!("this study uses a single value, got a grid of {}", grid.len()),
                ));
            }
        }
        Ok((self.sigma_r_grid[0], self.sigma_i_grid[0]))
    }

    /// `(σ_r, σ_i)` grid points, `σ_r` outer.
    pub fn grid_points(&self) -> Vec<(f64, f64)> {
        self.sigma_r_grid
            .iter()
            .flat_map(|&r| self.sigma_i_grid.iter().map(move |&i| (r, i)))
            .collect()
    }

    pub fn seeds(&self) -> Vec<u64> {
        rep_seeds(self.master_seed, self.reps)
    }

    /// Layer configurations at one grid point.
    pub fn deep_config(&self, sigma_r: f64, sigma_i: f64) -> Result<DeepConfig> {
        let (leak, sparsity) = match self.topology {
            Topology::Sparse { sparsity } => (1.0, sparsity),
            Topology::Leaky { leak } => (leak, 1.0),
            _ => (1.0, 1.0),
        };
        let sizes = self.layer_sizes();
        let layers = sizes
            .iter()
            .enumerate()
            .map(|(l, &n)| {
                let d = if l == 0 { self.d } else { sizes[l - 1] };
                ReservoirConfig::new(n, d, self.activation)
                    .with_scales(sigma_r, sigma_i)
                    .with_leak(leak)
                    .with_sparsity(sparsity)
            })
            .collect();
        DeepConfig::new(layers)
    }

    /// Recurrent-kernel counterpart at one grid point. Sparsity does not
    /// change the limit.
    pub fn rk_topology(&self, sigma_r: f64, sigma_i: f64) -> RkTopology {
        let base = RKParams::new(self.activation, sigma_r, sigma_i);
        match &self.topology {
            Topology::Vanilla | Topology::Sparse { .. } => RkTopology::Single(base),
            Topology::Leaky { leak } => RkTopology::Single(base.with_leak(*leak)),
            Topology::Deep { sizes } => RkTopology::Deep(vec![base; sizes.len()]),
        }
    }
}

/// Logarithmically spaced grid of `k` points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..k)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == k {
                hi
            } else {
                (a + (b - a) * i as f64 / (k - 1) as f64).exp()
            }
        })
        .collect()
}

/// Evenly spaced grid of `k` points from `lo` to `hi`.
pub fn linear_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    (0..k)
        .map(|i| if i + 1 == k { hi } else { lo + (hi - lo) * i as f64 / (k - 1) as f64 })
        .collect()
}

/// `L = Σ_nm (G^RC_nm − G^RK_nm)²`.
pub fn convergence_metric(g_rc: &GramMatrix, g_rk: &GramMatrix) -> Result<f64> {
    g_rc.squared_distance(g_rk)
}

/// `m` sequences of `t` inputs with i.i.d. `N(0, 1/d)` entries, indexed
/// `[sequence][step][component]`.
pub fn draw_inputs<R: Rng + ?Sized>(rng: &mut R, m: usize, t: usize, d: usize) -> Vec<Vec<Vec<f64>>> {
    let scale = 1.0 / (d as f64).sqrt();
    (0..m)
        .map(|_| {
            (0..t)
                .map(|_| (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())
                .collect()
        })
        .collect()
}

/// Inputs of one repetition.
pub fn rep_inputs(spec: &ScanSpec, seed: u64) -> Vec<Vec<Vec<f64>>> {
    draw_inputs(&mut stream_rng(seed, Stream::Inputs), spec.m, spec.t, spec.d)
}

/// Recurrent-kernel Gram of one repetition at one grid point.
pub fn rep_rk_gram(spec: &ScanSpec, seed: u64, sigma_r: f64, sigma_i: f64) -> Result<GramMatrix> {
    rk_gram(&rep_inputs(spec, seed), &spec.rk_topology(sigma_r, sigma_i))
}

/// Parallel map over repetitions with order-preserving collection.
#[derive(Debug)]
pub struct Engine {
    pool: rayon::ThreadPool,
}

impl Engine {
    /// `workers = 0` uses one thread per available core.
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?;
        Ok(Engine { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// `f(rep, seed)` for every seed, results in seed order.
    pub fn map<T, F>(&self, seeds: &[u64], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, u64) -> T + Sync + Send,
    {
        self.pool
            .install(|| seeds.par_iter().enumerate().map(|(r, &s)| f(r, s)).collect())
    }
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new(0).expect("default thread pool")
    }
}

/// Random draws of one repetition of a scan: inputs, weights per layer and
/// initial states `x0s[input][layer]`.
pub(crate) struct RepDraw {
    pub inputs: Vec<Vec<Vec<f64>>>,
    pub weights: Vec<WeightSet>,
    pub x0s: Vec<Vec<State>>,
}

impl RepDraw {
    pub fn new(spec: &ScanSpec, seed: u64) -> Result<Self> {
        // scales do not enter the draws
        let deep = spec.deep_config(1.0, 1.0)?;
        Ok(Self::with_config(spec, &deep, seed))
    }

    pub fn with_config(spec: &ScanSpec, deep: &DeepConfig, seed: u64) -> Self {
        let inputs = rep_inputs(spec, seed);
        let weights = deep
            .layers
            .iter()
            .enumerate()
            .map(|(l, cfg)| sample_weights(cfg, &mut stream_rng(seed, Stream::Weights { layer: l })))
            .collect();
        let x0s = (0..spec.m)
            .map(|input| {
                deep.layers
                    .iter()
                    .enumerate()
                    .map(|(l, cfg)| init_state(cfg.n, &mut stream_rng(seed, Stream::Initial { layer: l, input })))
                    .collect()
            })
            .collect();
        RepDraw { inputs, weights, x0s }
    }

    /// Total reservoir Gram (summed over layers) after all inputs, or
    /// `Error::Overflow` if any run diverges.
    pub fn rc_gram(&self, deep: &DeepConfig, weights: &[WeightSet]) -> Result<GramMatrix> {
        let mut finals: Vec<Vec<State>> = vec![Vec::with_capacity(self.inputs.len()); deep.depth()];
        for (seq, x0) in self.inputs.iter().zip(&self.x0s) {
            let trajs = deep_run(seq, deep, weights, x0, WeightMode::Fixed)?;
            for (l, traj) in trajs.into_iter().enumerate() {
                finals[l].push(traj.states.into_iter().last().expect("non-empty trajectory"));
            }
        }
        deep_rc_gram(&finals)
    }
}

/// Per-point reduction over repetitions: mean and standard error of the
/// finite samples, and the fraction of diverged ones. More than half diverged
/// flags the point with NaN.
pub(crate) struct Reduced {
    pub mean: f64,
    pub std_err: f64,
    pub diverged: f64,
}

pub(crate) fn reduce(samples: impl IntoIterator<Item = Option<f64>>) -> Reduced {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut ok = 0usize;
    let mut total = 0usize;
    for s in samples {
        total += 1;
        if let Some(v) = s {
            sum += v;
            sum_sq += v * v;
            ok += 1;
        }
    }
    let diverged = if total == 0 { 0.0 } else { (total - ok) as f64 / total as f64 };
    if ok == 0 || diverged > 0.5 {
        return Reduced {
            mean: f64::NAN,
            std_err: f64::NAN,
            diverged,
        };
    }
    let mean = sum / ok as f64;
    let std_err = if ok > 1 {
        let var = ((sum_sq - ok as f64 * mean * mean) / (ok - 1) as f64).max(0.0);
        (var / ok as f64).sqrt()
    } else {
        0.0
    };
    Reduced { mean, std_err, diverged }
}

/// Divergence turns into a missing sample; any other error is real.
pub(crate) fn diverged_as_none(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        Ok(_) | Err(Error::Overflow { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Recurrent-kernel Gram, or `None` once the recursion itself overflows
/// (unbounded activations at large scales).
pub(crate) fn rk_or_diverged(inputs: &[Vec<Vec<f64>>], topology: &RkTopology) -> Result<Option<GramMatrix>> {
    match rk_gram(inputs, topology) {
        Ok(g) if g.is_finite() => Ok(Some(g)),
        Ok(_) => Ok(None),
        Err(Error::Domain(_)) if inputs.iter().flatten().flatten().all(|v| v.is_finite()) => Ok(None),
        Err(e) => Err(e),
    }
}
