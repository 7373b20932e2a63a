use rand::Rng;
use rand_distr::StandardNormal;

use super::{sample_weights, DeepConfig, ReservoirConfig, WeightSet};
use crate::gram::GramMatrix;
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

pub type State = Vec<f64>;

/// States `x⁽⁰⁾ … x⁽ᵀ⁾` of one reservoir driven by one input sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub states: Vec<State>,
}

impl StateTrajectory {
    /// State after the last input.
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds at least x0")
    }

    /// Number of inputs consumed.
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }
}

/// Whether weights stay fixed over time or are redrawn at every step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    #[default]
    Fixed,
    /// Step 0 uses the given weights; step `t ≥ 1` draws fresh ones from
    /// the `Resampled { layer, step: t }` stream of `seed`. Runs sharing the
    /// seed see the same sequence of matrices.
    Resample { seed: u64 },
}

/// Gaussian vector rescaled to unit norm.
pub fn init_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> State {
    assert!(n >= 1, "state dimension must be >= 1");
    loop {
        let mut x: State = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            x.iter_mut().for_each(|v| *v /= norm);
            return x;
        }
    }
}

fn check_dims(state: &[f64], input: &[f64], w: &WeightSet, config: &ReservoirConfig) -> Result<()> {
    if w.n() != config.n || w.d() != config.d {
        return Err(Error::Shape(format!(
            "weights are {}x{} / {}x{} but the layer is configured for n = {}, d = {}",
            w.n(),
            w.n(),
            w.n(),
            w.d(),
            config.n,
            config.d
        )));
    }
    if state.len() != config.n {
        return Err(Error::Shape(format!("state has length {}, expected {}", state.len(), config.n)));
    }
    if input.len() != config.d {
        return Err(Error::Shape(format!("input has length {}, expected {}", input.len(), config.d)));
    }
    Ok(())
}

/// Random features `f(σ_r W_r x + σ_i W_i i)` (before the `1/√N` factor).
pub fn features(state: &[f64], input: &[f64], w: &WeightSet, config: &ReservoirConfig) -> Result<Vec<f64>> {
    check_dims(state, input, w, config)?;
    let mut pre = vec![0.0; config.n];
    let mut drive = vec![0.0; config.n];
    w.w_r.scaled_matvec(config.sigma_r, state, &mut pre);
    w.w_i.scaled_matvec(config.sigma_i, input, &mut drive);
    let f = config.activation;
    Ok(pre
        .iter()
        .zip(&drive)
        .map(|(&r, &i)| f.apply(r + i))
        .collect())
}

/// `(1 − a)·x + a·(1/√N)·f(σ_r W_r x + σ_i W_i i)`.
pub fn step(state: &[f64], input: &[f64], w: &WeightSet, config: &ReservoirConfig) -> Result<State> {
    let feats = features(state, input, w, config)?;
    let a = config.leak;
    let inv_sqrt_n = 1.0 / (config.n as f64).sqrt();
    let next: State = state
        .iter()
        .zip(&feats)
        .map(|(&x, &f)| (1.0 - a) * x + a * (inv_sqrt_n * f))
        .collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow { layer: 0, step: 0 });
    }
    Ok(next)
}

fn run_layer(
    layer: usize,
    inputs: &[impl AsRef<[f64]>],
    w: &WeightSet,
    config: &ReservoirConfig,
    x0: &[f64],
    mode: WeightMode,
) -> Result<StateTrajectory> {
    if inputs.is_empty() {
        return Err(Error::Shape("input sequence is empty".into()));
    }
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(x0.to_vec());
    let mut fresh: Option<WeightSet> = None;
    for (t, input) in inputs.iter().enumerate() {
        let weights = match mode {
            WeightMode::Resample { seed } if t > 0 => {
                let mut rng = stream_rng(seed, Stream::Resampled { layer, step: t });
                fresh.insert(sample_weights(config, &mut rng))
            }
            _ => w,
        };
        let next = step(states.last().unwrap(), input.as_ref(), weights, config).map_err(|e| match e {
            Error::Overflow { .. } => Error::Overflow { layer, step: t },
            other => other,
        })?;
        states.push(next);
    }
    Ok(StateTrajectory { states })
}

/// Iterates [`step`] over `inputs` starting from `x0`.
pub fn run(
    inputs: &[impl AsRef<[f64]>],
    w: &WeightSet,
    config: &ReservoirConfig,
    x0: &[f64],
    mode: WeightMode,
) -> Result<StateTrajectory> {
    config.validate()?;
    run_layer(0, inputs, w, config, x0, mode)
}

/// Runs a stack of reservoirs: layer 0 reads `inputs`, layer `l` reads the
/// freshly updated states `x_{l−1}⁽ᵗ⁺¹⁾` of the layer below.
pub fn deep_run(
    inputs: &[impl AsRef<[f64]>],
    deep: &DeepConfig,
    weight_sets: &[WeightSet],
    x0s: &[impl AsRef<[f64]>],
    mode: WeightMode,
) -> Result<Vec<StateTrajectory>> {
    deep.validate()?;
    if weight_sets.len() != deep.depth() || x0s.len() != deep.depth() {
        return Err(Error::Shape(format!(
            "{} layers but {} weight sets and {} initial states",
            deep.depth(),
            weight_sets.len(),
            x0s.len()
        )));
    }
    let mut out: Vec<StateTrajectory> = Vec::with_capacity(deep.depth());
    for (l, cfg) in deep.layers.iter().enumerate() {
        let traj = match out.last() {
            None => run_layer(l, inputs, &weight_sets[l], cfg, x0s[l].as_ref(), mode)?,
            Some(below) => run_layer(l, &below.states[1..], &weight_sets[l], cfg, x0s[l].as_ref(), mode)?,
        };
        out.push(traj);
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `G_nm = x_nᵀ x_m` over the final states of `M` runs.
pub fn rc_gram(states: &[impl AsRef<[f64]>]) -> GramMatrix {
    GramMatrix::from_fn(states.len(), |n, m| dot(states[n].as_ref(), states[m].as_ref()))
}

/// `G_nm = Σ_l x_{l,n}ᵀ x_{l,m}`; `per_layer[l][n]` is the final state of
/// input `n` in layer `l`.
pub fn deep_rc_gram(per_layer: &[Vec<impl AsRef<[f64]>>]) -> Result<GramMatrix> {
    let grams: Vec<GramMatrix> = per_layer.iter().map(|states| rc_gram(states)).collect();
    GramMatrix::sum(&grams)
}
