use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{
    convergence_metric, diverged_as_none, nelder_mead, reduce, rep_inputs, Axis, Column, Engine, ExperimentResult,
    ExperimentSpec, NelderMeadOptions, RepDraw, ScanSpec, Topology,
};
use crate::reservoir::{init_state, DeepConfig, DenseMatrix, RecurrentWeights, WeightSet};
use crate::rkernel::rk_gram;
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

fn row_normals(seed: u64, layer: usize, input: bool, row: usize, len: usize) -> impl Iterator<Item = f64> {
    let mut rng = stream_rng(seed, Stream::WeightRow { layer, input, row });
    (0..len).map(move |_| rng.sample::<f64, _>(StandardNormal))
}

/// Dense standard-normal weights whose entry `(i, j)` depends only on
/// `(seed, layer, i, j)`: every row reads its own stream, so the matrices for
/// a smaller layer are exactly the top-left blocks of those for a larger one.
pub(crate) fn nested_weights(seed: u64, layer: usize, n: usize, d: usize) -> WeightSet {
    let w_r: Vec<f64> = (0..n).flat_map(|i| row_normals(seed, layer, false, i, n)).collect();
    let w_i: Vec<f64> = (0..n).flat_map(|i| row_normals(seed, layer, true, i, d)).collect();
    WeightSet {
        w_r: RecurrentWeights::Dense(DenseMatrix::from_vec(n, n, w_r)),
        w_i: DenseMatrix::from_vec(n, d, w_i),
        sparsity_used: 1.0,
    }
}

/// Monte-Carlo samples of the total-kernel metric for every size vector, on
/// common random numbers: inputs and kernel Grams are shared, weights and
/// initial states are nested across sizes.
fn deep_samples(spec: &ScanSpec, size_sets: &[Vec<usize>], engine: &Engine) -> Result<Vec<Vec<Option<f64>>>> {
    let (sr, si) = spec.operating_point()?;
    let configs = size_sets
        .iter()
        .map(|sizes| {
            let mut s = spec.clone();
            s.topology = Topology::Deep { sizes: sizes.clone() };
            s.deep_config(sr, si)
        })
        .collect::<Result<Vec<DeepConfig>>>()?;
    let depth = size_sets.first().map_or(0, Vec::len);
    let mut rk_spec = spec.clone();
    rk_spec.topology = Topology::Deep { sizes: vec![1; depth] };
    let rk_topology = rk_spec.rk_topology(sr, si);

    let per_rep: Vec<Result<Vec<Option<f64>>>> = engine.map(&spec.seeds(), |_, seed| {
        let inputs = rep_inputs(spec, seed);
        let rk = rk_gram(&inputs, &rk_topology)?;
        configs
            .iter()
            .map(|deep| {
                let weights: Vec<WeightSet> = deep
                    .layers
                    .iter()
                    .enumerate()
                    .map(|(l, c)| nested_weights(seed, l, c.n, c.d))
                    .collect();
                let x0s = (0..spec.m)
                    .map(|input| {
                        deep.layers
                            .iter()
                            .enumerate()
                            .map(|(l, c)| init_state(c.n, &mut stream_rng(seed, Stream::Initial { layer: l, input })))
                            .collect()
                    })
                    .collect();
                let draw = RepDraw {
                    inputs: inputs.clone(),
                    weights: Vec::new(),
                    x0s,
                };
                let l = draw.rc_gram(deep, &weights).and_then(|rc| convergence_metric(&rc, &rk));
                diverged_as_none(l)
            })
            .collect()
    });
    per_rep.into_iter().collect()
}

fn check_deep(spec: &ScanSpec) -> Result<()> {
    spec.validate()?;
    if !matches!(spec.topology, Topology::Deep { .. }) {
        return Err(Error::invalid("topology", "deep-size studies need the deep topology"));
    }
    Ok(())
}

/// `n₂ = round(√(budget − n₁²))` and the mean total-kernel metric for every
/// `n₁` in `n1_list`. The layer sizes in `spec.topology` are replaced by the
/// budget split.
pub fn deep_size_scan(budget: u64, n1_list: &[usize], spec: &ScanSpec, engine: &Engine) -> Result<ExperimentResult> {
    check_deep(spec)?;
    if n1_list.is_empty() {
        return Err(Error::invalid("n1", "need at least one first-layer size"));
    }
    let mut size_sets = Vec::with_capacity(n1_list.len());
    for &n1 in n1_list {
        let sq = (n1 as u64) * (n1 as u64);
        if n1 == 0 || sq >= budget {
            return Err(Error::Infeasible(format!("n1 = {n1} leaves nothing of the budget {budget}")));
        }
        let n2 = ((budget - sq) as f64).sqrt().round() as usize;
        if n2 == 0 {
            return Err(Error::Infeasible(format!("n1 = {n1} leaves a second layer of size 0")));
        }
        size_sets.push(vec![n1, n2]);
    }
    let samples = deep_samples(spec, &size_sets, engine)?;
    let mut mean = Vec::new();
    let mut std_err = Vec::new();
    let mut diverged = Vec::new();
    for k in 0..size_sets.len() {
        let r = reduce(samples.iter().map(|rep| rep[k]));
        mean.push(r.mean);
        std_err.push(r.std_err);
        diverged.push(r.diverged);
    }
    Ok(ExperimentResult {
        spec: ExperimentSpec::DeepSizes {
            scan: spec.clone(),
            budget,
            n1_list: n1_list.to_vec(),
        },
        axes: vec![
            Axis::numeric("n1", size_sets.iter().map(|s| s[0] as f64).collect()),
            Axis::numeric("n2", size_sets.iter().map(|s| s[1] as f64).collect()),
        ],
        values: vec![Column::new("L", mean), Column::new("L_std_err", std_err)],
        diverged_fraction: diverged,
        seeds: spec.seeds(),
    })
}

/// Optimised layer sizes under `Σ n_l² = budget`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepSizeOptimum {
    /// Rounded sizes, the last one determined by the budget.
    pub sizes: Vec<usize>,
    /// Simplex centroid for the free sizes followed by the implied last size.
    pub continuous: Vec<f64>,
    /// Objective at `sizes`.
    pub objective: f64,
    pub iterations: usize,
    /// Distinct size vectors evaluated.
    pub evaluations: usize,
    pub converged: bool,
}

impl DeepSizeOptimum {
    /// Whether `n₁ ≥ n₂ ≥ … ≥ n_L`.
    pub fn nonincreasing(&self) -> bool {
        self.sizes.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn into_result(self, spec: ExperimentSpec, seeds: Vec<u64>) -> ExperimentResult {
        let l = self.sizes.len();
        ExperimentResult {
            spec,
            axes: vec![Axis::numeric("layer", (1..=l).map(|i| i as f64).collect())],
            values: vec![
                Column::new("size", self.sizes.iter().map(|&s| s as f64).collect()),
                Column::new("size_continuous", self.continuous),
                Column::new("L", vec![self.objective; l]),
            ],
            diverged_fraction: vec![0.0; l],
            seeds,
        }
    }
}

/// Integer sizes for free coordinates `x`, or `None` if the budget leaves no
/// room for the last layer.
fn sizes_from(x: &[f64], budget: u64) -> Option<(Vec<usize>, f64)> {
    let mut sizes = Vec::with_capacity(x.len() + 1);
    let mut used = 0u64;
    for &v in x {
        if !(v.is_finite() && v >= 0.5) {
            return None;
        }
        let n = v.round() as u64;
        used = used.checked_add(n.checked_mul(n)?)?;
        sizes.push(n as usize);
    }
    if used >= budget {
        return None;
    }
    let last = ((budget - used) as f64).sqrt();
    if last.round() < 1.0 {
        return None;
    }
    sizes.push(last.round() as usize);
    Some((sizes, last))
}

const PENALTY: f64 = 1e6;

/// Nelder-Mead over the `L − 1` free sizes with an arbitrary objective on
/// the integer size vector. Points that exhaust the budget score a large
/// finite penalty.
pub fn optimize_deep_sizes_with(
    layers: usize,
    budget: u64,
    options: &NelderMeadOptions,
    mut objective: impl FnMut(&[usize]) -> Result<f64>,
) -> Result<DeepSizeOptimum> {
    if layers < 2 {
        return Err(Error::invalid("layers", format!("need at least 2 layers, got {layers}")));
    }
    if budget < layers as u64 {
        return Err(Error::Infeasible(format!("budget {budget} cannot hold {layers} layers")));
    }
    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut failure: Option<Error> = None;
    let mut eval = |x: &[f64]| -> f64 {
        let Some((sizes, _)) = sizes_from(x, budget) else {
            let excess: f64 = x.iter().map(|v| v * v).sum::<f64>() - budget as f64;
            return PENALTY * (1.0 + excess.max(0.0));
        };
        if let Some(&v) = cache.get(&sizes) {
            return v;
        }
        let v = match objective(&sizes) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        };
        cache.insert(sizes, v);
        v
    };
    let x0 = vec![(budget as f64 / layers as f64).sqrt(); layers - 1];
    let nm = nelder_mead(&mut eval, &x0, options);
    let at_centroid = nm.as_ref().ok().map(|r| eval(&r.x));
    let evaluations = cache.len();
    if let Some(e) = failure {
        return Err(e);
    }
    let nm = nm?;
    let (sizes, last) = sizes_from(&nm.x, budget)
        .ok_or_else(|| Error::Infeasible("optimiser ended outside the budget".into()))?;
    let objective = at_centroid.expect("optimiser succeeded");
    let mut continuous = nm.x.clone();
    continuous.push(last);
    Ok(DeepSizeOptimum {
        sizes,
        continuous,
        objective,
        iterations: nm.iterations,
        evaluations,
        converged: nm.converged,
    })
}

/// Sizes minimising the Monte-Carlo total-kernel metric of an `L`-layer deep
/// reservoir under `Σ n_l² = budget`. The objective uses the same repetition
/// seeds at every point (common random numbers), which makes it a
/// deterministic, piecewise constant function of the rounded sizes.
pub fn optimize_deep_sizes(
    layers: usize,
    budget: u64,
    spec: &ScanSpec,
    options: &NelderMeadOptions,
    engine: &Engine,
) -> Result<DeepSizeOptimum> {
    check_deep(spec)?;
    optimize_deep_sizes_with(layers, budget, options, |sizes| {
        let samples = deep_samples(spec, &[sizes.to_vec()], engine)?;
        let r = reduce(samples.iter().map(|rep| rep[0]));
        Ok(if r.mean.is_finite() { r.mean } else { PENALTY })
    })
}

/// Optimiser settings suited to layer sizes: 25% initial steps, stop when
/// the simplex is narrower than half a neuron.
pub fn size_options() -> NelderMeadOptions {
    NelderMeadOptions {
        xtol: 0.5,
        max_iter: 200,
        rel_step: 0.25,
        ..NelderMeadOptions::default()
    }
}
