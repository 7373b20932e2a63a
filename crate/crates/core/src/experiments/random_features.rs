use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{reduce, Axis, Column, Engine, ExperimentResult, ExperimentSpec};
use crate::kernelcore::{kernel_closed_form, Activation, KernelArgs};
use crate::rng::{rep_seeds, stream_rng, Stream};
use crate::{Error, Result};

/// Single-step random features `ψ(u) = f(Wu)` with dense Gaussian and sparse
/// weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomFeatureSpec {
    pub activation: Activation,
    pub d_list: Vec<usize>,
    /// Feature counts, ascending.
    pub n_list: Vec<usize>,
    pub sparsity: f64,
    pub reps: usize,
    pub master_seed: u64,
}

impl RandomFeatureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d_list.is_empty() || self.d_list.contains(&0) {
            return Err(Error::invalid("d", "need a non-empty list of input dimensions >= 1"));
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::invalid("n", "need a non-empty list of feature counts >= 1"));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n", "feature counts must be strictly ascending"));
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return Err(Error::invalid("sparsity", format!("must lie in (0, 1], got {}", self.sparsity)));
        }
        if self.reps == 0 {
            return Err(Error::invalid("reps", "must be >= 1"));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `|(1/n)·ψ(u)ᵀψ(v) − k₀(u, v)|²` for every `n` in the ascending `n_list`,
/// using the first `n` rows of `rows`.
pub fn rf_error_curve<'a>(
    f: Activation,
    u: &[f64],
    v: &[f64],
    rows: impl IntoIterator<Item = &'a [f64]>,
    n_list: &[usize],
) -> Result<Vec<f64>> {
    let k0 = kernel_closed_form(f, KernelArgs::new(dot(u, u), dot(v, v), dot(u, v))?)?;
    let mut out = Vec::with_capacity(n_list.len());
    let mut targets = n_list.iter().peekable();
    let mut sum = 0.0;
    for (j, w) in rows.into_iter().enumerate() {
        let Some(&&n) = targets.peek() else { break };
        sum += f.apply(dot(w, u)) * f.apply(dot(w, v));
        if j + 1 == n {
            let e = sum / n as f64 - k0;
            out.push(e * e);
            targets.next();
        }
    }
    if out.len() != n_list.len() {
        return Err(Error::Shape("fewer weight rows than the largest feature count".into()));
    }
    Ok(out)
}

/// Mean approximation error of dense and sparse random features.
///
/// Each repetition draws `u, v` i.i.d. uniform on `[0, 1]^d` and, per
/// weight entry, one uniform and one standard normal: the dense matrix uses
/// the normals, the sparse one keeps an entry when its uniform is below `s`
/// and rescales it by `1/√s`. Both are compared with the Gaussian kernel
/// `k₀`. Rows: `d` outer, then `dense`/`sparse`, then `n`.
pub fn sparse_rf_experiment(spec: &RandomFeatureSpec, engine: &Engine) -> Result<ExperimentResult> {
    spec.validate()?;
    let seeds = rep_seeds(spec.master_seed, spec.reps);
    let n_max = *spec.n_list.last().expect("validated");
    let s = spec.sparsity;
    let inv = 1.0 / s.sqrt();
    let kinds = ["dense", "sparse"];

    let mut axis_d = Vec::new();
    let mut axis_kind = Vec::new();
    let mut axis_n = Vec::new();
    let mut mean = Vec::new();
    let mut std_err = Vec::new();
    for (di, &d) in spec.d_list.iter().enumerate() {
        let per_rep: Vec<Result<[Vec<f64>; 2]>> = engine.map(&seeds, |_, seed| {
            let mut rng = stream_rng(seed, Stream::Aux(di as u32));
            let u: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let v: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let mut dense = Vec::with_capacity(n_max * d);
            let mut sparse = Vec::with_capacity(n_max * d);
            for _ in 0..n_max * d {
                let keep = rng.random::<f64>() < s;
                let z: f64 = rng.sample(StandardNormal);
                dense.push(z);
                sparse.push(if keep { z * inv } else { 0.0 });
            }
            Ok([
                rf_error_curve(spec.activation, &u, &v, dense.chunks(d), &spec.n_list)?,
                rf_error_curve(spec.activation, &u, &v, sparse.chunks(d), &spec.n_list)?,
            ])
        });
        let per_rep = per_rep.into_iter().collect::<Result<Vec<_>>>()?;
        for (k, kind) in kinds.iter().enumerate() {
            for (i, &n) in spec.n_list.iter().enumerate() {
                let r = reduce(per_rep.iter().map(|rep| Some(rep[k][i])));
                axis_d.push(d as f64);
                axis_kind.push(kind.to_string());
                axis_n.push(n as f64);
                mean.push(r.mean);
                std_err.push(r.std_err);
            }
        }
    }
    let rows = mean.len();
    Ok(ExperimentResult {
        spec: ExperimentSpec::SparseRf(spec.clone()),
        axes: vec![
            Axis::numeric("d", axis_d),
            Axis::labels("weights", axis_kind),
            Axis::numeric("n", axis_n),
        ],
        values: vec![Column::new("l", mean), Column::new("l_std_err", std_err)],
        diverged_fraction: vec![0.0; rows],
        seeds,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
