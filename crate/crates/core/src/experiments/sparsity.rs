use super::{
    convergence_metric, diverged_as_none, reduce, rep_inputs, Axis, Column, Engine, ExperimentResult,
    ExperimentSpec, ScanSpec,
};
use crate::reservoir::{deep_rc_gram, init_state, run, LatentWeights, ReservoirConfig, WeightMode};
use crate::rkernel::{rk_gram, RKParams, RkTopology};
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// Output of [`sparsity_scan`]: the long-format table and, per reservoir
/// size, the admissible sparsity threshold.
#[derive(Debug, Clone)]
pub struct SparsityReport {
    pub result: ExperimentResult,
    /// `(N, threshold)`; `None` when no grid value qualifies.
    pub thresholds: Vec<(usize, Option<f64>)>,
}

impl SparsityReport {
    pub fn threshold(&self, n: usize) -> Option<f64> {
        self.thresholds.iter().find(|t| t.0 == n).and_then(|t| t.1)
    }
}

/// Mean `L(s)` for every reservoir size in `n_list` and sparsity in
/// `s_list`, the min-max normalised curve per size and the threshold
/// `min { s : L(s) ≤ 1.1·L(1) }`.
///
/// Within a repetition all sparsity levels are realised from the same latent
/// draws (entry kept when its uniform is below `s`), so the curve over `s`
/// is compared on common random numbers. The topology of `spec` is ignored;
/// every level is compared with the dense recurrent kernel.
pub fn sparsity_scan(n_list: &[usize], s_list: &[f64], spec: &ScanSpec, engine: &Engine) -> Result<SparsityReport> {
    spec.validate()?;
    let (sr, si) = spec.operating_point()?;
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::invalid("n", "need a non-empty list of sizes >= 1"));
    }
    if let Some(bad) = s_list.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
        return Err(Error::invalid("sparsity", format!("levels must lie in (0, 1], got {bad}")));
    }
    let dense = s_list
        .iter()
        .position(|&s| s == 1.0)
        .ok_or_else(|| Error::invalid("sparsity", "the list must contain the dense level 1"))?;
    let seeds = spec.seeds();
    let rk_topology = RkTopology::Single(RKParams::new(spec.activation, sr, si));

    let mut axes_n = Vec::new();
    let mut axes_s = Vec::new();
    let mut raw = Vec::new();
    let mut std_err = Vec::new();
    let mut normalized = Vec::new();
    let mut threshold_col = Vec::new();
    let mut diverged = Vec::new();
    let mut thresholds = Vec::new();

    for &n in n_list {
        let configs: Vec<ReservoirConfig> = s_list
            .iter()
            .map(|&s| {
                ReservoirConfig::new(n, spec.d, spec.activation)
                    .with_scales(sr, si)
                    .with_sparsity(s)
            })
            .collect();
        let per_rep: Vec<Result<Vec<Option<f64>>>> = engine.map(&seeds, |_, seed| {
            let inputs = rep_inputs(spec, seed);
            let rk = rk_gram(&inputs, &rk_topology)?;
            let latent = LatentWeights::sample(n, spec.d, &mut stream_rng(seed, Stream::Weights { layer: 0 }));
            let x0s: Vec<Vec<f64>> = (0..spec.m)
                .map(|input| init_state(n, &mut stream_rng(seed, Stream::Initial { layer: 0, input })))
                .collect();
            configs
                .iter()
                .map(|cfg| {
                    let w = latent.realize(cfg.sparsity);
                    let l = inputs
                        .iter()
                        .zip(&x0s)
                        .map(|(seq, x0)| run(seq, &w, cfg, x0, WeightMode::Fixed).map(|tr| tr.states.into_iter().last().unwrap()))
                        .collect::<Result<Vec<_>>>()
                        .and_then(|finals| deep_rc_gram(&[finals]))
                        .and_then(|rc| convergence_metric(&rc, &rk));
                    diverged_as_none(l)
                })
                .collect()
        });
        let per_rep = per_rep.into_iter().collect::<Result<Vec<_>>>()?;

        let reduced: Vec<_> = (0..s_list.len())
            .map(|k| reduce(per_rep.iter().map(|rep| rep[k])))
            .collect();
        let means: Vec<f64> = reduced.iter().map(|r| r.mean).collect();
        let finite = means.iter().copied().filter(|v| v.is_finite());
        let lo = finite.clone().fold(f64::INFINITY, f64::min);
        let hi = finite.fold(f64::NEG_INFINITY, f64::max);
        let reference = means[dense];
        let threshold = s_list
            .iter()
            .zip(&means)
            .filter(|(_, &l)| l <= 1.1 * reference)
            .map(|(&s, _)| s)
            .min_by(f64::total_cmp);
        thresholds.push((n, threshold));

        for (k, r) in reduced.iter().enumerate() {
            axes_n.push(n as f64);
            axes_s.push(s_list[k]);
            raw.push(r.mean);
            std_err.push(r.std_err);
            normalized.push(if hi > lo { (r.mean - lo) / (hi - lo) } else { 0.0 });
            threshold_col.push(threshold.unwrap_or(f64::NAN));
            diverged.push(r.diverged);
        }
    }

    Ok(SparsityReport {
        result: ExperimentResult {
            spec: ExperimentSpec::Sparsity {
                scan: spec.clone(),
                n_list: n_list.to_vec(),
                s_list: s_list.to_vec(),
            },
            axes: vec![Axis::numeric("n", axes_n), Axis::numeric("s", axes_s)],
            values: vec![
                Column::new("L", raw),
                Column::new("L_std_err", std_err),
                Column::new("L_normalized", normalized),
                Column::new("threshold", threshold_col),
            ],
            diverged_fraction: diverged,
            seeds,
        },
        thresholds,
    })
}
