use super::{
    convergence_metric, diverged_as_none, reduce, rk_or_diverged, Axis, Column, Engine, ExperimentResult, ExperimentSpec, RepDraw,
    ScanSpec, Topology,
};
use crate::gram::GramMatrix;
use crate::reservoir::{features, State};
use crate::rkernel::rk_history;
use crate::{Error, Result};

/// Mean of `L` over repetitions at every `(σ_r, σ_i)` grid point.
///
/// Each repetition draws its inputs, weights and initial states once and
/// reuses them at every grid point (scales only enter the dynamics), so
/// neighbouring grid points are compared on common random numbers.
/// Diverged runs are left out of the mean and counted in
/// `diverged_fraction`.
pub fn convergence_scan(spec: &ScanSpec, engine: &Engine) -> Result<ExperimentResult> {
    spec.validate()?;
    let points = spec.grid_points();
    let configs = points
        .iter()
        .map(|&(r, i)| spec.deep_config(r, i))
        .collect::<Result<Vec<_>>>()?;
    let seeds = spec.seeds();

    let per_rep: Vec<Result<Vec<Option<f64>>>> = engine.map(&seeds, |_, seed| {
        let draw = RepDraw::new(spec, seed)?;
        points
            .iter()
            .zip(&configs)
            .map(|(&(sr, si), deep)| {
                let Some(rk) = rk_or_diverged(&draw.inputs, &spec.rk_topology(sr, si))? else {
                    return Ok(None);
                };
                let l = draw
                    .rc_gram(deep, &draw.weights)
                    .and_then(|rc| convergence_metric(&rc, &rk));
                diverged_as_none(l)
            })
            .collect()
    });
    let per_rep = per_rep.into_iter().collect::<Result<Vec<_>>>()?;

    let mut mean = Vec::with_capacity(points.len());
    let mut std_err = Vec::with_capacity(points.len());
    let mut diverged = Vec::with_capacity(points.len());
    for p in 0..points.len() {
        let r = reduce(per_rep.iter().map(|rep| rep[p]));
        mean.push(r.mean);
        std_err.push(r.std_err);
        diverged.push(r.diverged);
    }
    Ok(ExperimentResult {
        spec: ExperimentSpec::Convergence { scan: spec.clone() },
        axes: vec![
            Axis::numeric("sigma_r", points.iter().map(|p| p.0).collect()),
            Axis::numeric("sigma_i", points.iter().map(|p| p.1).collect()),
        ],
        values: vec![Column::new("L", mean), Column::new("L_std_err", std_err)],
        diverged_fraction: diverged,
        seeds,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Size of the two terms `a(1 − a)/√N · f(W u_n)ᵀ x_m` that the leaky
/// recurrent kernel drops, next to the metric `L` at the same step.
///
/// One row per time step: `cross_term` is the mean over repetitions of the
/// mean absolute value over all ordered input pairs `(n, m)`; `L` compares
/// the reservoir Gram after that step with the kernel Gram after the same
/// number of steps. Requires a leaky topology and a single operating point.
pub fn cross_term_probe(spec: &ScanSpec, engine: &Engine) -> Result<ExperimentResult> {
    spec.validate()?;
    let Topology::Leaky { leak } = spec.topology else {
        return Err(Error::invalid("topology", "cross terms are defined for the leaky topology"));
    };
    let (sr, si) = spec.operating_point()?;
    let deep = spec.deep_config(sr, si)?;
    let cfg = &deep.layers[0];
    let seeds = spec.seeds();
    let prefactor = leak * (1.0 - leak) / (cfg.n as f64).sqrt();
    let inv_sqrt_n = 1.0 / (cfg.n as f64).sqrt();

    let per_rep: Vec<Result<Option<Vec<(f64, f64)>>>> = engine.map(&seeds, |_, seed| {
        let draw = RepDraw::with_config(spec, &deep, seed);
        let history = rk_history(&draw.inputs, &spec.rk_topology(sr, si))?;
        let w = &draw.weights[0];
        let mut states: Vec<State> = draw.x0s.iter().map(|x| x[0].clone()).collect();
        let mut rows = Vec::with_capacity(spec.t);
        for (t, rk) in history.iter().enumerate() {
            let feats = match states
                .iter()
                .zip(&draw.inputs)
                .map(|(x, seq)| features(x, &seq[t], w, cfg))
                .collect::<Result<Vec<_>>>()
            {
                Ok(f) => f,
                Err(Error::Overflow { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let m = states.len();
            let mut cross = 0.0;
            for f in &feats {
                for x in &states {
                    cross += (prefactor * dot(f, x)).abs();
                }
            }
            cross /= (m * m) as f64;
            for (x, f) in states.iter_mut().zip(&feats) {
                for (xi, fi) in x.iter_mut().zip(f) {
                    *xi = (1.0 - leak) * *xi + leak * (inv_sqrt_n * fi);
                }
            }
            if states.iter().flatten().any(|v| !v.is_finite()) || !cross.is_finite() {
                return Ok(None);
            }
            let rc = GramMatrix::from_fn(m, |a, b| dot(&states[a], &states[b]));
            rows.push((cross, convergence_metric(&rc, &rk[0])?));
        }
        Ok(Some(rows))
    });
    let per_rep = per_rep.into_iter().collect::<Result<Vec<_>>>()?;

    let mut cross = Vec::with_capacity(spec.t);
    let mut metric = Vec::with_capacity(spec.t);
    let mut diverged = Vec::with_capacity(spec.t);
    for t in 0..spec.t {
        let c = reduce(per_rep.iter().map(|r| r.as_ref().map(|rows| rows[t].0)));
        let l = reduce(per_rep.iter().map(|r| r.as_ref().map(|rows| rows[t].1)));
        cross.push(c.mean);
        metric.push(l.mean);
        diverged.push(c.diverged);
    }
    Ok(ExperimentResult {
        spec: ExperimentSpec::CrossTerms { scan: spec.clone() },
        axes: vec![Axis::numeric("step", (1..=spec.t).map(|t| t as f64).collect())],
        values: vec![Column::new("cross_term", cross), Column::new("L", metric)],
        diverged_fraction: diverged,
        seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernelcore::Activation;

    fn small(topology: Topology) -> ScanSpec {
        let mut s = ScanSpec::reference_setting(topology, Activation::Erf).with_reps(4).with_seed(11);
        s.n = 40;
        s.t = 5;
        s.d = 10;
        s
    }

    #[test]
    fn single_point_is_deterministic() {
        let spec = small(Topology::Vanilla);
        let a = convergence_scan(&spec, &Engine::new(1).unwrap()).unwrap();
        let b = convergence_scan(&spec, &Engine::new(2).unwrap()).unwrap();
        assert_eq!(a.rows(), 1);
        assert_eq!(a.column("L").unwrap()[0].to_bits(), b.column("L").unwrap()[0].to_bits());
        assert_eq!(a.seeds, b.seeds);
    }

    #[test]
    fn three_by_three_grid_is_nonnegative() {
        for topology in [
            Topology::Vanilla,
            Topology::Sparse { sparsity: 0.3 },
            Topology::Leaky { leak: 0.5 },
            Topology::Deep { sizes: vec![30, 20] },
        ] {
            let spec = small(topology).with_grids(vec![0.1, 1.0, 2.0], vec![0.1, 1.0, 2.0]);
            let r = convergence_scan(&spec, &Engine::default()).unwrap();
            assert_eq!(r.rows(), 9);
            r.validate().unwrap();
            assert!(r.column("L").unwrap().iter().all(|&l| l >= 0.0));
            assert_eq!(r.numeric_axis("sigma_r").unwrap()[3], 1.0);
            assert_eq!(r.numeric_axis("sigma_i").unwrap()[3], 0.1);
        }
    }

    #[test]
    fn relu_blow_up_is_counted_not_thrown() {
        let mut spec = small(Topology::Vanilla).with_point(1e6, 1e6);
        spec.activation = Activation::Relu;
        spec.t = 60;
        let r = convergence_scan(&spec, &Engine::default()).unwrap();
        assert_eq!(r.diverged_fraction, vec![1.0]);
        assert!(r.column("L").unwrap()[0].is_nan());
    }

    #[test]
    fn cross_terms_vanish_without_leak_or_frozen() {
        for leak in [0.0, 1.0] {
            let spec = small(Topology::Leaky { leak });
            let r = cross_term_probe(&spec, &Engine::default()).unwrap();
            assert_eq!(r.rows(), 5);
            assert!(r.column("cross_term").unwrap().iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn cross_terms_need_leaky_topology() {
        assert!(cross_term_probe(&small(Topology::Vanilla), &Engine::default()).is_err());
    }

    #[test]
    fn probe_metric_matches_scan_at_last_step() {
        let spec = small(Topology::Leaky { leak: 0.5 });
        let probe = cross_term_probe(&spec, &Engine::default()).unwrap();
        let scan = convergence_scan(&spec, &Engine::default()).unwrap();
        let a = *probe.column("L").unwrap().last().unwrap();
        let b = scan.column("L").unwrap()[0];
        assert!((a - b).abs() <= 1e-12 * b.max(1e-300), "{a} vs {b}");
    }
}
