use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    /// Stop once every vertex lies within this distance of the best one.
    pub xtol: f64,
    pub max_iter: usize,
    /// Initial simplex offset as a fraction of a non-zero coordinate.
    pub rel_step: f64,
    /// Initial offset for zero coordinates.
    pub abs_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            xtol: 1e-8,
            max_iter: 5000,
            rel_step: 0.05,
            abs_step: 0.00025,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    /// Centroid of the final simplex.
    pub x: Vec<f64>,
    /// Best vertex value seen in the final simplex.
    pub best_value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn checked(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64]) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteObjective {
            value: v,
            point: x.to_vec(),
        })
    }
}

/// `c + t·(p − c)`.
fn towards(c: &[f64], p: &[f64], t: f64) -> Vec<f64> {
    c.iter().zip(p).map(|(ci, pi)| ci + t * (pi - ci)).collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Derivative-free simplex minimisation with reflection 1, expansion 2,
/// contraction 0.5 and shrink 0.5. A non-finite objective value aborts with
/// [`Error::NonFiniteObjective`].
pub fn nelder_mead(
    mut objective: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    options: &NelderMeadOptions,
) -> Result<NelderMeadResult> {
    let dim = x0.len();
    if dim == 0 {
        return Err(Error::invalid("x0", "need at least one coordinate"));
    }
    if !(options.xtol.is_finite() && options.xtol > 0.0) {
        return Err(Error::invalid("xtol", "must be positive"));
    }
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += if x0[i] != 0.0 { options.rel_step * x0[i] } else { options.abs_step };
        simplex.push(v);
    }
    let mut values = simplex
        .iter()
        .map(|v| checked(&mut objective, v))
        .collect::<Result<Vec<f64>>>()?;

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diameter = simplex[1..]
            .iter()
            .map(|v| distance(v, &simplex[0]))
            .fold(0.0, f64::max);
        if diameter < options.xtol {
            converged = true;
            break;
        }
        if iterations >= options.max_iter {
            break;
        }
        iterations += 1;

        let worst = dim;
        let mut centroid = vec![0.0; dim];
        for v in &simplex[..worst] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= dim as f64);

        let xr = towards(&centroid, &simplex[worst], -REFLECT);
        let fr = checked(&mut objective, &xr)?;
        if fr < values[0] {
            let xe = towards(&centroid, &xr, EXPAND);
            let fe = checked(&mut objective, &xe)?;
            if fe < fr {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[worst - 1] {
            simplex[worst] = xr;
            values[worst] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < values[worst] {
            let xc = towards(&centroid, &xr, CONTRACT);
            let fc = checked(&mut objective, &xc)?;
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = towards(&centroid, &simplex[worst], CONTRACT);
            let fc = checked(&mut objective, &xc)?;
            let ok = fc < values[worst];
            (xc, fc, ok)
        };
        if accept {
            simplex[worst] = xc;
            values[worst] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=dim {
            simplex[i] = towards(&best, &simplex[i], SHRINK);
            values[i] = checked(&mut objective, &simplex[i])?;
        }
    }

    let mut x = vec![0.0; dim];
    for v in &simplex {
        for (c, xi) in x.iter_mut().zip(v) {
            *c += xi;
        }
    }
    x.iter_mut().for_each(|c| *c /= (dim + 1) as f64);
    Ok(NelderMeadResult {
        x,
        best_value: values[0],
        iterations,
        converged,
    })
}
