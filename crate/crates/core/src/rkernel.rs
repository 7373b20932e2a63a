//! Recurrent kernels: the deterministic Gram-matrix recursions that finite
//! reservoirs approach as their size grows.
//!
//! For inputs `i_1 … i_M` the state is the Gram matrix `G⁽ᵗ⁾` of the limit
//! scalar products. One update reads
//!
//! ```text
//! G'_nm = (1 − a)²·G_nm
//!       + a²·k(σ_r²G_nn + σ_i²D_nn, σ_r²G_mm + σ_i²D_mm, σ_r²G_nm + σ_i²D_nm)
//! ```
//!
//! where `D` holds the scalar products of whatever drives the layer: the
//! external inputs for a shallow reservoir or the first layer of a deep one,
//! the freshly updated Gram of the layer below otherwise. Leaky updates drop
//! the two cross terms `a(1 − a)/√N·f(Wu)ᵀy`, whose size at finite `N` is
//! measured by [`crate::experiments::cross_term_probe`].
//!
//! Initial reservoir states are taken with unit norm and zero overlap, so
//! the first update starts from `G⁽⁰⁾ = I`.

use crate::gram::GramMatrix;
use crate::kernelcore::{Activation, KernelFunction};
use crate::{Error, Result};

/// Kernel and scalars of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct RKParams {
    pub kernel: KernelFunction,
    pub sigma_r: f64,
    pub sigma_i: f64,
    pub leak: f64,
}

impl RKParams {
    /// Closed-form kernel, no leak.
    pub fn new(activation: Activation, sigma_r: f64, sigma_i: f64) -> Self {
        RKParams {
            kernel: KernelFunction::new(activation),
            sigma_r,
            sigma_i,
            leak: 1.0,
        }
    }

    pub fn with_leak(mut self, leak: f64) -> Self {
        self.leak = leak;
        self
    }

    pub fn with_kernel(mut self, kernel: KernelFunction) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_r.is_finite() && self.sigma_r > 0.0) {
            return Err(Error::invalid("sigma_r", format!("must be positive, got {}", self.sigma_r)));
        }
        if !(self.sigma_i.is_finite() && self.sigma_i > 0.0) {
            return Err(Error::invalid("sigma_i", format!("must be positive, got {}", self.sigma_i)));
        }
        if !(0.0..=1.0).contains(&self.leak) {
            return Err(Error::invalid("leak", format!("must lie in [0, 1], got {}", self.leak)));
        }
        Ok(())
    }
}

/// Current Gram matrix of a recurrent kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct RKState {
    pub gram: GramMatrix,
}

/// Shallow or deep recurrent kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum RkTopology {
    Single(RKParams),
    Deep(Vec<RKParams>),
}

impl RkTopology {
    fn layers(&self) -> &[RKParams] {
        match self {
            RkTopology::Single(p) => std::slice::from_ref(p),
            RkTopology::Deep(ps) => ps,
        }
    }
}

/// `D_nm = i_nᵀ i_m`.
pub fn input_gram(inputs_at_t: &[&[f64]]) -> Result<GramMatrix> {
    if let Some(first) = inputs_at_t.first() {
        if inputs_at_t.iter().any(|i| i.len() != first.len()) {
            return Err(Error::Shape("inputs at one time step differ in dimension".into()));
        }
    }
    Ok(GramMatrix::from_fn(inputs_at_t.len(), |n, m| {
        inputs_at_t[n].iter().zip(inputs_at_t[m]).map(|(a, b)| a * b).sum()
    }))
}

/// One recurrent-kernel update of `prev` driven by the scalar products
/// `drive`.
pub fn rk_update(prev: &GramMatrix, drive: &GramMatrix, params: &RKParams) -> Result<GramMatrix> {
    if prev.dim() != drive.dim() {
        return Err(Error::Shape(format!(
            "state Gram is {0}x{0} but drive Gram is {1}x{1}",
            prev.dim(),
            drive.dim()
        )));
    }
    let sr2 = params.sigma_r * params.sigma_r;
    let si2 = params.sigma_i * params.sigma_i;
    let a = params.leak;
    let keep = (1.0 - a) * (1.0 - a);
    let gain = a * a;
    GramMatrix::try_from_fn(prev.dim(), |n, m| {
        let k = params.kernel.eval(
            sr2 * prev.get(n, n) + si2 * drive.get(n, n),
            sr2 * prev.get(m, m) + si2 * drive.get(m, m),
            sr2 * prev.get(n, m) + si2 * drive.get(n, m),
        )?;
        Ok(keep * prev.get(n, m) + gain * k)
    })
}

/// `G⁽¹⁾` from unit-norm, mutually orthogonal initial states.
pub fn rk_init(inputs_at_0: &[&[f64]], params: &RKParams) -> Result<RKState> {
    if inputs_at_0.is_empty() {
        return Err(Error::Shape("recurrent kernel needs at least one input".into()));
    }
    params.validate()?;
    let drive = input_gram(inputs_at_0)?;
    Ok(RKState {
        gram: rk_update(&GramMatrix::identity(drive.dim()), &drive, params)?,
    })
}

pub fn rk_step(state: &RKState, inputs_at_t: &[&[f64]], params: &RKParams) -> Result<RKState> {
    let drive = input_gram(inputs_at_t)?;
    Ok(RKState {
        gram: rk_update(&state.gram, &drive, params)?,
    })
}

/// Updates every layer in order; layer `l > 0` is driven by the new Gram of
/// layer `l − 1`.
pub fn deep_rk_step(states: &[RKState], inputs_at_t: &[&[f64]], params: &[RKParams]) -> Result<Vec<RKState>> {
    if states.is_empty() || states.len() != params.len() {
        return Err(Error::Shape(format!(
            "{} layer states but {} parameter sets",
            states.len(),
            params.len()
        )));
    }
    let mut drive = input_gram(inputs_at_t)?;
    let mut out = Vec::with_capacity(states.len());
    for (state, p) in states.iter().zip(params) {
        let gram = rk_update(&state.gram, &drive, p)?;
        drive = gram.clone();
        out.push(RKState { gram });
    }
    Ok(out)
}

fn check_sequences(inputs: &[Vec<Vec<f64>>]) -> Result<usize> {
    let first = inputs
        .first()
        .ok_or_else(|| Error::Shape("recurrent kernel needs at least one input".into()))?;
    let t = first.len();
    if t == 0 {
        return Err(Error::Shape("input sequences are empty".into()));
    }
    if inputs.iter().any(|s| s.len() != t) {
        return Err(Error::Shape("input sequences differ in length".into()));
    }
    Ok(t)
}

/// Per-layer Gram matrices after every step: `out[t][l]` is `G_l⁽ᵗ⁺¹⁾`.
pub fn rk_history(inputs: &[Vec<Vec<f64>>], topology: &RkTopology) -> Result<Vec<Vec<GramMatrix>>> {
    let t_len = check_sequences(inputs)?;
    let layers = topology.layers();
    if layers.is_empty() {
        return Err(Error::invalid("layers", "a deep recurrent kernel needs at least one layer"));
    }
    for p in layers {
        p.validate()?;
    }
    let m = inputs.len();
    let mut states: Vec<RKState> = layers
        .iter()
        .map(|_| RKState {
            gram: GramMatrix::identity(m),
        })
        .collect();
    let mut history = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let at_t: Vec<&[f64]> = inputs.iter().map(|s| s[t].as_slice()).collect();
        states = deep_rk_step(&states, &at_t, layers)?;
        history.push(states.iter().map(|s| s.gram.clone()).collect());
    }
    Ok(history)
}

/// Final Gram after consuming all `T` inputs; for deep topologies the sum
/// of the per-layer Grams (the kernel of the concatenated states).
pub fn rk_gram(inputs: &[Vec<Vec<f64>>], topology: &RkTopology) -> Result<GramMatrix> {
    let t_len = check_sequences(inputs)?;
    match topology {
        RkTopology::Single(p) => {
            let at = |t: usize| -> Vec<&[f64]> { inputs.iter().map(|s| s[t].as_slice()).collect() };
            let mut state = rk_init(&at(0), p)?;
            for t in 1..t_len {
                state = rk_step(&state, &at(t), p)?;
            }
            Ok(state.gram)
        }
        RkTopology::Deep(_) => {
            let history = rk_history(inputs, topology)?;
            GramMatrix::sum(history.last().expect("at least one step"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernelcore::QuadratureRule;

    fn seq(rows: &[&[f64]]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| r.to_vec()).collect()
    }

    fn sample_inputs() -> Vec<Vec<Vec<f64>>> {
        vec![
            seq(&[&[0.3, -0.5, 0.1], &[0.9, 0.2, -0.4], &[-0.1, 0.0, 0.7], &[0.5, 0.5, 0.5]]),
            seq(&[&[-0.2, 0.4, 0.6], &[0.1, -0.8, 0.3], &[0.2, 0.2, -0.2], &[0.0, 1.0, 0.0]]),
            seq(&[&[0.7, 0.1, -0.3], &[-0.6, 0.0, 0.2], &[0.4, -0.4, 0.1], &[0.3, -0.2, 0.9]]),
        ]
    }

    #[test]
    fn init_with_zero_input_and_sign() {
        let p = RKParams::new(Activation::Sign, 1.0, 1.0);
        let s = rk_init(&[&[0.0, 0.0]], &p).unwrap();
        assert_eq!(s.gram.dim(), 1);
        assert!((s.gram.get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn init_with_orthogonal_inputs_and_erf() {
        let p = RKParams::new(Activation::Erf, 1.0, 1.0);
        let s = rk_init(&[&[1.0, 0.0], &[0.0, 1.0]], &p).unwrap();
        assert_eq!(s.gram.get(0, 1), 0.0);
        let expect = 2.0 / std::f64::consts::PI * (4.0f64 / 5.0).asin();
        assert!((s.gram.get(0, 0) - expect).abs() < 1e-15);
    }

    #[test]
    fn leak_zero_keeps_the_gram() {
        let p = RKParams::new(Activation::Erf, 1.3, 0.7).with_leak(0.0);
        let g = GramMatrix::from_rows(&[vec![0.8, 0.3], vec![0.3, 0.5]]).unwrap();
        let s = rk_step(&RKState { gram: g.clone() }, &[&[1.0], &[2.0]], &p).unwrap();
        assert_eq!(s.gram, g);
    }

    /// Non-leaky update written without the leak terms.
    fn plain_update(prev: &GramMatrix, drive: &GramMatrix, p: &RKParams) -> GramMatrix {
        let (r, i) = (p.sigma_r * p.sigma_r, p.sigma_i * p.sigma_i);
        GramMatrix::from_fn(prev.dim(), |n, m| {
            p.kernel
                .eval(
                    r * prev.get(n, n) + i * drive.get(n, n),
                    r * prev.get(m, m) + i * drive.get(m, m),
                    r * prev.get(n, m) + i * drive.get(n, m),
                )
                .unwrap()
        })
    }

    #[test]
    fn leak_one_is_the_plain_recursion() {
        for f in Activation::ALL {
            let p = RKParams::new(f, 0.8, 1.2);
            let inputs = sample_inputs();
            let mut g = GramMatrix::identity(3);
            for t in 0..4 {
                let at: Vec<&[f64]> = inputs.iter().map(|s| s[t].as_slice()).collect();
                g = plain_update(&g, &input_gram(&at).unwrap(), &p);
            }
            assert_eq!(rk_gram(&inputs, &RkTopology::Single(p)).unwrap(), g, "{f}");
        }
    }

    #[test]
    fn single_layer_deep_equals_shallow() {
        let p = RKParams::new(Activation::Erf, 1.1, 0.9).with_leak(0.6);
        let inputs = sample_inputs();
        let a = rk_gram(&inputs, &RkTopology::Single(p.clone())).unwrap();
        let b = rk_gram(&inputs, &RkTopology::Deep(vec![p])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_step_gram_is_init() {
        let p = RKParams::new(Activation::Relu, 1.0, 1.0);
        let inputs: Vec<Vec<Vec<f64>>> = sample_inputs().into_iter().map(|s| s[..1].to_vec()).collect();
        let at: Vec<&[f64]> = inputs.iter().map(|s| s[0].as_slice()).collect();
        assert_eq!(rk_gram(&inputs, &RkTopology::Single(p.clone())).unwrap(), rk_init(&at, &p).unwrap().gram);
    }

    #[test]
    fn identical_inputs_give_a_rank_one_gram() {
        let p = RKParams::new(Activation::Erf, 1.0, 1.0);
        let s = sample_inputs().remove(0);
        let g = rk_gram(&[s.clone(), s], &RkTopology::Single(p)).unwrap();
        // identical drives from orthogonal starts: off-diagonal lags the diagonal
        // at t = 1 only through the initial overlap, which the recursion forgets
        assert!((g.get(0, 0) - g.get(1, 1)).abs() < 1e-15);
        assert!(g.get(0, 1) <= g.get(0, 0) + 1e-15);
    }

    #[test]
    fn second_sign_layer_keeps_unit_diagonal() {
        let p = RKParams::new(Activation::Sign, 1.0, 1.0);
        let h = rk_history(&sample_inputs(), &RkTopology::Deep(vec![p.clone(), p])).unwrap();
        for step in &h {
            for n in 0..3 {
                assert!((step[1].get(n, n) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn deep_step_uses_new_lower_layer_gram() {
        let p1 = RKParams::new(Activation::Erf, 0.9, 1.0);
        let p2 = RKParams::new(Activation::Erf, 1.2, 0.8);
        let inputs = sample_inputs();
        let at: Vec<&[f64]> = inputs.iter().map(|s| s[0].as_slice()).collect();
        let id = RKState { gram: GramMatrix::identity(3) };
        let out = deep_rk_step(&[id.clone(), id.clone()], &at, &[p1.clone(), p2.clone()]).unwrap();
        let g1 = rk_update(&id.gram, &input_gram(&at).unwrap(), &p1).unwrap();
        let g2 = rk_update(&id.gram, &g1, &p2).unwrap();
        assert_eq!(out[0].gram, g1);
        assert_eq!(out[1].gram, g2);
    }

    #[test]
    fn permuting_inputs_permutes_the_gram() {
        let p = RKParams::new(Activation::Erf, 1.4, 0.6).with_leak(0.7);
        let inputs = sample_inputs();
        let perm = [2, 0, 1];
        let permuted: Vec<_> = perm.iter().map(|&i| inputs[i].clone()).collect();
        let g = rk_gram(&inputs, &RkTopology::Single(p.clone())).unwrap();
        let gp = rk_gram(&permuted, &RkTopology::Single(p)).unwrap();
        assert_eq!(gp, g.permuted(&perm));
    }

    #[test]
    fn quadrature_and_closed_form_kernels_agree() {
        let inputs = sample_inputs();
        for f in Activation::ALL {
            let closed = RKParams::new(f, 1.0, 1.0).with_leak(0.5);
            let quad = closed
                .clone()
                .with_kernel(KernelFunction::quadrature(f, QuadratureRule::default_rule()));
            let a = rk_gram(&inputs, &RkTopology::Single(closed)).unwrap();
            let b = rk_gram(&inputs, &RkTopology::Single(quad)).unwrap();
            assert!(a.squared_distance(&b).unwrap().sqrt() < 1e-8, "{f}");
        }
    }

    #[test]
    fn invalid_gram_is_a_domain_error() {
        let p = RKParams::new(Activation::Erf, 1.0, 1.0);
        let bad = GramMatrix::from_rows(&[vec![1.0, 5.0], vec![5.0, 1.0]]).unwrap();
        let r = rk_step(&RKState { gram: bad }, &[&[0.0], &[0.0]], &p);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn mismatched_sequences_are_rejected() {
        let p = RKParams::new(Activation::Erf, 1.0, 1.0);
        let mut inputs = sample_inputs();
        inputs[1].pop();
        assert!(matches!(rk_gram(&inputs, &RkTopology::Single(p)), Err(Error::Shape(_))));
    }
}
