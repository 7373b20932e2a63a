use std::f64::consts::PI;

use super::{Activation, KernelArgs};
use crate::Result;

/// Closed-form iterable kernel for standard Gaussian weights:
///
/// * erf: arcsine kernel `(2/π) asin(2uv / √((1 + 2nu)(1 + 2nv)))`
/// * ReLU: first-order arc-cosine kernel `√(nu·nv)(sin θ + (π − θ) cos θ) / 2π`
/// * sign: zeroth-order arc-cosine kernel `1 − 2θ/π`
///
/// with `θ` the angle between the two arguments. A zero norm on either side
/// gives `f(0)·E[f(·)] = 0` for all three.
pub fn kernel_closed_form(f: Activation, args: KernelArgs) -> Result<f64> {
    let KernelArgs { nu, nv, uv } = args;
    if f == Activation::Erf {
        let arg = 2.0 * uv / ((1.0 + 2.0 * nu) * (1.0 + 2.0 * nv)).sqrt();
        return Ok(2.0 / PI * arg.clamp(-1.0, 1.0).asin());
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    let theta = args.correlation().acos();
    Ok(match f {
        Activation::Relu => (nu * nv).sqrt() * (theta.sin() + (PI - theta) * theta.cos()) / (2.0 * PI),
        Activation::Sign => 1.0 - 2.0 * theta / PI,
        Activation::Erf => unreachable!(),
    })
}
