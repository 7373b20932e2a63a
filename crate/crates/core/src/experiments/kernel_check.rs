use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Axis, Column, ExperimentResult, ExperimentSpec};
use crate::kernelcore::{kernel_closed_form, kernel_quadrature, Activation, KernelArgs, QuadratureRule};
use crate::rng::{rep_seed, stream_rng, Stream};
use crate::{Error, Result};

/// Random comparison of the closed-form kernels with quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCheckSpec {
    /// Arguments per activation.
    pub samples: usize,
    pub order: usize,
    /// Norms are drawn from `(0, max_norm]`.
    pub max_norm: f64,
    pub master_seed: u64,
}

impl Default for KernelCheckSpec {
    fn default() -> Self {
        KernelCheckSpec {
            samples: 1000,
            order: 100,
            max_norm: 10.0,
            master_seed: 0,
        }
    }
}

/// `count` valid arguments: `‖u‖², ‖v‖²` uniform on `(0, max_norm]`,
/// correlation uniform on `[−1, 1]`.
pub fn random_kernel_args<R: Rng + ?Sized>(rng: &mut R, count: usize, max_norm: f64) -> Vec<KernelArgs> {
    (0..count)
        .map(|_| {
            let nu = max_norm * (1.0 - rng.random::<f64>());
            let nv = max_norm * (1.0 - rng.random::<f64>());
            let c = rng.random_range(-1.0..=1.0);
            let uv = c * (nu * nv).sqrt();
            KernelArgs::new(nu, nv, uv).expect("sampled arguments satisfy Cauchy-Schwarz")
        })
        .collect()
}

/// Max and mean `|closed form − quadrature|` per activation.
pub fn kernel_check(spec: &KernelCheckSpec) -> Result<ExperimentResult> {
    if spec.samples == 0 {
        return Err(Error::invalid("samples", "must be >= 1"));
    }
    if !(spec.max_norm.is_finite() && spec.max_norm > 0.0) {
        return Err(Error::invalid("max_norm", "must be positive"));
    }
    let rule = QuadratureRule::shared(spec.order)?;
    let seed = rep_seed(spec.master_seed, 0);
    let args = random_kernel_args(&mut stream_rng(seed, Stream::Aux(0)), spec.samples, spec.max_norm);
    let mut max = Vec::new();
    let mut mean = Vec::new();
    for f in Activation::ALL {
        let mut worst: f64 = 0.0;
        let mut total = 0.0;
        for &a in &args {
            let e = (kernel_closed_form(f, a)? - kernel_quadrature(f, a, &rule)?).abs();
            worst = worst.max(e);
            total += e;
        }
        max.push(worst);
        mean.push(total / args.len() as f64);
    }
    Ok(ExperimentResult {
        spec: ExperimentSpec::KernelCheck(spec.clone()),
        axes: vec![Axis::labels(
            "activation",
            Activation::ALL.iter().map(|f| f.name().to_string()).collect(),
        )],
        values: vec![Column::new("max_abs_diff", max), Column::new("mean_abs_diff", mean)],
        diverged_fraction: vec![0.0; Activation::ALL.len()],
        seeds: vec![seed],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_check_agrees() {
        let spec = KernelCheckSpec {
            samples: 50,
            ..Default::default()
        };
        let r = kernel_check(&spec).unwrap();
        assert_eq!(r.rows(), 3);
        assert!(r.column("max_abs_diff").unwrap().iter().all(|&e| e <= 1e-8));
    }

    #[test]
    fn sampled_arguments_are_in_range() {
        let args = random_kernel_args(&mut stream_rng(1, Stream::Aux(0)), 500, 10.0);
        assert!(args.iter().all(|a| a.nu > 0.0 && a.nu <= 10.0 && a.nv > 0.0 && a.nv <= 10.0));
    }
}
