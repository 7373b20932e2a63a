//! Gauss quadrature rules and the quadrature evaluation of the iterable
//! kernel.
//!
//! Rules are computed with the Golub-Welsch eigenvalue method and then
//! polished by Newton iterations on the orthonormal three-term recurrence;
//! weights are the Christoffel numbers `1 / Σ_k p_k(x_i)²`.

use std::f64::consts::PI;
use std::sync::{Arc, LazyLock};

use nalgebra::{DMatrix, SymmetricEigen};

use super::{Activation, KernelArgs};
use crate::{Error, Result};

pub const DEFAULT_ORDER: usize = 100;

/// Nodes and positive weights of a Gauss rule for some weight function.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    /// Rule for the standard normal density `e^{−w²/2}/√(2π)`.
    pub fn hermite(order: usize) -> Self {
        let mut rule = Self::from_recurrence(order, |_| 0.0, |k| (k as f64).sqrt(), 1.0);
        rule.symmetrize();
        rule
    }

    /// Rule for the unit weight on `[−1, 1]`.
    pub fn legendre(order: usize) -> Self {
        let mut rule = Self::from_recurrence(
            order,
            |_| 0.0,
            |k| {
                let k = k as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            },
            2.0,
        );
        rule.symmetrize();
        rule
    }

    /// `a(k)` and `b(k)` are the diagonal and off-diagonal of the Jacobi
    /// matrix of the orthonormal polynomials, `mu0` the total mass.
    fn from_recurrence(
        order: usize,
        a: impl Fn(usize) -> f64,
        b: impl Fn(usize) -> f64,
        mu0: f64,
    ) -> Self {
        assert!(order >= 1);
        let jacobi = DMatrix::from_fn(order, order, |i, j| {
            if i == j {
                a(i)
            } else if i + 1 == j {
                b(j)
            } else if j + 1 == i {
                b(i)
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(f64::total_cmp);

        // p_0 .. p_n at x together with p_n'(x)
        let eval = |x: f64| -> (f64, f64, f64) {
            let mut p_prev = 0.0;
            let mut p = 1.0 / mu0.sqrt();
            let mut dp_prev = 0.0;
            let mut dp = 0.0;
            let mut sum_sq = p * p;
            for k in 0..order {
                let bk = if k == 0 { 0.0 } else { b(k) };
                let bk1 = b(k + 1);
                let p_next = ((x - a(k)) * p - bk * p_prev) / bk1;
                let dp_next = (p + (x - a(k)) * dp - bk * dp_prev) / bk1;
                p_prev = p;
                p = p_next;
                dp_prev = dp;
                dp = dp_next;
                if k + 1 < order {
                    sum_sq += p * p;
                }
            }
            (p, dp, sum_sq)
        };

        let mut weights = Vec::with_capacity(order);
        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let (p, dp, _) = eval(*x);
                if dp == 0.0 || !dp.is_finite() {
                    break;
                }
                let dx = p / dp;
                *x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, _, sum_sq) = eval(*x);
            weights.push(1.0 / sum_sq);
        }
        GaussRule { nodes, weights }
    }

    fn symmetrize(&mut self) {
        let n = self.nodes.len();
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (self.nodes[j] - self.nodes[i]);
            let w = 0.5 * (self.weights[i] + self.weights[j]);
            self.nodes[i] = -x;
            self.nodes[j] = x;
            self.weights[i] = w;
            self.weights[j] = w;
        }
        if n % 2 == 1 {
            self.nodes[n / 2] = 0.0;
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }
}

/// Radius beyond which the Gaussian tail `r e^{−r²/2}` is below `1e-28`
/// even after multiplication by the polynomial growth of ReLU products.
const RADIAL_CUTOFF: f64 = 12.0;
const RADIAL_PANELS: usize = 6;

/// Quadrature rules of a given order: the probabilists' Gauss-Hermite rule
/// of that order for one-dimensional expectations, a Gauss-Legendre rule of
/// `⌈order/2⌉` nodes per angular piece, and a composite Gauss-Legendre rule
/// with `6 · ⌈order/4⌉` nodes for the radial integral over `[0, 12]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    order: usize,
    hermite: GaussRule,
    angular: GaussRule,
    radial: GaussRule,
}

static DEFAULT_RULE: LazyLock<Arc<QuadratureRule>> =
    LazyLock::new(|| Arc::new(QuadratureRule::build(DEFAULT_ORDER)));

impl QuadratureRule {
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::invalid("order", format!("quadrature order must be >= 2, got {order}")));
        }
        Ok(Self::build(order))
    }

    fn build(order: usize) -> Self {
        let angular = GaussRule::legendre(order.div_ceil(2));
        let panel = GaussRule::legendre(order.div_ceil(4).max(2));
        let width = RADIAL_CUTOFF / RADIAL_PANELS as f64;
        let mut nodes = Vec::with_capacity(RADIAL_PANELS * panel.order());
        let mut weights = Vec::with_capacity(nodes.capacity());
        for p in 0..RADIAL_PANELS {
            let mid = (p as f64 + 0.5) * width;
            for (&t, &w) in panel.nodes().iter().zip(panel.weights()) {
                let r = mid + 0.5 * width * t;
                nodes.push(r);
                // polar Jacobian and radial Gaussian density folded in
                weights.push(0.5 * width * w * r * (-0.5 * r * r).exp());
            }
        }
        QuadratureRule {
            order,
            hermite: GaussRule::hermite(order),
            angular,
            radial: GaussRule { nodes, weights },
        }
    }

    /// Shared rule of order 100.
    pub fn default_rule() -> Arc<QuadratureRule> {
        Arc::clone(&DEFAULT_RULE)
    }

    /// Shared rule of the given order (the cached one for order 100).
    pub fn shared(order: usize) -> Result<Arc<QuadratureRule>> {
        if order == DEFAULT_ORDER {
            Ok(Self::default_rule())
        } else {
            Self::new(order).map(Arc::new)
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        self.hermite.nodes()
    }

    pub fn weights(&self) -> &[f64] {
        self.hermite.weights()
    }

    pub fn hermite(&self) -> &GaussRule {
        &self.hermite
    }

    /// `E[g(Z)]` for standard normal `Z`.
    pub fn expect(&self, g: impl FnMut(f64) -> f64) -> f64 {
        self.hermite.integrate(g)
    }
}

/// Iterable kernel `k(‖u‖², ‖v‖², uᵀv) = E[f(wᵀu) f(wᵀv)]` for standard
/// Gaussian `w`, evaluated numerically.
///
/// Rotation invariance reduces the expectation to two independent standard
/// normals: with `u₁ = ‖u‖`, `v₁ = ‖v‖ρ`, `v₂ = ‖v‖√(1 − ρ²)` where `ρ` is
/// the correlation, `k = E[f(w₁u₁) f(w₁v₁ + w₂v₂)]`. The plain tensor
/// Gauss-Hermite double sum ([`tensor_hermite`]) converges slowly once the
/// norms are large or the activation has a kink, so the plane is integrated
/// in polar form instead: the angle is split where either argument changes
/// sign, with Gauss-Legendre nodes on each piece, and the radius uses the
/// composite radial rule.
pub fn kernel_quadrature(f: Activation, args: KernelArgs, rule: &QuadratureRule) -> Result<f64> {
    let KernelArgs { nu, nv, .. } = args;
    let f0 = f.apply(0.0);
    if nu == 0.0 && nv == 0.0 {
        return Ok(f0 * f0);
    }
    if nu == 0.0 {
        let s = nv.sqrt();
        return Ok(f0 * rule.expect(|w| f.apply(w * s)));
    }
    if nv == 0.0 {
        let s = nu.sqrt();
        return Ok(f0 * rule.expect(|w| f.apply(w * s)));
    }
    let rho = args.correlation();
    let u1 = nu.sqrt();
    let v1 = nv.sqrt() * rho;
    let v2 = nv.sqrt() * ((1.0 - rho) * (1.0 + rho)).max(0.0).sqrt();
    Ok(split_polar(f, u1, v1, v2, rule))
}

/// `Σ_i Σ_j w_i w_j f(x_i u₁) f(x_i v₁ + x_j v₂)`.
pub fn tensor_hermite(f: Activation, u1: f64, v1: f64, v2: f64, rule: &GaussRule) -> f64 {
    let (x, w) = (rule.nodes(), rule.weights());
    let mut total = 0.0;
    for (&xi, &wi) in x.iter().zip(w) {
        let fu = f.apply(xi * u1);
        if fu == 0.0 {
            continue;
        }
        let inner: f64 = x
            .iter()
            .zip(w)
            .map(|(&xj, &wj)| wj * f.apply(xi * v1 + xj * v2))
            .sum();
        total += wi * fu * inner;
    }
    total
}

fn split_polar(f: Activation, u1: f64, v1: f64, v2: f64, rule: &QuadratureRule) -> f64 {
    // Angles in (0, π) where wᵀu or wᵀv changes sign.
    let mut cuts = vec![0.0, 0.5 * PI, PI];
    if v1 != 0.0 && v2 > 0.0 {
        let mut phi = v1.atan2(-v2);
        if phi < 0.0 {
            phi += PI;
        }
        if phi > 1e-14 && phi < PI - 1e-14 {
            cuts.push(phi);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let (radii, lams) = (rule.radial.nodes(), rule.radial.weights());
    let mut total = 0.0;
    for piece in cuts.windows(2) {
        let (lo, hi) = (piece[0], piece[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (&t, &wt) in rule.angular.nodes().iter().zip(rule.angular.weights()) {
            let phi = mid + half * t;
            let (s, c) = phi.sin_cos();
            let a = u1 * c;
            let b = v1 * c + v2 * s;
            let radial: f64 = if f.is_odd() {
                2.0 * radii
                    .iter()
                    .zip(lams)
                    .map(|(&r, &lam)| lam * f.apply(r * a) * f.apply(r * b))
                    .sum::<f64>()
            } else {
                radii
                    .iter()
                    .zip(lams)
                    .map(|(&r, &lam)| {
                        lam * (f.apply(r * a) * f.apply(r * b) + f.apply(-r * a) * f.apply(-r * b))
                    })
                    .sum()
            };
            total += half * wt * radial;
        }
    }
    total / (2.0 * PI)
}
