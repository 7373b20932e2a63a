//! Reservoir computing (vanilla, sparse, leaky and deep topologies), the
//! matching recurrent-kernel limits, and Monte-Carlo studies of how fast
//! finite reservoirs approach those limits.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernelcore`]: activations and the iterable kernel `k(‖u‖², ‖v‖², uᵀv)`
//!   for Gaussian weights, in closed form and by quadrature.
//! * [`reservoir`]: finite-size simulators, weight sampling, state Gram
//!   matrices and a ridge readout.
//! * [`rkernel`]: deterministic recurrent-kernel iterations.
//! * [`experiments`]: the Monte-Carlo engine and the convergence, sparsity,
//!   deep-size and random-feature studies.
//! * [`cli`]: the `rkconv` command line.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod gram;
pub mod kernelcore;
pub mod reservoir;
pub mod rkernel;
pub mod rng;

pub use error::{Error, Result};
pub use gram::GramMatrix;
