use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Ridge solution `W = (XᵀX + λI)⁻¹ XᵀY` of `min ‖XW − Y‖² + λ‖W‖²`.
///
/// `states` is `M × N` (one state per row), `targets` is `M × n_out`; the
/// returned readout is `N × n_out`, so predictions are `X·W`.
pub fn train_readout(states: &DMatrix<f64>, targets: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    if states.nrows() == 0 {
        return Err(Error::Shape("readout needs at least one sample".into()));
    }
    if states.nrows() != targets.nrows() {
        return Err(Error::Shape(format!(
            "{} state rows but {} target rows",
            states.nrows(),
            targets.nrows()
        )));
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::invalid("ridge", format!("must be a nonnegative number, got {ridge}")));
    }
    let dim = states.ncols();
    let mut normal = states.transpose() * states;
    for i in 0..dim {
        normal[(i, i)] += ridge;
    }
    let rhs = states.transpose() * targets;

    let eig = SymmetricEigen::new(normal.clone()).eigenvalues;
    let largest = eig.iter().copied().fold(0.0f64, f64::max);
    let tol = largest * dim as f64 * f64::EPSILON;
    let rank = eig.iter().filter(|&&l| l > tol).count();
    if rank < dim {
        return Err(Error::NumericalRank { rank, dim });
    }
    let chol = normal.cholesky().ok_or(Error::NumericalRank { rank, dim })?;
    Ok(chol.solve(&rhs))
}
