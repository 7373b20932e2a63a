use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Symmetric `M × M` matrix of pairwise scalar products (reservoir states)
/// or kernel values (recurrent kernel) at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(DMatrix<f64>);

impl GramMatrix {
    /// Builds the matrix from `entry(n, m)`, evaluated on the upper triangle
    /// and mirrored.
    pub fn from_fn(dim: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut g = DMatrix::zeros(dim, dim);
        for n in 0..dim {
            for m in n..dim {
                let v = entry(n, m);
                g[(n, m)] = v;
                g[(m, n)] = v;
            }
        }
        GramMatrix(g)
    }

    pub fn try_from_fn(
        dim: usize,
        mut entry: impl FnMut(usize, usize) -> Result<f64>,
    ) -> Result<Self> {
        let mut g = DMatrix::zeros(dim, dim);
        for n in 0..dim {
            for m in n..dim {
                let v = entry(n, m)?;
                g[(n, m)] = v;
                g[(m, n)] = v;
            }
        }
        Ok(GramMatrix(g))
    }

    /// Wraps a square matrix, rejecting non-square input. Symmetry is not
    /// enforced here; see [`GramMatrix::asymmetry`].
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Shape(format!(
                "Gram matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(GramMatrix(m))
    }

    pub fn identity(dim: usize) -> Self {
        GramMatrix(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        GramMatrix(DMatrix::zeros(dim, dim))
    }

    /// Row-major nested vectors, convenient for tests and literals.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("rows of a Gram matrix must have length M".into()));
        }
        Ok(GramMatrix(DMatrix::from_fn(dim, dim, |i, j| rows[i][j])))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.0[(n, m)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Entry-wise sum; used for the total kernel of deep topologies.
    pub fn sum<'a>(parts: impl IntoIterator<Item = &'a GramMatrix>) -> Result<GramMatrix> {
        let mut it = parts.into_iter();
        let first = it
            .next()
            .ok_or_else(|| Error::Shape("cannot sum an empty list of Gram matrices".into()))?;
        let mut acc = first.0.clone();
        for g in it {
            if g.dim() != acc.nrows() {
                return Err(Error::Shape("Gram matrices differ in size".into()));
            }
            acc += &g.0;
        }
        Ok(GramMatrix(acc))
    }

    /// Largest `|G_nm − G_mn|`.
    pub fn asymmetry(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for n in 0..d {
            for m in (n + 1)..d {
                worst = worst.max((self.get(n, m) - self.get(m, n)).abs());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.0 + self.0.transpose()) * 0.5;
        SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `P G Pᵀ` where row `i` of the result is row `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> GramMatrix {
        let d = self.dim();
        GramMatrix(DMatrix::from_fn(d, d, |i, j| self.get(perm[i], perm[j])))
    }

    /// Squared Frobenius distance `Σ_nm (A_nm − B_nm)²`.
    pub fn squared_distance(&self, other: &GramMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!(
                "cannot compare {0}x{0} and {1}x{1} Gram matrices",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squared_distance_of_identity_and_zero() {
        let a = GramMatrix::identity(2);
        let b = GramMatrix::zeros(2);
        assert_eq!(a.squared_distance(&b).unwrap(), 2.0);
        assert_eq!(a.squared_distance(&a).unwrap(), 0.0);
        assert!(a.squared_distance(&GramMatrix::zeros(3)).is_err());
    }

    #[test]
    fn permutation_moves_rows_and_columns() {
        let g = GramMatrix::from_rows(&[
            vec![1.0, 0.2, 0.3],
            vec![0.2, 2.0, 0.4],
            vec![0.3, 0.4, 3.0],
        ])
        .unwrap();
        let p = g.permuted(&[2, 0, 1]);
        assert_eq!(p.get(0, 0), 3.0);
        assert_eq!(p.get(0, 1), 0.3);
        assert_eq!(p.get(1, 2), 0.2);
    }

    #[test]
    fn min_eigenvalue_of_rank_one() {
        let g = GramMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(g.min_eigenvalue().abs() < 1e-14);
    }
}
