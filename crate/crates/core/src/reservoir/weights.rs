use rand::Rng;
use rand_distr::StandardNormal;

use super::ReservoirConfig;

/// Recurrent matrices with at most this fraction of non-zeros are stored in
/// compressed sparse rows.
pub const CSR_MAX_SPARSITY: f64 = 0.25;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must be rows * cols");
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `out_i = Σ_j (scale · A_ij) · x_j`, summed in increasing `j`.
    ///
    /// Four rows are accumulated together for instruction-level parallelism;
    /// each row keeps its own sequential order, so the result equals the CSR
    /// product of the same matrix bit for bit.
    pub fn scaled_matvec(&self, scale: f64, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        let c = self.cols;
        let mut i = 0;
        while i + 4 <= self.rows {
            let r0 = &self.data[i * c..(i + 1) * c];
            let r1 = &self.data[(i + 1) * c..(i + 2) * c];
            let r2 = &self.data[(i + 2) * c..(i + 3) * c];
            let r3 = &self.data[(i + 3) * c..(i + 4) * c];
            let (mut a0, mut a1, mut a2, mut a3) = (0.0, 0.0, 0.0, 0.0);
            for j in 0..c {
                let xj = x[j];
                a0 += (scale * r0[j]) * xj;
                a1 += (scale * r1[j]) * xj;
                a2 += (scale * r2[j]) * xj;
                a3 += (scale * r3[j]) * xj;
            }
            out[i] = a0;
            out[i + 1] = a1;
            out[i + 2] = a2;
            out[i + 3] = a3;
            i += 4;
        }
        for (k, o) in out.iter_mut().enumerate().skip(i) {
            let mut acc = 0.0;
            for (&w, &xj) in self.row(k).iter().zip(x) {
                acc += (scale * w) * xj;
            }
            *o = acc;
        }
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut indptr = Vec::with_capacity(m.rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..m.rows {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            rows: m.rows,
            cols: m.cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut data = vec![0.0; self.rows * self.cols];
        for i in 0..self.rows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                data[i * self.cols + self.indices[k]] = self.values[k];
            }
        }
        DenseMatrix::from_vec(self.rows, self.cols, data)
    }

    pub fn scaled_matvec(&self, scale: f64, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += (scale * self.values[k]) * x[self.indices[k]];
            }
            *o = acc;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Dense,
    Csr,
}

/// Recurrent weight matrix in whichever layout suits its density.
#[derive(Debug, Clone, PartialEq)]
pub enum RecurrentWeights {
    Dense(DenseMatrix),
    Csr(CsrMatrix),
}

impl RecurrentWeights {
    pub fn dim(&self) -> usize {
        match self {
            RecurrentWeights::Dense(m) => m.rows,
            RecurrentWeights::Csr(m) => m.rows,
        }
    }

    pub fn layout(&self) -> Layout {
        match self {
            RecurrentWeights::Dense(_) => Layout::Dense,
            RecurrentWeights::Csr(_) => Layout::Csr,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            RecurrentWeights::Dense(m) => m.clone(),
            RecurrentWeights::Csr(m) => m.to_dense(),
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            RecurrentWeights::Dense(m) => m.data.iter().filter(|&&v| v != 0.0).count(),
            RecurrentWeights::Csr(m) => m.nnz(),
        }
    }

    #[inline]
    pub fn scaled_matvec(&self, scale: f64, x: &[f64], out: &mut [f64]) {
        match self {
            RecurrentWeights::Dense(m) => m.scaled_matvec(scale, x, out),
            RecurrentWeights::Csr(m) => m.scaled_matvec(scale, x, out),
        }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        match self {
            RecurrentWeights::Dense(m) => RecurrentWeights::Dense(m.map(f)),
            RecurrentWeights::Csr(m) => RecurrentWeights::Csr(CsrMatrix {
                values: m.values.iter().map(|&v| f(v)).collect(),
                ..m.clone()
            }),
        }
    }
}

/// Sampled recurrent (`N × N`) and input (`N × d`) weights of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub w_r: RecurrentWeights,
    pub w_i: DenseMatrix,
    pub sparsity_used: f64,
}

impl WeightSet {
    pub fn n(&self) -> usize {
        self.w_r.dim()
    }

    pub fn d(&self) -> usize {
        self.w_i.cols
    }

    /// Entry-wise `(σ_r·W_r, σ_i·W_i)`.
    pub fn scaled(&self, sigma_r: f64, sigma_i: f64) -> WeightSet {
        WeightSet {
            w_r: self.w_r.map(|v| sigma_r * v),
            w_i: self.w_i.map(|v| sigma_i * v),
            sparsity_used: self.sparsity_used,
        }
    }
}

/// The raw draws behind a [`WeightSet`]: one uniform and one standard normal
/// per recurrent entry, and one standard normal per input entry.
///
/// Realising the same draws at different sparsity levels yields coupled
/// matrices (a common-random-numbers design): entry `(i, j)` is kept when its
/// uniform is below `s` and then equals `z_ij / √s`.
#[derive(Debug, Clone)]
pub struct LatentWeights {
    n: usize,
    d: usize,
    uniforms: Vec<f64>,
    normals: Vec<f64>,
    input: Vec<f64>,
}

impl LatentWeights {
    pub fn sample<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Self {
        let mut uniforms = Vec::with_capacity(n * n);
        let mut normals = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            uniforms.push(rng.random::<f64>());
            normals.push(rng.sample::<f64, _>(StandardNormal));
        }
        let input = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        LatentWeights {
            n,
            d,
            uniforms,
            normals,
            input,
        }
    }

    /// Realisation at sparsity `s`, CSR when `s ≤ CSR_MAX_SPARSITY`.
    pub fn realize(&self, sparsity: f64) -> WeightSet {
        let layout = if sparsity <= CSR_MAX_SPARSITY {
            Layout::Csr
        } else {
            Layout::Dense
        };
        self.realize_with(sparsity, layout)
    }

    pub fn realize_with(&self, sparsity: f64, layout: Layout) -> WeightSet {
        let inv = 1.0 / sparsity.sqrt();
        let dense_r: Vec<f64> = if sparsity >= 1.0 {
            self.normals.clone()
        } else {
            self.uniforms
                .iter()
                .zip(&self.normals)
                .map(|(&u, &z)| if u < sparsity { z * inv } else { 0.0 })
                .collect()
        };
        let dense_r = DenseMatrix::from_vec(self.n, self.n, dense_r);
        let w_r = match layout {
            Layout::Dense => RecurrentWeights::Dense(dense_r),
            Layout::Csr => RecurrentWeights::Csr(CsrMatrix::from_dense(&dense_r)),
        };
        WeightSet {
            w_r,
            w_i: DenseMatrix::from_vec(self.n, self.d, self.input.clone()),
            sparsity_used: sparsity,
        }
    }
}

/// Recurrent weights i.i.d. from `(1 − s)·δ₀ + s·N(0, 1/s)`, input weights
/// i.i.d. standard normal. Reproducible from the generator state.
pub fn sample_weights<R: Rng + ?Sized>(config: &ReservoirConfig, rng: &mut R) -> WeightSet {
    LatentWeights::sample(config.n, config.d, rng).realize(config.sparsity)
}
