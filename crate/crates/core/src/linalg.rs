//! Small dense linear-algebra helpers shared by the kernel, measure and
//! intensity code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Pivots and intensities at or below this value count as exactly zero.
pub const ZERO_THRESHOLD: f64 = 1e-12;

/// Symmetric eigen-decomposition with eigenvalues sorted ascending and the
/// eigenvector columns permuted to match.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SortedEigen {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        if n == 0 {
            return Self { values: Vec::new(), vectors: DMatrix::zeros(0, 0) };
        }
        let sym = symmetrize(m);
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Self { values, vectors }
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `V diag(f(λ)) Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.values.len();
        let scaled = DMatrix::from_fn(n, n, |r, c| self.vectors[(r, c)] * f(self.values[c]));
        let out = &scaled * self.vectors.transpose();
        symmetrize(&out)
    }
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest `|M_ij - M_ji|`, relative to the largest entry (absolute when the
/// matrix is tiny).
pub fn hermitian_residual(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax().max(1.0);
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

/// `D^{1/2} M D^{1/2}` for `D = diag(weights)`.
pub fn weight_similarity(m: &DMatrix<f64>, sqrt_weights: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| sqrt_weights[i] * m[(i, j)] * sqrt_weights[j])
}

/// `D^{-1/2} M D^{-1/2}`.
pub fn weight_similarity_inverse(m: &DMatrix<f64>, sqrt_weights: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] / (sqrt_weights[i] * sqrt_weights[j]))
}

/// Principal submatrix on `idx`.
pub fn principal(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

/// Cholesky factorization `P A Pᵀ = L Lᵀ` with symmetric diagonal pivoting.
///
/// Stops at the first pivot at or below [`ZERO_THRESHOLD`]; `rank` then
/// reports how many pivots succeeded.
#[derive(Debug, Clone)]
pub struct PivotedCholesky {
    /// `perm[k]` is the row of the input matrix placed at position `k`.
    pub perm: Vec<usize>,
    /// Lower triangle, in permuted order.
    pub l: DMatrix<f64>,
    pub rank: usize,
}

impl PivotedCholesky {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let m = a.nrows();
        let mut work = a.clone();
        let mut perm: Vec<usize> = (0..m).collect();
        let mut l = DMatrix::zeros(m, m);
        let mut rank = 0;
        for k in 0..m {
            // largest remaining diagonal
            let (best, piv) = (k..m)
                .map(|i| (i, work[(i, i)]))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            if piv <= ZERO_THRESHOLD {
                break;
            }
            if best != k {
                work.swap_rows(k, best);
                work.swap_columns(k, best);
                l.swap_rows(k, best);
                perm.swap(k, best);
            }
            let d = work[(k, k)].sqrt();
            l[(k, k)] = d;
            for i in k + 1..m {
                l[(i, k)] = work[(i, k)] / d;
            }
            for i in k + 1..m {
                for j in k + 1..=i {
                    let v = work[(i, j)] - l[(i, k)] * l[(j, k)];
                    work[(i, j)] = v;
                    work[(j, i)] = v;
                }
            }
            rank += 1;
        }
        Self { perm, l, rank }
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.l.nrows()
    }

    /// Solves `L y = P b` by forward substitution (full-rank factors only).
    pub fn forward_solve(&self, b: &[f64]) -> DVector<f64> {
        let m = self.l.nrows();
        let mut y = DVector::zeros(m);
        for i in 0..m {
            let mut acc = b[self.perm[i]];
            for k in 0..i {
                acc -= self.l[(i, k)] * y[k];
            }
            y[i] = acc / self.l[(i, i)];
        }
        y
    }

    /// `log det A`; `-inf` for rank-deficient input.
    pub fn log_det(&self) -> f64 {
        if !self.is_full_rank() {
            return f64::NEG_INFINITY;
        }
        (0..self.l.nrows()).map(|i| 2.0 * self.l[(i, i)].ln()).sum()
    }
}
