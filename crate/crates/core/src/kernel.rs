//! Weighted site spaces, correlation kernels `K` and interaction operators
//! `J = K(1 - K)^{-1}`.
//!
//! All integrals against the reference measure become weighted sums over a
//! finite site set. `K` is self-adjoint on `L²(ν)`, so spectral statements are
//! made about the similarity transform `S = D^{1/2} K D^{1/2}` with
//! `D = diag(ν)`, which is an ordinary symmetric matrix.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SortedEigen};

/// Default gap kept between the spectrum of `K` and 1.
pub const DEFAULT_EPSILON: f64 = 1e-3;
/// Tolerance on the weighted Hermiticity of `K`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues of `S` below `-NEGATIVE_TOL` are a positivity violation.
pub const NEGATIVE_TOL: f64 = 1e-10;
/// Spectral margin below which `1 - K` is treated as singular.
pub const MIN_MARGIN: f64 = 1e-12;
const RESCALE_BUDGET: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    #[default]
    Uniform,
    Midpoint,
}

/// Finite ordered set of sites with positive quadrature weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteSpace {
    positions: Vec<f64>,
    weights: Vec<f64>,
}

impl SiteSpace {
    pub fn new(positions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidSpace("at least one site is required".into()));
        }
        if positions.len() != weights.len() {
            return Err(Error::InvalidSpace(format!(
                "{} positions but {} weights",
                positions.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidSpace(format!("weight {w} is not strictly positive")));
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidSpace("positions must be finite".into()));
        }
        let mut sorted = positions.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSpace("positions must be pairwise distinct".into()));
        }
        Ok(Self { positions, weights })
    }

    /// `n` sites labelled `0, 1, …` with unit weights.
    pub fn counting(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i as f64).collect(), vec![1.0; n])
    }

    /// Equispaced cell midpoints on `[lo, hi]`. Both rules give the cell width
    /// as weight on an equispaced grid.
    pub fn grid(lo: f64, hi: f64, n: usize, rule: WeightRule) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpace("grid needs n >= 1".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidSpace(format!("degenerate interval [{lo}, {hi}]")));
        }
        let h = (hi - lo) / n as f64;
        let positions = (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect();
        let weights = match rule {
            WeightRule::Uniform | WeightRule::Midpoint => vec![h; n],
        };
        Self::new(positions, weights)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sqrt_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.sqrt()).collect()
    }
}

/// Recipe for a correlation kernel on a given site space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `K = diag(k_1, …, k_n)`; a single value is broadcast to every site.
    Diagonal { values: Vec<f64> },
    /// `α sin(πρ(x−y)) / (π(x−y))`, with value `αρ` on the diagonal.
    ShrunkSine { alpha: f64, density: f64 },
    /// `scale · exp(−(x−y)² / 2ℓ²)`.
    RbfContraction { lengthscale: f64, scale: f64 },
    /// Random symmetric PSD `S` from a seeded Gaussian matrix, rescaled so its
    /// top eigenvalue equals `lambda_max`.
    RandomContraction { seed: u64, lambda_max: f64 },
    /// Explicit row-major entries of `K`.
    Matrix { entries: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    pub epsilon: f64,
    /// Rescale kernels whose top eigenvalue exceeds `1 - epsilon` instead of
    /// rejecting them. `None` rescales the smooth families and rejects
    /// explicit matrices.
    pub rescale: Option<bool>,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { epsilon: DEFAULT_EPSILON, rescale: None }
    }
}

/// Report of [`validate_kernel`]. Violations are listed, never thrown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDiagnostics {
    pub hermitian_residual: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub trace: f64,
    pub margin: f64,
    pub epsilon: f64,
    pub violations: Vec<String>,
}

impl KernelDiagnostics {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks Hermiticity, the spectral range `[0, 1 − ε]` and the trace of a
/// candidate kernel matrix.
pub fn validate_kernel(space: &SiteSpace, k: &DMatrix<f64>, epsilon: f64) -> KernelDiagnostics {
    let n = space.len();
    if k.nrows() != n || k.ncols() != n {
        return KernelDiagnostics {
            hermitian_residual: f64::NAN,
            lambda_min: f64::NAN,
            lambda_max: f64::NAN,
            trace: f64::NAN,
            margin: f64::NAN,
            epsilon,
            violations: vec![format!("shape {}x{} does not match {n} sites", k.nrows(), k.ncols())],
        };
    }
    let s = linalg::weight_similarity(k, &space.sqrt_weights());
    let hermitian_residual = linalg::hermitian_residual(&s);
    let eig = SortedEigen::new(&s);
    let trace: f64 = (0..n).map(|i| k[(i, i)] * space.weights()[i]).sum();
    let (lambda_min, lambda_max) = (eig.min(), eig.max());
    let margin = 1.0 - lambda_max;
    let mut violations = Vec::new();
    if !k.iter().all(|v| v.is_finite()) {
        violations.push("non-finite entries".to_string());
    }
    if hermitian_residual > HERMITIAN_TOL {
        violations.push(format!("hermiticity violated (residual {hermitian_residual:e})"));
    }
    if lambda_min < -NEGATIVE_TOL {
        violations.push(format!("positivity violated (lambda_min {lambda_min:e})"));
    }
    if lambda_max >= 1.0 {
        violations.push(format!("strictness violated (lambda_max {lambda_max})"));
    } else if lambda_max > 1.0 - epsilon {
        violations.push(format!(
            "spectral margin {margin:e} below epsilon {epsilon:e}"
        ));
    }
    KernelDiagnostics { hermitian_residual, lambda_min, lambda_max, trace, margin, epsilon, violations }
}

/// A validated correlation kernel: `0 ≤ K ≤ (1 − ε)𝟙` on `L²(ν)`.
#[derive(Debug, Clone)]
pub struct KernelOperator {
    space: SiteSpace,
    matrix: DMatrix<f64>,
    symmetrized: DMatrix<f64>,
    eigen: SortedEigen,
    epsilon: f64,
}

impl KernelOperator {
    pub fn from_matrix(space: &SiteSpace, matrix: DMatrix<f64>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidKernel(format!("epsilon {epsilon} outside (0, 1)")));
        }
        let n = space.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "kernel is {}x{}, space has {n} sites",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidKernel("non-finite entries".into()));
        }
        let sqrt_w = space.sqrt_weights();
        let raw = linalg::weight_similarity(&matrix, &sqrt_w);
        let residual = linalg::hermitian_residual(&raw);
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let symmetrized = linalg::symmetrize(&raw);
        let eigen = SortedEigen::new(&symmetrized);
        if eigen.min() < -NEGATIVE_TOL {
            return Err(Error::InvalidKernel(format!(
                "negative eigenvalue {:e}",
                eigen.min()
            )));
        }
        if eigen.max() > 1.0 - epsilon {
            return Err(Error::StrictnessViolated { lambda_max: eigen.max(), bound: 1.0 - epsilon });
        }
        Ok(Self { space: space.clone(), matrix, symmetrized, eigen, epsilon })
    }

    pub fn space(&self) -> &SiteSpace {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.len()
    }

    /// Entries `K(x_i, x_j)`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// `S = D^{1/2} K D^{1/2}`.
    pub fn symmetrized(&self) -> &DMatrix<f64> {
        &self.symmetrized
    }

    /// Eigenpairs of `S`, ascending.
    pub fn eigen(&self) -> &SortedEigen {
        &self.eigen
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn diagnostics(&self) -> KernelDiagnostics {
        validate_kernel(&self.space, &self.matrix, self.epsilon)
    }

    /// `det(K(x_i, x_j))` over the given sites: the correlation function
    /// `k⁽ᵐ⁾` at those points.
    pub fn correlation(&self, sites: &[usize]) -> f64 {
        if sites.is_empty() {
            return 1.0;
        }
        linalg::principal(&self.matrix, sites).determinant()
    }
}

/// Builds a kernel from a recipe, rescaling into `[0, 1 − ε]` when allowed.
pub fn build_kernel(space: &SiteSpace, spec: &KernelSpec, options: KernelOptions) -> Result<KernelOperator> {
    let n = space.len();
    let pos = space.positions();
    let eps = options.epsilon;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidKernel(format!("epsilon {eps} outside (0, 1)")));
    }
    let (matrix, default_rescale) = match spec {
        KernelSpec::Diagonal { values } => {
            let vals: Vec<f64> = match values.len() {
                1 => vec![values[0]; n],
                len if len == n => values.clone(),
                len => {
                    return Err(Error::InvalidKernel(format!(
                        "diagonal has {len} values for {n} sites"
                    )))
                }
            };
            (DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals)), false)
        }
        KernelSpec::ShrunkSine { alpha, density } => {
            if !(*alpha > 0.0 && *alpha < 1.0) {
                return Err(Error::InvalidKernel(format!("shrunk sine needs 0 < alpha < 1, got {alpha}")));
            }
            if !(*density > 0.0) {
                return Err(Error::InvalidKernel(format!("density must be positive, got {density}")));
            }
            let m = shrunk_sine_matrix(space, *alpha, *density);
            (m, true)
        }
        KernelSpec::RbfContraction { lengthscale, scale } => {
            if !(*lengthscale > 0.0 && *scale > 0.0) {
                return Err(Error::InvalidKernel("rbf lengthscale and scale must be positive".into()));
            }
            let m = DMatrix::from_fn(n, n, |i, j| {
                let d = pos[i] - pos[j];
                scale * (-d * d / (2.0 * lengthscale * lengthscale)).exp()
            });
            (m, true)
        }
        KernelSpec::RandomContraction { seed, lambda_max } => {
            if !(*lambda_max > 0.0 && *lambda_max <= 1.0 - eps) {
                return Err(Error::InvalidKernel(format!(
                    "lambda_max must lie in (0, 1 - epsilon], got {lambda_max}"
                )));
            }
            let s = random_symmetric_psd(n, *seed, *lambda_max);
            (linalg::weight_similarity_inverse(&s, &space.sqrt_weights()), false)
        }
        KernelSpec::Matrix { entries } => {
            if entries.len() != n || entries.iter().any(|r| r.len() != n) {
                return Err(Error::DimensionMismatch(format!("kernel matrix must be {n}x{n}")));
            }
            (DMatrix::from_fn(n, n, |i, j| entries[i][j]), false)
        }
    };
    let rescale = options.rescale.unwrap_or(default_rescale);
    if !rescale {
        return KernelOperator::from_matrix(space, matrix, eps);
    }
    rescale_into_range(space, matrix, eps)
}

/// Raw (unrescaled) shrunk sine kernel entries.
pub fn shrunk_sine_matrix(space: &SiteSpace, alpha: f64, density: f64) -> DMatrix<f64> {
    let pos = space.positions();
    let n = space.len();
    DMatrix::from_fn(n, n, |i, j| {
        let d = pos[i] - pos[j];
        if i == j {
            alpha * density
        } else {
            alpha * (std::f64::consts::PI * density * d).sin() / (std::f64::consts::PI * d)
        }
    })
}

fn rescale_into_range(space: &SiteSpace, mut matrix: DMatrix<f64>, eps: f64) -> Result<KernelOperator> {
    let bound = 1.0 - eps;
    let sqrt_w = space.sqrt_weights();
    let mut top = SortedEigen::new(&linalg::weight_similarity(&matrix, &sqrt_w)).max();
    if top <= bound {
        return KernelOperator::from_matrix(space, matrix, eps);
    }
    let mut factor = bound / top;
    for attempt in 0..RESCALE_BUDGET {
        let candidate = &matrix * factor;
        top = SortedEigen::new(&linalg::weight_similarity(&candidate, &sqrt_w)).max();
        if top <= bound {
            matrix = candidate;
            return KernelOperator::from_matrix(space, matrix, eps);
        }
        factor *= 1.0 - 4.0 * f64::EPSILON * (1u64 << attempt) as f64;
    }
    Err(Error::StrictnessViolated { lambda_max: top, bound })
}

fn random_symmetric_psd(n: usize, seed: u64, lambda_max: f64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let g = linalg::symmetrize(&(&a * a.transpose()));
    let top = SortedEigen::new(&g).max();
    g * (lambda_max / top)
}

/// `J = K(𝟙 − K)^{-1}` together with the L-ensemble matrix
/// `L = D^{1/2} J D^{1/2}` and its spectrum.
#[derive(Debug, Clone)]
pub struct InteractionOperator {
    space: SiteSpace,
    matrix: DMatrix<f64>,
    ensemble: DMatrix<f64>,
    eigen: SortedEigen,
}

impl InteractionOperator {
    /// Maps every eigenvalue `λ` of `S` to `λ / (1 − λ)` and undoes the weight
    /// similarity.
    pub fn from_kernel(k: &KernelOperator) -> Result<Self> {
        let margin = 1.0 - k.eigen().max();
        if margin < MIN_MARGIN {
            return Err(Error::SingularInverse { margin });
        }
        let eigen = SortedEigen {
            values: k.eigen().values.iter().map(|&l| l.max(0.0) / (1.0 - l)).collect(),
            vectors: k.eigen().vectors.clone(),
        };
        let ensemble = eigen.map(|x| x);
        let matrix = linalg::weight_similarity_inverse(&ensemble, &k.space().sqrt_weights());
        Ok(Self { space: k.space().clone(), matrix, ensemble, eigen })
    }

    /// Wraps a given `J`. It must be symmetric and positive semidefinite in
    /// the weighted sense.
    pub fn from_matrix(space: &SiteSpace, matrix: DMatrix<f64>) -> Result<Self> {
        let n = space.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch(format!("J must be {n}x{n}")));
        }
        let raw = linalg::weight_similarity(&matrix, &space.sqrt_weights());
        let residual = linalg::hermitian_residual(&raw);
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let ensemble = linalg::symmetrize(&raw);
        let eigen = SortedEigen::new(&ensemble);
        if eigen.min() < -NEGATIVE_TOL {
            return Err(Error::InvalidKernel(format!("J has negative eigenvalue {:e}", eigen.min())));
        }
        Ok(Self { space: space.clone(), matrix, ensemble, eigen })
    }

    pub fn space(&self) -> &SiteSpace {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.len()
    }

    pub fn weights(&self) -> &[f64] {
        self.space.weights()
    }

    /// Entries `J(x_i, x_j)`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// `L = D^{1/2} J D^{1/2}`.
    pub fn ensemble(&self) -> &DMatrix<f64> {
        &self.ensemble
    }

    /// Eigenpairs of `L`, ascending.
    pub fn eigen(&self) -> &SortedEigen {
        &self.eigen
    }

    /// `log det(𝟙 + L)`.
    pub fn log_normalizer(&self) -> f64 {
        self.eigen.values.iter().map(|&m| (1.0 + m.max(0.0)).ln()).sum()
    }

    /// Inverse map `J(𝟙 + J)^{-1}` back to the correlation kernel entries.
    pub fn kernel_matrix(&self) -> DMatrix<f64> {
        let s = self.eigen.map(|m| m / (1.0 + m));
        linalg::weight_similarity_inverse(&s, &self.space.sqrt_weights())
    }
}
