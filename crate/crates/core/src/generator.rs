//! Exact Markov generators on the full configuration space `{0,1}ⁿ`.
//!
//! Stored matrices are Markov generators `Q = −H` (rows sum to zero,
//! off-diagonal rates non-negative). Transitions:
//!
//! * Glauber: `γ → γ∖x` at rate `d(x, γ∖x)`, `γ → γ∪x` at rate `b(x, γ) ν_x`;
//! * Kawasaki: `γ → γ∖x∪y` at rate `2 c(x, y, γ∖x) ν_y` for `x ∈ γ`, `y ∉ γ`.
//!
//! The factor 2 in the hop rate is what makes `⟨F, −QG⟩_μ` equal the
//! Kawasaki Dirichlet form.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::kernel::InteractionOperator;
use crate::linalg::SortedEigen;
use crate::measure::{MeasureTable, MAX_ENUMERATION_LIMIT};
use crate::papangelou;
use crate::rates::{DynamicsKind, RateFamily};

/// Absolute tolerance for detailed balance `μ(γ)q(γ,γ′) = μ(γ′)q(γ′,γ)`.
pub const REVERSIBILITY_TOL: f64 = 1e-10;

const LANCZOS_BREAKDOWN: f64 = 1e-10;

/// Transition rates between all `2ⁿ` configurations, indexed by bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    kind: DynamicsKind,
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl GeneratorMatrix {
    fn from_rows(kind: DynamicsKind, n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let diag = rows.iter().map(|r| -r.iter().map(|(_, q)| q).sum::<f64>()).collect();
        Self { kind, n, rows, diag }
    }

    pub fn kind(&self) -> DynamicsKind {
        self.kind
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    /// Number of states, `2ⁿ`.
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Off-diagonal entries of row `from`.
    pub fn row(&self, from: usize) -> &[(usize, f64)] {
        &self.rows[from]
    }

    pub fn diagonal(&self, state: usize) -> f64 {
        self.diag[state]
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        if from == to {
            return self.diag[from];
        }
        self.rows[from].iter().find(|(t, _)| *t == to).map_or(0.0, |(_, q)| *q)
    }

    /// Number of stored off-diagonal entries.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `max_γ |Σ_γ′ q(γ, γ′)|`.
    pub fn row_sum_residual(&self) -> f64 {
        self.rows
            .iter()
            .zip(&self.diag)
            .map(|(r, d)| (r.iter().map(|(_, q)| q).sum::<f64>() + d).abs())
            .fold(0.0, f64::max)
    }

    /// `(QG)(γ) = Σ_γ′ q(γ,γ′)(G(γ′) − G(γ))`.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .enumerate()
            .map(|(s, r)| r.iter().map(|&(t, q)| q * (g[t] - g[s])).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (s, r) in self.rows.iter().enumerate() {
            m[(s, s)] = self.diag[s];
            for &(t, q) in r {
                m[(s, t)] = q;
            }
        }
        m
    }

    /// `(from, to, rate)` for every entry, diagonal included, row-major.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz() + self.dim());
        for (s, r) in self.rows.iter().enumerate() {
            let mut entries: Vec<(usize, f64)> = r.clone();
            entries.push((s, self.diag[s]));
            entries.sort_by_key(|e| e.0);
            out.extend(entries.into_iter().map(|(t, q)| (s, t, q)));
        }
        out
    }
}

fn check_size(j: &InteractionOperator, limit: usize) -> Result<usize> {
    let n = j.n();
    let limit = limit.min(MAX_ENUMERATION_LIMIT);
    if n > limit {
        return Err(Error::EnumerationLimit { n, limit });
    }
    Ok(n)
}

fn expect_kind(family: &RateFamily, kind: DynamicsKind, n: usize) -> Result<()> {
    if family.kind() != kind {
        return Err(Error::InvalidFamily(format!("expected a {kind:?} family")));
    }
    if let Some(m) = family.mobility() {
        if m.nrows() != n {
            return Err(Error::DimensionMismatch(format!("mobility is {}x{0}, space has {n} sites", m.nrows())));
        }
    }
    Ok(())
}

/// Birth-and-death generator.
pub fn glauber_generator(j: &InteractionOperator, family: &RateFamily, limit: usize) -> Result<GeneratorMatrix> {
    let n = check_size(j, limit)?;
    expect_kind(family, DynamicsKind::Glauber, n)?;
    let w = j.weights();
    let rows = (0..1usize << n)
        .into_par_iter()
        .map(|mask| {
            let gamma = Configuration::from_mask(n, mask as u64);
            let p = papangelou::intensity_profile(j, &gamma);
            let mut row = Vec::with_capacity(n);
            for x in 0..n {
                let bit = 1usize << x;
                let q = if mask & bit != 0 { family.death(p.get(x))? } else { family.birth(p.get(x))? * w[x] };
                if q > 0.0 {
                    row.push((mask ^ bit, q));
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeneratorMatrix::from_rows(DynamicsKind::Glauber, n, rows))
}

/// Particle-hopping generator.
pub fn kawasaki_generator(j: &InteractionOperator, family: &RateFamily, limit: usize) -> Result<GeneratorMatrix> {
    let n = check_size(j, limit)?;
    expect_kind(family, DynamicsKind::Kawasaki, n)?;
    let w = j.weights();
    let rows = (0..1usize << n)
        .into_par_iter()
        .map(|mask| {
            let gamma = Configuration::from_mask(n, mask as u64);
            let mut row = Vec::new();
            for &x in gamma.sites() {
                let rest = gamma.without(x).expect("occupied");
                let p = papangelou::intensity_profile(j, &rest);
                for y in gamma.vacant() {
                    let q = 2.0 * family.hop(x, y, p.get(x), p.get(y))? * w[y];
                    if q > 0.0 {
                        row.push((mask ^ (1 << x) ^ (1 << y), q));
                    }
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeneratorMatrix::from_rows(DynamicsKind::Kawasaki, n, rows))
}

/// Dispatches on the family's dynamics kind.
pub fn build_generator(j: &InteractionOperator, family: &RateFamily, limit: usize) -> Result<GeneratorMatrix> {
    match family.kind() {
        DynamicsKind::Glauber => glauber_generator(j, family, limit),
        DynamicsKind::Kawasaki => kawasaki_generator(j, family, limit),
    }
}

fn check_table(q: &GeneratorMatrix, table: &MeasureTable) -> Result<()> {
    if table.n() != q.sites() {
        return Err(Error::DimensionMismatch(format!(
            "generator on {} sites, table on {}",
            q.sites(),
            table.n()
        )));
    }
    Ok(())
}

/// `max |μ(γ)q(γ,γ′) − μ(γ′)q(γ′,γ)|` over all pairs.
pub fn reversibility_check(q: &GeneratorMatrix, table: &MeasureTable) -> Result<f64> {
    check_table(q, table)?;
    let mu = table.probabilities();
    let worst = (0..q.dim())
        .into_par_iter()
        .map(|s| {
            q.row(s)
                .iter()
                .map(|&(t, rate)| (mu[s] * rate - mu[t] * q.rate(t, s)).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// `⟨F, −QG⟩_μ`.
pub fn generator_form(q: &GeneratorMatrix, table: &MeasureTable, f: &[f64], g: &[f64]) -> Result<f64> {
    check_table(q, table)?;
    if f.len() != q.dim() || g.len() != q.dim() {
        return Err(Error::DimensionMismatch("test functions must have 2^n entries".into()));
    }
    let qg = q.apply(g);
    Ok(-table.probabilities().iter().zip(f).zip(&qg).map(|((m, a), b)| m * a * b).sum::<f64>())
}

/// Exact Dirichlet form from the difference operators:
/// Glauber `Σ_γ μ Σ_{x∈γ} d(x,γ∖x) D⁻F D⁻G`, Kawasaki
/// `Σ_γ μ Σ_{x∈γ} Σ_{y∉γ} ν_y c(x,y,γ∖x) D⁻⁺F D⁻⁺G`.
///
/// The weighted terms `(γ, γ′, μ(γ)·rate)` are computed once, so the form can
/// be evaluated on many test functions.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletForm {
    n: usize,
    terms: Vec<(usize, usize, f64)>,
}

impl DirichletForm {
    pub fn new(j: &InteractionOperator, table: &MeasureTable, family: &RateFamily) -> Result<Self> {
        let n = j.n();
        if table.n() != n {
            return Err(Error::DimensionMismatch("measure table size".into()));
        }
        let w = j.weights();
        let mut terms = Vec::new();
        for (gamma, mu) in table.iter() {
            let mask = gamma.mask() as usize;
            match family.kind() {
                DynamicsKind::Glauber => {
                    let p = papangelou::intensity_profile(j, &gamma);
                    for &x in gamma.sites() {
                        terms.push((mask, mask ^ (1 << x), mu * family.death(p.get(x))?));
                    }
                }
                DynamicsKind::Kawasaki => {
                    for &x in gamma.sites() {
                        let rest = gamma.without(x).expect("occupied");
                        let p = papangelou::intensity_profile(j, &rest);
                        for y in gamma.vacant() {
                            let c = family.hop(x, y, p.get(x), p.get(y))?;
                            terms.push((mask, mask ^ (1 << x) ^ (1 << y), mu * w[y] * c));
                        }
                    }
                }
            }
        }
        Ok(Self { n, terms })
    }

    pub fn eval(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        if f.len() != 1 << self.n || g.len() != 1 << self.n {
            return Err(Error::DimensionMismatch("test functions must have 2^n entries".into()));
        }
        Ok(self.terms.iter().map(|&(a, b, c)| c * (f[b] - f[a]) * (g[b] - g[a])).sum())
    }
}

pub fn dirichlet_form(
    j: &InteractionOperator,
    table: &MeasureTable,
    family: &RateFamily,
    f: &[f64],
    g: &[f64],
) -> Result<f64> {
    DirichletForm::new(j, table, family)?.eval(f, g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    /// Blocks up to this many states are diagonalized densely; larger ones
    /// get a Lanczos estimate of the gap only.
    pub dense_limit: usize,
    pub lanczos_steps: usize,
    /// Eigenvalues within `zero_tol · max(1, max exit rate)` of zero count as
    /// zero.
    pub zero_tol: f64,
    pub seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { dense_limit: 4096, lanczos_steps: 300, zero_tol: 1e-9, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorReport {
    pub particles: usize,
    pub states: usize,
    pub zero_count: Option<usize>,
    pub gap: Option<f64>,
    pub eigenvalues: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub kind: DynamicsKind,
    pub method: String,
    pub reversibility_residual: f64,
    /// All eigenvalues of `−Q` in `L²(μ)`, ascending (dense method only).
    pub eigenvalues: Option<Vec<f64>>,
    pub zero_count: Option<usize>,
    /// Smallest non-zero eigenvalue (within sectors for Kawasaki); `None`
    /// when every eigenvalue is zero.
    pub gap: Option<f64>,
    pub sectors: Vec<SectorReport>,
}

/// Spectrum of `−Q` as a self-adjoint operator on `L²(μ)`, via the symmetric
/// matrix `D_μ^{1/2}(−Q)D_μ^{−1/2}`. Kawasaki generators are split into
/// particle-number sectors.
pub fn spectral_analysis(q: &GeneratorMatrix, table: &MeasureTable, options: SpectralOptions) -> Result<SpectralReport> {
    let residual = reversibility_check(q, table)?;
    if residual > REVERSIBILITY_TOL {
        return Err(Error::NotReversible { residual });
    }
    let mu = table.probabilities();
    let n = q.sites();
    let blocks: Vec<(usize, Vec<usize>)> = match q.kind() {
        DynamicsKind::Glauber => vec![(usize::MAX, (0..q.dim()).filter(|&s| mu[s] > 0.0).collect())],
        DynamicsKind::Kawasaki => (0..=n)
            .map(|m| (m, (0..q.dim()).filter(|&s| s.count_ones() as usize == m && mu[s] > 0.0).collect()))
            .collect(),
    };
    let scale = (0..q.dim()).map(|s| -q.diagonal(s)).fold(1.0, f64::max);
    let tol = options.zero_tol * scale;
    let dense = blocks.iter().all(|(_, b)| b.len() <= options.dense_limit);
    let mut sectors = Vec::new();
    let mut all = Vec::new();
    for (m, states) in &blocks {
        let (eigs, gap, zeros) = if dense {
            let eigs = dense_block_spectrum(q, mu, states);
            let zeros = eigs.iter().filter(|l| l.abs() <= tol).count();
            let gap = eigs.iter().copied().find(|&l| l > tol);
            (Some(eigs), gap, Some(zeros))
        } else {
            (None, lanczos_block_gap(q, mu, states, options, tol), None)
        };
        if let Some(e) = &eigs {
            all.extend_from_slice(e);
        }
        sectors.push(SectorReport { particles: *m, states: states.len(), zero_count: zeros, gap, eigenvalues: eigs });
    }
    all.sort_by(f64::total_cmp);
    let gap = sectors.iter().filter_map(|s| s.gap).min_by(f64::total_cmp);
    let zero_count = if dense { Some(sectors.iter().filter_map(|s| s.zero_count).sum()) } else { None };
    if q.kind() == DynamicsKind::Glauber {
        sectors.clear();
    }
    Ok(SpectralReport {
        kind: q.kind(),
        method: if dense { "dense".into() } else { "lanczos".into() },
        reversibility_residual: residual,
        eigenvalues: dense.then_some(all),
        zero_count,
        gap,
        sectors,
    })
}

fn dense_block_spectrum(q: &GeneratorMatrix, mu: &[f64], states: &[usize]) -> Vec<f64> {
    let mut index = std::collections::HashMap::with_capacity(states.len());
    for (k, &s) in states.iter().enumerate() {
        index.insert(s, k);
    }
    let d = states.len();
    let mut a = DMatrix::zeros(d, d);
    for (k, &s) in states.iter().enumerate() {
        a[(k, k)] = -q.diagonal(s);
        for &(t, rate) in q.row(s) {
            if let Some(&l) = index.get(&t) {
                a[(k, l)] = -rate * (mu[s] / mu[t]).sqrt();
            }
        }
    }
    SortedEigen::new(&a).values
}

/// Smallest eigenvalue of the symmetrized block restricted to the orthogonal
/// complement of `√μ`, by Lanczos with full reorthogonalization.
fn lanczos_block_gap(q: &GeneratorMatrix, mu: &[f64], states: &[usize], options: SpectralOptions, tol: f64) -> Option<f64> {
    let d = states.len();
    if d < 2 {
        return None;
    }
    let mut index = std::collections::HashMap::with_capacity(d);
    for (k, &s) in states.iter().enumerate() {
        index.insert(s, k);
    }
    let apply = |v: &DVector<f64>| -> DVector<f64> {
        DVector::from_fn(d, |k, _| {
            let s = states[k];
            let mut acc = -q.diagonal(s) * v[k];
            for &(t, rate) in q.row(s) {
                if let Some(&l) = index.get(&t) {
                    acc -= rate * (mu[s] / mu[t]).sqrt() * v[l];
                }
            }
            acc
        })
    };
    let null = DVector::from_fn(d, |k, _| mu[states[k]].sqrt()).normalize();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut v = DVector::from_fn(d, |_, _| rng.random::<f64>() - 0.5);
    v -= &null * null.dot(&v);
    v = v.normalize();
    let steps = options.lanczos_steps.min(d - 1).max(1);
    let mut basis: Vec<DVector<f64>> = vec![v];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for k in 0..steps {
        let mut w = apply(&basis[k]);
        let a = basis[k].dot(&w);
        alpha.push(a);
        let before = w.norm();
        // two Gram-Schmidt passes against √μ and the basis
        for _ in 0..2 {
            w -= &null * null.dot(&w);
            for b in &basis {
                let c = b.dot(&w);
                w -= b * c;
            }
        }
        let nb = w.norm();
        if nb <= LANCZOS_BREAKDOWN * before.max(a.abs()) || k + 1 == steps {
            break;
        }
        beta.push(nb);
        basis.push(w / nb);
    }
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j || j + 1 == i {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    SortedEigen::new(&t).values.into_iter().find(|&l| l > tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_kernel, KernelOptions, KernelSpec, SiteSpace};
    use crate::measure::exact_distribution;

    fn diag_op(values: &[f64]) -> InteractionOperator {
        let space = SiteSpace::counting(values.len()).unwrap();
        let k = build_kernel(&space, &KernelSpec::Diagonal { values: values.to_vec() }, KernelOptions::default()).unwrap();
        InteractionOperator::from_kernel(&k).unwrap()
    }

    #[test]
    fn glauber_single_site() {
        let j = diag_op(&[0.5]);
        let q = glauber_generator(&j, &RateFamily::glauber(1.0).unwrap(), 14).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        assert!((q.to_dense() - expected).amax() < 1e-15);
        let t = exact_distribution(&j, 14).unwrap();
        assert!(reversibility_check(&q, &t).unwrap() < 1e-15);
        let spec = spectral_analysis(&q, &t, SpectralOptions::default()).unwrap();
        let e = spec.eigenvalues.unwrap();
        assert!(e[0].abs() < 1e-14 && (e[1] - 2.0).abs() < 1e-14);
        assert!((spec.gap.unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn empty_kernel_gives_zero_generator() {
        let j = diag_op(&[0.0, 0.0]);
        let q = glauber_generator(&j, &RateFamily::glauber(0.5).unwrap(), 14).unwrap();
        assert_eq!(q.nnz(), 0);
        assert_eq!(q.to_dense().amax(), 0.0);
        let t = exact_distribution(&j, 14).unwrap();
        let spec = spectral_analysis(&q, &t, SpectralOptions::default()).unwrap();
        assert!(spec.gap.is_none());
        assert!(spec.eigenvalues.unwrap().iter().all(|&l| l == 0.0));
    }

    #[test]
    fn kawasaki_two_sites_by_hand() {
        let k = 0.3;
        let j = diag_op(&[k, k]);
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let q = kawasaki_generator(&j, &RateFamily::kawasaki(1.0, a).unwrap(), 14).unwrap();
        let expected = 2.0 * k / (1.0 - k);
        assert!((q.rate(0b01, 0b10) - expected).abs() < 1e-14);
        assert!((q.rate(0b10, 0b01) - expected).abs() < 1e-14);
        assert_eq!(q.rate(0b00, 0b01), 0.0);
        let zero = kawasaki_generator(&j, &RateFamily::kawasaki(1.0, DMatrix::zeros(2, 2)).unwrap(), 14).unwrap();
        assert_eq!(zero.nnz(), 0);
    }

    #[test]
    fn wrong_family_kind_rejected() {
        let j = diag_op(&[0.3]);
        assert!(kawasaki_generator(&j, &RateFamily::glauber(1.0).unwrap(), 14).is_err());
        assert!(glauber_generator(&j, &RateFamily::kawasaki(1.0, DMatrix::zeros(1, 1)).unwrap(), 14).is_err());
    }

    #[test]
    fn lanczos_agrees_with_dense_gap() {
        let space = SiteSpace::counting(7).unwrap();
        let k = build_kernel(&space, &KernelSpec::RandomContraction { seed: 21, lambda_max: 0.8 }, KernelOptions::default()).unwrap();
        let j = InteractionOperator::from_kernel(&k).unwrap();
        let t = exact_distribution(&j, 14).unwrap();
        for family in [RateFamily::glauber(0.5).unwrap(), RateFamily::kawasaki(1.0, DMatrix::from_element(7, 7, 1.0)).unwrap()] {
            let q = build_generator(&j, &family, 14).unwrap();
            let dense = spectral_analysis(&q, &t, SpectralOptions::default()).unwrap();
            let sparse = spectral_analysis(&q, &t, SpectralOptions { dense_limit: 1, ..Default::default() }).unwrap();
            assert_eq!(sparse.method, "lanczos");
            let (a, b) = (dense.gap.unwrap(), sparse.gap.unwrap());
            assert!((a - b).abs() < 1e-8 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn lanczos_on_an_ill_conditioned_measure() {
        let space = SiteSpace::grid(0.0, 2.0, 8, crate::kernel::WeightRule::Midpoint).unwrap();
        let k = build_kernel(&space, &KernelSpec::RbfContraction { lengthscale: 0.5, scale: 0.4 }, KernelOptions::default()).unwrap();
        let j = InteractionOperator::from_kernel(&k).unwrap();
        let t = exact_distribution(&j, 14).unwrap();
        let q = glauber_generator(&j, &RateFamily::glauber(1.0).unwrap(), 14).unwrap();
        let dense = spectral_analysis(&q, &t, SpectralOptions::default()).unwrap().gap.unwrap();
        let sparse = spectral_analysis(&q, &t, SpectralOptions { dense_limit: 16, ..Default::default() }).unwrap().gap.unwrap();
        assert!((dense - sparse).abs() < 1e-8, "{dense} vs {sparse}");
    }
}
