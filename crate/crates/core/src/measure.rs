//! The determinantal point process on a finite weighted site set.
//!
//! In finite volume the process is the L-ensemble with `L = D^{1/2} J D^{1/2}`:
//! `μ(γ) = det L_γ / det(𝟙 + L)`, with `det L_∅ = 1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::kernel::{InteractionOperator, KernelOperator, SiteSpace};
use crate::linalg::{self, PivotedCholesky};
use crate::papangelou;

/// Default cap on `n` for exhaustive enumeration of all `2ⁿ` configurations.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 14;
/// Hard cap: configurations are indexed by `u64` masks and tables are dense.
pub const MAX_ENUMERATION_LIMIT: usize = 24;
/// Conditional variances below `-BREAKDOWN_TOL` abort the sampler.
pub const BREAKDOWN_TOL: f64 = 1e-8;

/// `μ(γ) = det L_γ / det(𝟙 + L)`.
pub fn config_probability(j: &InteractionOperator, gamma: &Configuration) -> f64 {
    (log_weight(j, gamma) - j.log_normalizer()).exp()
}

/// `log det L_γ`, `-inf` when singular.
fn log_weight(j: &InteractionOperator, gamma: &Configuration) -> f64 {
    if gamma.is_empty() {
        return 0.0;
    }
    PivotedCholesky::new(&linalg::principal(j.ensemble(), gamma.sites())).log_det()
}

/// Probabilities of all `2ⁿ` configurations, indexed by bitmask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureTable {
    n: usize,
    probs: Vec<f64>,
}

impl MeasureTable {
    /// Wraps an explicit table; used for empirical distributions too.
    pub fn from_probabilities(n: usize, probs: Vec<f64>) -> Result<Self> {
        if n > MAX_ENUMERATION_LIMIT || probs.len() != 1usize << n {
            return Err(Error::DimensionMismatch(format!("table for {n} sites needs 2^{n} entries")));
        }
        Ok(Self { n, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prob(&self, mask: u64) -> f64 {
        self.probs[mask as usize]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Configuration, f64)> + '_ {
        self.probs.iter().enumerate().map(|(m, &p)| (Configuration::from_mask(self.n, m as u64), p))
    }

    /// `Σ_{γ ∋ i} μ(γ)`.
    pub fn marginal(&self, site: usize) -> f64 {
        self.probs.iter().enumerate().filter(|(m, _)| m >> site & 1 == 1).map(|(_, p)| p).sum()
    }

    /// `μ(|γ| = m)`.
    pub fn sector_mass(&self, particles: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(m, _)| m.count_ones() as usize == particles)
            .map(|(_, p)| p)
            .sum()
    }

    /// `μ(· | |γ| = m)`; entries outside the sector are zero.
    pub fn conditioned_on_sector(&self, particles: usize) -> Result<Self> {
        let mass = self.sector_mass(particles);
        if mass <= 0.0 {
            return Err(Error::InvalidArgument(format!("sector {particles} has zero mass")));
        }
        let probs = self
            .probs
            .iter()
            .enumerate()
            .map(|(m, &p)| if m.count_ones() as usize == particles { p / mass } else { 0.0 })
            .collect();
        Ok(Self { n: self.n, probs })
    }

    /// `½ Σ |p − q|`.
    pub fn total_variation(&self, other: &MeasureTable) -> f64 {
        assert_eq!(self.n, other.n, "tables on different site counts");
        0.5 * self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

/// Exhaustive table of [`config_probability`] over all subsets.
pub fn exact_distribution(j: &InteractionOperator, limit: usize) -> Result<MeasureTable> {
    let n = j.n();
    let limit = limit.min(MAX_ENUMERATION_LIMIT);
    if n > limit {
        return Err(Error::EnumerationLimit { n, limit });
    }
    let log_z = j.log_normalizer();
    let probs = (0..1u64 << n)
        .map(|mask| (log_weight(j, &Configuration::from_mask(n, mask)) - log_z).exp())
        .collect();
    Ok(MeasureTable { n, probs })
}

/// Exact spectral sampler for the process with correlation kernel `K`.
///
/// Each draw consumes the random stream in a fixed order: one uniform per
/// eigenvalue of `S` (ascending order) deciding whether that eigenvector
/// enters the projection, then one uniform per selected point.
#[derive(Debug, Clone)]
pub struct DppSampler {
    n: usize,
    values: Vec<f64>,
    vectors: nalgebra::DMatrix<f64>,
}

impl DppSampler {
    pub fn new(k: &KernelOperator) -> Self {
        Self { n: k.n(), values: k.eigen().values.clone(), vectors: k.eigen().vectors.clone() }
    }

    /// Same sampler built from `J`: the ensemble eigenvalues `m` map to
    /// kernel eigenvalues `m / (1 + m)` with the same eigenvectors.
    pub fn from_interaction(j: &InteractionOperator) -> Self {
        let e = j.eigen();
        let values = e.values.iter().map(|&m| if m > 0.0 { m / (1.0 + m) } else { 0.0 }).collect();
        Self { n: j.n(), values, vectors: e.vectors.clone() }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Configuration> {
        let n = self.n;
        let selected: Vec<usize> = (0..n).filter(|&i| rng.random::<f64>() < self.values[i]).collect();
        let k = selected.len();
        // conditional variances of the projection kernel V Vᵀ
        let mut var: Vec<f64> = (0..n).map(|i| selected.iter().map(|&c| self.vectors[(i, c)].powi(2)).sum()).collect();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut taken = vec![false; n];
        let mut points = Vec::with_capacity(k);
        for _ in 0..k {
            if let Some(v) = var.iter().copied().find(|&v| v < -BREAKDOWN_TOL) {
                return Err(Error::NumericalBreakdown(format!("conditional variance {v:e}")));
            }
            let total: f64 = (0..n).filter(|&i| !taken[i]).map(|i| var[i].max(0.0)).sum();
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for i in (0..n).filter(|&i| !taken[i]) {
                let w = var[i].max(0.0);
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if target < acc {
                    break;
                }
            }
            let jsite = pick.ok_or_else(|| Error::NumericalBreakdown("projection kernel exhausted".into()))?;
            let pivot = var[jsite];
            if pivot <= 0.0 {
                return Err(Error::NumericalBreakdown(format!("non-positive pivot {pivot:e}")));
            }
            // column of the current conditional kernel at the chosen site
            let col: Vec<f64> = (0..n)
                .map(|i| {
                    let proj: f64 = selected.iter().map(|&c| self.vectors[(i, c)] * self.vectors[(jsite, c)]).sum();
                    proj - basis.iter().map(|b| b[i] * b[jsite]).sum::<f64>()
                })
                .collect();
            let scale = pivot.sqrt();
            let c: Vec<f64> = col.iter().map(|v| v / scale).collect();
            for (vi, ci) in var.iter_mut().zip(&c) {
                *vi -= ci * ci;
            }
            basis.push(c);
            taken[jsite] = true;
            points.push(jsite);
        }
        Configuration::from_sites(n, points)
    }
}

/// One exact draw; see [`DppSampler`].
pub fn sample<R: Rng + ?Sized>(k: &KernelOperator, rng: &mut R) -> Result<Configuration> {
    DppSampler::new(k).sample(rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub i: usize,
    pub j: Option<usize>,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub order: usize,
    pub samples: usize,
    pub entries: Vec<CorrelationEntry>,
}

/// Empirical first or second correlation function: inclusion frequencies
/// divided by the site weights, with binomial standard errors.
pub fn estimate_correlation(samples: &[Configuration], space: &SiteSpace, order: usize) -> Result<CorrelationTable> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let n = space.len();
    let w = space.weights();
    let total = samples.len() as f64;
    let freq_entry = |count: usize, scale: f64, i: usize, j: Option<usize>| {
        let p = count as f64 / total;
        CorrelationEntry { i, j, estimate: p / scale, stderr: (p * (1.0 - p) / total).sqrt() / scale }
    };
    let entries = match order {
        1 => {
            let mut counts = vec![0usize; n];
            for s in samples {
                for &x in s.sites() {
                    counts[x] += 1;
                }
            }
            (0..n).map(|i| freq_entry(counts[i], w[i], i, None)).collect()
        }
        2 => {
            let mut counts = vec![0usize; n * n];
            for s in samples {
                let sites = s.sites();
                for (a, &x) in sites.iter().enumerate() {
                    for &y in &sites[a + 1..] {
                        counts[x * n + y] += 1;
                    }
                }
            }
            let mut out = Vec::with_capacity(n * (n - 1) / 2);
            for i in 0..n {
                for j in i + 1..n {
                    out.push(freq_entry(counts[i * n + j], w[i] * w[j], i, Some(j)));
                }
            }
            out
        }
        other => return Err(Error::InvalidArgument(format!("correlation order {other} not in {{1, 2}}"))),
    };
    Ok(CorrelationTable { order, samples: samples.len(), entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeckeResult {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Evaluates both sides of the Mecke identity exactly over the table:
/// `Σ_γ μ(γ) Σ_{x∈γ} F(x,γ)` and `Σ_γ μ(γ) Σ_{x∉γ} ν_x r(x,γ) F(x,γ∪x)`.
pub fn mecke_check<F>(j: &InteractionOperator, table: &MeasureTable, f: F) -> MeckeResult
where
    F: Fn(usize, &Configuration) -> f64,
{
    let w = j.weights();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (gamma, mu) in table.iter() {
        if mu == 0.0 {
            continue;
        }
        lhs += mu * gamma.sites().iter().map(|&x| f(x, &gamma)).sum::<f64>();
        let profile = papangelou::intensity_profile(j, &gamma);
        rhs += mu
            * gamma
                .vacant()
                .map(|x| w[x] * profile.get(x) * f(x, &gamma.with(x).expect("vacant")))
                .sum::<f64>();
    }
    MeckeResult { lhs, rhs, residual: (lhs - rhs).abs() }
}
