//! Papangelou conditional intensity `r(x, γ) = det J_{γ∪x} / det J_γ`.
//!
//! The ratio is evaluated as the Schur complement
//! `J_xx − J_{xγ} J_γ^{-1} J_{γx}` through a Cholesky factor of `J_γ`.
//! [`IntensityTracker`] keeps that factor current under single-site
//! insertions and deletions so that a trajectory never refactorizes from
//! scratch except when drift is detected.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::kernel::InteractionOperator;
use crate::linalg::{self, PivotedCholesky, ZERO_THRESHOLD};

/// Deviation between incremental and fresh intensities that forces a
/// refactorization.
pub const DRIFT_TOL: f64 = 1e-8;
/// Slack allowed above `J(x,x)` by [`bound_check`].
pub const BOUND_TOL: f64 = 1e-9;

fn clamp(r: f64) -> f64 {
    if r <= ZERO_THRESHOLD {
        0.0
    } else {
        r
    }
}

/// `r(x, γ)` for a vacant site `x`. Returns 0 when `det J_γ` vanishes.
pub fn intensity(j: &InteractionOperator, gamma: &Configuration, x: usize) -> Result<f64> {
    if x >= j.n() {
        return Err(Error::InvalidArgument(format!("site {x} out of range")));
    }
    if gamma.contains(x) {
        return Err(Error::SiteOccupied { site: x });
    }
    let jm = j.matrix();
    if gamma.is_empty() {
        return Ok(clamp(jm[(x, x)]));
    }
    let sites = gamma.sites();
    let chol = PivotedCholesky::new(&linalg::principal(jm, sites));
    if !chol.is_full_rank() {
        return Ok(0.0);
    }
    let col: Vec<f64> = sites.iter().map(|&s| jm[(s, x)]).collect();
    let y = chol.forward_solve(&col);
    Ok(clamp(jm[(x, x)] - y.norm_squared()))
}

/// Per-site intensities for one configuration: `r(x, γ)` at vacant sites
/// and `r(x, γ ∖ x)` at occupied ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityProfile {
    pub values: Vec<f64>,
    pub occupied: Vec<bool>,
}

impl IntensityProfile {
    pub fn get(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest entrywise difference to another profile.
    pub fn max_deviation(&self, other: &IntensityProfile) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// All `n` intensities from a single factorization of `J_γ`.
pub fn intensity_profile(j: &InteractionOperator, gamma: &Configuration) -> IntensityProfile {
    match IntensityTracker::new(j, gamma) {
        Ok(t) => t.profile(),
        Err(_) => {
            // det J_γ = 0: vacant intensities vanish by convention
            let mut values = vec![0.0; j.n()];
            for &x in gamma.sites() {
                let rest = gamma.without(x).expect("occupied");
                values[x] = intensity(j, &rest, x).expect("vacant in rest");
            }
            IntensityProfile { values, occupied: gamma.occupancy() }
        }
    }
}

/// `max_{x ∉ γ} r(x, γ) − J(x, x)`; non-positive when the bound `r ≤ J(x,x)`
/// holds. `-inf` for the full configuration, which has no vacant site.
pub fn bound_check(j: &InteractionOperator, gamma: &Configuration) -> f64 {
    let profile = intensity_profile(j, gamma);
    gamma.vacant().map(|x| profile.get(x) - j.entry(x, x)).fold(f64::NEG_INFINITY, f64::max)
}

/// Incrementally maintained Cholesky factor `J_γ = L Lᵀ` with the auxiliary
/// rows `W = L^{-1} J_{γ,·}` and `L^{-1}`.
///
/// Vacant intensities are `J_xx − |W_{·,x}|²`; occupied intensities are
/// `1 / (J_γ^{-1})_xx`; and for `x ∈ γ`, `y ∉ γ`,
/// `r(y, γ∖x) = r(y, γ) + (J_γ^{-1} J_{γ,y})_x² · r(x, γ∖x)`.
#[derive(Debug, Clone)]
pub struct IntensityTracker<'a> {
    j: &'a DMatrix<f64>,
    n: usize,
    order: Vec<usize>,
    position: Vec<Option<usize>>,
    l: Vec<Vec<f64>>,
    linv: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    free: Vec<f64>,
    refactorizations: usize,
}

impl<'a> IntensityTracker<'a> {
    /// Factorizes `J_γ`, inserting sites in diagonal-pivot order.
    pub fn new(op: &'a InteractionOperator, gamma: &Configuration) -> Result<Self> {
        Self::from_matrix(op.matrix(), gamma)
    }

    pub(crate) fn from_matrix(j: &'a DMatrix<f64>, gamma: &Configuration) -> Result<Self> {
        let n = j.nrows();
        if gamma.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "configuration on {} sites, operator on {n}",
                gamma.n()
            )));
        }
        let mut t = Self {
            j,
            n,
            order: Vec::with_capacity(gamma.len()),
            position: vec![None; n],
            l: Vec::new(),
            linv: Vec::new(),
            w: Vec::new(),
            free: (0..n).map(|x| j[(x, x)]).collect(),
            refactorizations: 0,
        };
        if !gamma.is_empty() {
            let chol = PivotedCholesky::new(&linalg::principal(j, gamma.sites()));
            if !chol.is_full_rank() {
                return Err(Error::SingularConfiguration);
            }
            for &k in &chol.perm {
                t.insert(gamma.sites()[k])?;
            }
        }
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn particle_count(&self) -> usize {
        self.order.len()
    }

    pub fn is_occupied(&self, x: usize) -> bool {
        self.position[x].is_some()
    }

    pub fn configuration(&self) -> Configuration {
        Configuration::from_sites(self.n, self.order.iter().copied()).expect("tracker sites are simple")
    }

    /// Number of from-scratch refactorizations triggered by drift.
    pub fn refactorizations(&self) -> usize {
        self.refactorizations
    }

    /// `r(y, γ)` for vacant `y`.
    pub fn vacant_intensity(&self, y: usize) -> f64 {
        debug_assert!(!self.is_occupied(y));
        clamp(self.free[y])
    }

    /// `r(x, γ ∖ x)` for occupied `x`.
    pub fn occupied_intensity(&self, x: usize) -> f64 {
        let p = self.position[x].expect("site must be occupied");
        let diag: f64 = self.linv.iter().map(|row| row[p] * row[p]).sum();
        clamp(1.0 / diag)
    }

    /// `r(y, γ ∖ x)` for occupied `x` and vacant `y`.
    pub fn intensity_without(&self, x: usize, y: usize) -> f64 {
        let p = self.position[x].expect("site must be occupied");
        if y == x {
            return self.occupied_intensity(x);
        }
        debug_assert!(!self.is_occupied(y));
        let t: f64 = self.linv.iter().zip(&self.w).map(|(li, wi)| li[p] * wi[y]).sum();
        let diag: f64 = self.linv.iter().map(|row| row[p] * row[p]).sum();
        clamp(self.free[y] + t * t / diag)
    }

    /// All of `r(·, γ ∖ x)` at once for occupied `x`: entry `x` holds
    /// `r(x, γ ∖ x)`, vacant entries `r(y, γ ∖ x)`, other occupied entries 0.
    pub fn intensities_without(&self, x: usize) -> Vec<f64> {
        let p = self.position[x].expect("site must be occupied");
        let diag: f64 = self.linv.iter().map(|row| row[p] * row[p]).sum();
        let t = self.regression_row(x);
        (0..self.n)
            .map(|y| {
                if y == x {
                    clamp(1.0 / diag)
                } else if self.is_occupied(y) {
                    0.0
                } else {
                    clamp(self.free[y] + t[y] * t[y] / diag)
                }
            })
            .collect()
    }

    /// Row `x` of `J_γ^{-1} J_{γ,·}`: the regression coefficients of every
    /// site on the occupied site `x`.
    pub fn regression_row(&self, x: usize) -> Vec<f64> {
        let p = self.position[x].expect("site must be occupied");
        (0..self.n)
            .map(|y| self.linv.iter().zip(&self.w).map(|(li, wi)| li[p] * wi[y]).sum())
            .collect()
    }

    pub fn profile(&self) -> IntensityProfile {
        let values = (0..self.n)
            .map(|x| if self.is_occupied(x) { self.occupied_intensity(x) } else { self.vacant_intensity(x) })
            .collect();
        IntensityProfile { values, occupied: (0..self.n).map(|x| self.is_occupied(x)).collect() }
    }

    /// Adds `z` to the configuration (a bordering step of the factor).
    pub fn insert(&mut self, z: usize) -> Result<()> {
        if self.position[z].is_some() {
            return Err(Error::SiteOccupied { site: z });
        }
        let m = self.order.len();
        let col: Vec<f64> = (0..m).map(|k| self.w[k][z]).collect();
        let pivot = self.j[(z, z)] - col.iter().map(|c| c * c).sum::<f64>();
        if pivot <= ZERO_THRESHOLD {
            return Err(Error::SingularConfiguration);
        }
        let d = pivot.sqrt();
        let jm = self.j;
        let new_w: Vec<f64> = (0..self.n)
            .map(|x| {
                let proj: f64 = col.iter().zip(&self.w).map(|(c, wk)| c * wk[x]).sum();
                (jm[(z, x)] - proj) / d
            })
            .collect();
        let mut new_inv: Vec<f64> = (0..m)
            .map(|c| -col.iter().zip(&self.linv).map(|(lk, row)| lk * row[c]).sum::<f64>() / d)
            .collect();
        new_inv.push(1.0 / d);
        for row in &mut self.linv {
            row.push(0.0);
        }
        self.linv.push(new_inv);
        for (f, v) in self.free.iter_mut().zip(&new_w) {
            *f -= v * v;
        }
        self.w.push(new_w);
        let mut lrow = col;
        lrow.push(d);
        self.l.push(lrow);
        self.order.push(z);
        self.position[z] = Some(m);
        for &s in &self.order {
            self.free[s] = 0.0;
        }
        Ok(())
    }

    /// Removes `x` from the configuration: the trailing block of the factor
    /// absorbs the deleted column through a sequence of Givens rotations.
    pub fn remove(&mut self, x: usize) -> Result<()> {
        let p = self.position[x].ok_or(Error::SiteVacant { site: x })?;
        let m = self.order.len();
        let mut v: Vec<f64> = (0..m).map(|i| if i > p { self.l[i][p] } else { 0.0 }).collect();
        let mut e = std::mem::take(&mut self.w[p]);
        let mut f = std::mem::take(&mut self.linv[p]);
        for c in p + 1..m {
            let a = self.l[c][c];
            let b = v[c];
            let r = a.hypot(b);
            let (cs, sn) = (a / r, b / r);
            for i in c..m {
                let lic = self.l[i][c];
                self.l[i][c] = cs * lic + sn * v[i];
                v[i] = -sn * lic + cs * v[i];
            }
            rotate(&mut self.w[c], &mut e, cs, sn);
            rotate(&mut self.linv[c], &mut f, cs, sn);
        }
        self.l.remove(p);
        self.w.remove(p);
        self.linv.remove(p);
        for row in self.l.iter_mut().skip(p) {
            row.remove(p);
        }
        for row in &mut self.linv {
            row.remove(p);
        }
        self.order.remove(p);
        self.position[x] = None;
        for (k, &s) in self.order.iter().enumerate() {
            self.position[s] = Some(k);
        }
        for (fr, ev) in self.free.iter_mut().zip(&e) {
            *fr += ev * ev;
        }
        for &s in &self.order {
            self.free[s] = 0.0;
        }
        if self.free.iter().any(|&r| r < -DRIFT_TOL) {
            self.refactorize()?;
        }
        Ok(())
    }

    /// Rebuilds the factor from scratch for the current configuration.
    pub fn refactorize(&mut self) -> Result<()> {
        let gamma = self.configuration();
        let count = self.refactorizations + 1;
        *self = Self::from_matrix(self.j, &gamma)?;
        self.refactorizations = count;
        Ok(())
    }

    /// Compares the maintained profile with a fresh factorization and
    /// refactorizes when they differ by more than [`DRIFT_TOL`]. Returns the
    /// observed deviation.
    pub fn check_drift(&mut self) -> Result<f64> {
        let fresh = Self::from_matrix(self.j, &self.configuration())?;
        let dev = self.profile().max_deviation(&fresh.profile());
        if dev > DRIFT_TOL {
            log::warn!("intensity drift {dev:e} exceeds {DRIFT_TOL:e}; refactorizing");
            let count = self.refactorizations + 1;
            *self = fresh;
            self.refactorizations = count;
        }
        Ok(dev)
    }
}

fn rotate(row: &mut [f64], extra: &mut [f64], cs: f64, sn: f64) {
    for (a, b) in row.iter_mut().zip(extra.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = cs * x + sn * y;
        *b = -sn * x + cs * y;
    }
}
