//! Rate families for Glauber and Kawasaki dynamics.
//!
//! With exponent `s ∈ [0, 1]` and a symmetric mobility `a`:
//! death `d = r^{s−1}`, birth `b = r·d = r^s`, and hop
//! `c(x, y, γ) = a(x,y) r(x,γ)^{s−1} r(y,γ)^s`, each switched off wherever an
//! intensity involved is zero.

use nalgebra::DMatrix;
use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::kernel::InteractionOperator;
use crate::linalg::ZERO_THRESHOLD;
use crate::measure::MeasureTable;
use crate::papangelou::{self, IntensityTracker};

/// Any rate above this aborts with [`Error::RateOverflow`].
pub const RATE_CEILING: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsKind {
    Glauber,
    Kawasaki,
}

/// `d(x, γ) = r^{s−1} χ{r > 0}`.
pub fn death_rate(r: f64, s: f64) -> f64 {
    if r > ZERO_THRESHOLD {
        r.powf(s - 1.0)
    } else {
        0.0
    }
}

/// `b(x, γ) = r · d(x, γ) = r^s χ{r > 0}`.
pub fn birth_rate(r: f64, s: f64) -> f64 {
    if r > ZERO_THRESHOLD {
        r * r.powf(s - 1.0)
    } else {
        0.0
    }
}

/// `c(x, y, γ) = a_xy r_x^{s−1} r_y^s χ{r_x > 0, r_y > 0}`.
pub fn hop_rate(r_x: f64, r_y: f64, a_xy: f64, s: f64) -> f64 {
    if r_x > ZERO_THRESHOLD && r_y > ZERO_THRESHOLD {
        a_xy * r_x.powf(s - 1.0) * r_y.powf(s)
    } else {
        0.0
    }
}

/// `c̃(x,y) = ½ (c(x,y) + c(y,x) χ{r_x > 0} r_y / r_x)`.
pub fn symmetrize(c_xy: f64, c_yx: f64, r_x: f64, r_y: f64) -> f64 {
    symmetrize_with(c_xy, c_yx, r_x, r_y, ZERO_THRESHOLD)
}

/// [`symmetrize`] over any ordered field; `threshold` defines `{r > 0}`.
pub fn symmetrize_with<T>(c_xy: T, c_yx: T, r_x: T, r_y: T, threshold: T) -> T
where
    T: Num + PartialOrd,
{
    let two = T::one() + T::one();
    if r_x > threshold {
        (c_xy + c_yx * r_y / r_x) / two
    } else {
        c_xy / two
    }
}

/// Passes `rate` through unless it exceeds [`RATE_CEILING`].
pub fn check_rate(rate: f64) -> Result<f64> {
    if rate.is_finite() && rate <= RATE_CEILING {
        Ok(rate)
    } else {
        Err(Error::RateOverflow { rate, ceiling: RATE_CEILING })
    }
}

/// How particles may hop in Kawasaki dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MobilitySpec {
    /// `a ≡ scale` off the diagonal.
    AllPairs {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `a = scale` between consecutive sites (and the ends when periodic).
    NearestNeighbour {
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        periodic: bool,
    },
    /// Explicit row-major table. Symmetry is not enforced here so that
    /// broken tables can be fed to the balance checks.
    Matrix { entries: Vec<Vec<f64>> },
}

fn one() -> f64 {
    1.0
}

impl MobilitySpec {
    pub fn build(&self, n: usize) -> Result<DMatrix<f64>> {
        let m = match self {
            MobilitySpec::AllPairs { scale } => DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { *scale }),
            MobilitySpec::NearestNeighbour { scale, periodic } => DMatrix::from_fn(n, n, |i, j| {
                let d = i.abs_diff(j);
                if d == 1 || (*periodic && n > 2 && d == n - 1) {
                    *scale
                } else {
                    0.0
                }
            }),
            MobilitySpec::Matrix { entries } => {
                if entries.len() != n || entries.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidFamily(format!("mobility must be {n}x{n}")));
                }
                DMatrix::from_fn(n, n, |i, j| entries[i][j])
            }
        };
        Ok(m)
    }
}

/// Exponent `s` plus, for Kawasaki, the mobility table.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFamily {
    kind: DynamicsKind,
    s: f64,
    mobility: Option<DMatrix<f64>>,
}

impl RateFamily {
    pub fn glauber(s: f64) -> Result<Self> {
        check_exponent(s)?;
        Ok(Self { kind: DynamicsKind::Glauber, s, mobility: None })
    }

    /// The diagonal of `mobility` is zeroed. Entries must be finite and
    /// non-negative; symmetry is reported by [`RateFamily::mobility_asymmetry`]
    /// and the balance checks rather than enforced.
    pub fn kawasaki(s: f64, mut mobility: DMatrix<f64>) -> Result<Self> {
        check_exponent(s)?;
        if mobility.nrows() != mobility.ncols() {
            return Err(Error::InvalidFamily("mobility must be square".into()));
        }
        if let Some(v) = mobility.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidFamily(format!("mobility entry {v} must be finite and non-negative")));
        }
        for i in 0..mobility.nrows() {
            mobility[(i, i)] = 0.0;
        }
        Ok(Self { kind: DynamicsKind::Kawasaki, s, mobility: Some(mobility) })
    }

    pub fn kind(&self) -> DynamicsKind {
        self.kind
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn mobility(&self) -> Option<&DMatrix<f64>> {
        self.mobility.as_ref()
    }

    /// `a(x, y)`; zero for Glauber families.
    pub fn a(&self, x: usize, y: usize) -> f64 {
        self.mobility.as_ref().map_or(0.0, |m| m[(x, y)])
    }

    /// `max |a_xy − a_yx|`.
    pub fn mobility_asymmetry(&self) -> f64 {
        let Some(m) = &self.mobility else { return 0.0 };
        let n = m.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn death(&self, r: f64) -> Result<f64> {
        check_rate(death_rate(r, self.s))
    }

    pub fn birth(&self, r: f64) -> Result<f64> {
        check_rate(birth_rate(r, self.s))
    }

    pub fn hop(&self, x: usize, y: usize, r_x: f64, r_y: f64) -> Result<f64> {
        check_rate(hop_rate(r_x, r_y, self.a(x, y), self.s))
    }

    fn check_size(&self, n: usize) -> Result<()> {
        match &self.mobility {
            Some(m) if m.nrows() != n => {
                Err(Error::DimensionMismatch(format!("mobility is {}x{0}, space has {n} sites", m.nrows())))
            }
            _ => Ok(()),
        }
    }
}

fn check_exponent(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::InvalidFamily(format!("exponent s must lie in [0, 1], got {s}")))
    }
}

/// `max_{x ≠ y ∉ γ} |r(x,γ) c(x,y,γ) − r(y,γ) c(y,x,γ)|`.
pub fn balance_residual(j: &InteractionOperator, gamma: &Configuration, family: &RateFamily) -> Result<f64> {
    if family.kind() != DynamicsKind::Kawasaki {
        return Err(Error::InvalidFamily("balance residual needs a Kawasaki family".into()));
    }
    family.check_size(j.n())?;
    let profile = papangelou::intensity_profile(j, gamma);
    let vacant: Vec<usize> = gamma.vacant().collect();
    let mut worst: f64 = 0.0;
    for (k, &x) in vacant.iter().enumerate() {
        for &y in &vacant[k + 1..] {
            let (rx, ry) = (profile.get(x), profile.get(y));
            let forward = rx * family.hop(x, y, rx, ry)?;
            let backward = ry * family.hop(y, x, ry, rx)?;
            worst = worst.max((forward - backward).abs());
        }
    }
    Ok(worst)
}

/// Finite-volume values of the integrability conditions (with `Λ` the whole
/// site set). Expectations are exact sums over the measure table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub kind: DynamicsKind,
    pub s: f64,
    /// `sup_x J(x, x)`.
    pub sup_j_diagonal: f64,
    /// `sup_x Σ_y a(x,y) ν_y` (Kawasaki).
    pub sup_mobility_row: Option<f64>,
    /// `E[Σ_{x∈γ} d(x, γ∖x)]` (Glauber).
    pub death_first_moment: Option<f64>,
    /// `‖Σ_{x∈γ} d(x, γ∖x)‖_{L²(μ)}` (Glauber).
    pub death_l2: Option<f64>,
    /// `‖Σ_x ν_x b(x, γ)‖_{L²(μ)}` (Glauber).
    pub birth_l2: Option<f64>,
    /// `E[Σ_{x∈γ} Σ_y ν_y c(x,y,γ∖x)(χ(x) + χ(y))]` (Kawasaki).
    pub hop_first_moment: Option<f64>,
    /// `L²(μ)` norm of the same sum (Kawasaki).
    pub hop_l2: Option<f64>,
    /// `L²(μ)` norm of `Σ_x ν_x Σ_{y∈γ} r(x,γ∖y) r(y,γ∖y)^{−s} c(x,y,γ∖y)`
    /// (Kawasaki closability condition).
    pub closability_l2: Option<f64>,
}

/// Computes the sup-type diagnostics for any `n` and, when a measure table is
/// supplied, the exact `L¹`/`L²` expectations.
pub fn condition_diagnostics(
    j: &InteractionOperator,
    family: &RateFamily,
    table: Option<&MeasureTable>,
) -> Result<ConditionReport> {
    let n = j.n();
    family.check_size(n)?;
    let w = j.weights();
    let sup_j_diagonal = (0..n).map(|x| j.entry(x, x)).fold(f64::NEG_INFINITY, f64::max);
    let sup_mobility_row = family
        .mobility()
        .map(|m| (0..n).map(|x| (0..n).map(|y| m[(x, y)] * w[y]).sum::<f64>()).fold(0.0, f64::max));
    let mut report = ConditionReport {
        kind: family.kind(),
        s: family.s(),
        sup_j_diagonal,
        sup_mobility_row,
        death_first_moment: None,
        death_l2: None,
        birth_l2: None,
        hop_first_moment: None,
        hop_l2: None,
        closability_l2: None,
    };
    let Some(table) = table else { return Ok(report) };
    if table.n() != n {
        return Err(Error::DimensionMismatch("measure table size".into()));
    }
    let s = family.s();
    match family.kind() {
        DynamicsKind::Glauber => {
            let (mut d1, mut d2, mut b2) = (0.0, 0.0, 0.0);
            for (gamma, mu) in table.iter() {
                let p = papangelou::intensity_profile(j, &gamma);
                let mut deaths = 0.0;
                for &x in gamma.sites() {
                    deaths += family.death(p.get(x))?;
                }
                let mut births = 0.0;
                for x in gamma.vacant() {
                    births += w[x] * family.birth(p.get(x))?;
                }
                d1 += mu * deaths;
                d2 += mu * deaths * deaths;
                b2 += mu * births * births;
            }
            report.death_first_moment = Some(d1);
            report.death_l2 = Some(d2.sqrt());
            report.birth_l2 = Some(b2.sqrt());
        }
        DynamicsKind::Kawasaki => {
            let (mut h1, mut h2, mut c2) = (0.0, 0.0, 0.0);
            for (gamma, mu) in table.iter() {
                if gamma.is_empty() {
                    continue;
                }
                let Ok(t) = IntensityTracker::new(j, &gamma) else { continue };
                let mut hops = 0.0;
                let mut closing = 0.0;
                for &x in gamma.sites() {
                    let rx = t.occupied_intensity(x);
                    for y in gamma.vacant() {
                        let ry = t.intensity_without(x, y);
                        // Λ = X, so χ(x) + χ(y) = 2
                        hops += 2.0 * w[y] * family.hop(x, y, rx, ry)?;
                        // closability term with the roles of x and y swapped
                        if rx > ZERO_THRESHOLD {
                            let c = family.hop(y, x, ry, rx)?;
                            closing += w[y] * ry * rx.powf(-s) * c;
                        }
                    }
                }
                h1 += mu * hops;
                h2 += mu * hops * hops;
                c2 += mu * closing * closing;
            }
            report.hop_first_moment = Some(h1);
            report.hop_l2 = Some(h2.sqrt());
            report.closability_l2 = Some(c2.sqrt());
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn death_birth_examples() {
        assert_eq!(death_rate(0.37, 1.0), 1.0);
        assert_eq!(death_rate(4.0, 0.5), 0.5);
        assert_eq!(death_rate(0.0, 0.5), 0.0);
        assert_eq!(birth_rate(0.37, 1.0), 0.37);
        assert_eq!(birth_rate(4.0, 0.5), 2.0);
        assert_eq!(birth_rate(0.0, 0.3), 0.0);
    }

    #[test]
    fn hop_examples() {
        assert_eq!(hop_rate(0.7, 0.4, 2.0, 1.0), 2.0 * 0.4);
        assert!((hop_rate(2.0, 8.0, 1.0, 0.5) - 2.0).abs() < 1e-15);
        assert_eq!(hop_rate(0.0, 8.0, 1.0, 0.5), 0.0);
        assert_eq!(hop_rate(1e-13, 8.0, 1.0, 0.0), 0.0);
    }

    #[test]
    fn symmetrize_examples() {
        // balanced: r_x c_xy = r_y c_yx
        assert!((symmetrize(0.6, 0.3, 1.0, 2.0) - 0.6).abs() < 1e-15);
        assert_eq!(symmetrize(0.8, 0.0, 1.0, 3.0), 0.4);
        assert_eq!(symmetrize(0.8, 5.0, 0.0, 3.0), 0.4);
    }

    #[test]
    fn exponent_outside_unit_interval_rejected() {
        assert!(RateFamily::glauber(1.5).is_err());
        assert!(RateFamily::glauber(-0.1).is_err());
        assert!(RateFamily::kawasaki(0.5, DMatrix::from_element(2, 2, -1.0)).is_err());
        let k = RateFamily::kawasaki(0.5, DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert_eq!(k.a(0, 0), 0.0);
    }

    #[test]
    fn overflow_is_reported() {
        assert!(check_rate(1e13).is_err());
        assert!(check_rate(f64::INFINITY).is_err());
        assert_eq!(check_rate(3.0), Ok(3.0));
    }

    #[test]
    fn mobility_presets() {
        let a = MobilitySpec::NearestNeighbour { scale: 1.0, periodic: true }.build(4).unwrap();
        assert_eq!(a[(0, 3)], 1.0);
        assert_eq!(a[(0, 2)], 0.0);
        let a = MobilitySpec::AllPairs { scale: 2.0 }.build(3).unwrap();
        assert_eq!(a.sum(), 12.0);
    }
}
