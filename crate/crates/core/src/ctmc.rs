//! Gillespie simulation of the Glauber and Kawasaki chains, with
//! time-weighted estimators and stationarity tests against the exact measure.
//!
//! Each step draws two uniforms from the replica's stream, in this order: the
//! holding time `−ln(u)/R` with `u ∈ (0,1)`, then the event by linear scan of
//! the rate vector. Replica `k` of a run with master seed `s` uses
//! `ChaCha8Rng::seed_from_u64(s)` on stream `k`; a DPP initial state is drawn
//! from that stream before the first step.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::kernel::InteractionOperator;
use crate::measure::{DppSampler, MeasureTable};
use crate::papangelou::IntensityTracker;
use crate::rates::{DynamicsKind, RateFamily};

pub const DEFAULT_CHECK_INTERVAL: usize = 1000;
pub const DEFAULT_BATCHES: usize = 20;
/// Significance level of the snapshot goodness-of-fit test.
pub const SNAPSHOT_ALPHA: f64 = 0.01;
const SNAPSHOT_STREAM_OFFSET: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    DppSample,
    Empty,
    Given(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub family: RateFamily,
    pub horizon: f64,
    pub burn_in: f64,
    pub replicas: usize,
    pub master_seed: u64,
    pub initial: InitialState,
    /// Events between comparisons of the tracked intensities with a fresh
    /// factorization.
    pub check_interval: usize,
    /// Independent μ-distributed starts for the snapshot test.
    pub snapshot_draws: usize,
    pub snapshot_time: f64,
}

impl SimConfig {
    pub fn new(family: RateFamily, horizon: f64) -> Self {
        Self {
            family,
            horizon,
            burn_in: 0.1,
            replicas: 1,
            master_seed: 0,
            initial: InitialState::DppSample,
            check_interval: DEFAULT_CHECK_INTERVAL,
            snapshot_draws: 2000,
            snapshot_time: 1.0,
        }
    }

    pub fn kind(&self) -> DynamicsKind {
        self.family.kind()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::InvalidSimConfig(format!("horizon must be finite and non-negative, got {}", self.horizon)));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::InvalidSimConfig(format!("burn_in must lie in [0,1), got {}", self.burn_in)));
        }
        if self.replicas == 0 {
            return Err(Error::InvalidSimConfig("replicas must be at least 1".into()));
        }
        if self.check_interval == 0 {
            return Err(Error::InvalidSimConfig("check_interval must be at least 1".into()));
        }
        if !(self.snapshot_time.is_finite() && self.snapshot_time >= 0.0) {
            return Err(Error::InvalidSimConfig("snapshot_time must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    Birth(usize),
    Death(usize),
    Hop { from: usize, to: usize },
}

impl Transition {
    pub fn apply(&self, gamma: &Configuration) -> Result<Configuration> {
        match *self {
            Transition::Birth(x) => gamma.with(x),
            Transition::Death(x) => gamma.without(x),
            Transition::Hop { from, to } => gamma.without(from)?.with(to),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Transition::Birth(_) => "birth",
            Transition::Death(_) => "death",
            Transition::Hop { .. } => "hop",
        }
    }

    pub fn sites(&self) -> (usize, Option<usize>) {
        match *self {
            Transition::Birth(x) | Transition::Death(x) => (x, None),
            Transition::Hop { from, to } => (from, Some(to)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub transition: Transition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: Configuration,
    pub events: Vec<Event>,
    pub horizon: f64,
    /// Time at which the chain entered a state with no exit, if it did.
    pub absorbed_at: Option<f64>,
    pub refactorizations: usize,
    pub max_drift: f64,
}

impl Trajectory {
    /// States visited: the initial configuration followed by one state per
    /// event. Fails if any event is inconsistent with the state it acts on
    /// or if event times are not strictly increasing inside `[0, horizon]`.
    pub fn replay(&self) -> Result<Vec<Configuration>> {
        let mut states = Vec::with_capacity(self.events.len() + 1);
        states.push(self.initial.clone());
        let mut last = 0.0;
        for e in &self.events {
            if !(e.time > last && e.time <= self.horizon) || (last == 0.0 && e.time <= 0.0) {
                return Err(Error::InvalidConfiguration(format!("event time {} out of order", e.time)));
            }
            last = e.time;
            let next = e.transition.apply(states.last().expect("non-empty"))?;
            states.push(next);
        }
        Ok(states)
    }

    pub fn final_state(&self) -> Result<Configuration> {
        Ok(self.replay()?.pop().expect("non-empty"))
    }

    /// Calls `visit(state, duration)` for each constant piece of the path
    /// restricted to `[from, to]`.
    pub fn for_each_segment<F: FnMut(&Configuration, f64)>(&self, from: f64, to: f64, mut visit: F) -> Result<()> {
        let states = self.replay()?;
        let mut start = 0.0_f64;
        for (k, state) in states.iter().enumerate() {
            let end = self.events.get(k).map_or(self.horizon, |e| e.time);
            let (a, b) = (start.max(from), end.min(to));
            if b > a {
                visit(state, b - a);
            }
            start = end;
        }
        Ok(())
    }
}

/// Current rates of every possible transition out of the tracked state.
fn transition_rates(
    tracker: &IntensityTracker<'_>,
    family: &RateFamily,
    weights: &[f64],
    out: &mut Vec<(Transition, f64)>,
) -> Result<()> {
    out.clear();
    let n = tracker.n();
    match family.kind() {
        DynamicsKind::Glauber => {
            for x in 0..n {
                if tracker.is_occupied(x) {
                    out.push((Transition::Death(x), family.death(tracker.occupied_intensity(x))?));
                } else {
                    out.push((Transition::Birth(x), family.birth(tracker.vacant_intensity(x))? * weights[x]));
                }
            }
        }
        DynamicsKind::Kawasaki => {
            for x in (0..n).filter(|&x| tracker.is_occupied(x)) {
                let r = tracker.intensities_without(x);
                for y in (0..n).filter(|&y| !tracker.is_occupied(y)) {
                    let c = family.hop(x, y, r[x], r[y])?;
                    out.push((Transition::Hop { from: x, to: y }, 2.0 * c * weights[y]));
                }
            }
        }
    }
    Ok(())
}

/// Single-trajectory Gillespie engine owning an incremental intensity
/// factorization.
pub struct Simulator<'a> {
    family: &'a RateFamily,
    weights: &'a [f64],
    tracker: IntensityTracker<'a>,
    rates: Vec<(Transition, f64)>,
    check_interval: usize,
    since_check: usize,
    max_drift: f64,
}

impl<'a> Simulator<'a> {
    pub fn new(j: &'a InteractionOperator, family: &'a RateFamily, state: &Configuration) -> Result<Self> {
        if let Some(m) = family.mobility() {
            if m.nrows() != j.n() {
                return Err(Error::DimensionMismatch(format!("mobility is {}x{0}, space has {} sites", m.nrows(), j.n())));
            }
        }
        Ok(Self {
            family,
            weights: j.weights(),
            tracker: IntensityTracker::new(j, state)?,
            rates: Vec::new(),
            check_interval: DEFAULT_CHECK_INTERVAL,
            since_check: 0,
            max_drift: 0.0,
        })
    }

    pub fn with_check_interval(mut self, interval: usize) -> Self {
        self.check_interval = interval.max(1);
        self
    }

    pub fn state(&self) -> Configuration {
        self.tracker.configuration()
    }

    pub fn tracker(&self) -> &IntensityTracker<'a> {
        &self.tracker
    }

    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    /// Draws the next holding time and transition and applies it. Returns
    /// `None` when the total exit rate is zero (absorbed).
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<(f64, Transition)>> {
        let next = self.draw(rng)?;
        if let Some((_, t)) = next {
            self.apply(t)?;
        }
        Ok(next)
    }

    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<(f64, Transition)>> {
        transition_rates(&self.tracker, self.family, self.weights, &mut self.rates)?;
        let total: f64 = self.rates.iter().map(|(_, q)| q).sum();
        if total <= 0.0 {
            return Ok(None);
        }
        let u: f64 = rng.sample(Open01);
        let holding = -u.ln() / total;
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for &(t, q) in &self.rates {
            if q <= 0.0 {
                continue;
            }
            acc += q;
            chosen = Some(t);
            if target < acc {
                break;
            }
        }
        Ok(Some((holding, chosen.expect("positive total rate"))))
    }

    fn apply(&mut self, transition: Transition) -> Result<()> {
        match transition {
            Transition::Birth(x) => self.tracker.insert(x)?,
            Transition::Death(x) => self.tracker.remove(x)?,
            Transition::Hop { from, to } => {
                self.tracker.remove(from)?;
                self.tracker.insert(to)?;
            }
        }
        self.since_check += 1;
        if self.since_check >= self.check_interval {
            self.since_check = 0;
            self.max_drift = self.max_drift.max(self.tracker.check_drift()?);
        }
        Ok(())
    }

    /// Runs until `horizon` or absorption. A jump drawn past the horizon is
    /// discarded, so the state afterwards is the state at time `horizon`.
    pub fn run<R: Rng + ?Sized>(&mut self, horizon: f64, rng: &mut R) -> Result<Trajectory> {
        let initial = self.state();
        let mut events = Vec::new();
        let mut time = 0.0;
        let mut absorbed_at = None;
        while time < horizon {
            match self.draw(rng)? {
                None => {
                    absorbed_at = Some(time);
                    break;
                }
                Some((h, t)) => {
                    time += h;
                    if time > horizon {
                        break;
                    }
                    self.apply(t)?;
                    events.push(Event { time, transition: t });
                }
            }
        }
        Ok(Trajectory {
            initial,
            events,
            horizon,
            absorbed_at,
            refactorizations: self.tracker.refactorizations(),
            max_drift: self.max_drift,
        })
    }
}

/// One Gillespie step from `state` with a freshly factorized intensity.
pub fn step<R: Rng + ?Sized>(
    j: &InteractionOperator,
    family: &RateFamily,
    state: &Configuration,
    rng: &mut R,
) -> Result<Option<(f64, Transition, Configuration)>> {
    let mut sim = Simulator::new(j, family, state)?;
    Ok(sim.step(rng)?.map(|(h, t)| (h, t, sim.state())))
}

pub fn replica_rng(master_seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replica);
    rng
}

fn initial_state<R: Rng + ?Sized>(
    config: &SimConfig,
    j: &InteractionOperator,
    sampler: &DppSampler,
    rng: &mut R,
) -> Result<Configuration> {
    match &config.initial {
        InitialState::DppSample => sampler.sample(rng),
        InitialState::Empty => Ok(Configuration::empty(j.n())),
        InitialState::Given(sites) => Configuration::from_sites(j.n(), sites.iter().copied()),
    }
}

/// Trajectory of one replica; a pure function of `(config, j, replica)`.
pub fn simulate(config: &SimConfig, j: &InteractionOperator, replica: usize) -> Result<Trajectory> {
    config.validate()?;
    let mut rng = replica_rng(config.master_seed, replica as u64);
    let sampler = DppSampler::from_interaction(j);
    let start = initial_state(config, j, &sampler, &mut rng)?;
    let mut sim = Simulator::new(j, &config.family, &start)?.with_check_interval(config.check_interval);
    sim.run(config.horizon, &mut rng)
}

/// All replicas, in replica order, run in parallel.
pub fn simulate_replicas(config: &SimConfig, j: &InteractionOperator) -> Result<Vec<Trajectory>> {
    config.validate()?;
    (0..config.replicas).into_par_iter().map(|k| simulate(config, j, k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyStats {
    pub window: (f64, f64),
    pub means: Vec<f64>,
    /// Batch-means standard errors (batches of equal time length).
    pub stderr: Vec<f64>,
    #[serde(skip)]
    batch_means: Vec<Vec<f64>>,
}

impl OccupancyStats {
    pub fn batches(&self) -> usize {
        self.batch_means.len()
    }

    fn from_batches(window: (f64, f64), batch_means: Vec<Vec<f64>>) -> Self {
        let b = batch_means.len() as f64;
        let n = batch_means.first().map_or(0, Vec::len);
        let means: Vec<f64> = (0..n).map(|i| batch_means.iter().map(|m| m[i]).sum::<f64>() / b).collect();
        let stderr = (0..n)
            .map(|i| {
                if batch_means.len() < 2 {
                    return f64::NAN;
                }
                let var = batch_means.iter().map(|m| (m[i] - means[i]).powi(2)).sum::<f64>() / (b - 1.0);
                (var / b).sqrt()
            })
            .collect();
        Self { window, means, stderr, batch_means }
    }

    /// Pools the batches of two runs with equal window lengths.
    pub fn merge(mut self, other: OccupancyStats) -> Self {
        self.batch_means.extend(other.batch_means);
        Self::from_batches(self.window, self.batch_means)
    }
}

fn window(traj: &Trajectory, burn_in: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::InvalidArgument(format!("burn_in must lie in [0,1), got {burn_in}")));
    }
    let start = burn_in * traj.horizon;
    if traj.horizon - start <= 0.0 {
        return Err(Error::EmptyWindow);
    }
    Ok((start, traj.horizon))
}

/// Time-averaged occupancy of each site over `[burn_in·T, T]`.
pub fn occupancy_stats(traj: &Trajectory, burn_in: f64) -> Result<OccupancyStats> {
    occupancy_stats_batched(traj, burn_in, DEFAULT_BATCHES)
}

pub fn occupancy_stats_batched(traj: &Trajectory, burn_in: f64, batches: usize) -> Result<OccupancyStats> {
    let (t0, t1) = window(traj, burn_in)?;
    let batches = batches.max(1);
    let n = traj.initial.n();
    let width = (t1 - t0) / batches as f64;
    let mut sums = vec![vec![0.0; n]; batches];
    let states = traj.replay()?;
    let mut start = 0.0_f64;
    for (k, state) in states.iter().enumerate() {
        let end = traj.events.get(k).map_or(traj.horizon, |e| e.time);
        let (a, b) = (start.max(t0), end.min(t1));
        start = end;
        if b <= a {
            continue;
        }
        let first = (((a - t0) / width) as usize).min(batches - 1);
        let last = (((b - t0) / width) as usize).min(batches - 1);
        for (bi, sum) in sums.iter_mut().enumerate().take(last + 1).skip(first) {
            let lo = a.max(t0 + bi as f64 * width);
            let hi = b.min(t0 + (bi + 1) as f64 * width);
            if hi > lo {
                for &x in state.sites() {
                    sum[x] += hi - lo;
                }
            }
        }
    }
    let batch_means = sums.into_iter().map(|s| s.into_iter().map(|v| v / width).collect()).collect();
    Ok(OccupancyStats::from_batches((t0, t1), batch_means))
}

/// Fraction of `[burn_in·T, T]` spent in each configuration, indexed by mask.
pub fn time_in_state(traj: &Trajectory, burn_in: f64) -> Result<Vec<f64>> {
    let (t0, t1) = window(traj, burn_in)?;
    let n = traj.initial.n();
    if n > 24 {
        return Err(Error::EnumerationLimit { n, limit: 24 });
    }
    let mut out = vec![0.0; 1 << n];
    traj.for_each_segment(t0, t1, |s, d| out[s.mask() as usize] += d)?;
    let total = t1 - t0;
    out.iter_mut().for_each(|v| *v /= total);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorComparison {
    pub particles: usize,
    pub replicas: usize,
    pub tv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotTest {
    pub draws: usize,
    pub time: f64,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub kind: DynamicsKind,
    /// `"ok"` or `"degenerate: absorbed"`.
    pub status: String,
    /// Glauber: TV to μ of the pooled time-in-state law. Kawasaki: largest
    /// TV over the visited sectors.
    pub tv: Option<f64>,
    pub sectors: Vec<SectorComparison>,
    pub snapshot: Option<SnapshotTest>,
    pub events: usize,
    pub absorbed_replicas: usize,
}

/// Compares long-run empirical laws with the exact measure: Glauber against
/// μ, Kawasaki sector by sector against μ conditioned on the particle
/// number. Also runs the snapshot test: `snapshot_draws` starts drawn from μ,
/// each evolved to `snapshot_time`, with a chi-square goodness-of-fit test of
/// the end states against μ.
pub fn stationarity_test(config: &SimConfig, j: &InteractionOperator, table: &MeasureTable) -> Result<StationarityReport> {
    config.validate()?;
    let trajectories = simulate_replicas(config, j)?;
    let mut report = compare_with_measure(config, &trajectories, table)?;
    if report.status == "ok" && config.snapshot_draws > 0 {
        report.snapshot = Some(snapshot_test(config, j, table)?);
    }
    Ok(report)
}

/// The trajectory part of [`stationarity_test`] for already simulated
/// replicas; `snapshot` is left empty.
pub fn compare_with_measure(
    config: &SimConfig,
    trajectories: &[Trajectory],
    table: &MeasureTable,
) -> Result<StationarityReport> {
    let n = table.n();
    if trajectories.is_empty() {
        return Err(Error::InvalidArgument("no trajectories".into()));
    }
    if trajectories.iter().any(|t| t.initial.n() != n) {
        return Err(Error::DimensionMismatch("measure table size".into()));
    }
    let events = trajectories.iter().map(|t| t.events.len()).sum();
    let absorbed = trajectories.iter().filter(|t| t.absorbed_at.is_some()).count();
    if absorbed == trajectories.len() && events == 0 {
        return Ok(StationarityReport {
            kind: config.kind(),
            status: "degenerate: absorbed".into(),
            tv: None,
            sectors: Vec::new(),
            snapshot: None,
            events,
            absorbed_replicas: absorbed,
        });
    }
    let laws = trajectories.iter().map(|t| time_in_state(t, config.burn_in)).collect::<Result<Vec<_>>>()?;
    let (tv, sectors) = match config.kind() {
        DynamicsKind::Glauber => {
            let empirical = MeasureTable::from_probabilities(n, average(&laws))?;
            (empirical.total_variation(table), Vec::new())
        }
        DynamicsKind::Kawasaki => {
            let mut sectors = Vec::new();
            for m in 0..=n {
                let members: Vec<Vec<f64>> = trajectories
                    .iter()
                    .zip(&laws)
                    .filter(|(t, _)| t.initial.len() == m)
                    .map(|(_, l)| l.clone())
                    .collect();
                if members.is_empty() {
                    continue;
                }
                let empirical = MeasureTable::from_probabilities(n, average(&members))?;
                let target = table.conditioned_on_sector(m)?;
                sectors.push(SectorComparison { particles: m, replicas: members.len(), tv: empirical.total_variation(&target) });
            }
            (sectors.iter().map(|s| s.tv).fold(0.0, f64::max), sectors)
        }
    };
    Ok(StationarityReport {
        kind: config.kind(),
        status: "ok".into(),
        tv: Some(tv),
        sectors,
        snapshot: None,
        events,
        absorbed_replicas: absorbed,
    })
}

fn average(laws: &[Vec<f64>]) -> Vec<f64> {
    let k = laws.len() as f64;
    (0..laws[0].len()).map(|s| laws.iter().map(|l| l[s]).sum::<f64>() / k).collect()
}

/// Start-from-μ test: independent exact draws evolved for `snapshot_time`;
/// the end states are tested against μ by a chi-square test with cells of
/// expected count below 5 pooled.
pub fn snapshot_test(config: &SimConfig, j: &InteractionOperator, table: &MeasureTable) -> Result<SnapshotTest> {
    let sampler = DppSampler::from_interaction(j);
    let draws = config.snapshot_draws;
    let ends = (0..draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = replica_rng(config.master_seed, SNAPSHOT_STREAM_OFFSET + k as u64);
            let start = sampler.sample(&mut rng)?;
            let mut sim = Simulator::new(j, &config.family, &start)?.with_check_interval(config.check_interval);
            sim.run(config.snapshot_time, &mut rng)?;
            Ok(sim.state().mask() as usize)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0usize; table.probabilities().len()];
    for s in ends {
        counts[s] += 1;
    }
    let total = draws as f64;
    let (mut chi2, mut cells) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (s, &p) in table.probabilities().iter().enumerate() {
        let expected = p * total;
        let observed = counts[s] as f64;
        if expected >= 5.0 {
            chi2 += (observed - expected).powi(2) / expected;
            cells += 1;
        } else {
            pooled_obs += observed;
            pooled_exp += expected;
        }
    }
    if pooled_exp > 0.0 {
        chi2 += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    }
    let df = cells.saturating_sub(1);
    let p_value = if df == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(df as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        1.0 - dist.cdf(chi2)
    };
    Ok(SnapshotTest {
        draws,
        time: config.snapshot_time,
        chi_square: chi2,
        degrees_of_freedom: df,
        p_value,
        passed: p_value >= SNAPSHOT_ALPHA,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_kernel, KernelOptions, KernelSpec, SiteSpace};
    use nalgebra::DMatrix;

    fn diag_op(values: &[f64]) -> InteractionOperator {
        let space = SiteSpace::counting(values.len()).unwrap();
        let k = build_kernel(&space, &KernelSpec::Diagonal { values: values.to_vec() }, KernelOptions::default()).unwrap();
        InteractionOperator::from_kernel(&k).unwrap()
    }

    #[test]
    fn single_site_alternates() {
        let j = diag_op(&[0.5]);
        let mut config = SimConfig::new(RateFamily::glauber(1.0).unwrap(), 50.0);
        config.initial = InitialState::Empty;
        let t = simulate(&config, &j, 0).unwrap();
        assert!(!t.events.is_empty());
        for (k, e) in t.events.iter().enumerate() {
            let expected = if k % 2 == 0 { Transition::Birth(0) } else { Transition::Death(0) };
            assert_eq!(e.transition, expected);
        }
        t.replay().unwrap();
    }

    #[test]
    fn run_stops_at_the_horizon_state() {
        let j = diag_op(&[0.5, 0.3, 0.7]);
        let fam = RateFamily::glauber(1.0).unwrap();
        let mut rng = replica_rng(3, 0);
        for _ in 0..50 {
            let mut sim = Simulator::new(&j, &fam, &Configuration::empty(3)).unwrap();
            let t = sim.run(0.7, &mut rng).unwrap();
            assert_eq!(sim.state(), t.final_state().unwrap());
        }
    }

    #[test]
    fn zero_rates_absorb() {
        let j = diag_op(&[0.0, 0.0]);
        let mut config = SimConfig::new(RateFamily::glauber(1.0).unwrap(), 10.0);
        config.initial = InitialState::Empty;
        let t = simulate(&config, &j, 0).unwrap();
        assert!(t.events.is_empty());
        assert_eq!(t.absorbed_at, Some(0.0));
        let stats = occupancy_stats(&t, 0.1).unwrap();
        assert!(stats.means.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn kawasaki_full_configuration_absorbs() {
        let j = diag_op(&[0.3, 0.3, 0.3]);
        let mut config = SimConfig::new(RateFamily::kawasaki(1.0, DMatrix::from_element(3, 3, 1.0)).unwrap(), 5.0);
        config.initial = InitialState::Given(vec![0, 1, 2]);
        let t = simulate(&config, &j, 0).unwrap();
        assert!(t.events.is_empty() && t.absorbed_at == Some(0.0));
    }

    #[test]
    fn zero_horizon_is_empty() {
        let j = diag_op(&[0.4, 0.2]);
        let config = SimConfig::new(RateFamily::glauber(0.5).unwrap(), 0.0);
        let t = simulate(&config, &j, 3).unwrap();
        assert!(t.events.is_empty());
        assert!(matches!(occupancy_stats(&t, 0.0), Err(Error::EmptyWindow)));
    }

    #[test]
    fn constant_path_occupancy() {
        let t = Trajectory {
            initial: Configuration::from_sites(3, [1]).unwrap(),
            events: Vec::new(),
            horizon: 4.0,
            absorbed_at: None,
            refactorizations: 0,
            max_drift: 0.0,
        };
        let s = occupancy_stats(&t, 0.25).unwrap();
        for (m, e) in s.means.iter().zip([0.0, 1.0, 0.0]) {
            assert!((m - e).abs() < 1e-12);
        }
        assert!(occupancy_stats(&t, 1.0).is_err());
    }

    #[test]
    fn invalid_config_rejected() {
        let mut c = SimConfig::new(RateFamily::glauber(1.0).unwrap(), 1.0);
        c.burn_in = 1.0;
        assert!(c.validate().is_err());
        c.burn_in = 0.1;
        c.replicas = 0;
        assert!(c.validate().is_err());
    }
}
