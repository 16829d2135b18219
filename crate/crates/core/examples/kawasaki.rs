//! Hopping dynamics on a ring: the particle number never changes, and each
//! sector relaxes to the conditioned measure `μ(· | |γ| = m)`.
//!
//! cargo run --release --example kawasaki

use fermion_dynamics::*;

fn main() -> Result<()> {
    let space = SiteSpace::grid(0.0, 3.0, 6, WeightRule::Midpoint)?;
    let k = build_kernel(&space, &KernelSpec::ShrunkSine { alpha: 0.7, density: 1.0 }, KernelOptions::default())?;
    let j = InteractionOperator::from_kernel(&k)?;
    let table = exact_distribution(&j, 14)?;
    let ring = MobilitySpec::NearestNeighbour { scale: 1.0, periodic: true }.build(6)?;

    let mut config = SimConfig::new(RateFamily::kawasaki(0.5, ring)?, 5_000.0);
    config.master_seed = 3;
    config.initial = InitialState::Given(vec![0, 1, 2]);
    let traj = simulate(&config, &j, 0)?;
    let sizes: Vec<usize> = traj.replay()?.iter().map(|s| s.len()).collect();
    println!("{} hops, particle counts seen: {:?}", traj.events.len(), {
        let mut u = sizes.clone();
        u.dedup();
        u.sort();
        u.dedup();
        u
    });

    config.replicas = 4;
    let report = stationarity_test(&config, &j, &table)?;
    for s in &report.sectors {
        println!("sector m = {}: {} replicas, TV to μ(·|m) = {:.4}", s.particles, s.replicas, s.tv);
    }
    let sector = table.conditioned_on_sector(3)?;
    let law = fermion_dynamics::ctmc::time_in_state(&traj, config.burn_in)?;
    let mut rows: Vec<(usize, f64)> = sector.probabilities().iter().copied().enumerate().filter(|(_, p)| *p > 0.0).collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (mask, p) in rows.into_iter().take(5) {
        println!("{}  μ(·|3) = {p:.4}  time fraction = {:.4}", Configuration::from_mask(6, mask as u64).bit_string(), law[mask]);
    }
    Ok(())
}
