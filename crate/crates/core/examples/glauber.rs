//! Birth-and-death dynamics: one long trajectory, time-averaged occupations
//! against the exact marginals, and the stationarity report.
//!
//! cargo run --release --example glauber

use fermion_dynamics::*;

fn main() -> Result<()> {
    let space = SiteSpace::grid(0.0, 3.0, 6, WeightRule::Midpoint)?;
    let k = build_kernel(&space, &KernelSpec::RandomContraction { seed: 5, lambda_max: 0.85 }, KernelOptions::default())?;
    let j = InteractionOperator::from_kernel(&k)?;
    let table = exact_distribution(&j, 14)?;

    let mut config = SimConfig::new(RateFamily::glauber(0.5)?, 5_000.0);
    config.master_seed = 7;
    let traj = simulate(&config, &j, 0)?;
    println!("{} events, final state {}, max drift {:.1e}", traj.events.len(), traj.final_state()?.bit_string(), traj.max_drift);
    for e in traj.events.iter().take(5) {
        println!("  t = {:8.4}  {:?}", e.time, e.transition);
    }

    let stats = occupancy_stats(&traj, config.burn_in)?;
    for x in 0..6 {
        println!("site {x}: time average {:.4} ± {:.4}, exact {:.4}", stats.means[x], stats.stderr[x], table.marginal(x));
    }

    config.replicas = 4;
    config.snapshot_draws = 1000;
    let report = stationarity_test(&config, &j, &table)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    Ok(())
}
