//! Death, birth and hopping rates for the `s`-family, the pointwise balance
//! residual, and the integrability diagnostics.
//!
//! cargo run --example rate_families

use fermion_dynamics::rates::{birth_rate, death_rate, hop_rate};
use fermion_dynamics::*;

fn main() -> Result<()> {
    for s in [0.0, 0.5, 1.0] {
        println!("s = {s}: d(0.25) = {:.4}  b(0.25) = {:.4}  c(0.25 → 0.5) = {:.4}", death_rate(0.25, s), birth_rate(0.25, s), hop_rate(0.25, 0.5, 1.0, s));
    }

    let space = SiteSpace::grid(0.0, 2.0, 7, WeightRule::Midpoint)?;
    let k = build_kernel(&space, &KernelSpec::ShrunkSine { alpha: 0.5, density: 1.5 }, KernelOptions::default())?;
    let j = InteractionOperator::from_kernel(&k)?;
    let table = exact_distribution(&j, 14)?;
    let ring = MobilitySpec::NearestNeighbour { scale: 1.0, periodic: true }.build(7)?;

    for s in [0.0, 0.5, 1.0] {
        let family = RateFamily::kawasaki(s, ring.clone())?;
        let worst = table
            .iter()
            .map(|(gamma, _)| balance_residual(&j, &gamma, &family))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        println!("Kawasaki s = {s}: max balance residual {worst:.1e}");
    }

    let mut broken = ring.clone();
    broken[(0, 1)] = 2.0;
    let family = RateFamily::kawasaki(0.5, broken)?;
    let gamma = Configuration::from_sites(7, [3])?;
    println!("asymmetric mobility: residual {:.3e}", balance_residual(&j, &gamma, &family)?);

    for family in [RateFamily::glauber(0.5)?, RateFamily::kawasaki(0.5, ring)?] {
        let report = condition_diagnostics(&j, &family, Some(&table))?;
        println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    }
    Ok(())
}
