//! Papangelou intensities from Schur complements, their upper bound
//! `J(x, x)`, and the incremental tracker used by the simulators.
//!
//! cargo run --example papangelou

use fermion_dynamics::*;

fn main() -> Result<()> {
    let space = SiteSpace::counting(6)?;
    let k = build_kernel(&space, &KernelSpec::RandomContraction { seed: 11, lambda_max: 0.8 }, KernelOptions::default())?;
    let j = InteractionOperator::from_kernel(&k)?;

    let gamma = Configuration::from_sites(6, [1, 4])?;
    let profile = intensity_profile(&j, &gamma);
    println!("γ = {}", gamma.bit_string());
    for x in gamma.vacant() {
        println!("r(x{x}, γ) = {:.6} ≤ J(x{x}, x{x}) = {:.6}", profile.get(x), j.entry(x, x));
    }
    println!("bound margin {:.3e}", bound_check(&j, &gamma));

    let mut tracker = IntensityTracker::new(&j, &gamma)?;
    for (op, x) in [("insert", 0), ("insert", 3), ("remove", 1), ("insert", 5), ("remove", 4)] {
        match op {
            "insert" => tracker.insert(x)?,
            _ => tracker.remove(x)?,
        }
        let fresh = intensity_profile(&j, &tracker.configuration());
        println!(
            "{op:<6} x{x}: γ = {}  deviation from fresh factorization {:.1e}",
            tracker.configuration().bit_string(),
            tracker.profile().max_deviation(&fresh)
        );
    }
    println!("drift after check {:.1e}", tracker.check_drift()?);
    Ok(())
}
