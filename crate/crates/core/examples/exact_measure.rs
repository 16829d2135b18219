//! Enumerates the measure `μ(γ) = det L_γ / det(I + L)` and checks the Mecke
//! identity for a test function.
//!
//! cargo run --example exact_measure

use fermion_dynamics::*;

fn main() -> Result<()> {
    let space = SiteSpace::grid(0.0, 1.0, 6, WeightRule::Midpoint)?;
    let k = build_kernel(&space, &KernelSpec::RbfContraction { lengthscale: 0.4, scale: 0.5 }, KernelOptions::default())?;
    let j = InteractionOperator::from_kernel(&k)?;
    let table = exact_distribution(&j, 14)?;
    println!("total mass {:.15}", table.total());

    let mut top: Vec<(Configuration, f64)> = table.iter().collect();
    top.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (gamma, p) in top.iter().take(5) {
        println!("{}  {p:.6}", gamma.bit_string());
    }
    for m in 0..=6 {
        println!("P(|γ| = {m}) = {:.6}", table.sector_mass(m));
    }
    for x in 0..6 {
        println!("P(x{x} ∈ γ) = {:.6}   ν·K(x,x) = {:.6}", table.marginal(x), space.weights()[x] * k.entry(x, x));
    }

    let mecke = mecke_check(&j, &table, |x, gamma| (x as f64 + 1.0) / (1.0 + gamma.len() as f64));
    println!("Mecke: lhs {:.12} rhs {:.12} residual {:.1e}", mecke.lhs, mecke.rhs, mecke.residual);
    Ok(())
}
