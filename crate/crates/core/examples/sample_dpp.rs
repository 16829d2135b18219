//! Exact draws from a sine-type kernel on a grid, compared against the
//! one- and two-point correlation functions of the kernel.
//!
//! cargo run --example sample_dpp

use fermion_dynamics::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let space = SiteSpace::grid(0.0, 4.0, 8, WeightRule::Midpoint)?;
    let k = build_kernel(&space, &KernelSpec::ShrunkSine { alpha: 0.6, density: 1.0 }, KernelOptions::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = (0..50_000).map(|_| sample(&k, &mut rng)).collect::<Result<Vec<_>>>()?;
    println!("first draw: {}", draws[0].bit_string());

    println!("site  ρ1 exact   ρ1 estimate");
    for e in estimate_correlation(&draws, &space, 1)?.entries {
        println!("{:>4}  {:.5}    {:.5} ± {:.5}", e.i, k.entry(e.i, e.i), e.estimate, e.stderr);
    }
    let pairs = estimate_correlation(&draws, &space, 2)?;
    let worst = pairs
        .entries
        .iter()
        .map(|e| {
            let j = e.j.unwrap_or(e.i);
            (e.estimate - k.correlation(&[e.i, j])).abs() / e.stderr
        })
        .fold(0.0, f64::max);
    println!("ρ2: worst deviation over {} pairs is {worst:.2} standard errors", pairs.entries.len());
    Ok(())
}
