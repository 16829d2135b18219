//! Assembles both generators on the full configuration space, checks
//! reversibility and reports the spectrum of `−Q`.
//!
//! cargo run --release --example spectral_gap

use fermion_dynamics::*;

fn main() -> Result<()> {
    let space = SiteSpace::grid(0.0, 2.0, 8, WeightRule::Midpoint)?;
    let k = build_kernel(&space, &KernelSpec::RbfContraction { lengthscale: 0.5, scale: 0.4 }, KernelOptions::default())?;
    let j = InteractionOperator::from_kernel(&k)?;
    let table = exact_distribution(&j, 14)?;

    for s in [0.0, 0.5, 1.0] {
        let q = glauber_generator(&j, &RateFamily::glauber(s)?, 14)?;
        let report = spectral_analysis(&q, &table, SpectralOptions::default())?;
        println!(
            "Glauber s = {s}: {} states, {} transitions, reversibility {:.1e}, gap {:.6}",
            q.dim(),
            q.nnz(),
            report.reversibility_residual,
            report.gap.unwrap_or(f64::NAN)
        );
    }

    let all = MobilitySpec::AllPairs { scale: 1.0 }.build(8)?;
    let q = kawasaki_generator(&j, &RateFamily::kawasaki(1.0, all)?, 14)?;
    let report = spectral_analysis(&q, &table, SpectralOptions::default())?;
    println!("Kawasaki: {} zero eigenvalues (one per sector)", report.zero_count.unwrap_or(0));
    for s in &report.sectors {
        println!("  m = {}: {} states, gap {:?}", s.particles, s.states, s.gap);
    }

    let lanczos = SpectralOptions { dense_limit: 16, ..SpectralOptions::default() };
    let q = glauber_generator(&j, &RateFamily::glauber(1.0)?, 14)?;
    let report = spectral_analysis(&q, &table, lanczos)?;
    println!("Glauber s = 1 via {}: gap {:.6}", report.method, report.gap.unwrap_or(f64::NAN));
    Ok(())
}
