//! The Dirichlet forms of both dynamics against `⟨F, −QG⟩_μ`.
//!
//! cargo run --example dirichlet_form

use fermion_dynamics::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let space = SiteSpace::counting(6)?;
    let k = build_kernel(&space, &KernelSpec::RandomContraction { seed: 2, lambda_max: 0.75 }, KernelOptions::default())?;
    let j = InteractionOperator::from_kernel(&k)?;
    let table = exact_distribution(&j, 14)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut random = || (0..64).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();

    let ring = MobilitySpec::NearestNeighbour { scale: 1.0, periodic: true }.build(6)?;
    for family in [RateFamily::glauber(0.5)?, RateFamily::kawasaki(0.5, ring)?] {
        let q = build_generator(&j, &family, 14)?;
        let form = DirichletForm::new(&j, &table, &family)?;
        for _ in 0..3 {
            let (f, g) = (random(), random());
            let lhs = generator_form(&q, &table, &f, &g)?;
            let rhs = form.eval(&f, &g)?;
            println!("{:?}: ⟨F,−QG⟩ = {lhs:+.12}  E(F,G) = {rhs:+.12}  E(F,F) = {:.6}", family.kind(), form.eval(&f, &f)?);
        }
    }
    Ok(())
}
