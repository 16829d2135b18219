mod common;

use common::*;
use fermion_dynamics::generator::{kawasaki_generator, SpectralOptions};
use fermion_dynamics::kernel::WeightRule;
use fermion_dynamics::linalg::SortedEigen;
use fermion_dynamics::rates::MobilitySpec;
use fermion_dynamics::*;
use nalgebra::DMatrix;
use rand::Rng;

fn counting_kernel(entries: &[&[f64]]) -> KernelOperator {
    let n = entries.len();
    let space = SiteSpace::counting(n).unwrap();
    let entries = entries.iter().map(|r| r.to_vec()).collect();
    build_kernel(&space, &KernelSpec::Matrix { entries }, KernelOptions::default()).unwrap()
}

fn interaction(entries: &[&[f64]]) -> InteractionOperator {
    let n = entries.len();
    let m = DMatrix::from_fn(n, n, |i, j| entries[i][j]);
    InteractionOperator::from_matrix(&SiteSpace::counting(n).unwrap(), m).unwrap()
}

#[test]
fn grid_spaces() {
    let s = SiteSpace::grid(0.0, 1.0, 1, WeightRule::Uniform).unwrap();
    assert_eq!(s.positions(), &[0.5]);
    assert_eq!(s.weights(), &[1.0]);
    let s = SiteSpace::grid(0.0, 2.0, 4, WeightRule::Midpoint).unwrap();
    assert!(s.weights().iter().all(|&w| w == 0.5));
    assert!(SiteSpace::grid(0.0, 1.0, 0, WeightRule::Uniform).is_err());
    assert!(SiteSpace::grid(1.0, 1.0, 3, WeightRule::Uniform).is_err());
}

#[test]
fn two_site_interaction_by_hand() {
    let k = counting_kernel(&[&[0.5, 0.25], &[0.25, 0.5]]);
    let d = k.diagnostics();
    assert!((d.lambda_min - 0.25).abs() < 1e-15 && (d.lambda_max - 0.75).abs() < 1e-15);
    let j = InteractionOperator::from_kernel(&k).unwrap();
    let expected = DMatrix::from_row_slice(2, 2, &[5.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0, 5.0 / 3.0]);
    assert!((j.matrix() - expected).amax() < 1e-14);
}

#[test]
fn eigenvalue_map_and_inverse_on_random_kernels() {
    for seed in 0..20 {
        let n = 2 + seed as usize % 9;
        let (k, j) = family_instance(n, seed as usize, seed);
        let fresh = SortedEigen::new(j.ensemble()).values;
        for (&l, &m) in k.eigen().values.iter().zip(&fresh) {
            let expected = l.max(0.0) / (1.0 - l);
            assert!((m - expected).abs() <= 1e-10 * expected.max(1.0), "{m} vs {expected}");
        }
        assert!((j.kernel_matrix() - k.matrix()).amax() < 1e-10);
        assert!(validate_kernel(k.space(), k.matrix(), k.epsilon()).ok());
    }
}

#[test]
fn probabilities_match_naive_determinants() {
    for seed in 0..10 {
        let n = 1 + seed as usize % 8;
        let (_, j) = random_instance(n, 100 + seed);
        let table = exact_distribution(&j, 14).unwrap();
        assert!((table.total() - 1.0).abs() < 1e-12);
        for (gamma, p) in table.iter() {
            let naive = naive_probability(&j, &gamma);
            assert!((p - naive).abs() < 1e-12, "{gamma}: {p} vs {naive}");
        }
    }
}

#[test]
fn marginals_equal_weighted_kernel_diagonal() {
    for seed in 0..8 {
        let (k, j) = family_instance(9, seed as usize, 200 + seed);
        let table = exact_distribution(&j, 14).unwrap();
        let w = k.space().weights();
        for i in 0..9 {
            assert!((table.marginal(i) - k.entry(i, i) * w[i]).abs() < 1e-10);
        }
    }
}

#[test]
fn density_ratio_holds_everywhere() {
    let (_, j) = random_instance(7, 300);
    let table = exact_distribution(&j, 14).unwrap();
    for (gamma, p) in table.iter() {
        for x in gamma.vacant() {
            let up = table.prob(gamma.with(x).unwrap().mask());
            let r = intensity(&j, &gamma, x).unwrap();
            assert!((up - p * r * j.weights()[x]).abs() < 1e-10);
        }
    }
}

#[test]
fn mecke_single_site() {
    let k = counting_kernel(&[&[0.5]]);
    let j = InteractionOperator::from_kernel(&k).unwrap();
    let t = exact_distribution(&j, 14).unwrap();
    let r = mecke_check(&j, &t, |_, _| 1.0);
    assert!((r.lhs - 0.5).abs() < 1e-15 && (r.rhs - 0.5).abs() < 1e-15);
    assert_eq!(mecke_check(&j, &t, |_, _| 0.0).residual, 0.0);
}

#[test]
fn intensity_examples() {
    let j = interaction(&[&[2.0, 1.0], &[1.0, 2.0]]);
    let g = Configuration::from_sites(2, [1]).unwrap();
    assert!((intensity(&j, &g, 0).unwrap() - 1.5).abs() < 1e-15);
    assert!((bound_check(&j, &g) + 0.5).abs() < 1e-15);
    assert!(intensity(&j, &g, 1).is_err());
    let empty = Configuration::empty(2);
    assert_eq!(intensity(&j, &empty, 0).unwrap(), 2.0);

    let d = interaction(&[&[0.7, 0.0, 0.0], &[0.0, 1.3, 0.0], &[0.0, 0.0, 0.2]]);
    for mask in 0..8u64 {
        let g = Configuration::from_mask(3, mask);
        for x in g.vacant() {
            assert!((intensity(&d, &g, x).unwrap() - d.entry(x, x)).abs() < 1e-15);
        }
        assert!(bound_check(&d, &g) <= 1e-15);
    }
}

#[test]
fn profiles_match_naive_ratios() {
    let mut r = rng(400);
    for seed in 0..30 {
        let (_, j) = random_instance(8, 400 + seed);
        let gamma = random_configuration(8, &mut r);
        let p = intensity_profile(&j, &gamma);
        for x in 0..8 {
            let naive = if gamma.contains(x) {
                naive_intensity(&j, &gamma.without(x).unwrap(), x)
            } else {
                naive_intensity(&j, &gamma, x)
            };
            assert!((p.get(x) - naive).abs() < 1e-10, "site {x}: {} vs {naive}", p.get(x));
        }
    }
}

#[test]
fn intensities_shrink_as_configuration_grows() {
    let mut r = rng(500);
    for seed in 0..50 {
        let n = 3 + seed as usize % 8;
        let (_, j) = family_instance(n, seed as usize, 500 + seed);
        let big = random_configuration(n, &mut r);
        let small = Configuration::from_sites(n, big.sites().iter().copied().filter(|_| r.random_bool(0.5))).unwrap();
        for x in big.vacant() {
            let (a, b) = (intensity(&j, &big, x).unwrap(), intensity(&j, &small, x).unwrap());
            assert!(a <= b + 1e-9, "r(x, γ) = {a} > r(x, γ') = {b}");
            assert!(b <= j.entry(x, x) + 1e-9);
        }
    }
}

#[test]
fn rate_family_examples() {
    let g = RateFamily::glauber(0.5).unwrap();
    assert_eq!(g.death(4.0).unwrap(), 0.5);
    assert_eq!(g.birth(4.0).unwrap(), 2.0);
    assert!(RateFamily::glauber(1.5).is_err());
    let k = RateFamily::kawasaki(0.5, DMatrix::from_element(2, 2, 1.0)).unwrap();
    assert!((k.hop(0, 1, 2.0, 8.0).unwrap() - 2.0).abs() < 1e-15);
    assert_eq!(k.hop(0, 1, 0.0, 8.0).unwrap(), 0.0);
}

#[test]
fn balance_residual_examples() {
    for seed in 0..5 {
        let (_, j) = random_instance(8, 600 + seed);
        let fam = RateFamily::kawasaki(0.5, MobilitySpec::AllPairs { scale: 1.0 }.build(8).unwrap()).unwrap();
        for mask in (0..256u64).step_by(7) {
            assert!(balance_residual(&j, &Configuration::from_mask(8, mask), &fam).unwrap() <= 1e-10);
        }
    }
    let (_, j) = random_instance(4, 610);
    let mut a = DMatrix::from_element(4, 4, 1.0);
    a[(0, 1)] = 3.0;
    let fam = RateFamily::kawasaki(0.5, a).unwrap();
    assert!(balance_residual(&j, &Configuration::empty(4), &fam).unwrap() > 1e-3);

    let zero = InteractionOperator::from_matrix(&SiteSpace::counting(3).unwrap(), DMatrix::zeros(3, 3)).unwrap();
    let fam = RateFamily::kawasaki(0.3, DMatrix::from_element(3, 3, 1.0)).unwrap();
    assert_eq!(balance_residual(&zero, &Configuration::empty(3), &fam).unwrap(), 0.0);
}

#[test]
fn condition_report_examples() {
    let space = SiteSpace::counting(5).unwrap();
    let k = kernel(&space, KernelSpec::Diagonal { values: vec![0.1, 0.2, 0.3, 0.4, 0.5] });
    let j = InteractionOperator::from_kernel(&k).unwrap();
    let t = exact_distribution(&j, 14).unwrap();

    let kaw = RateFamily::kawasaki(0.5, DMatrix::from_element(5, 5, 1.0)).unwrap();
    let rep = condition_diagnostics(&j, &kaw, Some(&t)).unwrap();
    assert_eq!(rep.sup_mobility_row, Some(4.0));

    let gl = RateFamily::glauber(0.5).unwrap();
    let rep = condition_diagnostics(&j, &gl, Some(&t)).unwrap();
    // diagonal J: r(x, γ∖x) = J(x, x), so Σ d = Σ_{x∈γ} J_xx^{−1/2}
    let brute: f64 = t
        .iter()
        .map(|(g, p)| p * g.sites().iter().map(|&x| j.entry(x, x).powf(-0.5)).sum::<f64>().powi(2))
        .sum();
    assert!((rep.death_l2.unwrap() - brute.sqrt()).abs() < 1e-12);

    let (_, j) = random_instance(6, 620);
    let t = exact_distribution(&j, 14).unwrap();
    let rep = condition_diagnostics(&j, &RateFamily::glauber(1.0).unwrap(), Some(&t)).unwrap();
    let brute: f64 = t
        .iter()
        .map(|(g, p)| {
            let s: f64 = g.vacant().map(|x| j.weights()[x] * naive_intensity(&j, &g, x)).sum();
            p * s * s
        })
        .sum();
    assert!((rep.birth_l2.unwrap() - brute.sqrt()).abs() < 1e-10);
    assert!(rep.birth_l2.unwrap().is_finite());
}

#[test]
fn glauber_generator_of_independent_sites_is_a_kronecker_sum() {
    let (k0, k1) = (0.3, 0.6);
    let space = SiteSpace::counting(2).unwrap();
    let k = kernel(&space, KernelSpec::Diagonal { values: vec![k0, k1] });
    let j = InteractionOperator::from_kernel(&k).unwrap();
    for s in [0.0, 0.5, 1.0] {
        let fam = RateFamily::glauber(s).unwrap();
        let q = glauber_generator(&j, &fam, 14).unwrap().to_dense();
        let single = |kk: f64| {
            let r: f64 = kk / (1.0 - kk);
            let (b, d) = (r.powf(s), r.powf(s - 1.0));
            DMatrix::from_row_slice(2, 2, &[-b, b, d, -d])
        };
        // bit 0 is site 0, the fast index of the mask
        let expected = single(k1).kronecker(&DMatrix::identity(2, 2)) + DMatrix::identity(2, 2).kronecker(&single(k0));
        assert!((q - expected).amax() < 1e-13);
    }
}

#[test]
fn kawasaki_hand_example_and_conservation() {
    let k = 0.4;
    let space = SiteSpace::counting(2).unwrap();
    let j = InteractionOperator::from_kernel(&kernel(&space, KernelSpec::Diagonal { values: vec![k] })).unwrap();
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let q = kawasaki_generator(&j, &RateFamily::kawasaki(1.0, a).unwrap(), 14).unwrap();
    assert!((q.rate(0b01, 0b10) - 2.0 * k / (1.0 - k)).abs() < 1e-14);
    let t = exact_distribution(&j, 14).unwrap();
    assert!(reversibility_check(&q, &t).unwrap() < 1e-15);

    let (_, j) = random_instance(7, 700);
    let q = kawasaki_generator(&j, &RateFamily::kawasaki(0.5, DMatrix::from_element(7, 7, 1.0)).unwrap(), 14).unwrap();
    for (from, to, _) in q.triplets() {
        assert_eq!(from.count_ones(), to.count_ones());
        if from != to {
            assert_eq!((from ^ to).count_ones(), 2);
        }
    }
}

#[test]
fn reversibility_detects_asymmetric_mobility() {
    let (_, j) = random_instance(5, 710);
    let t = exact_distribution(&j, 14).unwrap();
    let mut a = DMatrix::from_element(5, 5, 1.0);
    a[(2, 3)] = 2.5;
    let q = kawasaki_generator(&j, &RateFamily::kawasaki(1.0, a).unwrap(), 14).unwrap();
    let residual = reversibility_check(&q, &t).unwrap();
    assert!(residual > 1e-6);
    assert!(matches!(spectral_analysis(&q, &t, SpectralOptions::default()), Err(Error::NotReversible { .. })));
}

#[test]
fn generators_are_reversible_and_dual_to_their_forms() {
    let mut r = rng(800);
    for (seed, s) in [(0u64, 0.0), (1, 0.5), (2, 1.0)] {
        let (_, j) = random_instance(6, 800 + seed);
        let t = exact_distribution(&j, 14).unwrap();
        let families = [
            RateFamily::glauber(s).unwrap(),
            RateFamily::kawasaki(s, MobilitySpec::NearestNeighbour { scale: 1.0, periodic: true }.build(6).unwrap())
                .unwrap(),
        ];
        for fam in families {
            let q = build_generator(&j, &fam, 14).unwrap();
            assert!(q.row_sum_residual() <= 1e-12);
            assert!(reversibility_check(&q, &t).unwrap() <= 1e-10);
            let form = DirichletForm::new(&j, &t, &fam).unwrap();
            for _ in 0..20 {
                let f = random_table(64, &mut r);
                let g = random_table(64, &mut r);
                let lhs = form.eval(&f, &g).unwrap();
                let rhs = generator_form(&q, &t, &f, &g).unwrap();
                assert!((lhs - rhs).abs() <= 1e-10, "{lhs} vs {rhs}");
                assert!(form.eval(&f, &f).unwrap() >= 0.0);
            }
            assert_eq!(form.eval(&[3.0; 64], &[3.0; 64]).unwrap(), 0.0);
        }
    }
}

#[test]
fn spectra() {
    let (_, j) = random_instance(6, 900);
    let t = exact_distribution(&j, 14).unwrap();
    let q = glauber_generator(&j, &RateFamily::glauber(1.0).unwrap(), 14).unwrap();
    let rep = spectral_analysis(&q, &t, SpectralOptions::default()).unwrap();
    let e = rep.eigenvalues.unwrap();
    assert!(e.iter().all(|&l| l >= -1e-10));
    assert_eq!(rep.zero_count, Some(1));
    assert!(e.windows(2).all(|w| w[0] <= w[1]));

    let q = kawasaki_generator(&j, &RateFamily::kawasaki(0.5, DMatrix::from_element(6, 6, 1.0)).unwrap(), 14).unwrap();
    let rep = spectral_analysis(&q, &t, SpectralOptions::default()).unwrap();
    assert_eq!(rep.zero_count, Some(7));
    assert_eq!(rep.sectors.len(), 7);
    assert!(rep.sectors.iter().all(|s| s.zero_count == Some(1)));
    assert!(rep.eigenvalues.unwrap().iter().all(|&l| l >= -1e-10));

    let ring = MobilitySpec::NearestNeighbour { scale: 1.0, periodic: false }.build(6).unwrap();
    let q = kawasaki_generator(&j, &RateFamily::kawasaki(1.0, ring).unwrap(), 14).unwrap();
    let rep = spectral_analysis(&q, &t, SpectralOptions::default()).unwrap();
    assert_eq!(rep.zero_count, Some(7));
}
