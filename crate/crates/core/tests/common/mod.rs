#![allow(dead_code)]

use fermion_dynamics::{
    build_kernel, Configuration, InteractionOperator, KernelOperator, KernelOptions, KernelSpec, SiteSpace,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Determinant by Gaussian elimination with partial pivoting.
pub fn naive_det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &k| a[i][c].abs().total_cmp(&a[k][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det
}

pub fn sub(m: &nalgebra::DMatrix<f64>, idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter().map(|&i| idx.iter().map(|&j| m[(i, j)]).collect()).collect()
}

/// `det J_{γ∪x} / det J_γ`, zero when `det J_γ` vanishes.
pub fn naive_intensity(j: &InteractionOperator, gamma: &Configuration, x: usize) -> f64 {
    let base = naive_det(&sub(j.matrix(), gamma.sites()));
    if base.abs() < 1e-300 {
        return 0.0;
    }
    let mut idx = gamma.sites().to_vec();
    idx.push(x);
    naive_det(&sub(j.matrix(), &idx)) / base
}

/// `det L_γ / det(I + L)` with `L = D^{1/2} J D^{1/2}` built entrywise.
pub fn naive_probability(j: &InteractionOperator, gamma: &Configuration) -> f64 {
    let n = j.n();
    let w = j.weights();
    let l: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|b| (w[a] * w[b]).sqrt() * j.entry(a, b)).collect()).collect();
    let lg: Vec<Vec<f64>> = gamma.sites().iter().map(|&a| gamma.sites().iter().map(|&b| l[a][b]).collect()).collect();
    let ipl: Vec<Vec<f64>> =
        (0..n).map(|a| (0..n).map(|b| l[a][b] + if a == b { 1.0 } else { 0.0 }).collect()).collect();
    naive_det(&lg) / naive_det(&ipl)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random positions and weights in `[0.5, 1.5]`.
pub fn random_space<R: Rng>(n: usize, rng: &mut R) -> SiteSpace {
    let positions = (0..n).map(|i| i as f64 + rng.random_range(0.0..0.5)).collect();
    let weights = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    SiteSpace::new(positions, weights).unwrap()
}

pub fn kernel(space: &SiteSpace, spec: KernelSpec) -> KernelOperator {
    build_kernel(space, &spec, KernelOptions::default()).unwrap()
}

pub fn random_instance(n: usize, seed: u64) -> (KernelOperator, InteractionOperator) {
    let mut r = rng(seed);
    let space = random_space(n, &mut r);
    let lambda_max = r.random_range(0.5..0.95);
    let k = kernel(&space, KernelSpec::RandomContraction { seed, lambda_max });
    let j = InteractionOperator::from_kernel(&k).unwrap();
    (k, j)
}

/// One of four kernel families on `n` random sites.
pub fn family_instance(n: usize, family: usize, seed: u64) -> (KernelOperator, InteractionOperator) {
    let mut r = rng(seed);
    let space = random_space(n, &mut r);
    let spec = match family % 4 {
        0 => KernelSpec::RandomContraction { seed, lambda_max: r.random_range(0.3..0.95) },
        1 => KernelSpec::RbfContraction { lengthscale: r.random_range(0.3..1.0), scale: r.random_range(0.2..0.6) },
        2 => KernelSpec::ShrunkSine { alpha: r.random_range(0.3..0.8), density: 0.5 },
        _ => KernelSpec::Diagonal { values: (0..n).map(|_| r.random_range(0.05..0.6)).collect() },
    };
    let k = kernel(&space, spec);
    let j = InteractionOperator::from_kernel(&k).unwrap();
    (k, j)
}

pub fn random_configuration<R: Rng>(n: usize, rng: &mut R) -> Configuration {
    Configuration::from_mask(n, rng.random_range(0..1u64 << n))
}

pub fn random_table<R: Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}
