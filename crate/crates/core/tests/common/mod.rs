#![allow(dead_code)]

use cone_fixpoint::contraction::spectral_norm;
use cone_fixpoint::{ContractionMap, ContractionSpec, Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn v(c: &[f64]) -> Vector {
    Vector::from_slice(c).unwrap()
}

/// A random affine contraction on R^m whose matrix is rescaled to spectral
/// norm `lambda`, plus a random starting point.
pub fn random_affine(rng: &mut ChaCha8Rng, m: usize, lambda: f64) -> (ContractionSpec, Vector) {
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..m).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let raw = Matrix::from_rows(rows).unwrap();
    let norm = spectral_norm(&raw, 1e-13).unwrap();
    let a = raw.scaled(lambda / norm).unwrap();
    let b = Vector::new((0..m).map(|_| 5.0 * rng.sample::<f64, _>(StandardNormal)).collect()).unwrap();
    let x0 = Vector::new((0..m).map(|_| 5.0 * rng.sample::<f64, _>(StandardNormal)).collect()).unwrap();
    let spec = ContractionSpec::new(lambda, ContractionMap::Affine { a, b }).unwrap();
    (spec, x0)
}

/// `count` seeded random affine instances, `m ∈ {1..8}`, `λ ∈ [0.1, 0.95]`.
pub fn random_affine_family(seed: u64, count: usize) -> Vec<(ContractionSpec, Vector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let m = rng.random_range(1..=8);
            let lambda = rng.random_range(0.1..=0.95);
            random_affine(&mut rng, m, lambda)
        })
        .collect()
}

/// Root of `x − mean_anomaly − e sin x` by plain bisection on
/// `[M − |e|, M + |e|]`, run until the bracket stops shrinking.
pub fn kepler_bisection(e: f64, mean_anomaly: f64) -> f64 {
    let g = |x: f64| x - mean_anomaly - e * x.sin();
    let (mut lo, mut hi) = (mean_anomaly - e.abs(), mean_anomaly + e.abs());
    assert!(g(lo) <= 0.0 && g(hi) >= 0.0);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Fixed point of `x = 0.5 R(90°) x + (1, 0)`: `(I − 0.5R) x = b` with
/// `I − 0.5R = [[1, 0.5], [−0.5, 1]]`, solved by Cramer's rule.
pub fn rotation_oracle() -> [f64; 2] {
    let det = 1.0 * 1.0 - 0.5 * (-0.5);
    [(1.0 * 1.0 - 0.5 * 0.0) / det, (1.0 * 0.0 - (-0.5) * 1.0) / det]
}
