//! Synthetic data for the benchmark harness.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use fastlpr::TrainingSet;

/// The benchmark target function: `sin(2 pi x1) * prod_{j>=2} cos(2 pi x_j)`.
pub fn smooth_target(x: &[f64]) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut value = (tau * x[0]).sin();
    for &xj in &x[1..] {
        value *= (tau * xj).cos();
    }
    value
}

/// `n * d` coordinates drawn uniformly from the unit cube, row-major.
pub fn uniform_coords<R: Rng>(rng: &mut R, n: usize, d: usize) -> Vec<f64> {
    (0..n * d).map(|_| rng.random_range(0.0..1.0)).collect()
}

/// A regression training set: uniform coordinates, responses from the
/// benchmark target plus Gaussian noise.
pub fn synthetic_regression<R: Rng>(
    rng: &mut R,
    n: usize,
    d: usize,
    noise_sigma: f64,
) -> TrainingSet {
    let coords = uniform_coords(rng, n, d);
    let noise = Normal::new(0.0, noise_sigma).expect("valid sigma");
    let responses: Vec<f64> = (0..n)
        .map(|i| smooth_target(&coords[i * d..(i + 1) * d]) + noise.sample(rng))
        .collect();
    TrainingSet::new(d, coords, Some(responses)).expect("generated data is valid")
}
