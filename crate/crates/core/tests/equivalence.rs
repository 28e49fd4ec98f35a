//! Fast-path vs naive-scan equivalence on randomized instances, including
//! duplicate coordinates and the density pipeline.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use fastlpr::{
    empirical_cdf, naive_cdf, naive_fit, BasisSpec, FittedModel, Mode, Query, TrainingSet,
};

fn random_instance(
    rng: &mut ChaCha8Rng,
    with_responses: bool,
    lattice: bool,
) -> (usize, usize, TrainingSet) {
    let d = rng.random_range(1..=3);
    let k = rng.random_range(0..=2);
    let n = rng.random_range(1..=300);
    let coords: Vec<f64> = (0..n * d)
        .map(|_| {
            let v: f64 = rng.random_range(0.0..1.0);
            if lattice {
                (v * 7.0).floor() / 7.0
            } else {
                v
            }
        })
        .collect();
    let responses = with_responses
        .then(|| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
    (d, k, TrainingSet::new(d, coords, responses).unwrap())
}

fn assert_close(fast: f64, naive: f64, context: &str) {
    let scale = fast.abs().max(naive.abs()).max(1.0);
    assert!(
        (fast - naive).abs() <= 1e-8 * scale,
        "{context}: fast {fast} vs naive {naive}"
    );
}

#[test]
fn regression_matches_naive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE0_01);
    for case in 0..60 {
        let lattice = case % 4 == 0; // every fourth instance has tied coordinates
        let (d, k, ts) = random_instance(&mut rng, true, lattice);
        let spec = BasisSpec::new(d, k).unwrap();
        let model = FittedModel::build(&ts, spec.clone(), Mode::Regression).unwrap();
        let responses = ts.responses().unwrap().to_vec();
        for _ in 0..12 {
            let z: Vec<f64> = (0..d).map(|_| rng.random_range(-0.1..1.1)).collect();
            let h = rng.random_range(0.05..1.5);
            let q = Query::new(z, h).unwrap();
            let fast = model.fit_at(&q).unwrap();
            let naive = naive_fit(&ts, &spec, &q, &responses).unwrap();
            assert_eq!(fast.window_count, naive.window_count, "case {case}");
            assert_eq!(fast.degenerate, naive.degenerate, "case {case}");
            if !fast.degenerate {
                assert_close(fast.value(), naive.value(), &format!("case {case}"));
            }
        }
    }
}

#[test]
fn density_matches_a_naive_pipeline() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE0_02);
    for case in 0..25 {
        let d = rng.random_range(1..=2);
        let k = rng.random_range(d..=2.max(d));
        let n = rng.random_range(4..=250);
        let coords: Vec<f64> = (0..n * d).map(|_| rng.random_range(0.0..1.0)).collect();
        let ts = TrainingSet::new(d, coords, None).unwrap();
        let spec = BasisSpec::new(d, k).unwrap();
        let model = FittedModel::build(&ts, spec.clone(), Mode::Density).unwrap();

        // Same CDF values, same solve, naive window scan.
        let cdf = naive_cdf(&ts);
        assert_eq!(model.cdf_values().unwrap(), &cdf[..]);
        let mixed = spec.basis_position(&vec![1; d]).unwrap();

        for _ in 0..10 {
            let z: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
            let h = rng.random_range(0.1..1.0);
            let q = Query::new(z, h).unwrap();
            let fast = model.estimate_density(std::slice::from_ref(&q)).unwrap()[0];
            let naive = naive_fit(&ts, &spec, &q, &cdf).unwrap();
            if naive.degenerate {
                assert!(fast.is_nan(), "case {case}");
            } else {
                assert_close(fast, naive.coefficients[mixed], &format!("case {case}"));
            }
        }
    }
}

#[test]
fn empirical_cdf_matches_naive_on_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE0_03);
    for _ in 0..40 {
        let (_, _, ts) = random_instance(&mut rng, false, true);
        assert_eq!(empirical_cdf(&ts), naive_cdf(&ts));
    }
}
