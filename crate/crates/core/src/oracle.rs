//! Naive quadratic-time reference implementations, used as ground truth in
//! tests and as the baseline engine in benchmarks. Deliberately simple: scan
//! every point, accumulate the normal equations directly, solve with the
//! same policy as the fast path.

use crate::error::Error;
use crate::model::{BasisSpec, LocalFit, Query, TrainingSet};
use crate::solve::solve_local_system;

/// Fits the local polynomial at `q` by scanning all points. Window
/// membership uses the same boundary convention as the rank-space path:
/// both box edges inclusive.
pub fn naive_fit(
    ts: &TrainingSet,
    spec: &BasisSpec,
    q: &Query,
    responses: &[f64],
) -> Result<LocalFit, Error> {
    if ts.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: ts.dim() });
    }
    if q.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: q.dim() });
    }
    if responses.len() != ts.len() {
        return Err(Error::ResponseCount { expected: ts.len(), got: responses.len() });
    }

    let d = spec.basis_len();
    let half = q.h() / 2.0;
    let z = q.z();

    let mut g = vec![0.0; d * d];
    let mut r = vec![0.0; d];
    let mut terms = vec![0.0; d];
    let mut window_count = 0usize;

    for (i, &y) in responses.iter().enumerate() {
        let x = ts.point(i);
        let inside = x
            .iter()
            .zip(z)
            .all(|(&xj, &zj)| xj >= zj - half && xj <= zj + half);
        if !inside {
            continue;
        }
        window_count += 1;
        for (slot, index) in terms.iter_mut().zip(spec.basis()) {
            *slot = index
                .exponents()
                .iter()
                .enumerate()
                .fold(1.0, |acc, (j, &e)| acc * (x[j] - z[j]).powi(e as i32));
        }
        for a in 0..d {
            r[a] += y * terms[a];
            for b in 0..d {
                g[a * d + b] += terms[a] * terms[b];
            }
        }
    }

    if window_count == 0 {
        return Ok(LocalFit {
            coefficients: vec![f64::NAN; d],
            window_count: 0,
            degenerate: true,
        });
    }

    let outcome = solve_local_system(&g, &r, d);
    Ok(LocalFit {
        degenerate: outcome.rank_deficient || window_count < d,
        coefficients: outcome.coefficients,
        window_count,
    })
}

/// The literal double-loop empirical CDF: for each point, the fraction of
/// points dominated by it component-wise (itself included).
pub fn naive_cdf(ts: &TrainingSet) -> Vec<f64> {
    let n = ts.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let xi = ts.point(i);
        let count = (0..n)
            .filter(|&j| ts.point(j).iter().zip(xi).all(|(&a, &b)| a <= b))
            .count();
        out.push(count as f64 / n as f64);
    }
    out
}
