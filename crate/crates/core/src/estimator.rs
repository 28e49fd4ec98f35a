//! End-to-end local polynomial fits: regression estimates, density estimates
//! via empirical-CDF regression, and incremental point insertion.

use crate::discretize::DiscretizationIndex;
use crate::error::Error;
use crate::fenwick::FenwickGrid;
use crate::model::{BasisSpec, LocalFit, MomentVector, Query, TrainingSet};
use crate::moments::{assemble_system, raw_statistics, shift_moments_parts};
use crate::solve::solve_local_system;

/// What the model estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Fit responses; estimates are the local fit value.
    Regression,
    /// Fit the empirical CDF; estimates read the mixed-partial coefficient.
    Density,
}

/// Scale applied to the mixed-coefficient readout in density mode.
///
/// The Taylor coefficient of `prod_j (x_j - z_j)` is exactly the mixed
/// partial of the CDF (every variable appears to the first power), so the
/// default factor is 1. The `Factorial` variant multiplies by d! instead.
/// The two coincide at d = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DensityFactor {
    #[default]
    Taylor,
    Factorial,
}

impl DensityFactor {
    fn scale(self, d: usize) -> f64 {
        match self {
            DensityFactor::Taylor => 1.0,
            DensityFactor::Factorial => (1..=d as u64).product::<u64>() as f64,
        }
    }
}

/// Build-time configuration.
#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Pre-translate all coordinates by the data mean at ingest (and shift
    /// queries to match). Guards the precision of high-degree raw moments
    /// when the data sit far from the origin.
    pub recenter: bool,
    /// Anticipated coordinate values per dimension, merged into the rank
    /// space so that points at those coordinates can be inserted later.
    /// Empty, or one list per dimension.
    pub reserve: Vec<Vec<f64>>,
    /// Density readout scale; ignored in regression mode.
    pub density_factor: DensityFactor,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { recenter: true, reserve: Vec::new(), density_factor: DensityFactor::default() }
    }
}

/// A trained model: discretization, the statistic tree, and the ingest
/// transform. Immutable during queries; `add_training_point` requires
/// exclusive access.
#[derive(Debug, Clone)]
pub struct FittedModel {
    spec: BasisSpec,
    idx: DiscretizationIndex,
    grid: FenwickGrid,
    mode: Mode,
    global_shift: Vec<f64>,
    /// Empirical CDF values of the training points (density mode only).
    cdf_values: Option<Vec<f64>>,
    density_factor: DensityFactor,
    /// Basis position of the all-ones multi-index (density mode only).
    mixed_position: Option<usize>,
    point_count: usize,
}

impl FittedModel {
    /// Builds with default options.
    pub fn build(ts: &TrainingSet, spec: BasisSpec, mode: Mode) -> Result<Self, Error> {
        Self::build_with(ts, spec, mode, BuildOptions::default())
    }

    /// Discretizes the data, computes every point's statistics and walks its
    /// update paths. Density mode first computes the empirical CDF and uses
    /// it as the regression response.
    pub fn build_with(
        ts: &TrainingSet,
        spec: BasisSpec,
        mode: Mode,
        options: BuildOptions,
    ) -> Result<Self, Error> {
        if ts.dim() != spec.dim() {
            return Err(Error::DimensionMismatch { expected: spec.dim(), got: ts.dim() });
        }
        let d = spec.dim();
        let n = ts.len();

        let cdf_values = match mode {
            Mode::Regression => {
                if ts.responses().is_none() {
                    return Err(Error::MissingResponses);
                }
                None
            }
            Mode::Density => {
                if spec.degree() < d {
                    return Err(Error::DegreeTooLow { k: spec.degree(), d });
                }
                Some(empirical_cdf(ts))
            }
        };
        let mixed_position = match mode {
            Mode::Regression => None,
            Mode::Density => Some(
                spec.basis_position(&vec![1; d])
                    .expect("all-ones index present when k >= d"),
            ),
        };

        let global_shift = if options.recenter {
            let mut mean = vec![0.0; d];
            for i in 0..n {
                for (m, &x) in mean.iter_mut().zip(ts.point(i)) {
                    *m += x;
                }
            }
            mean.iter_mut().for_each(|m| *m /= n as f64);
            mean
        } else {
            vec![0.0; d]
        };

        let mut shifted_coords = Vec::with_capacity(n * d);
        for i in 0..n {
            for (j, &x) in ts.point(i).iter().enumerate() {
                shifted_coords.push(x - global_shift[j]);
            }
        }
        let shifted = TrainingSet::new(d, shifted_coords, None)?;

        let shifted_reserve: Vec<Vec<f64>> = options
            .reserve
            .iter()
            .enumerate()
            .map(|(j, list)| list.iter().map(|v| v - global_shift[j]).collect())
            .collect();
        let idx = DiscretizationIndex::with_reserve(&shifted, &shifted_reserve)?;

        let mut grid = FenwickGrid::new(&idx.sizes(), spec.stat_len())?;
        let responses = match mode {
            Mode::Regression => ts.responses().unwrap(),
            Mode::Density => cdf_values.as_deref().unwrap(),
        };
        for (i, &y) in responses.iter().enumerate() {
            let t = raw_statistics(&spec, shifted.point(i), Some(y))?;
            grid.point_update(idx.rank_tuple(i), &t)?;
        }

        Ok(Self {
            spec,
            idx,
            grid,
            mode,
            global_shift,
            cdf_values,
            density_factor: options.density_factor,
            mixed_position,
            point_count: n,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Number of training points the model currently holds.
    pub fn point_count(&self) -> usize {
        self.point_count
    }

    /// Number of materialized tree nodes.
    pub fn entry_count(&self) -> usize {
        self.grid.entry_count()
    }

    /// Empirical CDF values computed at build time (density mode).
    pub fn cdf_values(&self) -> Option<&[f64]> {
        self.cdf_values.as_deref()
    }

    /// Solves the local fit at one query: window bounds, box query,
    /// re-centering, system assembly, linear solve. An empty window yields a
    /// degenerate fit with NaN coefficients rather than an error, so batch
    /// pipelines keep running.
    pub fn fit_at(&self, q: &Query) -> Result<LocalFit, Error> {
        if q.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: q.dim() });
        }
        let shifted_z: Vec<f64> = q
            .z()
            .iter()
            .zip(&self.global_shift)
            .map(|(&z, &s)| z - s)
            .collect();
        let shifted_q = Query::new(shifted_z, q.h())?;
        let bounds = self.idx.window_bounds(&shifted_q)?;
        let (box_sums, box_residues) = self.grid.box_query_parts(&bounds);

        // Counts are sums and signed differences of integers, exact in f64.
        let window_count = box_sums[0].round() as usize;
        let d = self.spec.basis_len();
        if window_count == 0 {
            return Ok(LocalFit {
                coefficients: vec![f64::NAN; d],
                window_count: 0,
                degenerate: true,
            });
        }

        let centered =
            shift_moments_parts(&self.spec, &box_sums, &box_residues, shifted_q.z())?;
        let (g, r) = assemble_system(&self.spec, &centered);
        let outcome = solve_local_system(&g, &r, d);
        Ok(LocalFit {
            degenerate: outcome.rank_deficient || window_count < d,
            coefficients: outcome.coefficients,
            window_count,
        })
    }

    /// The mode-appropriate readout of a solved fit: the fitted value in
    /// regression mode, the scaled mixed coefficient in density mode, NaN
    /// when the fit is degenerate.
    pub fn estimate_from_fit(&self, fit: &LocalFit) -> f64 {
        if fit.degenerate {
            return f64::NAN;
        }
        match self.mode {
            Mode::Regression => fit.value(),
            Mode::Density => {
                let position = self.mixed_position.expect("set in density builds");
                self.density_factor.scale(self.dim()) * fit.coefficients[position]
            }
        }
    }

    /// Regression estimates, one per query; degenerate windows yield NaN.
    pub fn estimate_regression(&self, queries: &[Query]) -> Result<Vec<f64>, Error> {
        if self.mode != Mode::Regression {
            return Err(Error::ModeMismatch { expected: "regression" });
        }
        queries
            .iter()
            .map(|q| Ok(self.estimate_from_fit(&self.fit_at(q)?)))
            .collect()
    }

    /// Density estimates, one per query; degenerate windows yield NaN.
    pub fn estimate_density(&self, queries: &[Query]) -> Result<Vec<f64>, Error> {
        if self.mode != Mode::Density {
            return Err(Error::ModeMismatch { expected: "density" });
        }
        queries
            .iter()
            .map(|q| Ok(self.estimate_from_fit(&self.fit_at(q)?)))
            .collect()
    }

    /// Inserts one training point into the fixed rank space. The coordinates
    /// must coincide with existing sorted values (original data or reserved
    /// capacity) in every dimension. Density models reject insertion: every
    /// stored CDF value would change.
    pub fn add_training_point(&mut self, x: &[f64], y: f64) -> Result<(), Error> {
        if self.mode != Mode::Regression {
            return Err(Error::DensityInsertUnsupported);
        }
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "coordinate" });
        }
        if !y.is_finite() {
            return Err(Error::NonFinite { what: "response" });
        }

        let shifted: Vec<f64> = x
            .iter()
            .zip(&self.global_shift)
            .map(|(&v, &s)| v - s)
            .collect();
        let mut chi = Vec::with_capacity(x.len());
        for (j, &v) in shifted.iter().enumerate() {
            let rank = self
                .idx
                .rank_for_value(j, v)
                .ok_or(Error::UnreservedCoordinate { dim: j, value: x[j] })?;
            chi.push(rank);
        }
        let t = raw_statistics(&self.spec, &shifted, Some(y))?;
        self.grid.point_update(&chi, &t)?;
        self.point_count += 1;
        Ok(())
    }
}

/// The empirical CDF of every training point: the fraction of points it
/// dominates component-wise, itself included. Computed by dominance counting
/// over a count-only tree in `O(n log^d n)` rather than the quadratic double
/// loop; ties are handled exactly because the per-dimension bound is the
/// last rank carrying the point's value.
pub fn empirical_cdf(ts: &TrainingSet) -> Vec<f64> {
    let n = ts.len();
    let d = ts.dim();
    let idx = DiscretizationIndex::new(ts);
    let mut grid = FenwickGrid::new(&idx.sizes(), 1).expect("rank space fits");
    let one = MomentVector::from_values(vec![1.0]);
    for i in 0..n {
        grid.point_update(idx.rank_tuple(i), &one).expect("ranks from compression are valid");
    }

    let mut out = Vec::with_capacity(n);
    let mut bound = vec![0u32; d];
    for i in 0..n {
        for (j, slot) in bound.iter_mut().enumerate() {
            *slot = idx
                .rank_for_value(j, ts.point(i)[j])
                .expect("own coordinate is present");
        }
        let count = grid.prefix_query(&bound).values()[0];
        out.push(count / n as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{naive_cdf, naive_fit};

    fn query(z: Vec<f64>, h: f64) -> Query {
        Query::new(z, h).unwrap()
    }

    fn lcg(state: &mut u64) -> f64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*state >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn single_point_constant_fit() {
        let ts = TrainingSet::new(1, vec![0.5], Some(vec![3.25])).unwrap();
        let spec = BasisSpec::new(1, 0).unwrap();
        let model = FittedModel::build(&ts, spec, Mode::Regression).unwrap();
        let est = model.estimate_regression(&[query(vec![0.5], 0.2)]).unwrap();
        assert_eq!(est, vec![3.25]);
    }

    #[test]
    fn build_is_deterministic() {
        let mut state = 5u64;
        let coords: Vec<f64> = (0..60).map(|_| lcg(&mut state)).collect();
        let ys: Vec<f64> = (0..30).map(|_| lcg(&mut state)).collect();
        let ts = TrainingSet::new(2, coords, Some(ys)).unwrap();
        let queries: Vec<Query> = (0..10)
            .map(|_| query(vec![lcg(&mut state), lcg(&mut state)], 0.3))
            .collect();

        let a = FittedModel::build(&ts, BasisSpec::new(2, 1).unwrap(), Mode::Regression).unwrap();
        let b = FittedModel::build(&ts, BasisSpec::new(2, 1).unwrap(), Mode::Regression).unwrap();
        let ea = a.estimate_regression(&queries).unwrap();
        let eb = b.estimate_regression(&queries).unwrap();
        for (x, y) in ea.iter().zip(&eb) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn degree_zero_fit_is_the_window_mean() {
        let ts = TrainingSet::new(1, vec![0.1, 0.2, 0.9], Some(vec![1.0, 3.0, 50.0])).unwrap();
        let model = FittedModel::build(&ts, BasisSpec::new(1, 0).unwrap(), Mode::Regression).unwrap();
        let fit = model.fit_at(&query(vec![0.15], 0.2)).unwrap();
        assert_eq!(fit.window_count, 2);
        assert!((fit.value() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_window_points_interpolate_the_line() {
        let (x1, y1) = (0.3, 1.0);
        let (x2, y2) = (0.7, 2.0);
        let ts = TrainingSet::new(1, vec![x1, x2, 5.0], Some(vec![y1, y2, 99.0])).unwrap();
        let model = FittedModel::build(&ts, BasisSpec::new(1, 1).unwrap(), Mode::Regression).unwrap();
        let z = 0.45;
        let fit = model.fit_at(&query(vec![z], 1.0)).unwrap();
        assert_eq!(fit.window_count, 2);
        assert!(!fit.degenerate);
        let expected = y1 + (y2 - y1) * (z - x1) / (x2 - x1);
        assert!((fit.value() - expected).abs() < 1e-10);
    }

    #[test]
    fn constants_are_reproduced_exactly_for_any_degree() {
        let mut state = 17u64;
        let coords: Vec<f64> = (0..40).map(|_| lcg(&mut state)).collect();
        let ts = TrainingSet::new(2, coords, Some(vec![4.25; 20])).unwrap();
        for k in 0..=2 {
            let model =
                FittedModel::build(&ts, BasisSpec::new(2, k).unwrap(), Mode::Regression).unwrap();
            for _ in 0..5 {
                let q = query(vec![lcg(&mut state), lcg(&mut state)], 0.8);
                let fit = model.fit_at(&q).unwrap();
                if !fit.degenerate {
                    assert!((fit.value() - 4.25).abs() < 1e-10, "k={k}");
                }
            }
        }
    }

    #[test]
    fn linear_responses_are_reproduced_exactly() {
        let mut state = 23u64;
        let xs: Vec<f64> = (0..80).map(|_| lcg(&mut state)).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| -1.5 + 2.75 * x).collect();
        let ts = TrainingSet::new(1, xs, Some(ys)).unwrap();
        let model = FittedModel::build(&ts, BasisSpec::new(1, 1).unwrap(), Mode::Regression).unwrap();
        for _ in 0..20 {
            let z = lcg(&mut state);
            let fit = model.fit_at(&query(vec![z], 0.4)).unwrap();
            if !fit.degenerate {
                let expected = -1.5 + 2.75 * z;
                assert!(
                    (fit.value() - expected).abs() <= 1e-9 * expected.abs().max(1.0),
                    "{} vs {expected}",
                    fit.value()
                );
            }
        }
    }

    #[test]
    fn matches_naive_oracle_on_random_instances() {
        let mut state = 31u64;
        for case in 0..40 {
            let d = 1 + (case % 3);
            let k = case % 3;
            let n = 1 + (case * 7) % 120;
            let coords: Vec<f64> = (0..n * d).map(|_| lcg(&mut state)).collect();
            let ys: Vec<f64> = (0..n).map(|_| lcg(&mut state) * 2.0 - 1.0).collect();
            let ts = TrainingSet::new(d, coords, Some(ys.clone())).unwrap();
            let spec = BasisSpec::new(d, k).unwrap();
            let model = FittedModel::build(&ts, spec.clone(), Mode::Regression).unwrap();
            for _ in 0..8 {
                let z: Vec<f64> = (0..d).map(|_| lcg(&mut state)).collect();
                let h = 0.05 + lcg(&mut state) * 1.2;
                let q = query(z, h);
                let fast = model.fit_at(&q).unwrap();
                let naive = naive_fit(&ts, &spec, &q, &ys).unwrap();
                assert_eq!(fast.window_count, naive.window_count);
                assert_eq!(fast.degenerate, naive.degenerate, "case {case}");
                if !fast.degenerate {
                    let diff = (fast.value() - naive.value()).abs();
                    let scale = fast.value().abs().max(naive.value().abs()).max(1.0);
                    assert!(diff <= 1e-8 * scale, "case {case}: {diff}");
                }
            }
        }
    }

    #[test]
    fn translation_equivariance() {
        let mut state = 41u64;
        let xs: Vec<f64> = (0..60).map(|_| lcg(&mut state)).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (x * 3.0).sin()).collect();
        let shift = 37.5;
        let shifted_xs: Vec<f64> = xs.iter().map(|&x| x + shift).collect();

        let a = FittedModel::build(
            &TrainingSet::new(1, xs, Some(ys.clone())).unwrap(),
            BasisSpec::new(1, 2).unwrap(),
            Mode::Regression,
        )
        .unwrap();
        let b = FittedModel::build(
            &TrainingSet::new(1, shifted_xs, Some(ys)).unwrap(),
            BasisSpec::new(1, 2).unwrap(),
            Mode::Regression,
        )
        .unwrap();
        for i in 0..10 {
            let z = 0.05 + 0.09 * i as f64;
            let fa = a.fit_at(&query(vec![z], 0.3)).unwrap();
            let fb = b.fit_at(&query(vec![z + shift], 0.3)).unwrap();
            assert_eq!(fa.degenerate, fb.degenerate);
            if !fa.degenerate {
                let scale = fa.value().abs().max(1.0);
                assert!((fa.value() - fb.value()).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn empty_window_is_total() {
        let ts = TrainingSet::new(2, vec![0.5, 0.5], Some(vec![1.0])).unwrap();
        let model = FittedModel::build(&ts, BasisSpec::new(2, 1).unwrap(), Mode::Regression).unwrap();
        let fit = model.fit_at(&query(vec![10.0, 10.0], 0.5)).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.window_count, 0);
        let est = model.estimate_regression(&[query(vec![10.0, 10.0], 0.5)]).unwrap();
        assert!(est[0].is_nan());
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let ts = TrainingSet::new(1, vec![0.2, 0.4, 0.6], Some(vec![1.0, 2.0, 3.0])).unwrap();
        let model = FittedModel::build(&ts, BasisSpec::new(1, 1).unwrap(), Mode::Regression).unwrap();
        assert!(matches!(
            model.estimate_density(&[query(vec![0.4], 0.5)]),
            Err(Error::ModeMismatch { .. })
        ));

        let density =
            FittedModel::build(&ts, BasisSpec::new(1, 1).unwrap(), Mode::Density).unwrap();
        assert!(matches!(
            density.estimate_regression(&[query(vec![0.4], 0.5)]),
            Err(Error::ModeMismatch { .. })
        ));
    }

    #[test]
    fn density_requires_enough_degree() {
        let ts = TrainingSet::new(2, vec![0.1, 0.2, 0.6, 0.7], None).unwrap();
        assert!(matches!(
            FittedModel::build(&ts, BasisSpec::new(2, 1).unwrap(), Mode::Density),
            Err(Error::DegreeTooLow { .. })
        ));
        let ts1 = TrainingSet::new(1, vec![0.1, 0.6], None).unwrap();
        assert!(matches!(
            FittedModel::build(&ts1, BasisSpec::new(1, 0).unwrap(), Mode::Density),
            Err(Error::DegreeTooLow { .. })
        ));
    }

    #[test]
    fn regression_requires_responses() {
        let ts = TrainingSet::new(1, vec![0.1, 0.6], None).unwrap();
        assert!(matches!(
            FittedModel::build(&ts, BasisSpec::new(1, 0).unwrap(), Mode::Regression),
            Err(Error::MissingResponses)
        ));
    }

    #[test]
    fn cdf_of_single_point() {
        let ts = TrainingSet::new(3, vec![0.3, 0.4, 0.5], None).unwrap();
        assert_eq!(empirical_cdf(&ts), vec![1.0]);
    }

    #[test]
    fn cdf_of_distinct_sorted_values_is_rank_over_n() {
        let n = 17;
        let xs: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        let ts = TrainingSet::new(1, xs, None).unwrap();
        let cdf = empirical_cdf(&ts);
        for (i, &v) in cdf.iter().enumerate() {
            assert_eq!(v, (i + 1) as f64 / n as f64);
        }
    }

    #[test]
    fn cdf_with_ties_matches_the_double_loop_exactly() {
        let mut state = 71u64;
        for case in 0..30 {
            let d = 1 + case % 3;
            let n = 1 + (case * 13) % 150;
            // Lattice coordinates force ties.
            let coords: Vec<f64> = (0..n * d)
                .map(|_| (lcg(&mut state) * 6.0).floor() / 6.0)
                .collect();
            let ts = TrainingSet::new(d, coords, None).unwrap();
            assert_eq!(empirical_cdf(&ts), naive_cdf(&ts), "case {case}");
        }
    }

    #[test]
    fn cdf_is_monotone_under_domination() {
        let mut state = 83u64;
        let n = 60;
        let coords: Vec<f64> = (0..n * 2).map(|_| (lcg(&mut state) * 8.0).floor() / 8.0).collect();
        let ts = TrainingSet::new(2, coords, None).unwrap();
        let cdf = empirical_cdf(&ts);
        for a in 0..n {
            for b in 0..n {
                let dominated = ts.point(a).iter().zip(ts.point(b)).all(|(&x, &y)| x <= y);
                if dominated {
                    assert!(cdf[a] <= cdf[b]);
                }
            }
        }
    }

    #[test]
    fn density_reads_the_local_cdf_slope() {
        let mut state = 97u64;
        let n = 120;
        let xs: Vec<f64> = (0..n).map(|_| lcg(&mut state)).collect();
        let ts = TrainingSet::new(1, xs.clone(), None).unwrap();
        let model = FittedModel::build(&ts, BasisSpec::new(1, 1).unwrap(), Mode::Density).unwrap();
        let cdf = empirical_cdf(&ts);

        let z = 0.5;
        let h = 0.3;
        let est = model.estimate_density(&[query(vec![z], h)]).unwrap()[0];

        // Independent slope of the least-squares line through (x_i, F(x_i))
        // over the window.
        let members: Vec<usize> = (0..n)
            .filter(|&i| (xs[i] - z).abs() <= h / 2.0)
            .collect();
        let m = members.len() as f64;
        let mean_x: f64 = members.iter().map(|&i| xs[i]).sum::<f64>() / m;
        let mean_f: f64 = members.iter().map(|&i| cdf[i]).sum::<f64>() / m;
        let mut cov = 0.0;
        let mut var = 0.0;
        for &i in &members {
            cov += (xs[i] - mean_x) * (cdf[i] - mean_f);
            var += (xs[i] - mean_x) * (xs[i] - mean_x);
        }
        let slope = cov / var;
        assert!((est - slope).abs() <= 1e-9 * slope.abs().max(1.0), "{est} vs {slope}");
    }

    #[test]
    fn density_on_the_uniform_grid_is_one() {
        let n = 400;
        let xs: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        let ts = TrainingSet::new(1, xs, None).unwrap();
        let model = FittedModel::build(&ts, BasisSpec::new(1, 1).unwrap(), Mode::Density).unwrap();
        // On this grid the empirical CDF is the identity, so the local line
        // has slope exactly one up to solver precision.
        for z in [0.25, 0.5, 0.71] {
            let est = model.estimate_density(&[query(vec![z], 0.1)]).unwrap()[0];
            assert!((est - 1.0).abs() < 1e-9, "{est}");
        }
    }

    #[test]
    fn density_factor_variants_coincide_at_d1_and_differ_at_d2() {
        let mut state = 3u64;
        let coords: Vec<f64> = (0..240).map(|_| lcg(&mut state)).collect();
        let ts = TrainingSet::new(2, coords, None).unwrap();
        let spec = BasisSpec::new(2, 2).unwrap();
        let taylor = FittedModel::build_with(
            &ts,
            spec.clone(),
            Mode::Density,
            BuildOptions { density_factor: DensityFactor::Taylor, ..Default::default() },
        )
        .unwrap();
        let factorial = FittedModel::build_with(
            &ts,
            spec,
            Mode::Density,
            BuildOptions { density_factor: DensityFactor::Factorial, ..Default::default() },
        )
        .unwrap();
        let q = query(vec![0.5, 0.5], 0.6);
        let a = taylor.estimate_density(std::slice::from_ref(&q)).unwrap()[0];
        let b = factorial.estimate_density(std::slice::from_ref(&q)).unwrap()[0];
        assert!((2.0 * a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn added_point_appears_in_window_counts() {
        let ts = TrainingSet::new(1, vec![0.2, 0.6], Some(vec![1.0, 2.0])).unwrap();
        let mut model = FittedModel::build_with(
            &ts,
            BasisSpec::new(1, 0).unwrap(),
            Mode::Regression,
            BuildOptions { reserve: vec![vec![0.4]], ..Default::default() },
        )
        .unwrap();
        let q = query(vec![0.4], 0.5);
        let before = model.fit_at(&q).unwrap();
        model.add_training_point(&[0.4], 5.0).unwrap();
        let after = model.fit_at(&q).unwrap();
        assert_eq!(after.window_count, before.window_count + 1);
        assert_eq!(model.point_count(), 3);
    }

    #[test]
    fn added_point_outside_windows_leaves_answers_unchanged() {
        // k = 0 with integer statistics: inclusion-exclusion cancels the new
        // point exactly, so answers are bit-identical.
        let ts = TrainingSet::new(1, vec![0.4, 0.5, 0.6], Some(vec![1.0, 2.0, 3.0])).unwrap();
        let mut model = FittedModel::build_with(
            &ts,
            BasisSpec::new(1, 0).unwrap(),
            Mode::Regression,
            BuildOptions {
                recenter: false,
                reserve: vec![vec![0.05, 0.95]],
                ..Default::default()
            },
        )
        .unwrap();
        let queries = [query(vec![0.5], 0.4), query(vec![0.45], 0.2)];
        let before: Vec<LocalFit> =
            queries.iter().map(|q| model.fit_at(q).unwrap()).collect();
        model.add_training_point(&[0.05], 40.0).unwrap();
        model.add_training_point(&[0.95], -7.0).unwrap();
        for (q, old) in queries.iter().zip(&before) {
            let new = model.fit_at(q).unwrap();
            assert_eq!(new.window_count, old.window_count);
            assert_eq!(new.value().to_bits(), old.value().to_bits());
        }
    }

    #[test]
    fn incremental_build_equals_batch_build() {
        let mut state = 53u64;
        let n = 40;
        let xs: Vec<f64> = (0..n).map(|_| lcg(&mut state)).collect();
        let ys: Vec<f64> = (0..n).map(|_| lcg(&mut state)).collect();
        let ts = TrainingSet::new(1, xs.clone(), Some(ys.clone())).unwrap();
        let opts = BuildOptions { recenter: false, ..Default::default() };

        let batch = FittedModel::build_with(
            &ts,
            BasisSpec::new(1, 1).unwrap(),
            Mode::Regression,
            opts.clone(),
        )
        .unwrap();

        let first = TrainingSet::new(1, vec![xs[0]], Some(vec![ys[0]])).unwrap();
        let mut incremental = FittedModel::build_with(
            &first,
            BasisSpec::new(1, 1).unwrap(),
            Mode::Regression,
            BuildOptions { reserve: vec![xs[1..].to_vec()], ..opts },
        )
        .unwrap();
        for i in 1..n {
            incremental.add_training_point(&[xs[i]], ys[i]).unwrap();
        }

        for i in 0..15 {
            let q = query(vec![0.05 + 0.06 * i as f64], 0.25);
            let a = batch.fit_at(&q).unwrap();
            let b = incremental.fit_at(&q).unwrap();
            assert_eq!(a.window_count, b.window_count);
            assert_eq!(a.degenerate, b.degenerate);
            if !a.degenerate {
                assert_eq!(a.value().to_bits(), b.value().to_bits());
            }
        }
    }

    #[test]
    fn unreserved_coordinate_is_rejected() {
        let ts = TrainingSet::new(1, vec![0.2, 0.6], Some(vec![1.0, 2.0])).unwrap();
        let mut model =
            FittedModel::build(&ts, BasisSpec::new(1, 0).unwrap(), Mode::Regression).unwrap();
        assert!(matches!(
            model.add_training_point(&[0.4], 5.0),
            Err(Error::UnreservedCoordinate { .. })
        ));
        // Re-inserting an existing coordinate value is always possible.
        assert!(model.add_training_point(&[0.6], 1.5).is_ok());
    }

    #[test]
    fn density_insertion_is_rejected() {
        let ts = TrainingSet::new(1, vec![0.2, 0.6, 0.9], None).unwrap();
        let mut model =
            FittedModel::build(&ts, BasisSpec::new(1, 1).unwrap(), Mode::Density).unwrap();
        assert!(matches!(
            model.add_training_point(&[0.6], 0.5),
            Err(Error::DensityInsertUnsupported)
        ));
    }

    #[test]
    fn concurrent_queries_share_the_model() {
        let mut state = 61u64;
        let coords: Vec<f64> = (0..200).map(|_| lcg(&mut state)).collect();
        let ys: Vec<f64> = (0..100).map(|_| lcg(&mut state)).collect();
        let ts = TrainingSet::new(2, coords, Some(ys)).unwrap();
        let model =
            FittedModel::build(&ts, BasisSpec::new(2, 1).unwrap(), Mode::Regression).unwrap();
        let reference = model.fit_at(&query(vec![0.5, 0.5], 0.4)).unwrap();

        std::thread::scope(|scope| {
            for _ in 0..4 {
                let model = &model;
                let expected = reference.value();
                scope.spawn(move || {
                    for _ in 0..50 {
                        let fit = model.fit_at(&query(vec![0.5, 0.5], 0.4)).unwrap();
                        assert_eq!(fit.value().to_bits(), expected.to_bits());
                    }
                });
            }
        });
    }
}
