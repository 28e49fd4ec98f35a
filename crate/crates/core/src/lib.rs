//! Exact local polynomial regression and density estimation in near-linear
//! time.
//!
//! The classic estimator fits a degree-k polynomial by least squares over the
//! training points inside a box around each test point, which costs O(n) per
//! query when done naively. This crate instead discretizes each coordinate to
//! its rank, accumulates the fit's sufficient statistics (monomial sums up to
//! degree 2k and response-weighted sums up to degree k) in a sparse
//! d-dimensional binary indexed tree, and answers each query from 2^d
//! prefix sums in O(log^d n) node touches. The recovered statistics are the
//! same sums the naive scan would produce, up to floating-point
//! reassociation, so estimates are exact rather than approximate.
//!
//! Density estimation reuses the same machinery by regressing the empirical
//! CDF on the coordinates and reading off the mixed-partial coefficient.
//!
//! ```
//! use fastlpr::{BasisSpec, FittedModel, Mode, Query, TrainingSet};
//!
//! let xs = vec![0.1, 0.3, 0.5, 0.7, 0.9];
//! let ys = vec![1.2, 1.4, 1.6, 1.8, 2.0];
//! let ts = TrainingSet::new(1, xs, Some(ys))?;
//! let model = FittedModel::build(&ts, BasisSpec::new(1, 1)?, Mode::Regression)?;
//! let estimates = model.estimate_regression(&[Query::new(vec![0.5], 0.5)?])?;
//! assert!((estimates[0] - 1.6).abs() < 1e-9);
//! # Ok::<(), fastlpr::Error>(())
//! ```

pub mod discretize;
pub mod error;
pub mod estimator;
pub mod fenwick;
pub mod model;
pub mod moments;
pub mod oracle;

mod compensated;
mod solve;

pub use discretize::DiscretizationIndex;
pub use error::Error;
pub use estimator::{empirical_cdf, BuildOptions, DensityFactor, FittedModel, Mode};
pub use fenwick::{interrogation_path, update_path, CompositeHash, FenwickGrid};
pub use model::{BasisSpec, LocalFit, MomentVector, MultiIndex, Query, TrainingSet};
pub use moments::{assemble_system, raw_statistics, shift_moments};
pub use oracle::{naive_cdf, naive_fit};
