//! The batch fitting command: read training and test CSVs, fit every test
//! row with the requested engine, write one result row per test point.

use std::path::PathBuf;

use fastlpr::{
    naive_cdf, naive_fit, BasisSpec, BuildOptions, DensityFactor, FittedModel, LocalFit, Mode,
    Query, TrainingSet,
};

use crate::bench::Engine;
use crate::csvio::{self, ResultRow};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FitMode {
    Regression,
    Density,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DensityFactorArg {
    /// Read the mixed coefficient directly (its Taylor weight is 1).
    Taylor,
    /// Multiply the mixed coefficient by d!.
    Factorial,
}

impl From<DensityFactorArg> for DensityFactor {
    fn from(arg: DensityFactorArg) -> Self {
        match arg {
            DensityFactorArg::Taylor => DensityFactor::Taylor,
            DensityFactorArg::Factorial => DensityFactor::Factorial,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub train: PathBuf,
    pub test: PathBuf,
    pub degree: usize,
    pub bandwidth: Option<f64>,
    pub mode: FitMode,
    pub out: PathBuf,
    pub engine: Engine,
    pub recenter: bool,
    pub density_factor: DensityFactorArg,
    pub reserve: Option<PathBuf>,
}

pub fn run(config: &FitConfig) -> Result<(), CliError> {
    let training = csvio::read_training(&config.train)?;
    let dim = training.dim;
    if config.mode == FitMode::Regression && training.responses.is_none() {
        return Err(CliError::Data(format!(
            "{}: regression mode requires a y column",
            config.train.display()
        )));
    }
    if config.mode == FitMode::Density && config.degree < dim {
        return Err(CliError::Data(format!(
            "density mode requires degree k >= d (got k={}, d={dim})",
            config.degree
        )));
    }

    let test = csvio::read_test(&config.test, dim)?;
    let bandwidths: Vec<f64> = match (&config.bandwidth, &test.bandwidths) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "both --bandwidth and an h column in the test file were given; use one".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Usage(
                "no bandwidth: pass --bandwidth or add an h column to the test file".into(),
            ))
        }
        (Some(h), None) => vec![*h; test.rows.len()],
        (None, Some(hs)) => hs.clone(),
    };

    let mut queries = Vec::with_capacity(test.rows.len());
    for (i, (row, &h)) in test.rows.iter().zip(&bandwidths).enumerate() {
        let q = Query::new(row.clone(), h).map_err(|e| {
            CliError::Data(format!("{}: data row {}: {e}", config.test.display(), i + 1))
        })?;
        queries.push(q);
    }

    let reserve = match &config.reserve {
        Some(path) => csvio::read_reserve(path, dim)?,
        None => Vec::new(),
    };

    let ts = TrainingSet::new(dim, training.coords, training.responses)?;
    let spec = BasisSpec::new(dim, config.degree)?;

    let fits: Vec<(f64, LocalFit)> = match config.engine {
        Engine::Fast => {
            let mode = match config.mode {
                FitMode::Regression => Mode::Regression,
                FitMode::Density => Mode::Density,
            };
            let options = BuildOptions {
                recenter: config.recenter,
                reserve,
                density_factor: config.density_factor.into(),
            };
            let model = FittedModel::build_with(&ts, spec, mode, options)?;
            queries
                .iter()
                .map(|q| {
                    let fit = model.fit_at(q)?;
                    Ok((model.estimate_from_fit(&fit), fit))
                })
                .collect::<Result<_, CliError>>()?
        }
        Engine::Naive => {
            let responses: Vec<f64> = match config.mode {
                FitMode::Regression => ts.responses().expect("checked above").to_vec(),
                FitMode::Density => naive_cdf(&ts),
            };
            let readout = naive_readout(&spec, config)?;
            queries
                .iter()
                .map(|q| {
                    let fit = naive_fit(&ts, &spec, q, &responses)?;
                    Ok((readout(&fit), fit))
                })
                .collect::<Result<_, CliError>>()?
        }
    };

    let rows: Vec<ResultRow<'_>> = test
        .rows
        .iter()
        .zip(&fits)
        .map(|(coords, (estimate, fit))| ResultRow {
            coords,
            estimate: *estimate,
            window_count: fit.window_count,
            degenerate: fit.degenerate,
        })
        .collect();
    csvio::write_results(&config.out, dim, &rows)
}

/// The estimate readout for the naive engine, matching the model-side
/// conventions: fitted value for regression, scaled mixed coefficient for
/// density, NaN for degenerate windows.
fn naive_readout(
    spec: &BasisSpec,
    config: &FitConfig,
) -> Result<impl Fn(&LocalFit) -> f64, CliError> {
    let (position, scale) = match config.mode {
        FitMode::Regression => (0, 1.0),
        FitMode::Density => {
            let position = spec
                .basis_position(&vec![1; spec.dim()])
                .ok_or_else(|| CliError::Internal("mixed monomial missing".into()))?;
            let scale = match config.density_factor {
                DensityFactorArg::Taylor => 1.0,
                DensityFactorArg::Factorial => (1..=spec.dim() as u64).product::<u64>() as f64,
            };
            (position, scale)
        }
    };
    Ok(move |fit: &LocalFit| {
        if fit.degenerate {
            f64::NAN
        } else {
            scale * fit.coefficients[position]
        }
    })
}
