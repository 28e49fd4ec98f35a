//! Scaling benchmark: times the tree-backed engine against the naive scan on
//! synthetic data over a grid of training/testing sizes.
//!
//! Build and query phases are timed separately because their costs scale
//! differently: preprocessing is near-linear in n while each query touches
//! only polylogarithmically many nodes, whereas the naive engine pays for a
//! full scan per query.

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fastlpr::{naive_fit, BasisSpec, FittedModel, Mode, Query};

use crate::csvio::format_sig12;
use crate::datagen;
use crate::error::CliError;

pub const BENCH_NOISE_SIGMA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Engine {
    Fast,
    Naive,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Fast => "fast",
            Engine::Naive => "naive",
        }
    }
}

/// Bandwidth as a function of the training size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthRule {
    /// h = n^(-1/3)
    InverseCubeRoot,
    /// h = n^(-1/4)
    InverseFourthRoot,
    /// h = n^(-1/5)
    InverseFifthRoot,
    Fixed(f64),
}

impl BandwidthRule {
    pub fn bandwidth(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            BandwidthRule::InverseCubeRoot => n.powf(-1.0 / 3.0),
            BandwidthRule::InverseFourthRoot => n.powf(-0.25),
            BandwidthRule::InverseFifthRoot => n.powf(-0.2),
            BandwidthRule::Fixed(h) => h,
        }
    }
}

impl FromStr for BandwidthRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "n^-1/3" => Ok(BandwidthRule::InverseCubeRoot),
            "n^-1/4" => Ok(BandwidthRule::InverseFourthRoot),
            "n^-1/5" => Ok(BandwidthRule::InverseFifthRoot),
            _ => {
                if let Some(v) = s.strip_prefix("fixed:") {
                    let h: f64 = v
                        .parse()
                        .map_err(|_| format!("invalid fixed bandwidth {v:?}"))?;
                    if h > 0.0 && h.is_finite() {
                        Ok(BandwidthRule::Fixed(h))
                    } else {
                        Err(format!("fixed bandwidth must be positive, got {v}"))
                    }
                } else {
                    Err(format!(
                        "unknown bandwidth rule {s:?} (expected n^-1/3, n^-1/4, n^-1/5 or fixed:<v>)"
                    ))
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub dim: usize,
    pub degree: usize,
    pub n_list: Vec<usize>,
    pub s_list: Vec<usize>,
    pub rule: BandwidthRule,
    pub engines: Vec<Engine>,
    pub seed: u64,
    /// Naive runs with n * s above this are skipped to keep runs finite.
    pub naive_max_cells: u64,
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub engine: &'static str,
    pub n: usize,
    pub s: usize,
    pub dim: usize,
    pub degree: usize,
    pub h: f64,
    pub build_secs: f64,
    pub query_secs: f64,
    pub total_secs: f64,
    pub peak_entry_count: usize,
}

/// Runs the benchmark grid. Every (n, s) cell regenerates the same data for
/// both engines from a seed derived from the configuration seed, so engine
/// timings are comparable and runs are reproducible.
pub fn run(config: &BenchConfig) -> Result<Vec<BenchRow>, CliError> {
    if config.dim == 0 || config.n_list.is_empty() || config.s_list.is_empty() {
        return Err(CliError::Usage(
            "bench requires d >= 1 and non-empty n and s lists".into(),
        ));
    }
    let mut rows = Vec::new();
    for &n in &config.n_list {
        for &s in &config.s_list {
            if n == 0 || s == 0 {
                return Err(CliError::Usage("n and s must be positive".into()));
            }
            let h = config.rule.bandwidth(n);
            let cell_seed = config
                .seed
                .wrapping_mul(0x9E3779B97F4A7C15)
                .wrapping_add((n as u64) << 24)
                .wrapping_add(s as u64);
            for &engine in &config.engines {
                if engine == Engine::Naive && (n as u64).saturating_mul(s as u64) > config.naive_max_cells
                {
                    continue;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
                let ts =
                    datagen::synthetic_regression(&mut rng, n, config.dim, BENCH_NOISE_SIGMA);
                let queries: Vec<Query> = (0..s)
                    .map(|_| {
                        Query::new(datagen::uniform_coords(&mut rng, 1, config.dim), h)
                            .expect("generated query is valid")
                    })
                    .collect();
                let spec = BasisSpec::new(config.dim, config.degree)?;

                let row = match engine {
                    Engine::Fast => {
                        let build_start = Instant::now();
                        let model = FittedModel::build(&ts, spec, Mode::Regression)?;
                        let build_secs = build_start.elapsed().as_secs_f64();

                        let query_start = Instant::now();
                        let estimates = model.estimate_regression(&queries)?;
                        let query_secs = query_start.elapsed().as_secs_f64();
                        std::hint::black_box(&estimates);

                        BenchRow {
                            engine: engine.name(),
                            n,
                            s,
                            dim: config.dim,
                            degree: config.degree,
                            h,
                            build_secs,
                            query_secs,
                            total_secs: build_secs + query_secs,
                            peak_entry_count: model.entry_count(),
                        }
                    }
                    Engine::Naive => {
                        let responses = ts.responses().expect("regression data").to_vec();
                        let query_start = Instant::now();
                        let estimates: Vec<f64> = queries
                            .iter()
                            .map(|q| {
                                naive_fit(&ts, &spec, q, &responses).map(|fit| {
                                    if fit.degenerate {
                                        f64::NAN
                                    } else {
                                        fit.value()
                                    }
                                })
                            })
                            .collect::<Result<_, _>>()?;
                        let query_secs = query_start.elapsed().as_secs_f64();
                        std::hint::black_box(&estimates);

                        BenchRow {
                            engine: engine.name(),
                            n,
                            s,
                            dim: config.dim,
                            degree: config.degree,
                            h,
                            build_secs: 0.0,
                            query_secs,
                            total_secs: query_secs,
                            peak_entry_count: 0,
                        }
                    }
                };
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

pub fn write_rows(path: &Path, rows: &[BenchRow]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    writer
        .write_record([
            "engine",
            "n",
            "s",
            "d",
            "k",
            "h",
            "build_secs",
            "query_secs",
            "total_secs",
            "peak_entry_count",
        ])
        .map_err(|e| CliError::Internal(e.to_string()))?;
    for row in rows {
        writer
            .write_record([
                row.engine.to_string(),
                row.n.to_string(),
                row.s.to_string(),
                row.dim.to_string(),
                row.degree.to_string(),
                format_sig12(row.h),
                format!("{:.6}", row.build_secs),
                format!("{:.6}", row.query_secs),
                format!("{:.6}", row.total_secs),
                row.peak_entry_count.to_string(),
            ])
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(())
}
