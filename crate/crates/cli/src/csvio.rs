//! CSV ingestion and result writing.
//!
//! All files are header-first, comma-separated, '.' decimal, UTF-8. Training
//! files carry columns `x1..xd` plus optional `y`; test files `x1..xd` plus
//! optional `h`; reserve files `x1..xd`. Estimates are written with 12
//! significant digits so a written file re-reads to the same values at that
//! precision.

use std::path::Path;

use crate::error::CliError;

#[derive(Debug)]
pub struct TrainingFile {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub responses: Option<Vec<f64>>,
}

#[derive(Debug)]
pub struct TestFile {
    pub rows: Vec<Vec<f64>>,
    pub bandwidths: Option<Vec<f64>>,
}

/// Splits a header into `x1..xd` plus an optional trailing extra column.
fn parse_header(
    path: &Path,
    header: &csv::StringRecord,
    allowed_extra: &str,
) -> Result<(usize, bool), CliError> {
    let fields: Vec<&str> = header.iter().map(str::trim).collect();
    let mut dim = 0;
    while dim < fields.len() && fields[dim] == format!("x{}", dim + 1) {
        dim += 1;
    }
    if dim == 0 {
        return Err(CliError::Data(format!(
            "{}: line 1: header must start with column x1, found {:?}",
            path.display(),
            fields.first().unwrap_or(&"")
        )));
    }
    let extra = match fields.len() - dim {
        0 => false,
        1 if fields[dim] == allowed_extra => true,
        _ => {
            return Err(CliError::Data(format!(
                "{}: line 1: unexpected column {:?} (expected x1..x{dim}{}{allowed_extra})",
                path.display(),
                fields[dim],
                if allowed_extra.is_empty() { "" } else { " plus optional " },
            )))
        }
    };
    Ok((dim, extra))
}

fn parse_field(path: &Path, record: &csv::StringRecord, column: usize) -> Result<f64, CliError> {
    let line = record.position().map_or(0, |p| p.line());
    let raw = record.get(column).ok_or_else(|| {
        CliError::Data(format!(
            "{}: line {line}: missing field in column {}",
            path.display(),
            column + 1
        ))
    })?;
    let value: f64 = raw.trim().parse().map_err(|_| {
        CliError::Data(format!(
            "{}: line {line}: invalid number {raw:?} in column {}",
            path.display(),
            column + 1
        ))
    })?;
    if !value.is_finite() {
        return Err(CliError::Data(format!(
            "{}: line {line}: non-finite value {raw:?} in column {}",
            path.display(),
            column + 1
        )));
    }
    Ok(value)
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, CliError> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Dimension, coordinate rows, and the optional extra column's values.
type ParsedRows = (usize, Vec<Vec<f64>>, Option<Vec<f64>>);

fn read_rows(path: &Path, allowed_extra: &str) -> Result<ParsedRows, CliError> {
    let mut reader = open_reader(path)?;
    let header = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .clone();
    let (dim, has_extra) = parse_header(path, &header, allowed_extra)?;

    let mut rows = Vec::new();
    let mut extras = has_extra.then(Vec::new);
    for result in reader.records() {
        let record = result.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let expected = dim + usize::from(has_extra);
        if record.len() != expected {
            let line = record.position().map_or(0, |p| p.line());
            return Err(CliError::Data(format!(
                "{}: line {line}: expected {expected} fields, found {}",
                path.display(),
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(dim);
        for c in 0..dim {
            row.push(parse_field(path, &record, c)?);
        }
        rows.push(row);
        if let Some(extras) = extras.as_mut() {
            extras.push(parse_field(path, &record, dim)?);
        }
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok((dim, rows, extras))
}

pub fn read_training(path: &Path) -> Result<TrainingFile, CliError> {
    let (dim, rows, responses) = read_rows(path, "y")?;
    Ok(TrainingFile {
        dim,
        coords: rows.into_iter().flatten().collect(),
        responses,
    })
}

pub fn read_test(path: &Path, expected_dim: usize) -> Result<TestFile, CliError> {
    let (dim, rows, bandwidths) = read_rows(path, "h")?;
    if dim != expected_dim {
        return Err(CliError::Data(format!(
            "{}: test dimension {dim} does not match training dimension {expected_dim}",
            path.display()
        )));
    }
    Ok(TestFile { rows, bandwidths })
}

/// Reads anticipated points and regroups them into per-dimension value lists.
pub fn read_reserve(path: &Path, expected_dim: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let (dim, rows, _) = read_rows(path, "")?;
    if dim != expected_dim {
        return Err(CliError::Data(format!(
            "{}: reserve dimension {dim} does not match training dimension {expected_dim}",
            path.display()
        )));
    }
    let mut per_dim = vec![Vec::with_capacity(rows.len()); dim];
    for row in rows {
        for (j, v) in row.into_iter().enumerate() {
            per_dim[j].push(v);
        }
    }
    Ok(per_dim)
}

/// Formats with 12 significant digits; round-trips through `str::parse`
/// to the same printed precision.
pub fn format_sig12(v: f64) -> String {
    format!("{v:.11e}")
}

pub struct ResultRow<'a> {
    pub coords: &'a [f64],
    pub estimate: f64,
    pub window_count: usize,
    pub degenerate: bool,
}

/// One output row per test point: coordinates, estimate (empty when the
/// window was degenerate), window count, degenerate flag.
pub fn write_results(path: &Path, dim: usize, rows: &[ResultRow<'_>]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut header: Vec<String> = (1..=dim).map(|j| format!("x{j}")).collect();
    header.extend(["estimate", "window_count", "degenerate"].map(String::from));
    writer
        .write_record(&header)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    for row in rows {
        let mut record: Vec<String> = row.coords.iter().map(|&v| format_sig12(v)).collect();
        record.push(if row.estimate.is_nan() {
            String::new()
        } else {
            format_sig12(row.estimate)
        });
        record.push(row.window_count.to_string());
        record.push(u8::from(row.degenerate).to_string());
        writer
            .write_record(&record)
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(())
}
