//! Observation and prediction CSV formats.
//!
//! Observations: header `order,x,value`, one row per observation. Truth files
//! share the same layout. Predictions: `order,x,mean,variance,lo95,hi95`.
//! Floats are printed with 17 significant digits so a parse → serialize →
//! parse round trip is exact.

use std::path::Path;

use crate::field::ObservationSet;
use crate::inference::Prediction;

use super::CliError;

/// 17 significant digits: lossless for f64.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn read_observations(path: &Path) -> Result<ObservationSet, CliError> {
    let rows = read_value_rows(path)?;
    ObservationSet::from_rows(&rows).map_err(CliError::from)
}

/// Read `order,x,value` rows preserving file order.
pub fn read_value_rows(path: &Path) -> Result<Vec<(usize, f64, f64)>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    {
        let headers = reader
            .headers()
            .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
        let expected = ["order", "x", "value"];
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(CliError::parse(format!(
                "{}: expected header `order,x,value`, got `{}`",
                path.display(),
                got.join(",")
            )));
        }
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
        if record.len() != 3 {
            return Err(CliError::parse(format!(
                "{}: row {} has {} fields, expected 3",
                path.display(),
                line + 2,
                record.len()
            )));
        }
        let order: usize = record[0].parse().map_err(|_| {
            CliError::parse(format!(
                "{}: row {}: invalid order `{}`",
                path.display(),
                line + 2,
                &record[0]
            ))
        })?;
        let x: f64 = record[1].parse().map_err(|_| {
            CliError::parse(format!(
                "{}: row {}: invalid x `{}`",
                path.display(),
                line + 2,
                &record[1]
            ))
        })?;
        let value: f64 = record[2].parse().map_err(|_| {
            CliError::parse(format!(
                "{}: row {}: invalid value `{}`",
                path.display(),
                line + 2,
                &record[2]
            ))
        })?;
        rows.push((order, x, value));
    }
    if rows.is_empty() {
        return Err(CliError::validation(format!(
            "{}: no observations",
            path.display()
        )));
    }
    Ok(rows)
}

pub fn write_observations(path: &Path, obs: &ObservationSet) -> Result<(), CliError> {
    let rows: Vec<(usize, f64, f64)> = obs.iter().collect();
    write_value_rows(path, &rows)
}

pub fn write_value_rows(path: &Path, rows: &[(usize, f64, f64)]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    writer
        .write_record(["order", "x", "value"])
        .map_err(|e| CliError::parse(e.to_string()))?;
    for &(order, x, value) in rows {
        writer
            .write_record([
                order.to_string(),
                format_float(x),
                format_float(value),
            ])
            .map_err(|e| CliError::parse(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_predictions(path: &Path, predictions: &[Prediction]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    writer
        .write_record(["order", "x", "mean", "variance", "lo95", "hi95"])
        .map_err(|e| CliError::parse(e.to_string()))?;
    for p in predictions {
        writer
            .write_record([
                p.order.to_string(),
                format_float(p.location),
                format_float(p.mean),
                format_float(p.variance),
                format_float(p.lo95),
                format_float(p.hi95),
            ])
            .map_err(|e| CliError::parse(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

/// A parsed prediction row; band columns are not needed by the evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionRow {
    pub order: usize,
    pub x: f64,
    pub mean: f64,
    pub variance: f64,
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
        if record.len() < 4 {
            return Err(CliError::parse(format!(
                "{}: prediction rows need at least order,x,mean,variance",
                path.display()
            )));
        }
        let parse_field = |i: usize| -> Result<f64, CliError> {
            record[i].parse().map_err(|_| {
                CliError::parse(format!(
                    "{}: invalid number `{}`",
                    path.display(),
                    &record[i]
                ))
            })
        };
        rows.push(PredictionRow {
            order: record[0].parse().map_err(|_| {
                CliError::parse(format!("{}: invalid order `{}`", path.display(), &record[0]))
            })?,
            x: parse_field(1)?,
            mean: parse_field(2)?,
            variance: parse_field(3)?,
        });
    }
    if rows.is_empty() {
        return Err(CliError::validation(format!(
            "{}: no predictions",
            path.display()
        )));
    }
    Ok(rows)
}

/// Write the per-order relative L2 errors as `order,rle`.
pub fn write_rle(path: &Path, rle: &[(usize, f64)]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    writer
        .write_record(["order", "rle"])
        .map_err(|e| CliError::parse(e.to_string()))?;
    for &(order, value) in rle {
        writer
            .write_record([order.to_string(), format_float(value)])
            .map_err(|e| CliError::parse(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}
