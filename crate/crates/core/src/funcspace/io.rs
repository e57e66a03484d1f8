//! Functional-data CSV.
//!
//! Layout: the first row holds the grid points. An optional second row whose
//! first field is the label `weights` holds the quadrature weights; without it
//! weights follow from the points (trapezoid rule). Every further row is one
//! curve. All numeric rows must have exactly as many fields as there are grid
//! points.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::funcspace::curve::FunctionalSample;
use crate::funcspace::grid::{Grid, GridKind};

pub const WEIGHTS_LABEL: &str = "weights";

pub fn read_sample<R: Read>(reader: R) -> Result<FunctionalSample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut points: Option<Vec<f64>> = None;
    let mut weights: Option<Vec<f64>> = None;
    let mut data: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(idx + 1),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(idx + 1);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let is_weights = rec.get(0) == Some(WEIGHTS_LABEL);
        let fields: Vec<&str> = if is_weights { rec.iter().skip(1).collect() } else { rec.iter().collect() };
        let values = parse_row(&fields, line)?;
        match &points {
            None => {
                if is_weights {
                    return Err(Error::Parse { line, message: "weights row before grid row".into() });
                }
                points = Some(values);
            }
            Some(p) => {
                if values.len() != p.len() {
                    return Err(Error::Parse {
                        line,
                        message: format!("ragged row: {} fields, expected {}", values.len(), p.len()),
                    });
                }
                if is_weights {
                    if weights.is_some() || n > 0 {
                        return Err(Error::Parse {
                            line,
                            message: "weights row must directly follow the grid row".into(),
                        });
                    }
                    weights = Some(values);
                } else {
                    data.extend(values);
                    n += 1;
                }
            }
        }
    }
    let points = points.ok_or(Error::Parse { line: 1, message: "missing grid row".into() })?;
    let grid = match weights {
        Some(w) => Grid::custom(points, w),
        None => Grid::from_points(points),
    }
    .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
    if n == 0 {
        return Err(Error::EmptySample);
    }
    FunctionalSample::from_flat(grid, n, data)
}

fn parse_row(fields: &[&str], line: usize) -> Result<Vec<f64>> {
    fields
        .iter()
        .enumerate()
        .map(|(col, f)| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("field {} is not a finite number: {f:?}", col + 1),
                })
        })
        .collect()
}

pub fn read_sample_file(path: impl AsRef<Path>) -> Result<FunctionalSample> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_sample(std::io::BufReader::new(file))
}

/// Writes a sample; the weights row is emitted unless the grid is a uniform
/// interval whose trapezoid weights are implied by the points.
pub fn write_sample<W: Write>(writer: W, sample: &FunctionalSample) -> Result<()> {
    write_rows(writer, sample.grid(), sample.rows())
}

pub fn write_rows<'a, W: Write>(
    writer: W,
    grid: &Arc<Grid>,
    rows: impl IntoIterator<Item = &'a [f64]>,
) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).flexible(true).from_writer(writer);
    let fmt = |v: &f64| v.to_string();
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    wtr.write_record(grid.points().iter().map(fmt)).map_err(csv_err)?;
    if !matches!(grid.kind(), GridKind::UniformInterval { .. }) {
        let mut rec = vec![WEIGHTS_LABEL.to_string()];
        rec.extend(grid.weights().iter().map(fmt));
        wtr.write_record(rec).map_err(csv_err)?;
    }
    for row in rows {
        wtr.write_record(row.iter().map(fmt)).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_sample_file(path: impl AsRef<Path>, sample: &FunctionalSample) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_sample(std::io::BufWriter::new(file), sample)
}
