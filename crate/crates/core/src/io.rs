//! CSV and JSON readers and writers for datasets, fits and reports.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Param, Point, SplineParams};
use crate::measures::{PosteriorMeasures, PosteriorSummary};
use crate::sampler::PosteriorSample;
use crate::tail::PolarSample;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// Reads a two-column CSV of observations. A non-numeric first row is taken as a header.
pub fn read_points(path: &Path) -> Result<Vec<Point>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::Domain(format!(
                "{}: row {} has {} columns, expected 2",
                path.display(),
                i + 1,
                record.len()
            )));
        }
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => points.push(Point::new(x, y)),
            _ if i == 0 => continue,
            _ => {
                return Err(Error::Domain(format!(
                    "{}: row {} is not numeric",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(points)
}

pub fn write_points(path: &Path, points: &[Point]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["x1", "x2"])?;
    for p in points {
        w.serialize((p.x, p.y))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_polar(path: &Path, sample: &PolarSample) -> Result<()> {
    let mut w = csv_writer(path)?;
    for rec in &sample.records {
        w.serialize(rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn param_header() -> impl Iterator<Item = &'static str> {
    Param::ALL.iter().map(|p| p.name())
}

/// One row per spline, columns `p02 … p61`.
pub fn write_splines(path: &Path, splines: &[SplineParams]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(param_header())?;
    for s in splines {
        w.serialize(s.to_array())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_splines(path: &Path) -> Result<Vec<SplineParams>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    reader
        .deserialize::<[f64; 9]>()
        .map(|row| Ok(SplineParams::from_array(row?)))
        .collect()
}

/// Stored draws with their `η`, one row each.
pub fn write_draws(path: &Path, sample: &PosteriorSample, measures: &PosteriorMeasures) -> Result<()> {
    let mut w = csv_writer(path)?;
    let header = ["chain", "iteration"]
        .into_iter()
        .chain(param_header())
        .chain(["alpha", "log_posterior", "eta"]);
    w.write_record(header)?;
    for (d, m) in sample.draws.iter().zip(&measures.per_draw) {
        let mut row = vec![d.chain.to_string(), d.iteration.to_string()];
        row.extend(d.params.to_array().iter().map(f64::to_string));
        row.extend([d.alpha, d.log_posterior, m.eta].iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pointwise posterior medians: `measure, grid, value`.
pub fn write_measure_medians(path: &Path, summary: &PosteriorSummary) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["measure", "grid", "value"])?;
    let series: [(&str, &[f64], &[f64]); 4] = [
        ("lambda", &summary.omega_grid, &summary.lambda_median),
        ("tau1", &summary.delta_grid, &summary.tau1_median),
        ("tau2", &summary.delta_grid, &summary.tau2_median),
        ("radius", &summary.angle_grid, &summary.radius_median),
    ];
    for (name, grid, values) in series {
        for (g, v) in grid.iter().zip(values) {
            w.serialize((name, g, v))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-draw curves in long form: `draw, measure, grid, value`, every `thin`-th draw.
pub fn write_measure_draws(
    path: &Path,
    measures: &PosteriorMeasures,
    thin: usize,
) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["draw", "measure", "grid", "value"])?;
    let s = &measures.summary;
    for (i, m) in measures.per_draw.iter().enumerate().step_by(thin.max(1)) {
        w.serialize((i, "eta", f64::NAN, m.eta))?;
        for (name, grid, values) in [
            ("lambda", &s.omega_grid, &m.lambda),
            ("tau1", &s.delta_grid, &m.tau1),
            ("tau2", &s.delta_grid, &m.tau2),
        ] {
            for (g, v) in grid.iter().zip(values) {
                w.serialize((i, name, g, v))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Serializes rows of any record type with a header derived from the type.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
