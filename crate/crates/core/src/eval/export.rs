//! Heatmap export as full-precision CSV or 8-bit ASCII PGM (`P2`).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_sim::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeatmapFormat {
    Csv,
    Pgm,
}

impl HeatmapFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            HeatmapFormat::Csv => "csv",
            HeatmapFormat::Pgm => "pgm",
        }
    }
}

fn check(values: &[f64], grid: Grid) -> Result<()> {
    if values.len() != grid.cells() {
        return Err(Error::shape("heatmap values", grid.cells(), values.len()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("heatmap"));
    }
    Ok(())
}

/// One line per grid row. Values use the shortest decimal form that parses
/// back to the same `f64`.
pub fn render_csv(values: &[f64], grid: Grid) -> Result<String> {
    check(values, grid)?;
    let mut out = String::new();
    for row in values.chunks(grid.cols) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Grayscale scaled to the map's own min-max; a constant map renders as 0.
pub fn render_pgm(values: &[f64], grid: Grid) -> Result<String> {
    check(values, grid)?;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    let mut out = format!("P2\n{} {}\n255\n", grid.cols, grid.rows);
    for row in values.chunks(grid.cols) {
        let line: Vec<String> = row
            .iter()
            .map(|&v| {
                let level = if range > 0.0 { ((v - lo) / range * 255.0).round() } else { 0.0 };
                (level as u8).to_string()
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn export_heatmap(values: &[f64], grid: Grid, path: impl AsRef<Path>, format: HeatmapFormat) -> Result<()> {
    let text = match format {
        HeatmapFormat::Csv => render_csv(values, grid)?,
        HeatmapFormat::Pgm => render_pgm(values, grid)?,
    };
    fs::write(path, text)?;
    Ok(())
}

pub fn read_heatmap_csv(text: &str) -> Result<(Vec<f64>, Grid)> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let row = line
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Format(format!("bad CSV value '{t}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => return Err(Error::Format("ragged CSV heatmap".into())),
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    let cols = cols.ok_or(Error::Empty("CSV heatmap"))?;
    Ok((values, Grid::new(rows, cols)))
}

/// `|pred - truth|` per pixel.
pub fn error_map(pred: &[f64], truth: &[f64]) -> Result<Vec<f64>> {
    if pred.len() != truth.len() {
        return Err(Error::shape("error map", truth.len(), pred.len()));
    }
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).collect())
}
