//! Synthetic steady-state temperature fields and the dataset built from them.

mod dataset;
mod solver;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use dataset::{
    build_dataset, read_dataset, save_dataset, load_dataset, write_dataset, Dataset, DatasetManifest, LabeledSet,
    Normalization, Sample, Split, UnlabeledSet, DATASET_MAGIC,
};
pub use solver::{heat_residual, solve_steady_heat, source_field, SOLVER_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
}

impl Grid {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Grid { rows, cols }
    }

    pub const fn cells(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub const fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }
}

/// Scalar values on an `H x W` grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::shape("field values", grid.cells(), values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field"));
        }
        Ok(Field { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Field {
            grid,
            values: vec![value; grid.cells()],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[self.grid.index(row, col)]
    }
}

/// Heat-source rectangle covering rows `y0..y1` and columns `x0..x1` (half-open).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatSource {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub intensity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceLayout {
    pub grid: Grid,
    pub boundary_value: f64,
    pub sources: Vec<HeatSource>,
}

impl SourceLayout {
    /// Checks that every rectangle is non-empty and inside the grid and that
    /// intensities are finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        if self.grid.rows < 3 || self.grid.cols < 3 {
            return Err(Error::invalid("grid must be at least 3x3"));
        }
        if !self.boundary_value.is_finite() {
            return Err(Error::NonFinite("boundary value"));
        }
        for s in &self.sources {
            if !(s.x0 < s.x1 && s.x1 <= self.grid.cols && s.y0 < s.y1 && s.y1 <= self.grid.rows) {
                return Err(Error::invalid(format!("source rectangle {s:?} outside grid")));
            }
            if !(s.intensity.is_finite() && s.intensity >= 0.0) {
                return Err(Error::invalid(format!("source intensity {} invalid", s.intensity)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub grid: Grid,
    pub min_sources: usize,
    pub max_sources: usize,
    pub min_intensity: f64,
    pub max_intensity: f64,
    /// Largest rectangle side, as a fraction of the grid side.
    pub max_extent: f64,
    pub boundary_value: f64,
    pub solver_tol: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            grid: Grid::new(64, 64),
            min_sources: 2,
            max_sources: 6,
            min_intensity: 0.5,
            max_intensity: 2.0,
            max_extent: 0.25,
            boundary_value: 0.0,
            solver_tol: SOLVER_TOL,
        }
    }
}

/// Draws a random layout of rectangular sources strictly inside the grid
/// boundary ring. Deterministic in `seed`.
pub fn sample_source_layout(seed: u64, config: &GenConfig) -> Result<SourceLayout> {
    let grid = config.grid;
    if grid.rows < 3 || grid.cols < 3 {
        return Err(Error::invalid(format!("grid {}x{} is smaller than 3x3", grid.rows, grid.cols)));
    }
    if config.min_sources == 0 || config.min_sources > config.max_sources {
        return Err(Error::invalid("source count range must satisfy 1 <= min <= max"));
    }
    if !(config.min_intensity >= 0.0 && config.min_intensity <= config.max_intensity && config.max_intensity.is_finite()) {
        return Err(Error::invalid("intensity range must satisfy 0 <= min <= max < inf"));
    }
    let mut rng = rng::rng_for(seed, rng::stream::SAMPLE, 0);
    let (inner_rows, inner_cols) = (grid.rows - 2, grid.cols - 2);
    let max_h = ((inner_rows as f64 * config.max_extent).round() as usize).clamp(1, inner_rows);
    let max_w = ((inner_cols as f64 * config.max_extent).round() as usize).clamp(1, inner_cols);
    let count = rng.gen_range(config.min_sources..=config.max_sources);
    let sources = (0..count)
        .map(|_| {
            let h = rng.gen_range(1..=max_h);
            let w = rng.gen_range(1..=max_w);
            let y0 = rng.gen_range(1..=inner_rows + 1 - h);
            let x0 = rng.gen_range(1..=inner_cols + 1 - w);
            let intensity = if config.max_intensity > config.min_intensity {
                rng.gen_range(config.min_intensity..=config.max_intensity)
            } else {
                config.min_intensity
            };
            HeatSource {
                x0,
                y0,
                x1: x0 + w,
                y1: y0 + h,
                intensity,
            }
        })
        .collect();
    let layout = SourceLayout {
        grid,
        boundary_value: config.boundary_value,
        sources,
    };
    layout.validate()?;
    Ok(layout)
}
