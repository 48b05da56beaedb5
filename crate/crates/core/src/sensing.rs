//! Sensor placement, point observation, and nearest-sensor (Voronoi) encoding
//! of sparse readings onto the full grid.
//!
//! Distances are Euclidean in integer `(row, col)` cell coordinates. Equal
//! distances resolve to the sensor with the lowest index.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_sim::{Field, Grid};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorLayout {
    grid: Grid,
    positions: Vec<(usize, usize)>,
}

impl SensorLayout {
    pub fn new(grid: Grid, positions: Vec<(usize, usize)>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Empty("sensor layout"));
        }
        let mut seen = HashSet::with_capacity(positions.len());
        for &(r, c) in &positions {
            if r >= grid.rows || c >= grid.cols {
                return Err(Error::invalid(format!("sensor ({r}, {c}) outside {}x{} grid", grid.rows, grid.cols)));
            }
            if !seen.insert((r, c)) {
                return Err(Error::invalid(format!("duplicate sensor at ({r}, {c})")));
            }
        }
        Ok(SensorLayout { grid, positions })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Sensor readings, ordered as the layout's positions.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementStrategy {
    /// One jittered sensor per block of a near-square `r x c` partition.
    #[default]
    StratifiedJitter,
    UniformRandom,
}

impl std::str::FromStr for PlacementStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stratified-jitter" => Ok(PlacementStrategy::StratifiedJitter),
            "uniform-random" => Ok(PlacementStrategy::UniformRandom),
            other => Err(Error::invalid(format!("unknown placement strategy '{other}'"))),
        }
    }
}

/// Factor pair `(block_rows, block_cols)` of `count` closest to square that
/// fits the grid.
fn block_partition(grid: Grid, count: usize) -> Option<(usize, usize)> {
    (1..=count)
        .filter(|r| count.is_multiple_of(*r))
        .map(|r| (r, count / r))
        .filter(|&(r, c)| r <= grid.rows && c <= grid.cols)
        .min_by_key(|&(r, c)| (r.abs_diff(c), r))
}

pub fn place_sensors(grid: Grid, count: usize, strategy: PlacementStrategy, seed: u64) -> Result<SensorLayout> {
    let cells = grid.cells();
    if count == 0 {
        return Err(Error::Empty("sensor count"));
    }
    if count > cells {
        return Err(Error::invalid(format!("{count} sensors exceed {cells} grid cells")));
    }
    let mut rng = rng::rng_for(seed, rng::stream::SENSORS, 0);
    let positions = match strategy {
        PlacementStrategy::UniformRandom => index::sample(&mut rng, cells, count)
            .into_iter()
            .map(|i| (i / grid.cols, i % grid.cols))
            .collect(),
        PlacementStrategy::StratifiedJitter => {
            let (br, bc) = block_partition(grid, count)
                .ok_or_else(|| Error::invalid(format!("no block partition of {count} sensors fits the grid")))?;
            let mut out = Vec::with_capacity(count);
            for i in 0..br {
                let (r0, r1) = (i * grid.rows / br, (i + 1) * grid.rows / br);
                for j in 0..bc {
                    let (c0, c1) = (j * grid.cols / bc, (j + 1) * grid.cols / bc);
                    out.push((rng.gen_range(r0..r1), rng.gen_range(c0..c1)));
                }
            }
            out
        }
    };
    SensorLayout::new(grid, positions)
}

pub fn observe(field: &Field, layout: &SensorLayout) -> Result<Observation> {
    if field.grid() != layout.grid() {
        return Err(Error::invalid("field and sensor layout grids differ"));
    }
    Ok(Observation {
        values: layout.positions().iter().map(|&(r, c)| field.get(r, c)).collect(),
    })
}

/// Index of the nearest sensor for every cell, row-major.
///
/// Sensors are bucketed by row; each cell scans rows outward from its own and
/// stops once the row gap alone exceeds the best squared distance so far.
pub fn nearest_sensor_map(layout: &SensorLayout) -> Vec<usize> {
    let grid = layout.grid();
    let mut by_row: Vec<Vec<(usize, usize)>> = vec![Vec::new(); grid.rows];
    for (k, &(r, c)) in layout.positions().iter().enumerate() {
        by_row[r].push((c, k));
    }
    let mut out = vec![0usize; grid.cells()];
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let mut best = (u64::MAX, usize::MAX);
            for gap in 0..grid.rows {
                let gap2 = (gap * gap) as u64;
                if gap2 > best.0 {
                    break;
                }
                let mut visit = |row: usize| {
                    for &(sc, k) in &by_row[row] {
                        let dc = sc.abs_diff(c) as u64;
                        let cand = (gap2 + dc * dc, k);
                        if cand < best {
                            best = cand;
                        }
                    }
                };
                if r >= gap {
                    visit(r - gap);
                }
                if gap > 0 && r + gap < grid.rows {
                    visit(r + gap);
                }
            }
            out[r * grid.cols + c] = best.1;
        }
    }
    out
}

/// Fills every cell with its nearest sensor's reading.
pub fn voronoi_encode(obs: &Observation, layout: &SensorLayout, grid: Grid) -> Result<Field> {
    if layout.is_empty() {
        return Err(Error::Empty("sensor layout"));
    }
    if grid != layout.grid() {
        return Err(Error::invalid("requested grid differs from sensor layout grid"));
    }
    if obs.values.len() != layout.len() {
        return Err(Error::shape("observation", layout.len(), obs.values.len()));
    }
    let values = nearest_sensor_map(layout).into_iter().map(|k| obs.values[k]).collect();
    Field::new(grid, values)
}
