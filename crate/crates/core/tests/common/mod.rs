#![allow(dead_code)]

use fieldst::field_sim::{build_dataset, Dataset, GenConfig, Grid};
use fieldst::sensing::{place_sensors, PlacementStrategy};
use fieldst::ssl::TrainConfig;

/// Small dataset that trains in milliseconds.
pub fn tiny_dataset(labeled: usize, unlabeled: usize, test: usize, seed: u64) -> Dataset {
    let gen = GenConfig {
        grid: Grid::new(10, 10),
        max_sources: 3,
        ..GenConfig::default()
    };
    let sensors = place_sensors(gen.grid, 4, PlacementStrategy::StratifiedJitter, seed).unwrap();
    build_dataset(labeled, unlabeled, test, &sensors, seed, &gen).unwrap()
}

pub fn tiny_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 4,
        batch_size: 4,
        hidden: vec![8],
        seed,
        ..TrainConfig::default()
    }
}

/// Direct solve of the 5-point Poisson system `-lap T = q` with Dirichlet
/// boundary, by Gaussian elimination with partial pivoting on the dense
/// interior matrix.
pub fn dense_poisson_solve(grid: Grid, q: &[f64], boundary: f64) -> Vec<f64> {
    let (ir, ic) = (grid.rows - 2, grid.cols - 2);
    let n = ir * ic;
    let at = |r: usize, c: usize| (r - 1) * ic + (c - 1);
    let mut a = vec![vec![0.0; n + 1]; n];
    for r in 1..=ir {
        for c in 1..=ic {
            let i = at(r, c);
            a[i][i] = 4.0;
            a[i][n] = q[grid.index(r, c)];
            for (nr, nc) in [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)] {
                if nr == 0 || nc == 0 || nr == grid.rows - 1 || nc == grid.cols - 1 {
                    a[i][n] += boundary;
                } else {
                    a[i][at(nr, nc)] = -1.0;
                }
            }
        }
    }
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs())).unwrap();
        a.swap(k, p);
        let (top, rest) = a.split_at_mut(k + 1);
        let pivot = &top[k];
        for row in rest {
            let f = row[k] / pivot[k];
            if f != 0.0 {
                for (x, p) in row[k..].iter_mut().zip(&pivot[k..]) {
                    *x -= f * p;
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (a[k][n] - s) / a[k][k];
    }
    let mut out = vec![boundary; grid.cells()];
    for r in 1..=ir {
        for c in 1..=ic {
            out[grid.index(r, c)] = x[at(r, c)];
        }
    }
    out
}
