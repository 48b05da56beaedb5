mod common;

use std::collections::HashSet;

use common::{dense_poisson_solve, tiny_dataset};
use fieldst::field_sim::*;
use fieldst::rng;

fn layout(grid: Grid, boundary: f64, sources: Vec<HeatSource>) -> SourceLayout {
    SourceLayout { grid, boundary_value: boundary, sources }
}

fn src(y0: usize, x0: usize, y1: usize, x1: usize, intensity: f64) -> HeatSource {
    HeatSource { x0, y0, x1, y1, intensity }
}

#[test]
fn maximum_principle() {
    let gen = GenConfig { grid: Grid::new(24, 20), boundary_value: -0.7, ..GenConfig::default() };
    for seed in 0..20 {
        let l = sample_source_layout(seed, &gen).unwrap();
        let f = solve_steady_heat(&l, SOLVER_TOL).unwrap();
        assert!(f.values().iter().all(|&v| v >= -0.7), "seed {seed}");
    }
}

#[test]
fn linearity_in_intensity() {
    let g = Grid::new(16, 16);
    let base = layout(g, 0.0, vec![src(2, 3, 6, 9, 1.0), src(9, 9, 14, 12, 0.5)]);
    let doubled = layout(g, 0.0, base.sources.iter().map(|s| HeatSource { intensity: 2.0 * s.intensity, ..*s }).collect());
    let a = solve_steady_heat(&base, 1e-12).unwrap();
    let b = solve_steady_heat(&doubled, 1e-12).unwrap();
    let peak = a.values().iter().cloned().fold(0.0, f64::max);
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((2.0 * x - y).abs() <= 1e-9 * peak);
    }
}

#[test]
fn superposition() {
    let g = Grid::new(12, 14);
    let s1 = src(2, 2, 5, 5, 1.5);
    let s2 = src(6, 8, 10, 12, 0.8);
    let a = solve_steady_heat(&layout(g, 0.0, vec![s1]), 1e-12).unwrap();
    let b = solve_steady_heat(&layout(g, 0.0, vec![s2]), 1e-12).unwrap();
    let ab = solve_steady_heat(&layout(g, 0.0, vec![s1, s2]), 1e-12).unwrap();
    for i in 0..g.cells() {
        assert!((a.values()[i] + b.values()[i] - ab.values()[i]).abs() <= 1e-9);
    }
}

#[test]
fn direct_solve_on_rectangular_grid() {
    let g = Grid::new(7, 11);
    let l = layout(g, 0.25, vec![src(1, 1, 3, 4, 2.0), src(4, 7, 6, 10, 0.6)]);
    let f = solve_steady_heat(&l, SOLVER_TOL).unwrap();
    let direct = dense_poisson_solve(g, &source_field(&l), 0.25);
    for (x, y) in f.values().iter().zip(&direct) {
        assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
    }
}

#[test]
fn dataset_invariants() {
    let ds = tiny_dataset(5, 7, 3, 21);
    let ids: HashSet<u64> = ds.labeled.iter().chain(&ds.unlabeled).chain(&ds.test).map(|s| s.id).collect();
    assert_eq!(ids.len(), 15);
    let gen = GenConfig { grid: Grid::new(10, 10), max_sources: 3, ..GenConfig::default() };
    for s in ds.labeled.iter().chain(&ds.unlabeled).chain(&ds.test) {
        let l = sample_source_layout(rng::derive(21, rng::stream::SAMPLE, s.id), &gen).unwrap();
        let f = Field::new(ds.grid, s.field.clone()).unwrap();
        assert!(heat_residual(&l, &f) <= SOLVER_TOL);
        for (k, &(r, c)) in ds.sensors.positions().iter().enumerate() {
            assert_eq!(s.observation[k], s.field[ds.grid.index(r, c)]);
        }
    }
    let labeled = ds.labeled_set();
    let lo = labeled.targets.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = labeled.targets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!((lo, hi), (0.0, 1.0));
}

#[test]
fn dataset_file_roundtrip() {
    let dir = tempfile::TempDir::new().unwrap();
    let ds = tiny_dataset(3, 2, 2, 4);
    let path = dir.path().join("d.fsrd");
    save_dataset(&ds, &path).unwrap();
    let back = load_dataset(&path).unwrap();
    assert_eq!(back, ds);
    assert_eq!(std::fs::read(&path).unwrap(), ds.to_bytes().unwrap());
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(path.with_extension("json")).unwrap()).unwrap();
    assert_eq!(manifest["counts"]["labeled"], 3);
}

#[test]
fn truncated_dataset_is_rejected() {
    let ds = tiny_dataset(2, 1, 1, 4);
    let bytes = ds.to_bytes().unwrap();
    assert!(read_dataset(&bytes[..bytes.len() - 3]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(read_dataset(bad.as_slice()).is_err());
}
