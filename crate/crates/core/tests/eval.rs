mod common;

use common::{tiny_config, tiny_dataset};
use fieldst::eval::*;
use fieldst::ssl::{Method, TrainConfig};
use ndarray::Array2;
use proptest::prelude::*;

fn tiny_spec() -> ProtocolSpec {
    ProtocolSpec {
        label_budgets: vec![2, 4],
        methods: vec![Method::Supervised, Method::SelfTraining, Method::UgeSt],
        seeds: vec![1, 2],
        aggregate: Aggregate::Median,
        train: TrainConfig { ensemble_size: 2, ..tiny_config(0) },
    }
}

#[test]
fn protocol_table_is_reproducible() {
    let ds = tiny_dataset(6, 8, 3, 30);
    let a = run_protocol(&ds, &tiny_spec()).unwrap();
    let b = run_protocol(&ds, &ProtocolSpec { train: TrainConfig { jobs: 3, ..tiny_spec().train }, ..tiny_spec() }).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.rows.len(), 6);
    assert_eq!(a.to_csv().lines().count(), 13);
    for row in &a.rows {
        assert!(row.runs.iter().all(|r| r.mae.is_some() && r.error.is_none()));
        let maes: Vec<f64> = row.runs.iter().map(|r| r.mae.unwrap()).collect();
        assert_eq!(row.aggregate, Aggregate::Median.apply(&maes));
    }
    let c = run_protocol(&ds, &tiny_spec()).unwrap();
    assert_eq!(a.to_json().unwrap(), c.to_json().unwrap());
}

#[test]
fn csv_values_parse_back_exactly() {
    let ds = tiny_dataset(4, 4, 2, 31);
    let spec = ProtocolSpec { label_budgets: vec![4], methods: vec![Method::Supervised], ..tiny_spec() };
    let table = run_protocol(&ds, &spec).unwrap();
    for (line, run) in table.to_csv().lines().skip(1).zip(&table.rows[0].runs) {
        let mae: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(Some(mae), run.mae);
    }
}

#[test]
fn failed_cells_are_recorded() {
    let ds = tiny_dataset(4, 0, 2, 32);
    let spec = ProtocolSpec {
        label_budgets: vec![4],
        methods: vec![Method::Supervised, Method::UgeSt],
        ..tiny_spec()
    };
    let table = run_protocol(&ds, &spec).unwrap();
    assert!(table.row(Method::Supervised, 4).unwrap().aggregate.is_some());
    let failed = table.row(Method::UgeSt, 4).unwrap();
    assert!(failed.aggregate.is_none());
    assert!(failed.runs.iter().all(|r| r.error.as_deref().unwrap().contains("unlabeled")));
    assert!(table.to_csv().contains("uge-st,4,1,\n"));
}

#[test]
fn protocol_rejects_bad_specs() {
    let ds = tiny_dataset(4, 2, 2, 33);
    let too_big = ProtocolSpec { label_budgets: vec![2, 5], ..tiny_spec() };
    assert!(run_protocol(&ds, &too_big).is_err());
    let descending = ProtocolSpec { label_budgets: vec![4, 2], ..tiny_spec() };
    assert!(run_protocol(&ds, &descending).is_err());
}

#[test]
fn ensemble_ablation_shapes_and_single_teacher_point() {
    let ds = tiny_dataset(4, 8, 3, 34);
    let spec = AblationSpec {
        seeds: vec![1, 2, 3],
        train: TrainConfig { use_uncertainty: false, ..tiny_config(0) },
        ..AblationSpec::default()
    };
    let ens = ablate_ensemble(&ds, &[1, 2], &spec).unwrap();
    assert_eq!(ens.per_seed.len(), 3);
    assert_eq!(ens.aggregate.iter().map(|p| p.n).collect::<Vec<_>>(), vec![1, 2]);
    let pt = ablate_pretrain(&ds, &spec).unwrap();
    for ((_, points), (_, arms)) in ens.per_seed.iter().zip(&pt.per_seed) {
        assert_eq!(points[0].pseudo_label, arms.pseudo_label);
        assert_eq!(points[0].pt_student, arms.pt_student);
        assert_eq!(points[0].uge_st, arms.uge_st);
    }
    assert!(ablate_ensemble(&ds, &[0], &spec).is_err());
}

#[test]
fn single_teacher_uncertainty_arms_coincide() {
    // one teacher has zero variance everywhere, so W is 1 and both arms train identically
    let ds = tiny_dataset(4, 8, 3, 35);
    let spec = AblationSpec { seeds: vec![4], train: tiny_config(0), ..AblationSpec::default() };
    let r = ablate_uncertainty(&ds, &[1, 2], &spec).unwrap();
    let a = r.aggregate[0];
    assert_eq!(a.pt_with, a.pt_without);
    assert_eq!(a.uge_with, a.uge_without);
}

#[test]
fn heatmap_export_files() {
    let dir = tempfile::TempDir::new().unwrap();
    let ds = tiny_dataset(2, 0, 1, 36);
    let field = &ds.test[0].field;
    let csv = dir.path().join("t.csv");
    export_heatmap(field, ds.grid, &csv, HeatmapFormat::Csv).unwrap();
    let (back, grid) = read_heatmap_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!((&back, grid), (field, ds.grid));
    let pgm = dir.path().join("t.pgm");
    export_heatmap(field, ds.grid, &pgm, HeatmapFormat::Pgm).unwrap();
    let text = std::fs::read_to_string(&pgm).unwrap();
    let pixels: Vec<u8> = text.lines().skip(3).flat_map(|l| l.split(' ').map(|p| p.parse::<u8>().unwrap())).collect();
    assert_eq!(pixels.len(), 100);
    assert_eq!(pixels.iter().min(), Some(&0));
    assert_eq!(pixels.iter().max(), Some(&255));
}

proptest! {
    #[test]
    fn mae_invariances(
        vals in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 12),
        alpha in 0.01f64..100.0,
        rot in 0usize..12,
    ) {
        let p = Array2::from_shape_vec((3, 4), vals.iter().map(|v| v.0).collect()).unwrap();
        let t = Array2::from_shape_vec((3, 4), vals.iter().map(|v| v.1).collect()).unwrap();
        let base = mae(p.view(), t.view()).unwrap();

        let mut pv: Vec<(f64, f64)> = vals.clone();
        pv.rotate_left(rot);
        let pp = Array2::from_shape_vec((3, 4), pv.iter().map(|v| v.0).collect()).unwrap();
        let tp = Array2::from_shape_vec((3, 4), pv.iter().map(|v| v.1).collect()).unwrap();
        let permuted = mae(pp.view(), tp.view()).unwrap();
        prop_assert!((permuted - base).abs() <= 1e-12 * base.max(1.0));

        let scaled = mae((&p * alpha).view(), (&t * alpha).view()).unwrap();
        prop_assert!((scaled - alpha * base).abs() <= 1e-12 * (alpha * base).max(1.0));
    }
}
