mod common;

use common::{tiny_config, tiny_dataset};
use fieldst::eval::SeedSession;
use fieldst::field_sim::{LabeledSet, UnlabeledSet};
use fieldst::numnet::DenseNet;
use fieldst::ssl::*;
use ndarray::{concatenate, Array2, Axis};

#[test]
fn supervised_overfits_one_sample() {
    let ds = tiny_dataset(1, 0, 1, 5);
    let labeled = ds.labeled_set();
    let config = TrainConfig { epochs: 200, batch_size: 1, hidden: vec![64], ..tiny_config(1) };
    let init = DenseNet::new(&layer_sizes_for(4, 100, &config), config.activation, config.seed).unwrap();
    let before = objective_loss(&init, labeled.inputs.view(), labeled.targets.view(), None).unwrap();
    let net = train_supervised(&labeled, &config).unwrap();
    let after = objective_loss(&net, labeled.inputs.view(), labeled.targets.view(), None).unwrap();
    assert!(after <= 0.1 * before, "loss {before} -> {after}");
}

#[test]
fn zero_epochs_returns_init() {
    let ds = tiny_dataset(3, 4, 1, 5);
    let config = TrainConfig { epochs: 0, ..tiny_config(2) };
    let net = train_supervised(&ds.labeled_set(), &config).unwrap();
    let init = DenseNet::new(&layer_sizes_for(4, 100, &config), config.activation, 2).unwrap();
    assert_eq!(net, init);
    let (fin, _) = finetune_student(init.clone(), &ds.labeled_set(), &config).unwrap();
    assert_eq!(fin, init);
}

#[test]
fn training_is_deterministic() {
    let ds = tiny_dataset(4, 6, 1, 5);
    let a = train_supervised(&ds.labeled_set(), &tiny_config(3)).unwrap();
    let b = train_supervised(&ds.labeled_set(), &tiny_config(3)).unwrap();
    assert_eq!(a, b);
    let c = train_supervised(&ds.labeled_set(), &tiny_config(4)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn empty_labeled_set_is_rejected() {
    let empty = LabeledSet { inputs: Array2::zeros((0, 4)), targets: Array2::zeros((0, 100)) };
    assert!(train_supervised(&empty, &tiny_config(0)).is_err());
}

#[test]
fn ensemble_members() {
    let ds = tiny_dataset(4, 0, 1, 6);
    let labeled = ds.labeled_set();
    let config = TrainConfig { ensemble_size: 3, ..tiny_config(9) };
    let serial = train_ensemble_teachers(&labeled, &config).unwrap();
    let parallel = train_ensemble_teachers(&labeled, &TrainConfig { jobs: 3, ..config.clone() }).unwrap();
    assert_eq!(serial, parallel);
    for i in 0..3 {
        for j in i + 1..3 {
            assert_ne!(serial[i].flat_params(), serial[j].flat_params());
        }
    }
    let one = train_ensemble_teachers(&labeled, &TrainConfig { ensemble_size: 1, ..config.clone() }).unwrap();
    assert_eq!(one[0], train_supervised(&labeled, &config.with_seed(member_seed(9, 0))).unwrap());
    assert_eq!(one[0], serial[0]);
}

#[test]
fn self_training_without_unlabeled_is_supervised() {
    let ds = tiny_dataset(4, 0, 1, 6);
    let empty = UnlabeledSet { inputs: Array2::zeros((0, 4)) };
    let st = train_self_training(&ds.labeled_set(), &empty, &tiny_config(1)).unwrap();
    assert_eq!(st, train_supervised(&ds.labeled_set(), &tiny_config(1)).unwrap());
}

#[test]
fn oracle_teacher_equals_union_training() {
    let ds = tiny_dataset(4, 6, 1, 6);
    let labeled = ds.labeled_set();
    let unlabeled = ds.unlabeled_set();
    let truth = ds.unlabeled_truth();
    let config = tiny_config(2);
    let (a, _) = train_student_on_union(&labeled, unlabeled.inputs.view(), truth.view(), None, &config).unwrap();
    let ones = Array2::ones(truth.dim());
    let (b, _) =
        train_student_on_union(&labeled, unlabeled.inputs.view(), truth.view(), Some(ones.view()), &config).unwrap();
    assert_eq!(a, b);
    let union = LabeledSet {
        inputs: concatenate![Axis(0), labeled.inputs, unlabeled.inputs],
        targets: concatenate![Axis(0), labeled.targets, truth],
    };
    let loss = |n: &DenseNet| objective_loss(n, union.inputs.view(), union.targets.view(), None).unwrap();
    let untrained = TrainConfig { epochs: 0, ..config };
    let (init, _) = train_student_on_union(&labeled, unlabeled.inputs.view(), truth.view(), None, &untrained).unwrap();
    assert!(loss(&a) < loss(&init));
}

#[test]
fn zero_weights_leave_parameters_at_init() {
    let ds = tiny_dataset(2, 5, 1, 7);
    let unlabeled = ds.unlabeled_set();
    let mut config = tiny_config(3);
    config.optimizer.weight_decay = 0.0;
    let pseudo = PseudoLabelSet {
        labels: ds.unlabeled_truth(),
        uncertainty: Array2::zeros((5, 100)),
        weights: Array2::zeros((5, 100)),
    };
    let (student, _) = pretrain_student(&pseudo, &unlabeled, &config).unwrap();
    let (untrained, _) = pretrain_student(&pseudo, &unlabeled, &TrainConfig { epochs: 0, ..config }).unwrap();
    assert_eq!(student, untrained);
}

#[test]
fn pretrain_overfits_one_pseudo_sample() {
    let ds = tiny_dataset(2, 1, 1, 7);
    let unlabeled = ds.unlabeled_set();
    let labels = ds.unlabeled_truth();
    let mut weights = Array2::from_elem(labels.dim(), 0.5);
    weights[[0, 0]] = 1.0;
    let pseudo = PseudoLabelSet { uncertainty: Array2::zeros(labels.dim()), labels, weights };
    let config = TrainConfig { epochs: 200, batch_size: 1, ..tiny_config(1) };
    let (_, report) = pretrain_student(&pseudo, &unlabeled, &config).unwrap();
    let first = report.epoch_losses[0];
    let last = *report.epoch_losses.last().unwrap();
    assert!(last <= 0.1 * first, "weighted loss {first} -> {last}");
}

#[test]
fn constant_uncertainty_matches_no_uncertainty() {
    let ds = tiny_dataset(3, 6, 1, 8);
    let unlabeled = ds.unlabeled_set();
    let labels = ds.unlabeled_truth();
    let uncertainty = Array2::from_elem(labels.dim(), 0.25);
    let mut weights = Array2::zeros(labels.dim());
    for (mut w, u) in weights.rows_mut().into_iter().zip(uncertainty.rows()) {
        w.assign(&ndarray::Array1::from(uncertainty_weights(&u.to_vec())));
    }
    let pseudo = PseudoLabelSet { labels, uncertainty, weights };
    let with = pretrain_student(&pseudo, &unlabeled, &tiny_config(4)).unwrap();
    let without = pretrain_student(&pseudo, &unlabeled, &TrainConfig { use_uncertainty: false, ..tiny_config(4) }).unwrap();
    assert_eq!(with.0, without.0);
    assert_eq!(with.1, without.1);
}

#[test]
fn uge_st_stages_compose() {
    let ds = tiny_dataset(4, 8, 2, 9);
    let labeled = ds.labeled_set();
    let unlabeled = ds.unlabeled_set();
    let config = TrainConfig { ensemble_size: 2, ..tiny_config(5) };
    let out = run_uge_st(&labeled, &unlabeled, &config).unwrap();
    assert_eq!(out.teachers, train_ensemble_teachers(&labeled, &config).unwrap());
    let pseudo = pseudo_label(&out.teachers, unlabeled.inputs.view()).unwrap();
    assert_eq!(out.pseudo, pseudo);
    let (pre, _) = pretrain_student(&pseudo, &unlabeled, &config).unwrap();
    assert_eq!(out.pretrained.as_ref(), Some(&pre));
    let (fin, _) = finetune_student(pre, &labeled, &config).unwrap();
    assert_eq!(out.student, fin);
    assert_eq!(train(Method::UgeSt, &labeled, &unlabeled, &config).unwrap(), fin);
}

#[test]
fn single_teacher_without_uncertainty_is_pt_arm() {
    let ds = tiny_dataset(4, 8, 2, 9);
    let config = TrainConfig { ensemble_size: 1, use_uncertainty: false, ..tiny_config(6) };
    let mut session = SeedSession::new(&ds, 4, &config).unwrap();
    let out = run_uge_st(session.labeled(), session.unlabeled(), &config).unwrap();
    assert_eq!(out.pretrained.as_ref().unwrap(), session.pretrained(1, false).unwrap());
    assert_eq!(out.student, session.finetuned(1, false).unwrap());
}

#[test]
fn joint_variant_runs() {
    let ds = tiny_dataset(4, 8, 2, 9);
    let config = TrainConfig { ensemble_size: 2, use_pretrain_finetune: false, ..tiny_config(6) };
    let out = run_uge_st(&ds.labeled_set(), &ds.unlabeled_set(), &config).unwrap();
    assert!(out.pretrained.is_none());
    assert!(out.student.flat_params().iter().all(|v| v.is_finite()));
}

#[test]
fn stage_inputs_are_isolated() {
    // pretraining never sees labeled data; fine-tuning never sees unlabeled data
    let a = tiny_dataset(4, 8, 2, 10);
    let b = tiny_dataset(4, 8, 2, 11);
    let config = TrainConfig { ensemble_size: 2, ..tiny_config(1) };
    let teachers = train_ensemble_teachers(&a.labeled_set(), &config).unwrap();
    let pseudo = pseudo_label(&teachers, a.unlabeled_set().inputs.view()).unwrap();
    let (pre, _) = pretrain_student(&pseudo, &a.unlabeled_set(), &config).unwrap();
    let (fin_a, _) = finetune_student(pre.clone(), &b.labeled_set(), &config).unwrap();
    let (fin_b, _) = finetune_student(pre, &b.labeled_set(), &config).unwrap();
    assert_eq!(fin_a, fin_b);
}

#[test]
fn finetuning_lowers_labeled_loss() {
    let ds = tiny_dataset(6, 12, 2, 12);
    let labeled = ds.labeled_set();
    let config = TrainConfig { epochs: 20, ensemble_size: 2, ..tiny_config(2) };
    let out = run_uge_st(&labeled, &ds.unlabeled_set(), &config).unwrap();
    let loss = |n: &DenseNet| objective_loss(n, labeled.inputs.view(), labeled.targets.view(), None).unwrap();
    assert!(loss(&out.student) <= loss(out.pretrained.as_ref().unwrap()));
}

#[test]
fn session_reuses_teachers_and_matches_pipeline() {
    let ds = tiny_dataset(6, 8, 2, 13);
    let config = TrainConfig { ensemble_size: 3, ..tiny_config(3) };
    let mut session = SeedSession::new(&ds, 6, &config).unwrap();
    let three = session.teachers(3).unwrap().to_vec();
    assert_eq!(three, train_ensemble_teachers(session.labeled(), &config).unwrap());
    assert_eq!(session.teachers(1).unwrap(), &three[..1]);
    let st = session.self_training().unwrap();
    assert_eq!(st, train_self_training(session.labeled(), session.unlabeled(), &config).unwrap());
    let uge = session.finetuned(3, true).unwrap();
    let labeled = session.labeled().clone();
    assert_eq!(uge, run_uge_st(&labeled, &ds.unlabeled_set(), &config).unwrap().student);
}
