//! Training regimes: supervised baseline, vanilla self-training, and
//! uncertainty guided ensemble self-training (ensemble teachers, weighted
//! pseudo-label pre-training, labeled fine-tuning).

mod config;
mod pipeline;
mod pseudo;
mod trainer;

pub use config::{Method, TrainConfig};
pub use pipeline::{
    finetune_student, layer_sizes_for, member_seed, pretrain_student, run_uge_st, train, train_ensemble_teachers,
    train_member, train_self_training, train_student_on_union, train_supervised, UgeStOutcome,
};
pub use pseudo::{
    ensemble_statistics, load_pseudo_labels, pseudo_label, read_pseudo_labels, save_pseudo_labels,
    uncertainty_weights, write_pseudo_labels, PseudoLabelSet, PSEUDO_MAGIC,
};
pub use trainer::{objective_loss, TrainReport};
