//! Reconstruction of dense 2D physics fields from sparse sensor readings,
//! trained with uncertainty guided ensemble self-training.
//!
//! The crate is organised bottom-up:
//!
//! - [`numnet`]: a small dense network with hand-written backprop, L1 losses,
//!   AdamW and a cosine-annealing warm-restart schedule.
//! - [`field_sim`]: synthetic steady-state heat fields and the on-disk dataset.
//! - [`sensing`]: sensor placement, point observation and Voronoi encoding.
//! - [`ssl`]: supervised, self-training and ensemble self-training regimes.
//! - [`eval`]: MAE, label-budget protocol, ablations and heatmap export.
//!
//! All arithmetic is `f64`. Every trainer is a deterministic function of its
//! dataset and configuration.

pub mod error;
pub mod eval;
pub mod field_sim;
pub mod numnet;
pub mod rng;
pub mod sensing;
pub mod ssl;

pub use error::{Error, Result};
pub use field_sim::{Dataset, Field, GenConfig, Grid, Normalization, Sample, SourceLayout, Split};
pub use numnet::{Activation, DenseNet, Gradients, LrSchedule, OptimState};
pub use sensing::{Observation, PlacementStrategy, SensorLayout};
pub use ssl::{Method, PseudoLabelSet, TrainConfig};
