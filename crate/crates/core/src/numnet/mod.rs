//! Dense feedforward network with reverse-mode gradients, L1 losses, AdamW
//! and cosine annealing with warm restarts.

mod checkpoint;
mod loss;
mod net;
mod optim;
mod schedule;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use loss::{l1_loss, weighted_l1_into, weighted_l1_loss};
pub use net::{Activation, DenseNet, ForwardCache, Gradients, Layer, LEAKY_SLOPE};
pub use optim::{adamw_step, AdamWConfig, OptimState};
pub use schedule::{lr_at, LrSchedule};
