use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Cosine annealing with warm restarts. Cycle `i` lasts `t0 * t_mult^i`
/// epochs; the rate restarts at `lr_max` at every cycle boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub lr_max: f64,
    pub lr_min: f64,
    pub t0: u32,
    pub t_mult: u32,
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule {
            lr_max: 1e-3,
            lr_min: 0.0,
            t0: 10,
            t_mult: 2,
        }
    }
}

impl LrSchedule {
    /// Position `(t_cur, t_i)` of a (possibly fractional) epoch inside its cycle.
    fn cycle_position(&self, epoch: f64) -> (f64, f64) {
        let t0 = self.t0.max(1) as f64;
        let epoch = epoch.max(0.0);
        if self.t_mult <= 1 {
            return (epoch % t0, t0);
        }
        let mult = self.t_mult as f64;
        let (mut t_cur, mut t_i) = (epoch, t0);
        while t_cur >= t_i {
            t_cur -= t_i;
            t_i *= mult;
        }
        (t_cur, t_i)
    }

    pub fn lr_at(&self, epoch: f64) -> f64 {
        let (t_cur, t_i) = self.cycle_position(epoch);
        let lr = self.lr_min + 0.5 * (self.lr_max - self.lr_min) * (1.0 + (PI * t_cur / t_i).cos());
        lr.clamp(self.lr_min, self.lr_max)
    }
}

pub fn lr_at(schedule: &LrSchedule, epoch: f64) -> f64 {
    schedule.lr_at(epoch)
}
