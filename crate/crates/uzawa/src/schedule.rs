//! Robbins–Monro step-size schedules ρ_k = a/(b+k).
//!
//! The gain sequence must satisfy Σρ_k = ∞ and Σρ_k² < ∞; the rational form
//! a/(b+k) does so for any a > 0, b ≥ 0. Iterations are 0-based throughout
//! the crate, so iteration k uses ρ_k = a/(b+k+1), which keeps b = 0 legal.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    a: f64,
    b: f64,
}

impl StepSchedule {
    pub fn new(a: f64, b: f64) -> Result<Self, ScheduleError> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(ScheduleError::NonPositiveGain(a));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(ScheduleError::NegativeOffset(b));
        }
        Ok(Self { a, b })
    }

    /// Step size at 0-based iteration `k`: a/(b+k+1).
    pub fn rho(&self, k: usize) -> f64 {
        self.a / (self.b + k as f64 + 1.0)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScheduleError {
    #[error("step schedule requires a > 0, got a = {0}")]
    NonPositiveGain(f64),
    #[error("step schedule requires b >= 0, got b = {0}")]
    NegativeOffset(f64),
}
