//! Time grids and channel × slot signals.
//!
//! A [`Signal`] is a dense matrix of named channels over coarse time slots. It
//! represents both price signals (the dual variable λ) and coupling
//! quantities (per-agent consumption/response profiles and the ascent
//! direction Y), which always share one shape per problem. A [`TimeGrid`]
//! describes the fine simulation steps and how they align with the slots.

use std::fmt;
use std::sync::Arc;

/// Fine time discretization with an aligned coarse slot structure.
///
/// `steps` fine steps of `dt` seconds are grouped into `slots` equal slots;
/// prices are piecewise constant per slot while simulations advance per step.
/// Unit-step discrete problems use `dt = 1.0` and one step per slot.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    steps: usize,
    dt: f64,
    slots: usize,
}

impl TimeGrid {
    /// A grid where every fine step is its own slot (discrete-time problems).
    pub fn unit_steps(steps: usize) -> Self {
        Self::new(steps, 1.0, steps).expect("unit grid is always valid")
    }

    pub fn new(steps: usize, dt: f64, slots: usize) -> Result<Self, SignalError> {
        if steps == 0 || slots == 0 {
            return Err(SignalError::EmptyGrid);
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SignalError::BadStepLength(dt));
        }
        if steps % slots != 0 {
            return Err(SignalError::MisalignedSlots { steps, slots });
        }
        Ok(Self { steps, dt, slots })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Fine step length in seconds.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn steps_per_slot(&self) -> usize {
        self.steps / self.slots
    }

    /// Seconds covered by one coarse slot.
    pub fn slot_seconds(&self) -> f64 {
        self.dt * self.steps_per_slot() as f64
    }

    /// Slot index containing fine step `t`.
    pub fn slot_of_step(&self, t: usize) -> usize {
        debug_assert!(t < self.steps);
        t / self.steps_per_slot()
    }

    /// Total horizon in seconds.
    pub fn horizon_seconds(&self) -> f64 {
        self.dt * self.steps as f64
    }
}

/// Shared descriptor of a signal family: channel names, slot count and the
/// per-slot weight used by the duality pairing ⟨λ, w⟩.
///
/// The weight is 1.0 for unit-step problems; physical problems use it to
/// carry unit conversions (e.g. watts × slot-length into the energy unit the
/// prices are quoted in) so that agent-side and aggregate-side pairings agree.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalShape {
    channels: Arc<[String]>,
    slots: usize,
    pairing_weight: f64,
}

impl SignalShape {
    pub fn new<S: Into<String>>(channels: Vec<S>, slots: usize) -> Self {
        Self::with_pairing_weight(channels, slots, 1.0)
    }

    pub fn with_pairing_weight<S: Into<String>>(
        channels: Vec<S>,
        slots: usize,
        pairing_weight: f64,
    ) -> Self {
        assert!(!channels.is_empty() && slots > 0, "shape must be non-empty");
        assert!(
            pairing_weight.is_finite() && pairing_weight > 0.0,
            "pairing weight must be positive"
        );
        Self {
            channels: channels.into_iter().map(Into::into).collect(),
            slots,
            pairing_weight,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channels
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn pairing_weight(&self) -> f64 {
        self.pairing_weight
    }

    pub fn len(&self) -> usize {
        self.channels() * self.slots
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Dense channels × slots matrix tied to a [`SignalShape`].
///
/// Also used for the dual variable; see [`PriceSignal`].
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    shape: SignalShape,
    values: Vec<f64>, // row-major: channel * slots + slot
}

/// The dual variable λ: one price channel per coupled quantity.
pub type PriceSignal = Signal;

impl Signal {
    pub fn zeros(shape: &SignalShape) -> Self {
        Self {
            shape: shape.clone(),
            values: vec![0.0; shape.len()],
        }
    }

    pub fn constant(shape: &SignalShape, value: f64) -> Self {
        Self {
            shape: shape.clone(),
            values: vec![value; shape.len()],
        }
    }

    /// Builds a signal from per-channel rows; row lengths must equal the slot count.
    pub fn from_rows(shape: &SignalShape, rows: &[Vec<f64>]) -> Result<Self, SignalError> {
        if rows.len() != shape.channels() || rows.iter().any(|r| r.len() != shape.slots()) {
            return Err(SignalError::ShapeMismatch);
        }
        Ok(Self {
            shape: shape.clone(),
            values: rows.concat(),
        })
    }

    pub fn shape(&self) -> &SignalShape {
        &self.shape
    }

    pub fn get(&self, channel: usize, slot: usize) -> f64 {
        self.values[channel * self.shape.slots() + slot]
    }

    pub fn set(&mut self, channel: usize, slot: usize, value: f64) {
        self.values[channel * self.shape.slots() + slot] = value;
    }

    pub fn channel(&self, channel: usize) -> &[f64] {
        let s = self.shape.slots();
        &self.values[channel * s..(channel + 1) * s]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// In-place `self += rho * other`; the stored result is exactly the f64
    /// expression `self[i] + rho * other[i]`, which the trace invariant
    /// re-checks bit-for-bit.
    pub fn axpy(&mut self, rho: f64, other: &Signal) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += rho * b;
        }
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &Signal) {
        self.axpy(1.0, other);
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// Unweighted squared ℓ² norm over all entries (used by the dual update
    /// diagnostics, which act coordinatewise).
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Duality pairing ⟨self, other⟩ = weight · Σ_{c,ℓ} self[c,ℓ]·other[c,ℓ].
    pub fn pair(&self, other: &Signal) -> f64 {
        debug_assert_eq!(self.shape, other.shape);
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        self.shape.pairing_weight() * dot
    }

    /// Largest absolute difference to another signal of the same shape.
    pub fn max_abs_diff(&self, other: &Signal) -> f64 {
        debug_assert_eq!(self.shape, other.shape);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SignalError {
    #[error("time grid must have at least one step and one slot")]
    EmptyGrid,
    #[error("step length must be positive and finite, got {0}")]
    BadStepLength(f64),
    #[error("{steps} fine steps do not divide evenly into {slots} slots")]
    MisalignedSlots { steps: usize, slots: usize },
    #[error("row data does not match the signal shape")]
    ShapeMismatch,
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, name) in self.shape.channel_names().iter().enumerate() {
            write!(f, "{name}: [")?;
            for (i, v) in self.channel(c).iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{v:.6}")?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}
