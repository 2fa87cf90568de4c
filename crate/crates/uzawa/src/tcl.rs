//! A fleet of thermostatically controlled loads (freezers) coordinated with a
//! stylized unit-commitment system through a two-channel price signal.
//!
//! Each device controls its temperature by switching a fixed-power compressor
//! ON or OFF; the population's mean consumption and mean deliverable
//! frequency-response capacity couple into the system operator's dispatch
//! problem. The module provides the device model ([`TclParams`]), the
//! discretization ([`TclGrid`]), dynamic-programming best responses
//! ([`hjb::hjb_best_response`]), path simulation ([`sim`]), the
//! unit-commitment aggregate ([`uc`]), a thermostat baseline, and the
//! end-to-end coordination experiment ([`coordination`]).
//!
//! # Price-sign convention
//!
//! The dual engine works with the standard multiplier λ = (λ_energy,
//! λ_response), paired positively against the coupling (mean consumption,
//! mean response). Devices are *paid* for response, so at an equilibrium the
//! response multiplier is non-positive; the conventional availability price
//! is its negation, ρ = −λ_response. Public artifacts and
//! [`hjb::hjb_best_response`] use the display pair (p, ρ); the oracle
//! adapters in [`coordination`] convert with [`coordination::display_prices`].

pub mod coordination;
pub mod hjb;
pub mod sim;
pub mod uc;

pub use coordination::{
    coordination_experiment, display_prices, write_artifacts, CoordinationConfig,
    CoordinationReport, ScenarioReport, TclAgent, TclAggregate, TclInstance,
};
pub use hjb::{hjb_best_response, OnOffPolicy};
pub use sim::{bau_baseline, hysteresis_path, simulate_tcl, BauOutcome, TclPath};
pub use uc::{aggregate_response, uc_cost, Dispatch, SlotDispatch, Technology, UcInstance};

use crate::noise::{NoiseStream, StreamLane};
use crate::qp::QpError;
use crate::signal::TimeGrid;

/// Average watts held for `seconds` expressed in MWh — the single conversion
/// between the device side (W) and the system side (MWh per slot).
pub fn watts_to_mwh(avg_watts: f64, seconds: f64) -> f64 {
    avg_watts * seconds / 3.6e9
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum TclError {
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("policy was solved on a different grid ({policy_steps} steps × {policy_nodes} nodes, grid has {grid_steps} × {grid_nodes})")]
    PolicyGridMismatch {
        policy_steps: usize,
        policy_nodes: usize,
        grid_steps: usize,
        grid_nodes: usize,
    },
    #[error("price signal has {got} slots, grid has {want}")]
    PriceSlotMismatch { got: usize, want: usize },
    #[error("dynamic-programming self-check failed at step {step}, node {node}: recomputed value differs by {difference:.3e}")]
    SchemeCheck {
        step: usize,
        node: usize,
        difference: f64,
    },
    #[error("dispatch problem infeasible in slot {slot}; most implicated constraints: {report}")]
    Infeasible {
        slot: usize,
        report: String,
        source: QpError,
    },
    #[error("dispatch solve failed in slot {slot}: {source}")]
    Dispatch { slot: usize, source: QpError },
    #[error("coordination run failed: {0}")]
    Coordination(String),
}

/// Physical and cost parameters of one device.
///
/// Temperatures in °C, times in seconds, power in W; the comfort weight
/// `alpha`, band weight `beta` and `terminal_weight` are in £/s(°C)² (resp.
/// £/(°C)² for the terminal one) so stage costs integrate in seconds.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TclParams {
    /// Thermal time constant γ [s].
    pub gamma: f64,
    /// Ambient temperature the device relaxes to when OFF [°C].
    pub x_off: f64,
    /// Heat-exchange parameter ζ [°C/W].
    pub zeta: f64,
    /// Temperature volatility [°C·s^(−1/2)]. Scenario values are usually
    /// quoted per √hour; see [`TclParams::with_sigma_per_sqrt_hour`].
    pub sigma: f64,
    /// Compressor power when ON [W].
    pub p_on: f64,
    /// Comfort weight on (X − X̄)² [£/s(°C)²].
    pub alpha: f64,
    /// Band-violation weight [£/s(°C)²].
    pub beta: f64,
    /// Comfort target X̄ [°C].
    pub x_bar: f64,
    /// Lower edge of the admissible band [°C].
    pub x_min: f64,
    /// Upper edge of the admissible band [°C].
    pub x_max: f64,
    /// Terminal weight on (X_T − X̄)² [£/(°C)²].
    pub terminal_weight: f64,
    /// Initial temperature [°C].
    pub x0: f64,
}

impl TclParams {
    /// Documented desk freezer: γ = 9000 s, ambient 20 °C, band [−21, −14] °C
    /// around a −17.5 °C target, 180 W compressor. The comfort weight is the
    /// per-hour value 0.2×10⁻⁴ £/h(°C)² normalized to seconds.
    pub fn desk() -> Self {
        Self {
            gamma: 9000.0,
            x_off: 20.0,
            zeta: 0.25,
            sigma: 0.0,
            p_on: 180.0,
            alpha: 0.2e-4 / 3600.0,
            beta: 50.0,
            x_bar: -17.5,
            x_min: -21.0,
            x_max: -14.0,
            terminal_weight: 0.5,
            x0: -17.5,
        }
    }

    /// Sets the volatility from a per-√hour figure (σ[°C·s^(−1/2)] = σ_h/60).
    pub fn with_sigma_per_sqrt_hour(mut self, sigma_per_sqrt_hour: f64) -> Self {
        self.sigma = sigma_per_sqrt_hour / 60.0;
        self
    }

    pub fn validate(&self) -> Result<(), TclError> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(TclError::Invalid(what.to_string()))
            }
        };
        check(self.gamma > 0.0, "thermal time constant must be positive")?;
        check(self.zeta > 0.0, "heat-exchange parameter must be positive")?;
        check(self.sigma >= 0.0, "volatility must be nonnegative")?;
        check(self.p_on > 0.0, "compressor power must be positive")?;
        check(
            self.x_min < self.x_bar && self.x_bar < self.x_max,
            "band must satisfy x_min < x_bar < x_max",
        )?;
        check(
            self.alpha >= 0.0 && self.beta >= 0.0 && self.terminal_weight >= 0.0,
            "cost weights must be nonnegative",
        )?;
        let all_finite = [
            self.gamma,
            self.x_off,
            self.zeta,
            self.sigma,
            self.p_on,
            self.alpha,
            self.beta,
            self.x_bar,
            self.x_min,
            self.x_max,
            self.terminal_weight,
            self.x0,
        ]
        .iter()
        .all(|v| v.is_finite());
        check(all_finite, "parameters must be finite")
    }

    /// Drift of the temperature SDE at temperature `x` under consumption `u` [°C/s].
    pub fn drift(&self, x: f64, u: f64) -> f64 {
        -(x - self.x_off + self.zeta * u) / self.gamma
    }

    /// Instantaneous discomfort rate [£/s]: comfort deviation plus the
    /// one-sided band penalties.
    pub fn discomfort_rate(&self, x: f64) -> f64 {
        let dev = x - self.x_bar;
        let below = (self.x_min - x).max(0.0);
        let above = (x - self.x_max).max(0.0);
        self.alpha * dev * dev + self.beta * (below * below + above * above)
    }

    /// Fraction of current consumption deliverable as frequency response:
    /// clamp((x − x_min)/(x_max − x_min), 0, 1).
    pub fn fr_fraction(&self, x: f64) -> f64 {
        ((x - self.x_min) / (self.x_max - self.x_min)).clamp(0.0, 1.0)
    }

    /// Terminal cost at final temperature `x` [£].
    pub fn terminal_cost(&self, x: f64) -> f64 {
        let dev = x - self.x_bar;
        self.terminal_weight * dev * dev
    }
}

/// Joint time/temperature discretization shared by the dynamic program and
/// the path simulator.
///
/// Time: `slots` price slots of `slot_seconds` each, subdivided into fine
/// steps whose length is `slot_seconds` divided by an integer (the requested
/// step is rounded to the nearest such divisor). Temperature: uniform nodes
/// of spacing `delta_t` covering at least `[x_lo, x_hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TclGrid {
    time: TimeGrid,
    x_lo: f64,
    delta_t: f64,
    nodes: usize,
}

impl TclGrid {
    pub fn new(
        slots: usize,
        slot_seconds: f64,
        dt_target: f64,
        delta_t: f64,
        x_lo: f64,
        x_hi: f64,
    ) -> Result<Self, TclError> {
        if slots == 0 || !(slot_seconds > 0.0) || !(dt_target > 0.0) {
            return Err(TclError::Invalid(
                "grid needs positive slot count, slot length and time step".into(),
            ));
        }
        if !(delta_t > 0.0) || !(x_hi > x_lo) {
            return Err(TclError::Invalid(
                "grid needs a positive temperature step and a nonempty range".into(),
            ));
        }
        let steps_per_slot = (slot_seconds / dt_target).round().max(1.0) as usize;
        let dt = slot_seconds / steps_per_slot as f64;
        let time = TimeGrid::new(slots * steps_per_slot, dt, slots)
            .map_err(|e| TclError::Invalid(e.to_string()))?;
        let intervals = ((x_hi - x_lo) / delta_t).ceil().max(1.0) as usize;
        Ok(Self {
            time,
            x_lo,
            delta_t,
            nodes: intervals + 1,
        })
    }

    /// 24 h in 48 half-hour slots at the reference resolution (≈7.6 s steps,
    /// 0.15 °C nodes), covering the device band with a 3 °C margin.
    pub fn desk(params: &TclParams) -> Self {
        Self::new(
            48,
            1800.0,
            7.6,
            0.15,
            params.x_min - 3.0,
            params.x_max + 3.0,
        )
        .expect("desk grid parameters are valid")
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn temperature_step(&self) -> f64 {
        self.delta_t
    }

    pub fn node_temperature(&self, node: usize) -> f64 {
        self.x_lo + node as f64 * self.delta_t
    }

    /// Nearest grid node, clamped to the covered range.
    pub fn nearest_node(&self, x: f64) -> usize {
        let raw = (x - self.x_lo) / self.delta_t;
        (raw.round().max(0.0) as usize).min(self.nodes - 1)
    }
}

/// A heterogeneous fleet: a base device plus multiplicative spread on the
/// thermal time constant and uniformly drawn initial temperatures.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct TclPopulation {
    pub base: TclParams,
    pub size: usize,
    /// Thermal time constants are scaled by U[1−spread, 1+spread].
    pub gamma_spread: f64,
}

impl TclPopulation {
    pub fn desk(size: usize) -> Self {
        Self {
            base: TclParams::desk(),
            size,
            gamma_spread: 0.1,
        }
    }

    /// Materializes the fleet. Draws come from the population lane of
    /// `seed`, so the fleet is identical across runs and worker counts.
    pub fn build(&self, seed: u64) -> Result<Vec<TclParams>, TclError> {
        self.base.validate()?;
        if self.size == 0 {
            return Err(TclError::Invalid("population must be nonempty".into()));
        }
        if !(0.0..1.0).contains(&self.gamma_spread) {
            return Err(TclError::Invalid(
                "gamma spread must lie in [0, 1)".into(),
            ));
        }
        let mut fleet = Vec::with_capacity(self.size);
        for i in 0..self.size {
            let mut stream = NoiseStream::derive_lane(seed, StreamLane::Population, i as u64, 0);
            let mut params = self.base.clone();
            params.x0 = stream.uniform(self.base.x_min, self.base.x_max);
            let scale = 1.0 + self.gamma_spread * stream.uniform(-1.0, 1.0);
            params.gamma = self.base.gamma * scale;
            fleet.push(params);
        }
        Ok(fleet)
    }
}
