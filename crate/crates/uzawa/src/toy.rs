//! Noiseless single-agent quadratic problem with a closed-form saddle point.
//!
//! One agent with local cost G(u) = ½‖u‖² faces the aggregate objective
//! F₀(v) = ½‖v − 1‖². The coupled optimum is u* = v* = ½ with multiplier
//! λ* = −½ and optimal value ¼ per slot; every quantity the ascent engine
//! produces on this instance can be checked by hand, which makes it the
//! reference fixture for the engine and both estimators.

use crate::noise::NoiseStream;
use crate::problem::{
    fingerprint_hex, AgentOracle, AggregateOracle, OracleError, ProblemInstance, SimOutcome,
};
use crate::signal::{PriceSignal, Signal, SignalShape};

pub struct ToyProblem {
    shape: SignalShape,
    agents: Vec<ToyAgent>,
    aggregate: ToyAggregate,
}

impl ToyProblem {
    /// The single-slot instance used by the `toy` subcommand and the tests.
    pub fn new() -> Self {
        Self::with_slots(1)
    }

    /// Same saddle point replicated over `slots` independent slots.
    pub fn with_slots(slots: usize) -> Self {
        let shape = SignalShape::new(vec!["energy"], slots);
        Self {
            agents: vec![ToyAgent {
                shape: shape.clone(),
            }],
            aggregate: ToyAggregate {
                shape: shape.clone(),
            },
            shape,
        }
    }

    /// The analytic saddle-point multiplier, −½ on every slot.
    pub fn saddle_multiplier(&self) -> Signal {
        Signal::constant(&self.shape, -0.5)
    }
}

impl Default for ToyProblem {
    fn default() -> Self {
        Self::new()
    }
}

pub struct ToyAgent {
    shape: SignalShape,
}

/// The agent's best response to λ is u = −λ (slot-wise).
pub struct ToyPolicy {
    control: Signal,
}

impl AgentOracle for ToyAgent {
    type Policy = ToyPolicy;

    fn best_response(&self, prices: &PriceSignal) -> Result<Self::Policy, OracleError> {
        let mut control = Signal::zeros(&self.shape);
        for (u, l) in control.values_mut().iter_mut().zip(prices.values()) {
            *u = -l;
        }
        Ok(ToyPolicy { control })
    }

    fn simulate(&self, policy: &Self::Policy, _stream: &mut NoiseStream) -> SimOutcome {
        SimOutcome {
            coupling: policy.control.clone(),
            local_cost: 0.5 * policy.control.norm_sq(),
        }
    }

    fn expected_coupling(&self, policy: &Self::Policy) -> Option<Signal> {
        Some(policy.control.clone())
    }
}

pub struct ToyAggregate {
    shape: SignalShape,
}

impl AggregateOracle for ToyAggregate {
    fn objective(&self, profile: &Signal) -> Result<f64, OracleError> {
        Ok(profile.values().iter().map(|v| 0.5 * (v - 1.0).powi(2)).sum())
    }

    fn best_profile(&self, prices: &PriceSignal) -> Result<Signal, OracleError> {
        // argmin ½(v−1)² − λv = 1 + λ.
        let mut v = Signal::zeros(&self.shape);
        for (out, l) in v.values_mut().iter_mut().zip(prices.values()) {
            *out = 1.0 + l;
        }
        Ok(v)
    }

    fn objective_gradient(&self, profile: &Signal) -> Option<Signal> {
        let mut g = profile.clone();
        for v in g.values_mut() {
            *v -= 1.0;
        }
        Some(g)
    }

    fn gradient_lipschitz(&self) -> Option<f64> {
        Some(1.0)
    }
}

impl ProblemInstance for ToyProblem {
    type Agent = ToyAgent;
    type Aggregate = ToyAggregate;

    fn agents(&self) -> &[ToyAgent] {
        &self.agents
    }

    fn aggregate(&self) -> &ToyAggregate {
        &self.aggregate
    }

    fn shape(&self) -> &SignalShape {
        &self.shape
    }

    fn fingerprint(&self) -> String {
        fingerprint_hex(&format!("toy-quadratic slots={}", self.shape.slots()))
    }
}
