//! Oracle traits shared by every coupled problem.
//!
//! A problem couples `n` agents to an aggregate objective through the
//! population mean of a per-agent coupling quantity. Price decomposition
//! needs exactly three capabilities: each agent can best-respond to a price
//! signal and simulate the resulting (possibly random) coupling trajectory,
//! and the aggregate side can evaluate its objective F₀ and minimize
//! F₀(v) − ⟨λ, v⟩ over profiles v.

use crate::noise::NoiseStream;
use crate::signal::{PriceSignal, Signal, SignalShape};

/// One simulated realization of an agent's coupling trajectory together with
/// the realized local cost G_i (price terms excluded — pairings against λ are
/// applied by the caller so both sides always use the same inner product).
#[derive(Clone, Debug)]
pub struct SimOutcome {
    pub coupling: Signal,
    pub local_cost: f64,
}

/// A single agent: deterministic best response and seeded simulation.
pub trait AgentOracle: Sync {
    type Policy: Send + Sync;

    /// Solves argmin E[G_i(u)] + ⟨λ, u⟩ over the agent's admissible controls.
    fn best_response(&self, prices: &PriceSignal) -> Result<Self::Policy, OracleError>;

    /// Plays the policy against one fresh noise realization. Deterministic in
    /// `(policy, stream)`.
    fn simulate(&self, policy: &Self::Policy, stream: &mut NoiseStream) -> SimOutcome;

    /// Exact E[coupling] under the policy, where analytically available.
    fn expected_coupling(&self, _policy: &Self::Policy) -> Option<Signal> {
        None
    }
}

/// The aggregate side: objective F₀ and its price-tilted minimizer v(λ).
pub trait AggregateOracle: Sync {
    /// Evaluates F₀ at a coupling profile.
    fn objective(&self, profile: &Signal) -> Result<f64, OracleError>;

    /// A selection v(λ) from argmin_v F₀(v) − ⟨λ, v⟩.
    fn best_profile(&self, prices: &PriceSignal) -> Result<Signal, OracleError>;

    /// ∇F₀ where analytically available (enables the control-variate form of
    /// the gap estimator).
    fn objective_gradient(&self, _profile: &Signal) -> Option<Signal> {
        None
    }

    /// Lipschitz constant of ∇F₀, if known.
    fn gradient_lipschitz(&self) -> Option<f64> {
        None
    }
}

/// A fully wired instance: agents, aggregate, and the shared signal shape.
pub trait ProblemInstance: Sync {
    type Agent: AgentOracle;
    type Aggregate: AggregateOracle;

    fn agents(&self) -> &[Self::Agent];
    fn aggregate(&self) -> &Self::Aggregate;
    fn shape(&self) -> &SignalShape;

    /// Stable content hash of the instance parameters, recorded in trace
    /// metadata so outputs can be matched to the exact instance that
    /// produced them.
    fn fingerprint(&self) -> String;

    fn population(&self) -> usize {
        self.agents().len()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("agent solve failed: {0}")]
    Agent(String),
    #[error("aggregate solve failed: {0}")]
    Aggregate(String),
    #[error("missing capability: {0}")]
    MissingCapability(&'static str),
}

/// Short stable hex fingerprint of a canonical parameter description.
pub fn fingerprint_hex(description: &str) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(description.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
