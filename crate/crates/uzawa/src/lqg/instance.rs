//! Adapters plugging the linear-quadratic population into the ascent engine,
//! plus the exact quantities (dual value, decentralization gap) that make
//! this family useful as a calibration benchmark.

use super::riccati::{
    exact_control_second_moments, exact_expected_control, priced_policy, riccati_backbone,
    riccati_best_response, simulate_lqg, AffinePolicy, RiccatiBackbone,
};
use super::{LqgAgentParams, LqgAggregateParams, LqgError};
use crate::noise::{NoiseStream, StreamLane};
use crate::problem::{
    fingerprint_hex, AgentOracle, AggregateOracle, OracleError, ProblemInstance, SimOutcome,
};
use crate::signal::{PriceSignal, Signal, SignalShape};

/// `v(λ)`: minimizer of `ν Σ (v_t − r_t)² − Σ λ_t v_t`, i.e.
/// `v_t = r_t + λ_t / (2ν)`.
pub fn v_opt_lqg(agg: &LqgAggregateParams, prices: &PriceSignal) -> Signal {
    let lambda = prices.channel(0);
    let mut v = Signal::zeros(prices.shape());
    for (t, out) in v.values_mut().iter_mut().enumerate() {
        *out = agg.target[t] + lambda[t] / (2.0 * agg.nu);
    }
    v
}

#[derive(Clone, Debug)]
pub struct LqgAgent {
    pub params: LqgAgentParams,
    /// Price-independent Riccati pass, precomputed for the instance horizon.
    backbone: RiccatiBackbone,
}

impl LqgAgent {
    pub fn new(params: LqgAgentParams, horizon: usize) -> Result<Self, LqgError> {
        let backbone = riccati_backbone(&params, horizon)?;
        Ok(Self { params, backbone })
    }
}

impl AgentOracle for LqgAgent {
    type Policy = AffinePolicy;

    fn best_response(&self, prices: &PriceSignal) -> Result<AffinePolicy, OracleError> {
        let lambda = prices.channel(0);
        let result = if lambda.len() == self.backbone.horizon() {
            priced_policy(&self.params, &self.backbone, lambda)
        } else {
            riccati_best_response(&self.params, prices)
        };
        result.map_err(|e| OracleError::Agent(e.to_string()))
    }

    fn simulate(&self, policy: &AffinePolicy, stream: &mut NoiseStream) -> SimOutcome {
        let (controls, local_cost) = simulate_lqg(&self.params, policy, stream);
        let shape = SignalShape::new(vec!["control"], controls.len());
        let coupling =
            Signal::from_rows(&shape, &[controls]).expect("control path matches shape");
        SimOutcome {
            coupling,
            local_cost,
        }
    }

    fn expected_coupling(&self, policy: &AffinePolicy) -> Option<Signal> {
        let controls = exact_expected_control(&self.params, policy);
        let shape = SignalShape::new(vec!["control"], controls.len());
        Some(Signal::from_rows(&shape, &[controls]).expect("control path matches shape"))
    }
}

#[derive(Clone, Debug)]
pub struct LqgAggregate {
    pub params: LqgAggregateParams,
}

impl AggregateOracle for LqgAggregate {
    fn objective(&self, profile: &Signal) -> Result<f64, OracleError> {
        let v = profile.channel(0);
        if v.len() != self.params.target.len() {
            return Err(OracleError::Aggregate(format!(
                "profile has {} slots, target has {}",
                v.len(),
                self.params.target.len()
            )));
        }
        Ok(self
            .params
            .nu
            * v.iter()
                .zip(&self.params.target)
                .map(|(v, r)| (v - r) * (v - r))
                .sum::<f64>())
    }

    fn best_profile(&self, prices: &PriceSignal) -> Result<Signal, OracleError> {
        if prices.shape().slots() != self.params.target.len() {
            return Err(OracleError::Aggregate(format!(
                "price signal has {} slots, target has {}",
                prices.shape().slots(),
                self.params.target.len()
            )));
        }
        Ok(v_opt_lqg(&self.params, prices))
    }

    fn objective_gradient(&self, profile: &Signal) -> Option<Signal> {
        let mut g = Signal::zeros(profile.shape());
        for (t, out) in g.values_mut().iter_mut().enumerate() {
            *out = 2.0 * self.params.nu * (profile.channel(0)[t] - self.params.target[t]);
        }
        Some(g)
    }

    fn gradient_lipschitz(&self) -> Option<f64> {
        Some(2.0 * self.params.nu)
    }
}

/// A population of linear-quadratic agents coupled through the mean control.
pub struct LqgInstance {
    shape: SignalShape,
    agents: Vec<LqgAgent>,
    aggregate: LqgAggregate,
    fingerprint: String,
}

impl LqgInstance {
    pub fn homogeneous(
        n: usize,
        agent: LqgAgentParams,
        aggregate: LqgAggregateParams,
    ) -> Result<Self, LqgError> {
        Self::build(vec![agent; n], aggregate, "homogeneous")
    }

    /// Heterogeneous population: each agent scales the base costs and initial
    /// state by factors drawn from the dedicated population stream, so the
    /// same `(seed, spread)` always produces the same fleet.
    pub fn heterogeneous(
        n: usize,
        base: LqgAgentParams,
        aggregate: LqgAggregateParams,
        seed: u64,
        spread: f64,
    ) -> Result<Self, LqgError> {
        if !(0.0..1.0).contains(&spread) {
            return Err(LqgError::Invalid("spread must be in [0, 1)".into()));
        }
        let mut agents = Vec::with_capacity(n);
        for i in 0..n {
            let mut stream = NoiseStream::derive_lane(seed, StreamLane::Population, i as u64, 0);
            let mut p = base.clone();
            p.state_cost *= stream.uniform(1.0 - spread, 1.0 + spread);
            p.control_cost *= stream.uniform(1.0 - spread, 1.0 + spread);
            p.x0 *= stream.uniform(1.0 - spread, 1.0 + spread);
            agents.push(p);
        }
        Self::build(agents, aggregate, &format!("heterogeneous/{seed}/{spread}"))
    }

    fn build(
        mut agents: Vec<LqgAgentParams>,
        aggregate: LqgAggregateParams,
        variant: &str,
    ) -> Result<Self, LqgError> {
        if agents.is_empty() {
            return Err(LqgError::Invalid("population must be nonempty".into()));
        }
        let horizon = aggregate.target.len();
        if horizon == 0 {
            return Err(LqgError::Invalid("horizon must be positive".into()));
        }
        for p in &mut agents {
            p.validate()?;
            if !p.box_bound.is_finite() {
                p.box_bound = p.fitted_box_bound(horizon)?;
            }
        }
        let shape = SignalShape::new(vec!["control"], horizon);
        let fingerprint = fingerprint_hex(&format!(
            "lqg/{variant}/n={}/T={}/nu={}",
            agents.len(),
            horizon,
            aggregate.nu
        ));
        let agents = agents
            .into_iter()
            .map(|params| LqgAgent::new(params, horizon))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            shape,
            agents,
            aggregate: LqgAggregate { params: aggregate },
            fingerprint,
        })
    }

    pub fn horizon(&self) -> usize {
        self.shape.slots()
    }

    pub fn aggregate_params(&self) -> &LqgAggregateParams {
        &self.aggregate.params
    }

    /// `F₀*(λ) = ⟨λ, v(λ)⟩ − F₀(v(λ)) = Σ_t [λ_t r_t + λ_t²/(4ν)]`.
    pub fn conjugate_aggregate(&self, prices: &PriceSignal) -> f64 {
        let nu = self.aggregate.params.nu;
        prices
            .channel(0)
            .iter()
            .zip(&self.aggregate.params.target)
            .map(|(l, r)| l * r + l * l / (4.0 * nu))
            .sum()
    }

    /// Exact dual value `W(λ) = −F₀*(λ) + (2/n) Σ_i V₀^i(λ)`: each agent's
    /// Riccati value solves half the Lagrangian share, hence the factor 2.
    pub fn exact_dual_value(&self, prices: &PriceSignal) -> Result<f64, LqgError> {
        let mut local = 0.0;
        for agent in &self.agents {
            local += 2.0 * riccati_best_response(&agent.params, prices)?.value_at_start;
        }
        Ok(-self.conjugate_aggregate(prices) + local / self.agents.len() as f64)
    }

    /// Exact population-mean control trajectory under best responses to λ.
    pub fn exact_mean_control(&self, prices: &PriceSignal) -> Result<Signal, LqgError> {
        let mut mean = Signal::zeros(&self.shape);
        for agent in &self.agents {
            let policy = riccati_best_response(&agent.params, prices)?;
            let controls = exact_expected_control(&agent.params, &policy);
            for (t, u) in controls.iter().enumerate() {
                mean.set(0, t, mean.get(0, t) + u / self.agents.len() as f64);
            }
        }
        Ok(mean)
    }

    /// Exact decentralization gap
    /// `E[F₀(ū_pop)] − F₀(E ū_pop) = ν Σ_t Var(ū_pop,t)`
    /// with independent agents: `Var(ū_pop,t) = n⁻² Σ_i Var(u^i_t)`.
    pub fn exact_gap(&self, prices: &PriceSignal) -> Result<f64, LqgError> {
        let n = self.agents.len() as f64;
        let mut total_var = 0.0;
        for agent in &self.agents {
            let policy = riccati_best_response(&agent.params, prices)?;
            let means = exact_expected_control(&agent.params, &policy);
            let seconds = exact_control_second_moments(&agent.params, &policy);
            for (m, s2) in means.iter().zip(&seconds) {
                total_var += (s2 - m * m).max(0.0);
            }
        }
        Ok(self.aggregate.params.nu * total_var / (n * n))
    }

    /// `M̂² = max_i E‖u^i(λ)‖²`, the constant in the gap bound `ν M̂²/n`.
    pub fn max_control_second_moment(&self, prices: &PriceSignal) -> Result<f64, LqgError> {
        let mut worst = 0.0f64;
        for agent in &self.agents {
            let policy = riccati_best_response(&agent.params, prices)?;
            let total: f64 = exact_control_second_moments(&agent.params, &policy)
                .iter()
                .sum();
            worst = worst.max(total);
        }
        Ok(worst)
    }
}

impl ProblemInstance for LqgInstance {
    type Agent = LqgAgent;
    type Aggregate = LqgAggregate;

    fn agents(&self) -> &[LqgAgent] {
        &self.agents
    }

    fn aggregate(&self) -> &LqgAggregate {
        &self.aggregate
    }

    fn shape(&self) -> &SignalShape {
        &self.shape
    }

    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }
}
