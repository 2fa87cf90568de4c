//! Linear-quadratic population benchmark with exact oracles.
//!
//! Each agent controls linear dynamics `x_{t+1} = A x_t + B u_t + C ε_{t+1}`
//! (scalar control, state dimension arbitrary) under quadratic state/control
//! costs; the aggregate side penalizes the deviation of the mean control
//! profile from a target. Because every piece is linear-quadratic, best
//! responses (Riccati), expected controls, the dual function, and the
//! decentralization gap all have closed forms — which makes this family the
//! calibration ground for the ascent engine: every stochastic estimate can be
//! checked against an exact value.

mod experiment;
mod instance;
mod riccati;

pub use experiment::{bias_variance_experiment, ols_slope, BiasVarianceCell, BiasVarianceReport};
pub use instance::{v_opt_lqg, LqgAgent, LqgAggregate, LqgInstance};
pub use riccati::{
    exact_control_second_moments, exact_expected_control, riccati_best_response, simulate_lqg,
    AffinePolicy,
};

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LqgError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("price signal has {got} slots but the agent horizon is {want}")]
    HorizonMismatch { got: usize, want: usize },
    #[error(
        "mean-trajectory control {value:.3} at step {t} violates the box bound {bound:.3}; \
         the instance is mis-scaled"
    )]
    BoxViolated { t: usize, value: f64, bound: f64 },
}

/// One agent's dynamics and costs.
///
/// Stage cost (price-free part) is `d‖x_t‖² + q u_t²` summed over
/// `t = 0..T−1` plus `d_f‖x_T‖²`; the solver works with half of it plus half
/// of the price term (see [`riccati_best_response`]), which leaves optimal
/// controls unchanged and keeps the instance Lagrangian-consistent.
#[derive(Clone, Debug)]
pub struct LqgAgentParams {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Noise loading: one standard Gaussian per step enters as `C ε`.
    pub c: DVector<f64>,
    pub x0: DVector<f64>,
    /// State weight `d ≥ 0`.
    pub state_cost: f64,
    /// Control weight `q > 0` (strict convexity in the control).
    pub control_cost: f64,
    /// Terminal weight `d_f ≥ 0`.
    pub terminal_cost: f64,
    /// Controls must stay in `[−M, M]`; asserted on the mean trajectory
    /// after each best response. `INFINITY` disables the check (see
    /// [`LqgAgentParams::fitted_box_bound`]).
    pub box_bound: f64,
}

impl LqgAgentParams {
    /// Scalar-state convenience constructor with the box left unbounded.
    pub fn scalar(
        a: f64,
        b: f64,
        c: f64,
        x0: f64,
        state_cost: f64,
        control_cost: f64,
        terminal_cost: f64,
    ) -> Result<Self, LqgError> {
        let params = Self {
            a: DMatrix::from_element(1, 1, a),
            b: DVector::from_element(1, b),
            c: DVector::from_element(1, c),
            x0: DVector::from_element(1, x0),
            state_cost,
            control_cost,
            terminal_cost,
            box_bound: f64::INFINITY,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), LqgError> {
        let d = self.a.nrows();
        if !self.a.is_square() || self.b.len() != d || self.c.len() != d || self.x0.len() != d {
            return Err(LqgError::Invalid(
                "dynamics dimensions are inconsistent".into(),
            ));
        }
        if !(self.control_cost > 0.0) {
            return Err(LqgError::Invalid("control weight q must be > 0".into()));
        }
        if self.state_cost < 0.0 || self.terminal_cost < 0.0 {
            return Err(LqgError::Invalid("state weights must be ≥ 0".into()));
        }
        let finite = self.a.iter().chain(self.b.iter()).chain(self.c.iter()).chain(self.x0.iter());
        for v in finite {
            if !v.is_finite() {
                return Err(LqgError::Invalid("non-finite dynamics entry".into()));
            }
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    /// Box bound sized so the unconstrained optimum never touches it:
    /// 10× the zero-price policy's 6σ control range over the horizon.
    pub fn fitted_box_bound(&self, horizon: usize) -> Result<f64, LqgError> {
        let mut unbounded = self.clone();
        unbounded.box_bound = f64::INFINITY;
        let shape = crate::SignalShape::new(vec!["control"], horizon);
        let zero = crate::Signal::zeros(&shape);
        let policy = riccati_best_response(&unbounded, &zero)?;
        let means = exact_expected_control(&unbounded, &policy);
        let seconds = exact_control_second_moments(&unbounded, &policy);
        let mut range = 0.0f64;
        for (m, s2) in means.iter().zip(&seconds) {
            let sd = (s2 - m * m).max(0.0).sqrt();
            range = range.max(m.abs() + 6.0 * sd);
        }
        Ok(10.0 * range.max(0.1))
    }
}

/// Aggregate objective `F₀(v) = ν Σ_t (v_t − r_t)²` over the control channel.
#[derive(Clone, Debug)]
pub struct LqgAggregateParams {
    pub nu: f64,
    pub target: Vec<f64>,
}

impl LqgAggregateParams {
    pub fn new(nu: f64, target: Vec<f64>) -> Result<Self, LqgError> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(LqgError::Invalid("ν must be positive and finite".into()));
        }
        if target.iter().any(|r| !r.is_finite()) {
            return Err(LqgError::Invalid("target entries must be finite".into()));
        }
        Ok(Self { nu, target })
    }
}

/// Desk-scale defaults used across tests and the command-line experiment:
/// scalar state, `A = B = C = 1`, `x₀ = 1`, unit costs.
pub fn desk_agent() -> LqgAgentParams {
    LqgAgentParams::scalar(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).expect("desk parameters are valid")
}

/// Desk-scale aggregate: ν = 1 and a gentle ramp target `r_t = 0.1·t`.
pub fn desk_aggregate(horizon: usize) -> LqgAggregateParams {
    LqgAggregateParams::new(1.0, (0..horizon).map(|t| 0.1 * t as f64).collect())
        .expect("desk parameters are valid")
}
