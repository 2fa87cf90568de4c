//! Backward Riccati recursion for the priced local problem, exact moment
//! propagation under the resulting affine policy, and path simulation.

use nalgebra::{DMatrix, DVector};

use super::{LqgAgentParams, LqgError};
use crate::noise::NoiseStream;
use crate::signal::PriceSignal;

/// Affine feedback `u_t = gains[t]·x_t + offsets[t]`.
///
/// Gains depend only on the dynamics and cost weights; the price signal
/// enters through the offsets alone (and does so affinely).
#[derive(Clone, Debug)]
pub struct AffinePolicy {
    pub gains: Vec<DVector<f64>>,
    pub offsets: Vec<f64>,
    /// Optimal value `V₀(x₀)` of the solved objective
    /// `E[½Σ_t (d‖x_t‖² + q u_t² + λ_t u_t) + ½ d_f‖x_T‖²]`.
    pub value_at_start: f64,
}

impl AffinePolicy {
    pub fn horizon(&self) -> usize {
        self.offsets.len()
    }

    pub fn control(&self, t: usize, x: &DVector<f64>) -> f64 {
        self.gains[t].dot(x) + self.offsets[t]
    }
}

/// Price-independent part of the Riccati recursion: the quadratic pass
/// (gains, inverse curvatures, noise traces) depends only on dynamics and
/// weights, so agents precompute it once per horizon; each price signal then
/// needs only the cheap linear backward pass.
#[derive(Clone, Debug)]
pub(crate) struct RiccatiBackbone {
    horizon: usize,
    gains: Vec<DVector<f64>>,
    /// `P_{t+1} B` per step.
    pb: Vec<DVector<f64>>,
    /// Curvature `S_t = q + BᵀP_{t+1}B` per step.
    s: Vec<f64>,
    /// `½ CᵀP_{t+1}C` per step (value-function noise contribution).
    cpc: Vec<f64>,
    /// `½ x₀ᵀP₀x₀`.
    value_quad: f64,
}

pub(crate) fn riccati_backbone(
    params: &LqgAgentParams,
    horizon: usize,
) -> Result<RiccatiBackbone, LqgError> {
    params.validate()?;
    let d = params.state_dim();
    // Terminal condition for the quadratic coefficient.
    let mut p = DMatrix::<f64>::identity(d, d) * params.terminal_cost;
    let state_weight = DMatrix::<f64>::identity(d, d) * params.state_cost;

    let mut gains = vec![DVector::<f64>::zeros(d); horizon];
    let mut pb_all = vec![DVector::<f64>::zeros(d); horizon];
    let mut s_all = vec![0.0f64; horizon];
    let mut cpc = vec![0.0f64; horizon];

    for t in (0..horizon).rev() {
        let pb = &p * &params.b; // P_{t+1} B
        let s = params.control_cost + params.b.dot(&pb); // q + BᵀPB > 0
        let pa = &p * &params.a; // P_{t+1} A
        gains[t] = -(params.a.transpose() * &pb) / s; // K_tᵀ = −AᵀPB/S
        cpc[t] = 0.5 * (params.c.transpose() * &p * &params.c)[(0, 0)];
        s_all[t] = s;
        pb_all[t] = pb.clone();

        // P_t = dI + AᵀPA − (AᵀPB)(BᵀPA)/S, kept symmetric explicitly.
        let apa = params.a.transpose() * &pa;
        let apb = params.a.transpose() * &pb;
        let mut p_next = &state_weight + apa - (&apb * apb.transpose()) / s;
        p_next = (&p_next + p_next.transpose()) * 0.5;
        p = p_next;
    }

    let value_quad = 0.5 * (params.x0.transpose() * &p * &params.x0)[(0, 0)];
    Ok(RiccatiBackbone {
        horizon,
        gains,
        pb: pb_all,
        s: s_all,
        cpc,
        value_quad,
    })
}

impl RiccatiBackbone {
    pub(crate) fn horizon(&self) -> usize {
        self.horizon
    }
}

/// Linear backward pass for a concrete price signal: offsets
/// `k_t = −(λ_t/2 + Bᵀb_{t+1})/S_t`, `b_t = Aᵀ(b_{t+1} + P_{t+1}B k_t)`,
/// `c_t = c_{t+1} + ½CᵀP_{t+1}C − ½S_t k_t²`.
pub(crate) fn priced_policy(
    params: &LqgAgentParams,
    backbone: &RiccatiBackbone,
    lambda: &[f64],
) -> Result<AffinePolicy, LqgError> {
    if lambda.len() != backbone.horizon {
        return Err(LqgError::HorizonMismatch {
            got: lambda.len(),
            want: backbone.horizon,
        });
    }
    let d = params.state_dim();
    let mut b = DVector::<f64>::zeros(d);
    let mut c = 0.0f64;
    let mut offsets = vec![0.0f64; backbone.horizon];
    for t in (0..backbone.horizon).rev() {
        let offset = -(lambda[t] / 2.0 + params.b.dot(&b)) / backbone.s[t];
        let b_next = params.a.transpose() * (&b + &backbone.pb[t] * offset);
        let c_next = c + backbone.cpc[t] - 0.5 * backbone.s[t] * offset * offset;
        offsets[t] = offset;
        b = b_next;
        c = c_next;
    }
    let value_at_start = backbone.value_quad + b.dot(&params.x0) + c;
    let policy = AffinePolicy {
        gains: backbone.gains.clone(),
        offsets,
        value_at_start,
    };
    for (t, u) in exact_expected_control(params, &policy).iter().enumerate() {
        if u.abs() > params.box_bound {
            return Err(LqgError::BoxViolated {
                t,
                value: *u,
                bound: params.box_bound,
            });
        }
    }
    Ok(policy)
}

/// Minimizes `E[½ Σ_{t<T} (d‖x_t‖² + q u_t² + λ_t u_t) + ½ d_f‖x_T‖²]`
/// by dynamic programming with value function `½xᵀP_t x + b_tᵀx + c_t`.
///
/// The half in front of the price term is a normalization: doubling this
/// objective gives `Σ(d‖x‖² + q u²) + d_f‖x_T‖² + Σλ_t u_t`, i.e. exactly the
/// simulated local cost plus the plain price/control pairing, so dual-value
/// estimates assembled from simulated costs are consistent with this solver.
///
/// After solving, the mean trajectory is checked against the box bound; a
/// violation means the instance was mis-scaled for the unconstrained solver.
pub fn riccati_best_response(
    params: &LqgAgentParams,
    prices: &PriceSignal,
) -> Result<AffinePolicy, LqgError> {
    let lambda = prices.channel(0);
    let backbone = riccati_backbone(params, lambda.len())?;
    priced_policy(params, &backbone, lambda)
}

/// Mean controls under the policy: `x̄_{t+1} = A x̄_t + B ū_t` (noise is
/// centered), `ū_t = K_t x̄_t + k_t`.
pub fn exact_expected_control(params: &LqgAgentParams, policy: &AffinePolicy) -> Vec<f64> {
    let mut mean = params.x0.clone();
    let mut controls = Vec::with_capacity(policy.horizon());
    for t in 0..policy.horizon() {
        let u = policy.control(t, &mean);
        controls.push(u);
        mean = &params.a * &mean + &params.b * u;
    }
    controls
}

/// Exact `E[u_t²]` per step via joint mean/covariance propagation:
/// `Σ_{t+1} = (A + B K_t) Σ_t (A + B K_t)ᵀ + C Cᵀ`.
pub fn exact_control_second_moments(params: &LqgAgentParams, policy: &AffinePolicy) -> Vec<f64> {
    let d = params.state_dim();
    let mut mean = params.x0.clone();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut seconds = Vec::with_capacity(policy.horizon());
    for t in 0..policy.horizon() {
        let k = &policy.gains[t];
        let u_mean = policy.control(t, &mean);
        let u_var = (k.transpose() * &cov * k)[(0, 0)];
        seconds.push(u_mean * u_mean + u_var);
        let closed = &params.a + &params.b * k.transpose();
        mean = &closed * &mean + &params.b * policy.offsets[t];
        cov = &closed * cov * closed.transpose() + &params.c * params.c.transpose();
    }
    seconds
}

/// One noise path: returns the realized controls and the price-free local
/// cost `Σ_t (d‖x_t‖² + q u_t²) + d_f‖x_T‖²`.
pub fn simulate_lqg(
    params: &LqgAgentParams,
    policy: &AffinePolicy,
    stream: &mut NoiseStream,
) -> (Vec<f64>, f64) {
    let mut x = params.x0.clone();
    let mut cost = 0.0;
    let mut controls = Vec::with_capacity(policy.horizon());
    for t in 0..policy.horizon() {
        let u = policy.control(t, &x);
        controls.push(u);
        cost += params.state_cost * x.norm_squared() + params.control_cost * u * u;
        let noise = stream.standard_normal();
        x = &params.a * &x + &params.b * u + &params.c * noise;
    }
    cost += params.terminal_cost * x.norm_squared();
    (controls, cost)
}
