//! Price-decomposition dual ascent: stochastic, sampled, and exact-gradient
//! variants, plus the dual-value and decentralization-gap estimators.
//!
//! All three algorithms share one loop. Per iteration k they solve the
//! aggregate profile v(λ^k), obtain per-agent coupling realizations, form the
//! ascent direction
//!
//! ```text
//! Y^{k+1} = (1/n) Σ_i  u^i(λ^k)(ω^{i,k+1})  −  v(λ^k)      (full population)
//! Y^{k+1} = (1/m) Σ_j  u^{I_j}(λ^k)(ω^{j,k+1}) − v(λ^k)    (sampled, I_j ~ U{1..n})
//! Y^{k+1} = (1/n) Σ_i  E[u^i(λ^k)]          −  v(λ^k)      (exact gradient)
//! ```
//!
//! and update λ^{k+1} = λ^k + ρ_k Y^{k+1}. Agent solves run concurrently;
//! the reduction over agents is a fixed-order sequential sum, so traces are
//! bit-identical for any worker count.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::noise::{NoiseStream, StreamLane};
use crate::problem::{AgentOracle, AggregateOracle, OracleError, ProblemInstance};
use crate::schedule::StepSchedule;
use crate::signal::{PriceSignal, Signal};
use crate::trace::{DualTrace, IterationRecord};

/// How the per-iteration ascent direction is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientMode {
    /// One fresh realization for every agent.
    Full,
    /// `m` agents drawn uniformly with replacement, one realization each.
    Sampled(usize),
    /// Exact expectations; requires every agent to expose them.
    Exact,
}

/// Periodic dual-value estimation inside the ascent loop.
#[derive(Clone, Copy, Debug)]
pub struct EvalDual {
    pub every: usize,
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct AscentOptions {
    /// Store every `thinning`-th iteration (1 keeps the full trace).
    pub thinning: usize,
    /// Estimate Ŵ(λ^k) periodically and store it in the trace.
    pub eval_dual: Option<EvalDual>,
    /// Abort when ‖λ^k‖ exceeds `divergence_factor · (‖λ⁰‖ + 1)`.
    pub divergence_factor: f64,
    /// Assert the calibrated growth bound ‖Y‖² ≤ M₁ + M₂‖λ‖² each iteration.
    pub growth_check: bool,
    /// Starting multiplier; zero signal when absent.
    pub initial_lambda: Option<Signal>,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            thinning: 1,
            eval_dual: None,
            divergence_factor: 1e6,
            growth_check: true,
            initial_lambda: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AscentError {
    #[error("iteration {iteration}, agent {agent}: {source}")]
    Agent {
        iteration: usize,
        agent: usize,
        source: OracleError,
    },
    #[error("iteration {iteration}: {source}")]
    Aggregate {
        iteration: usize,
        source: OracleError,
    },
    #[error("iteration {iteration}: ascent direction contains non-finite entries")]
    NonFiniteDirection { iteration: usize },
    #[error("iteration {iteration}: non-finite local cost in estimator")]
    NonFiniteCost { iteration: usize },
    #[error(
        "iteration {iteration}: ‖λ‖ = {norm:.3e} exceeded the divergence guard {bound:.3e}; \
         the instance is likely mis-specified"
    )]
    Diverged {
        iteration: usize,
        norm: f64,
        bound: f64,
    },
    #[error(
        "iteration {iteration}: ‖Y‖² = {norm_sq:.3e} exceeded the calibrated growth bound \
         {bound:.3e}"
    )]
    GrowthBoundExceeded {
        iteration: usize,
        norm_sq: f64,
        bound: f64,
    },
    #[error("{0}")]
    MissingCapability(&'static str),
    #[error("{0}")]
    InvalidArgument(String),
}

/// Full-population stochastic ascent (one realization per agent per iteration).
pub fn stochastic_uzawa<P: ProblemInstance>(
    problem: &P,
    schedule: &StepSchedule,
    iterations: usize,
    seed: u64,
) -> Result<DualTrace, AscentError> {
    run_ascent(
        problem,
        schedule,
        iterations,
        seed,
        GradientMode::Full,
        &AscentOptions::default(),
    )
}

pub fn stochastic_uzawa_with<P: ProblemInstance>(
    problem: &P,
    schedule: &StepSchedule,
    iterations: usize,
    seed: u64,
    options: &AscentOptions,
) -> Result<DualTrace, AscentError> {
    run_ascent(
        problem,
        schedule,
        iterations,
        seed,
        GradientMode::Full,
        options,
    )
}

/// Sampled variant: only `m` uniformly drawn agents (with replacement) are
/// solved per iteration.
pub fn sampled_stochastic_uzawa<P: ProblemInstance>(
    problem: &P,
    sample_size: usize,
    schedule: &StepSchedule,
    iterations: usize,
    seed: u64,
) -> Result<DualTrace, AscentError> {
    run_ascent(
        problem,
        schedule,
        iterations,
        seed,
        GradientMode::Sampled(sample_size),
        &AscentOptions::default(),
    )
}

pub fn sampled_stochastic_uzawa_with<P: ProblemInstance>(
    problem: &P,
    sample_size: usize,
    schedule: &StepSchedule,
    iterations: usize,
    seed: u64,
    options: &AscentOptions,
) -> Result<DualTrace, AscentError> {
    run_ascent(
        problem,
        schedule,
        iterations,
        seed,
        GradientMode::Sampled(sample_size),
        options,
    )
}

/// Exact-gradient reference ascent; requires exact expected couplings.
pub fn deterministic_uzawa<P: ProblemInstance>(
    problem: &P,
    schedule: &StepSchedule,
    iterations: usize,
) -> Result<DualTrace, AscentError> {
    run_ascent(
        problem,
        schedule,
        iterations,
        0,
        GradientMode::Exact,
        &AscentOptions::default(),
    )
}

pub fn deterministic_uzawa_with<P: ProblemInstance>(
    problem: &P,
    schedule: &StepSchedule,
    iterations: usize,
    options: &AscentOptions,
) -> Result<DualTrace, AscentError> {
    run_ascent(
        problem,
        schedule,
        iterations,
        0,
        GradientMode::Exact,
        options,
    )
}

fn run_ascent<P: ProblemInstance>(
    problem: &P,
    schedule: &StepSchedule,
    iterations: usize,
    seed: u64,
    mode: GradientMode,
    options: &AscentOptions,
) -> Result<DualTrace, AscentError> {
    let n = problem.population();
    if n == 0 {
        return Err(AscentError::InvalidArgument(
            "problem has no agents".into(),
        ));
    }
    if let GradientMode::Sampled(m) = mode {
        if m == 0 {
            return Err(AscentError::InvalidArgument(
                "sample size m must be at least 1".into(),
            ));
        }
    }
    if options.thinning == 0 {
        return Err(AscentError::InvalidArgument("thinning must be ≥ 1".into()));
    }

    let shape = problem.shape().clone();
    let mut lambda = match &options.initial_lambda {
        Some(l) => {
            if l.shape() != &shape {
                return Err(AscentError::InvalidArgument(
                    "initial multiplier does not match the problem's signal shape".into(),
                ));
            }
            l.clone()
        }
        None => Signal::zeros(&shape),
    };

    let growth_bound = if options.growth_check {
        Some(calibrate_growth_bound(problem, &lambda, mode, seed)?)
    } else {
        None
    };
    let divergence_bound = options.divergence_factor * (lambda.norm() + 1.0);

    let mut records = Vec::with_capacity(iterations / options.thinning + 1);
    for k in 0..iterations {
        let started = Instant::now();
        let direction = ascent_direction(problem, &lambda, mode, seed, k as u64, k)?;
        if !direction.is_finite() {
            return Err(AscentError::NonFiniteDirection { iteration: k });
        }
        if let Some((m1, m2)) = growth_bound {
            let bound = m1 + m2 * lambda.norm_sq();
            let norm_sq = direction.norm_sq();
            if norm_sq > bound {
                return Err(AscentError::GrowthBoundExceeded {
                    iteration: k,
                    norm_sq,
                    bound,
                });
            }
        }
        let dual_value = match &options.eval_dual {
            Some(cfg) if k % cfg.every == 0 => Some(
                estimate_dual_value(
                    problem,
                    &lambda,
                    cfg.samples,
                    NoiseStream::derive_master(seed, "in-run-dual", k as u64),
                )?
                .value,
            ),
            _ => None,
        };
        let rho = schedule.rho(k);
        let mut next = lambda.clone();
        next.axpy(rho, &direction);
        if next.norm() > divergence_bound {
            return Err(AscentError::Diverged {
                iteration: k,
                norm: next.norm(),
                bound: divergence_bound,
            });
        }
        if k % options.thinning == 0 {
            records.push(IterationRecord {
                k,
                lambda: lambda.clone(),
                direction,
                rho,
                dual_value,
                wall: started.elapsed(),
            });
        }
        lambda = next;
    }

    Ok(DualTrace::new(records, lambda, iterations, options.thinning))
}

/// One ascent direction exactly as the loop forms it at iteration `k`
/// (exposed so tests can replay and redraw individual directions).
pub fn gradient_sample<P: ProblemInstance>(
    problem: &P,
    lambda: &PriceSignal,
    mode: GradientMode,
    seed: u64,
    iteration: u64,
) -> Result<Signal, AscentError> {
    ascent_direction(problem, lambda, mode, seed, iteration, iteration as usize)
}

fn ascent_direction<P: ProblemInstance>(
    problem: &P,
    lambda: &PriceSignal,
    mode: GradientMode,
    seed: u64,
    stream_iteration: u64,
    error_iteration: usize,
) -> Result<Signal, AscentError> {
    let aggregate_profile =
        problem
            .aggregate()
            .best_profile(lambda)
            .map_err(|source| AscentError::Aggregate {
                iteration: error_iteration,
                source,
            })?;

    let agents = problem.agents();
    let n = agents.len();
    let couplings: Vec<Signal> = match mode {
        GradientMode::Full => agents
            .par_iter()
            .enumerate()
            .map(|(i, agent)| {
                let policy = agent.best_response(lambda).map_err(|source| {
                    AscentError::Agent {
                        iteration: error_iteration,
                        agent: i,
                        source,
                    }
                })?;
                let mut stream = NoiseStream::derive(seed, i as u64, stream_iteration);
                Ok(agent.simulate(&policy, &mut stream).coupling)
            })
            .collect::<Result<_, AscentError>>()?,
        GradientMode::Exact => agents
            .par_iter()
            .enumerate()
            .map(|(i, agent)| {
                let policy = agent.best_response(lambda).map_err(|source| {
                    AscentError::Agent {
                        iteration: error_iteration,
                        agent: i,
                        source,
                    }
                })?;
                agent.expected_coupling(&policy).ok_or(
                    AscentError::MissingCapability(
                        "exact-gradient ascent requires agents with exact expected couplings",
                    ),
                )
            })
            .collect::<Result<_, AscentError>>()?,
        GradientMode::Sampled(m) => {
            let mut sampler =
                NoiseStream::derive_lane(seed, StreamLane::Sampling, 0, stream_iteration);
            let indices: Vec<usize> = (0..m).map(|_| sampler.uniform_index(n)).collect();
            // Each distinct agent is solved once even when drawn repeatedly.
            let unique: Vec<usize> = {
                let mut set: Vec<usize> = indices.clone();
                set.sort_unstable();
                set.dedup();
                set
            };
            let policies: BTreeMap<usize, <P::Agent as AgentOracle>::Policy> = unique
                .par_iter()
                .map(|&i| {
                    let policy = agents[i].best_response(lambda).map_err(|source| {
                        AscentError::Agent {
                            iteration: error_iteration,
                            agent: i,
                            source,
                        }
                    })?;
                    Ok((i, policy))
                })
                .collect::<Result<_, AscentError>>()?;
            indices
                .par_iter()
                .enumerate()
                .map(|(j, &i)| {
                    // Noise is indexed by the sample slot j, not the agent.
                    let mut stream =
                        NoiseStream::derive(seed, j as u64, stream_iteration);
                    Ok(agents[i].simulate(&policies[&i], &mut stream).coupling)
                })
                .collect::<Result<_, AscentError>>()?
        }
    };

    // Fixed-order reduction keeps results bit-identical across worker counts.
    let mut direction = Signal::zeros(lambda.shape());
    for coupling in &couplings {
        direction.add_assign(coupling);
    }
    direction.scale(1.0 / couplings.len() as f64);
    direction.axpy(-1.0, &aggregate_profile);
    Ok(direction)
}

/// Measures M₁, M₂ with ‖Y‖² ≤ M₁ + M₂‖λ‖² from setup probes at λ⁰ and at a
/// unit signal, with generous headroom so consistent instances never trip.
fn calibrate_growth_bound<P: ProblemInstance>(
    problem: &P,
    lambda0: &Signal,
    mode: GradientMode,
    seed: u64,
) -> Result<(f64, f64), AscentError> {
    const HEADROOM: f64 = 64.0;
    let calibration_seed = NoiseStream::derive_master(seed, "growth-probe", 0);
    let ones = Signal::constant(lambda0.shape(), 1.0);
    let mut at_start: f64 = 1.0;
    let mut at_ones: f64 = 1.0;
    for probe in 0..2u64 {
        let y0 = ascent_direction(problem, lambda0, mode, calibration_seed, probe, 0)?;
        at_start = at_start.max(y0.norm_sq());
        let y1 = ascent_direction(problem, &ones, mode, calibration_seed, 100 + probe, 0)?;
        at_ones = at_ones.max(y1.norm_sq());
    }
    let m1 = HEADROOM * (1.0 + at_start);
    let m2 = HEADROOM * (1.0 + at_ones / ones.norm_sq());
    Ok((m1, m2))
}

/// Dual-value estimate Ŵ(λ) with a 95% Monte Carlo half-width.
#[derive(Clone, Copy, Debug)]
pub struct DualValueEstimate {
    pub value: f64,
    pub half_width: f64,
    pub samples: usize,
}

/// Estimates W(λ) = −F₀*(λ) + (1/n) Σ_i E[G_i(u^i(λ)) + ⟨λ, u^i(λ)⟩], with
/// F₀*(λ) = ⟨λ, v(λ)⟩ − F₀(v(λ)) evaluated through the aggregate oracle.
pub fn estimate_dual_value<P: ProblemInstance>(
    problem: &P,
    lambda: &PriceSignal,
    samples: usize,
    seed: u64,
) -> Result<DualValueEstimate, AscentError> {
    if samples == 0 {
        return Err(AscentError::InvalidArgument(
            "dual-value estimation needs at least one sample".into(),
        ));
    }
    let aggregate = problem.aggregate();
    let v = aggregate
        .best_profile(lambda)
        .map_err(|source| AscentError::Aggregate {
            iteration: 0,
            source,
        })?;
    let f0_at_v = aggregate
        .objective(&v)
        .map_err(|source| AscentError::Aggregate {
            iteration: 0,
            source,
        })?;
    let f0_conjugate = lambda.pair(&v) - f0_at_v;

    let agents = problem.agents();
    let n = agents.len() as f64;
    let per_agent: Vec<(f64, f64)> = agents
        .par_iter()
        .enumerate()
        .map(|(i, agent)| {
            let policy = agent
                .best_response(lambda)
                .map_err(|source| AscentError::Agent {
                    iteration: 0,
                    agent: i,
                    source,
                })?;
            let mut mean = 0.0;
            let mut m2 = 0.0;
            for r in 0..samples {
                let mut stream = NoiseStream::derive_lane(
                    seed,
                    StreamLane::Evaluation,
                    i as u64,
                    r as u64,
                );
                let outcome = agent.simulate(&policy, &mut stream);
                let cost = outcome.local_cost + lambda.pair(&outcome.coupling);
                if !cost.is_finite() {
                    return Err(AscentError::NonFiniteCost { iteration: r });
                }
                let delta = cost - mean;
                mean += delta / (r + 1) as f64;
                m2 += delta * (cost - mean);
            }
            let variance_of_mean = if samples > 1 {
                m2 / (samples - 1) as f64 / samples as f64
            } else {
                0.0
            };
            Ok((mean, variance_of_mean))
        })
        .collect::<Result<_, AscentError>>()?;

    let local_mean: f64 = per_agent.iter().map(|(m, _)| m).sum::<f64>() / n;
    let variance: f64 = per_agent.iter().map(|(_, v)| v).sum::<f64>() / (n * n);
    Ok(DualValueEstimate {
        value: -f0_conjugate + local_mean,
        half_width: 1.959964 * variance.sqrt(),
        samples,
    })
}

/// Decentralization-gap estimate J(u(λ)) − J̃(u(λ)) ≥ 0.
#[derive(Clone, Copy, Debug)]
pub struct GapEstimate {
    pub estimate: f64,
    pub half_width: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of the decentralization gap
/// E[F₀((1/n)Σ u^i(ω^i))] − F₀((1/n)Σ E[u^i]) at the given λ.
///
/// The inner expectation uses exact per-agent means when every agent exposes
/// them, otherwise an independent sample four times the main sample size.
/// When the aggregate oracle exposes ∇F₀, the first-order fluctuation around
/// the mean profile is removed as a control variate — without it the
/// difference of two nearly equal F₀ values drowns small gaps in noise.
pub fn estimate_gap<P: ProblemInstance>(
    problem: &P,
    lambda: &PriceSignal,
    samples: usize,
    seed: u64,
) -> Result<GapEstimate, AscentError> {
    if samples < 2 {
        return Err(AscentError::InvalidArgument(
            "gap estimation needs at least two samples".into(),
        ));
    }
    let agents = problem.agents();
    let aggregate = problem.aggregate();
    let n = agents.len();

    let policies: Vec<<P::Agent as AgentOracle>::Policy> = agents
        .par_iter()
        .enumerate()
        .map(|(i, agent)| {
            agent
                .best_response(lambda)
                .map_err(|source| AscentError::Agent {
                    iteration: 0,
                    agent: i,
                    source,
                })
        })
        .collect::<Result<_, AscentError>>()?;

    // Mean aggregate profile: exact where possible, else an independent sample.
    let exact_mean: Option<Signal> = {
        let mut acc = Signal::zeros(lambda.shape());
        let mut all = true;
        for (agent, policy) in agents.iter().zip(&policies) {
            match agent.expected_coupling(policy) {
                Some(mean) => acc.add_assign(&mean),
                None => {
                    all = false;
                    break;
                }
            }
        }
        if all {
            acc.scale(1.0 / n as f64);
            Some(acc)
        } else {
            None
        }
    };
    let mean_profile = match exact_mean {
        Some(m) => m,
        None => {
            let mean_seed = NoiseStream::derive_master(seed, "gap-mean", 0);
            let draws = 4 * samples;
            let mut acc = Signal::zeros(lambda.shape());
            let sums: Vec<Signal> = agents
                .par_iter()
                .zip(policies.par_iter())
                .enumerate()
                .map(|(i, (agent, policy))| {
                    let mut agent_acc = Signal::zeros(lambda.shape());
                    for r in 0..draws {
                        let mut stream = NoiseStream::derive_lane(
                            mean_seed,
                            StreamLane::Evaluation,
                            i as u64,
                            r as u64,
                        );
                        agent_acc.add_assign(&agent.simulate(policy, &mut stream).coupling);
                    }
                    agent_acc
                })
                .collect();
            for s in &sums {
                acc.add_assign(s);
            }
            acc.scale(1.0 / (n * draws) as f64);
            acc
        }
    };
    let f0_at_mean = aggregate
        .objective(&mean_profile)
        .map_err(|source| AscentError::Aggregate {
            iteration: 0,
            source,
        })?;
    let gradient_at_mean = aggregate.objective_gradient(&mean_profile);

    let draw_seed = NoiseStream::derive_master(seed, "gap-draws", 0);
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|r| {
            let mut population = Signal::zeros(lambda.shape());
            for (i, (agent, policy)) in agents.iter().zip(&policies).enumerate() {
                let mut stream = NoiseStream::derive_lane(
                    draw_seed,
                    StreamLane::Evaluation,
                    i as u64,
                    r as u64,
                );
                population.add_assign(&agent.simulate(policy, &mut stream).coupling);
            }
            population.scale(1.0 / n as f64);
            let mut value = aggregate
                .objective(&population)
                .map_err(|source| AscentError::Aggregate {
                    iteration: r,
                    source,
                })?;
            if let Some(gradient) = &gradient_at_mean {
                let mut centered = population;
                centered.axpy(-1.0, &mean_profile);
                value -= dot_plain(gradient, &centered);
            }
            Ok(value)
        })
        .collect::<Result<_, AscentError>>()?;

    let mean: f64 = values.iter().sum::<f64>() / samples as f64;
    let var: f64 = values
        .iter()
        .map(|x| (x - mean).powi(2))
        .sum::<f64>()
        / (samples - 1) as f64;
    Ok(GapEstimate {
        estimate: mean - f0_at_mean,
        half_width: 1.959964 * (var / samples as f64).sqrt(),
        samples,
    })
}

/// Plain coordinate dot product (no pairing weight): the geometry in which
/// `objective_gradient` is expressed.
fn dot_plain(a: &Signal, b: &Signal) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum()
}
