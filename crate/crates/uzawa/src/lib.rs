//! Price-mediated coordination of large populations of stochastic agents.
//!
//! A coordinator iteratively adjusts a price signal (a Lagrange multiplier on
//! an aggregate coupling constraint); agents respond by solving their own
//! small stochastic control problems, and the empirical mean of their
//! responses drives the next price update. The crate provides:
//!
//! - the dual-ascent engine in three variants (full-population stochastic,
//!   sampled, and exact-gradient), with convergence diagnostics
//!   ([`ascent`]),
//! - an analytic linear-quadratic population for calibration and
//!   bias/variance studies ([`lqg`]),
//! - a dense convex QP interior-point solver with infeasibility
//!   certificates ([`qp`]),
//! - a thermostatic-load fleet providing frequency response to a stylized
//!   unit-commitment system ([`tcl`]).
//!
//! Everything downstream of a master seed is deterministic, including under
//! multi-threaded execution: noise streams are derived per (lane, agent,
//! iteration), and parallel reductions preserve a fixed summation order.

pub mod ascent;
pub mod cli;
pub mod config;
pub mod lqg;
pub mod noise;
pub mod problem;
pub mod qp;
pub mod report;
pub mod schedule;
pub mod signal;
pub mod tcl;
pub mod toy;
pub mod trace;

pub use ascent::{
    deterministic_uzawa, deterministic_uzawa_with, estimate_dual_value, estimate_gap,
    gradient_sample, sampled_stochastic_uzawa, sampled_stochastic_uzawa_with, stochastic_uzawa,
    stochastic_uzawa_with, AscentError, AscentOptions, DualValueEstimate, EvalDual, GapEstimate,
    GradientMode,
};
pub use lqg::{
    bias_variance_experiment, riccati_best_response, BiasVarianceReport, LqgAgentParams,
    LqgAggregateParams, LqgInstance,
};
pub use config::{ConfigError, RunConfig};
pub use noise::{NoiseStream, StreamLane};
pub use qp::{qp_solve, qp_solve_by_enumeration, QpError, QpProblem, QpSolution};
pub use problem::{AgentOracle, AggregateOracle, OracleError, ProblemInstance, SimOutcome};
pub use schedule::{ScheduleError, StepSchedule};
pub use tcl::{
    coordination_experiment, hjb_best_response, uc_cost, CoordinationConfig, CoordinationReport,
    TclGrid, TclInstance, TclParams, TclPopulation, UcInstance,
};
pub use signal::{PriceSignal, Signal, SignalError, SignalShape, TimeGrid};
pub use trace::{DualTrace, IterationRecord, TraceMeta};
