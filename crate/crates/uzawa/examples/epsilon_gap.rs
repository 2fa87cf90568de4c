//! The decentralization gap and its 1/n bound.
//!
//! Coordinating through prices instead of a central planner costs
//! J(u(λ)) − J̃(u(λ)) ≥ 0: the aggregate objective is evaluated at the
//! random empirical mean rather than the expected profile. On the tracking
//! benchmark with aggregate weight ν this gap is at most ν·M̂²/n where M̂
//! bounds the per-agent control second moment, so it vanishes as the
//! population grows:
//!
//! ```text
//! cargo run --release --example epsilon_gap
//! ```

use uzawa::lqg::{desk_agent, desk_aggregate};
use uzawa::{estimate_gap, LqgInstance, Signal, StepSchedule};

fn main() -> anyhow::Result<()> {
    let horizon = 5;
    let schedule = StepSchedule::new(4.0, 10.0)?;
    let seed = 7;

    println!(
        "{:>6} {:>14} {:>12} {:>14}",
        "n", "gap estimate", "95% hw", "nu*M^2/n bound"
    );
    let mut points = Vec::new();
    for &n in &[10, 100, 1000] {
        let instance = LqgInstance::homogeneous(n, desk_agent(), desk_aggregate(horizon))?;

        // Prices from a short warm-up of the deterministic ascent; any fixed
        // λ works, the gap is a property of the decentralized evaluation.
        let warmup = uzawa::deterministic_uzawa(&instance, &schedule, 50)?;
        let lambda: &Signal = warmup.final_lambda();

        let gap = estimate_gap(&instance, lambda, 4000, seed)?;
        let second_moment = instance.max_control_second_moment(lambda)?;
        let bound = instance.aggregate_params().nu * second_moment / n as f64;
        println!(
            "{n:>6} {:>14.6e} {:>12.2e} {:>14.6e}",
            gap.estimate, gap.half_width, bound
        );
        points.push(((n as f64).ln(), gap.estimate.max(1e-300).ln()));
    }

    let slope = uzawa::lqg::ols_slope(&points);
    println!("\ngap vs population: log-log slope {slope:+.3} (the bound predicts -1)");
    Ok(())
}
