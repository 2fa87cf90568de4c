//! Bias/variance decomposition of the stochastic dual iterate on the
//! linear-quadratic tracking benchmark.
//!
//! For each population size n the deterministic ascent provides a reference
//! multiplier; J independent stochastic runs are decomposed around it at a
//! ladder of iteration counts k. The variance should fall like 1/k for
//! fixed n and like 1/n for fixed k:
//!
//! ```text
//! cargo run --release --example lqg_bias_variance
//! ```

use uzawa::lqg::{desk_agent, desk_aggregate};
use uzawa::{bias_variance_experiment, LqgInstance, StepSchedule};

fn main() -> anyhow::Result<()> {
    let horizon = 5;
    let populations = [10, 100];
    let checkpoints = [10, 30, 100, 300];
    let runs = 100;
    let schedule = StepSchedule::new(4.0, 10.0)?;

    let report = bias_variance_experiment(
        |n| LqgInstance::homogeneous(n, desk_agent(), desk_aggregate(horizon)),
        &populations,
        &checkpoints,
        runs,
        &schedule,
        7,
    )?;

    println!("{:>6} {:>6} {:>12} {:>12} {:>12}", "n", "k", "bias^2", "variance", "loss");
    for cell in &report.cells {
        println!(
            "{:>6} {:>6} {:>12.3e} {:>12.3e} {:>12.3e}",
            cell.population, cell.iterations, cell.bias_norm_sq, cell.variance, cell.loss
        );
    }

    println!();
    for &n in &populations {
        if let Some(slope) = report.slope_variance_vs_iteration(n) {
            println!("variance vs k at n = {n}: log-log slope {slope:+.3}");
        }
    }
    for &k in &checkpoints {
        if let Some(slope) = report.slope_variance_vs_population(k) {
            println!("variance vs n at k = {k}: log-log slope {slope:+.3}");
        }
    }
    Ok(())
}
