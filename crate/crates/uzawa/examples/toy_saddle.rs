//! The three ascent variants on the single-slot quadratic saddle point.
//!
//! The instance has the analytic saddle point λ* = −1/2 with dual value
//! W* = 1/4, so this is the quickest way to see the price iteration work:
//!
//! ```text
//! cargo run --example toy_saddle
//! ```

use uzawa::toy::ToyProblem;
use uzawa::{
    deterministic_uzawa, estimate_dual_value, sampled_stochastic_uzawa, stochastic_uzawa,
    StepSchedule,
};

fn main() -> anyhow::Result<()> {
    let problem = ToyProblem::new();
    let schedule = StepSchedule::new(1.0, 10.0)?;
    let iterations = 5000;
    let seed = 7;

    let exact = deterministic_uzawa(&problem, &schedule, iterations)?;
    let noisy = stochastic_uzawa(&problem, &schedule, iterations, seed)?;
    let sampled = sampled_stochastic_uzawa(&problem, 1, &schedule, iterations, seed)?;

    println!("saddle point multiplier: -0.5");
    println!("deterministic ascent:    {:+.6}", exact.final_lambda().get(0, 0));
    println!("stochastic ascent:       {:+.6}", noisy.final_lambda().get(0, 0));
    println!("sampled ascent (m = 1):  {:+.6}", sampled.final_lambda().get(0, 0));

    let value = estimate_dual_value(&problem, noisy.final_lambda(), 20_000, seed + 1)?;
    println!(
        "dual value at the stochastic iterate: {:.6} ± {:.6} (saddle value 0.25)",
        value.value, value.half_width
    );

    // The early trajectory shows the 1/k step sizes at work.
    println!("\nfirst stochastic iterates (k, rho_k, lambda_k):");
    for record in noisy.records().iter().take(5) {
        println!(
            "  {:>3}  {:.4}  {:+.5}",
            record.k,
            record.rho,
            record.lambda.get(0, 0)
        );
    }
    Ok(())
}
