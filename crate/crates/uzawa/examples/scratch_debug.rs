use uzawa::tcl::{aggregate_response, CoordinationConfig, TclInstance, TclPopulation};
use uzawa::{sampled_stochastic_uzawa, ProblemInstance};

fn main() -> anyhow::Result<()> {
    let config = CoordinationConfig::desk(300);
    let device = config.device.clone().with_sigma_per_sqrt_hour(0.0);
    let fleet = TclPopulation {
        base: device,
        size: 300,
        gamma_spread: config.gamma_spread,
    }
    .build(7)?;
    let instance = TclInstance::new(fleet, config.uc.clone(), config.grid.clone())?;

    let trace = sampled_stochastic_uzawa(&instance, config.sample_size, &config.schedule, 20, 7)?;
    let lambda = trace.final_lambda();
    println!("lambda^20 per slot (energy, response):");
    for slot in 0..instance.shape().slots() {
        println!(
            "  slot {:>2}: p = {:>12.6}, lr = {:>12.6}",
            slot,
            lambda.get(0, slot),
            lambda.get(1, slot)
        );
    }
    match aggregate_response(&config.uc, lambda) {
        Ok(profile) => println!("aggregate response fine: U33 = {}", profile.get(0, 33)),
        Err(e) => println!("aggregate response failed: {e}"),
    }
    Ok(())
}
