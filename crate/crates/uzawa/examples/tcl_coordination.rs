//! A small end-to-end coordination run: a freezer fleet against the
//! commitment model, compared with its uncoordinated baseline.
//!
//! Uses a reduced fleet and iteration budget so it finishes in a few
//! seconds; the `tcl` subcommand runs the full default scale.
//!
//! ```text
//! cargo run --release --example tcl_coordination
//! ```

use uzawa::tcl::CoordinationConfig;
use uzawa::coordination_experiment;

fn main() -> anyhow::Result<()> {
    let mut config = CoordinationConfig::desk(60);
    config.iterations = 25;
    config.sample_size = 20;
    config.sigmas = vec![0.0, 2.0];

    let report = coordination_experiment(&config, 7)?;
    println!(
        "{:>10} {:>12} {:>12} {:>9} {:>10}",
        "sigma", "baseline £", "priced £", "saving", "corr(p,U)"
    );
    for s in &report.scenarios {
        println!(
            "{:>10.1} {:>12.4} {:>12.4} {:>8.2}% {:>10.3}",
            s.sigma,
            s.bau_cost,
            s.fs_cost,
            100.0 * s.relative_saving(),
            s.price_consumption_correlation()
        );
    }

    let first = &report.scenarios[0];
    println!("\nnoise-free day, slot-by-slot (first 6 slots):");
    println!(
        "{:>5} {:>12} {:>12} {:>12} {:>12}",
        "slot", "price £/MWh", "avail £/MWh", "mean U [W]", "baseline U"
    );
    for slot in 0..6 {
        println!(
            "{:>5} {:>12.3} {:>12.3} {:>12.2} {:>12.2}",
            slot,
            first.prices.get(0, slot),
            first.prices.get(1, slot),
            first.fs_profile.get(0, slot),
            first.bau_consumption.get(0, slot)
        );
    }
    Ok(())
}
