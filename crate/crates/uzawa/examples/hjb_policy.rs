//! One device's optimal switching policy as an ASCII map over the day.
//!
//! Solves the backward recursion for a freezer facing a flat energy price
//! and an availability reward, then draws the ON region over
//! (time of day, cabinet temperature). `#` marks ON, `.` marks OFF:
//!
//! ```text
//! cargo run --release --example hjb_policy
//! ```

use uzawa::{hjb_best_response, Signal, SignalShape, TclGrid, TclParams};

fn main() -> anyhow::Result<()> {
    let params = TclParams::desk().with_sigma_per_sqrt_hour(1.0);
    let grid = TclGrid::desk(&params);
    let slots = grid.time().slots();

    // £65/MWh energy around the evening peak, £20/MWh otherwise; a flat
    // £10/MWh availability reward.
    let shape = SignalShape::new(vec!["energy", "response"], slots);
    let energy: Vec<f64> = (0..slots)
        .map(|l| {
            let hour = (l as f64 + 0.5) * 0.5;
            if (17.0..21.0).contains(&hour) { 65.0 } else { 20.0 }
        })
        .collect();
    let prices = Signal::from_rows(&shape, &[energy, vec![10.0; slots]])?;

    let policy = hjb_best_response(&params, &prices, &grid)?;
    println!(
        "policy over {} decision steps × {} temperature nodes ({:.0}% ON)",
        policy.steps(),
        policy.nodes(),
        100.0 * policy.on_fraction()
    );

    // Sample the table on a coarse raster: one column per half hour, one
    // row per degree, warm cabinet at the top.
    println!("\n      {}", "hour 0    4    8    12   16   20  ");
    let steps_per_slot = grid.time().steps_per_slot();
    let mut row_temp = params.x_max + 1.0;
    while row_temp >= params.x_min - 1.0 {
        let node = grid.nearest_node(row_temp);
        let mut line = String::new();
        for slot in 0..slots {
            let step = slot * steps_per_slot;
            line.push(if policy.is_on(step, node) { '#' } else { '.' });
        }
        let marker = if row_temp <= params.x_max && row_temp >= params.x_min {
            "band"
        } else {
            ""
        };
        println!("{row_temp:>5.1} {line}  {marker}");
        row_temp -= 1.0;
    }

    println!("\ncost-to-go at the comfort temperature: £{:.4}", {
        let node = grid.nearest_node(params.x_bar);
        policy.value_at_start(node)
    });
    Ok(())
}
