//! Euler–Maruyama simulation of device temperature paths, slot-level
//! aggregation, and the uncoordinated thermostat baseline.

use rayon::prelude::*;

use super::hjb::OnOffPolicy;
use super::{TclError, TclGrid, TclParams};
use crate::noise::{NoiseStream, StreamLane};

/// One realized trajectory on the fine grid: consumption and delivered
/// response per step (W), temperatures at step boundaries (°C, length
/// steps + 1).
#[derive(Clone, Debug, PartialEq)]
pub struct TclPath {
    pub controls: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub response: Vec<f64>,
}

/// Plays a decision table against one noise realization:
/// X_{t+1} = X_t − (Δt/γ)(X_t − X_OFF + ζu_t) + σ√Δt·ξ_t with
/// u_t = policy(t, nearest node of X_t)·P_ON and response u_t·clamp((X_t −
/// X_min)/(X_max − X_min), 0, 1).
///
/// One Gaussian is drawn per step regardless of σ, so runs with different
/// volatilities consume identical noise sequences and stay coupled.
pub fn simulate_tcl(
    params: &TclParams,
    policy: &OnOffPolicy,
    grid: &TclGrid,
    stream: &mut NoiseStream,
) -> Result<TclPath, TclError> {
    policy.check_grid(grid)?;
    let steps = grid.time().steps();
    let dt = grid.time().dt();
    let noise_scale = params.sigma * dt.sqrt();

    let mut controls = Vec::with_capacity(steps);
    let mut response = Vec::with_capacity(steps);
    let mut temperatures = Vec::with_capacity(steps + 1);
    let mut x = params.x0;
    temperatures.push(x);
    for t in 0..steps {
        let node = grid.nearest_node(x);
        let u = if policy.is_on(t, node) { params.p_on } else { 0.0 };
        controls.push(u);
        response.push(u * params.fr_fraction(x));
        let xi = stream.standard_normal();
        x += params.drift(x, u) * dt + noise_scale * xi;
        temperatures.push(x);
    }
    Ok(TclPath {
        controls,
        temperatures,
        response,
    })
}

/// Per-slot time averages of consumption and response (W).
pub fn slot_averages(path: &TclPath, grid: &TclGrid) -> (Vec<f64>, Vec<f64>) {
    let per_slot = grid.time().steps_per_slot();
    let slots = grid.time().slots();
    let mut u = Vec::with_capacity(slots);
    let mut r = Vec::with_capacity(slots);
    for l in 0..slots {
        let range = l * per_slot..(l + 1) * per_slot;
        u.push(path.controls[range.clone()].iter().sum::<f64>() / per_slot as f64);
        r.push(path.response[range].iter().sum::<f64>() / per_slot as f64);
    }
    (u, r)
}

/// Realized comfort cost of a path [£]: Σ_t f(X_t)·Δt plus the terminal term.
pub fn discomfort_cost(params: &TclParams, path: &TclPath, grid: &TclGrid) -> f64 {
    let dt = grid.time().dt();
    let steps = grid.time().steps();
    let mut cost = 0.0;
    for t in 0..steps {
        cost += params.discomfort_rate(path.temperatures[t]) * dt;
    }
    cost + params.terminal_cost(path.temperatures[steps])
}

/// Uncoordinated thermostat: switch ON at the upper band edge, OFF at the
/// lower one, starting OFF when X₀ < X_max. No response is offered.
pub fn hysteresis_path(
    params: &TclParams,
    grid: &TclGrid,
    stream: &mut NoiseStream,
) -> TclPath {
    let steps = grid.time().steps();
    let dt = grid.time().dt();
    let noise_scale = params.sigma * dt.sqrt();

    let mut controls = Vec::with_capacity(steps);
    let mut temperatures = Vec::with_capacity(steps + 1);
    let mut x = params.x0;
    let mut on = x >= params.x_max;
    temperatures.push(x);
    for _ in 0..steps {
        if x >= params.x_max {
            on = true;
        } else if x <= params.x_min {
            on = false;
        }
        let u = if on { params.p_on } else { 0.0 };
        controls.push(u);
        let xi = stream.standard_normal();
        x += params.drift(x, u) * dt + noise_scale * xi;
        temperatures.push(x);
    }
    TclPath {
        response: vec![0.0; steps],
        controls,
        temperatures,
    }
}

/// Fleet-level thermostat baseline.
#[derive(Clone, Debug)]
pub struct BauOutcome {
    /// Mean per-device consumption per slot (W).
    pub aggregate_u: Vec<f64>,
    /// Realized comfort cost per device [£].
    pub per_tcl_costs: Vec<f64>,
}

/// Simulates every device under the thermostat rule on the evaluation noise
/// lane of `seed` and aggregates per-capita consumption per slot. Each
/// device's path depends only on its own parameters and stream index, so the
/// outcome is unchanged by anything other devices do.
pub fn bau_baseline(
    fleet: &[TclParams],
    grid: &TclGrid,
    seed: u64,
) -> Result<BauOutcome, TclError> {
    if fleet.is_empty() {
        return Err(TclError::Invalid("fleet must be nonempty".into()));
    }
    let paths: Vec<(Vec<f64>, f64)> = fleet
        .par_iter()
        .enumerate()
        .map(|(i, params)| {
            let mut stream =
                NoiseStream::derive_lane(seed, StreamLane::Evaluation, i as u64, 0);
            let path = hysteresis_path(params, grid, &mut stream);
            let (u, _) = slot_averages(&path, grid);
            (u, discomfort_cost(params, &path, grid))
        })
        .collect();

    let slots = grid.time().slots();
    let mut aggregate_u = vec![0.0; slots];
    let mut per_tcl_costs = Vec::with_capacity(fleet.len());
    for (u, cost) in &paths {
        for (acc, value) in aggregate_u.iter_mut().zip(u) {
            *acc += value;
        }
        per_tcl_costs.push(*cost);
    }
    for value in &mut aggregate_u {
        *value /= fleet.len() as f64;
    }
    Ok(BauOutcome {
        aggregate_u,
        per_tcl_costs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_step_update_arithmetic() {
        // γ = 1 s, Δt = 1 s, ambient 0, ζ = 1, u ≡ 1 W from X₀ = 0:
        // X₁ = 0 − (0 − 0 + 1) = −1.
        let params = TclParams {
            gamma: 1.0,
            x_off: 0.0,
            zeta: 1.0,
            sigma: 0.0,
            p_on: 1.0,
            alpha: 0.0,
            beta: 0.0,
            x_bar: 0.0,
            x_min: -1.5,
            x_max: 1.0,
            terminal_weight: 0.0,
            x0: 0.0,
        };
        let grid = TclGrid::new(1, 1.0, 1.0, 1.0, -2.0, 2.0).unwrap();
        let policy = OnOffPolicy::constant(1, grid.nodes(), true);
        let mut stream = NoiseStream::derive(7, 0, 0);
        let path = simulate_tcl(&params, &policy, &grid, &mut stream).unwrap();
        assert_eq!(path.temperatures, vec![0.0, -1.0]);
        assert_eq!(path.controls, vec![1.0]);
    }

    #[test]
    fn ambient_is_a_drift_equilibrium() {
        let mut params = TclParams::desk();
        params.sigma = 0.0;
        params.x0 = params.x_off;
        let grid = TclGrid::new(2, 600.0, 60.0, 0.5, -24.0, 25.0).unwrap();
        let policy = OnOffPolicy::constant(grid.time().steps(), grid.nodes(), false);
        let mut stream = NoiseStream::derive(7, 0, 0);
        let path = simulate_tcl(&params, &policy, &grid, &mut stream).unwrap();
        assert!(path.temperatures.iter().all(|&x| x == params.x_off));
    }

    #[test]
    fn same_stream_gives_bit_identical_paths() {
        let params = TclParams::desk().with_sigma_per_sqrt_hour(2.0);
        let grid = TclGrid::new(4, 600.0, 30.0, 0.25, -24.0, -11.0).unwrap();
        let policy = OnOffPolicy::constant(grid.time().steps(), grid.nodes(), true);
        let a = simulate_tcl(&params, &policy, &grid, &mut NoiseStream::derive(42, 3, 5)).unwrap();
        let b = simulate_tcl(&params, &policy, &grid, &mut NoiseStream::derive(42, 3, 5)).unwrap();
        assert_eq!(a, b);
        let c = simulate_tcl(&params, &policy, &grid, &mut NoiseStream::derive(42, 3, 6)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn response_stays_between_zero_and_consumption() {
        let params = TclParams::desk().with_sigma_per_sqrt_hour(2.0);
        let grid = TclGrid::new(4, 600.0, 30.0, 0.25, -24.0, -11.0).unwrap();
        let policy = OnOffPolicy::constant(grid.time().steps(), grid.nodes(), true);
        let mut stream = NoiseStream::derive(11, 0, 0);
        let path = simulate_tcl(&params, &policy, &grid, &mut stream).unwrap();
        for (u, r) in path.controls.iter().zip(&path.response) {
            assert!(*r >= 0.0 && r <= u, "response {r} outside [0, {u}]");
        }
    }

    #[test]
    fn thermostat_turns_on_at_the_upper_edge_and_cools() {
        let mut params = TclParams::desk();
        params.sigma = 0.0;
        params.x0 = params.x_max;
        let grid = TclGrid::new(2, 1800.0, 100.0, 0.15, -24.0, -11.0).unwrap();
        let mut stream = NoiseStream::derive(3, 0, 0);
        let path = hysteresis_path(&params, &grid, &mut stream);
        assert_eq!(path.controls[0], params.p_on);
        assert!(path.temperatures[1] < path.temperatures[0]);
        assert!(path.response.iter().all(|&r| r == 0.0));

        params.x0 = params.x_min;
        let path = hysteresis_path(&params, &grid, &mut NoiseStream::derive(3, 0, 0));
        assert_eq!(path.controls[0], 0.0);
        assert!(path.temperatures[1] > path.temperatures[0]);
    }

    #[test]
    fn noiseless_identical_fleet_moves_in_lockstep() {
        let mut base = TclParams::desk();
        base.sigma = 0.0;
        base.x0 = base.x_max;
        let fleet = vec![base.clone(); 4];
        let grid = TclGrid::new(4, 1800.0, 100.0, 0.15, -24.0, -11.0).unwrap();
        let outcome = bau_baseline(&fleet, &grid, 9).unwrap();
        // Identical parameters and no noise: the aggregate equals any single
        // device's slot profile and every step is all-ON or all-OFF.
        let single = hysteresis_path(&base, &grid, &mut NoiseStream::derive(9, 0, 0));
        let (u, _) = slot_averages(&single, &grid);
        for (a, b) in outcome.aggregate_u.iter().zip(&u) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        assert!(outcome
            .per_tcl_costs
            .iter()
            .all(|&c| c == outcome.per_tcl_costs[0]));
    }

    #[test]
    fn vanishing_band_switches_nearly_every_step() {
        let mut params = TclParams::desk();
        params.sigma = 0.0;
        // Band of width 0.02 °C centered where the ON and OFF drifts have
        // equal magnitude (±0.25 °C per 100 s step), so every step overshoots
        // the opposite edge and the mode flips each time.
        params.x_min = -2.51;
        params.x_max = -2.49;
        params.x_bar = -2.5;
        params.x0 = params.x_max;
        let grid = TclGrid::new(2, 1000.0, 100.0, 0.15, -6.0, 1.0).unwrap();
        let mut stream = NoiseStream::derive(1, 0, 0);
        let path = hysteresis_path(&params, &grid, &mut stream);
        let switches = path
            .controls
            .windows(2)
            .filter(|w| w[0] != w[1])
            .count();
        assert!(
            switches >= grid.time().steps() / 2,
            "only {switches} switches over {} steps",
            grid.time().steps()
        );
        for &x in &path.temperatures {
            assert!((x - params.x_bar).abs() < 0.5, "temperature {x} left the setpoint region");
        }
    }

    #[test]
    fn device_outcome_ignores_other_fleet_members() {
        let mut first = TclParams::desk().with_sigma_per_sqrt_hour(1.0);
        first.x0 = -16.0;
        let mut other_a = first.clone();
        other_a.gamma = 7000.0;
        let mut other_b = first.clone();
        other_b.gamma = 12_000.0;
        other_b.x0 = -20.0;

        let grid = TclGrid::new(4, 600.0, 30.0, 0.25, -24.0, -11.0).unwrap();
        let with_a = bau_baseline(&[first.clone(), other_a], &grid, 77).unwrap();
        let with_b = bau_baseline(&[first, other_b], &grid, 77).unwrap();
        assert_eq!(
            with_a.per_tcl_costs[0].to_bits(),
            with_b.per_tcl_costs[0].to_bits()
        );
    }
}
