//! End-to-end acceptance gate: eight numbered checks, each printing a single
//! `acceptance N (...): PASS/FAIL` line with its wall-clock time.
//!
//! Every check states a tolerance up front and verifies the library against
//! an oracle that does not share code with the implementation under test:
//! closed-form values, refined grid search, exhaustive enumeration, or an
//! independently written propagation stencil. Run with `--nocapture` to see
//! the PASS lines for successful checks:
//!
//! ```text
//! cargo test --test acceptance -- --nocapture
//! ```

use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;

use uzawa::lqg::{desk_agent, desk_aggregate, ols_slope};
use uzawa::tcl::watts_to_mwh;
use uzawa::toy::ToyProblem;
use uzawa::{
    bias_variance_experiment, coordination_experiment, deterministic_uzawa, estimate_dual_value,
    estimate_gap, hjb_best_response, qp_solve, qp_solve_by_enumeration, riccati_best_response,
    stochastic_uzawa, BiasVarianceReport, CoordinationConfig, LqgAgentParams, LqgInstance,
    QpProblem, Signal, SignalShape, StepSchedule, TclGrid, TclParams,
};

/// Prints the one-line verdict and fails the test when `ok` is false. The
/// verdict is repeated in the panic message so it survives output capture.
fn verdict(name: &str, started: Instant, ok: bool, detail: &str) {
    let line = format!(
        "acceptance {name}: {} ({:.1} s) — {detail}",
        if ok { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    println!("{line}");
    assert!(ok, "{line}");
}

// --------------------------------------------------------------------------
// 1. Toy saddle point: λ converges to −0.5 ± 0.05 in 5 000 iterations with
//    the a = 1, b = 10 schedule, and the dual value at the saddle multiplier
//    is 0.25 ± 0.01. Budget: 1 s.
// --------------------------------------------------------------------------

#[test]
fn criterion_1_toy_saddle_point() {
    let started = Instant::now();
    let problem = ToyProblem::new();
    let schedule = StepSchedule::new(1.0, 10.0).unwrap();
    let trace = stochastic_uzawa(&problem, &schedule, 5_000, 7).unwrap();
    let multiplier = trace.final_lambda().get(0, 0);

    let saddle = problem.saddle_multiplier();
    let estimate = estimate_dual_value(&problem, &saddle, 20_000, 7).unwrap();

    let lambda_ok = (multiplier + 0.5).abs() < 0.05;
    let value_ok = (estimate.value - 0.25).abs() < 0.01;
    let in_budget = started.elapsed().as_secs_f64() < 1.0;
    verdict(
        "1 (toy saddle point)",
        started,
        lambda_ok && value_ok && in_budget,
        &format!(
            "multiplier {multiplier:.4} (target -0.5 ± 0.05), dual value {:.4} (target 0.25 ± 0.01)",
            estimate.value
        ),
    );
}

// --------------------------------------------------------------------------
// 2–4 share one bias/variance decomposition on the homogeneous tracking
// family: n ∈ {10, 100, 1000}, checkpoints k ∈ {10, 100, 1000}, J = 200
// replicates, schedule a = 4, b = 10, horizon 5, seed 7.
// --------------------------------------------------------------------------

struct Decomposition {
    report: BiasVarianceReport,
    elapsed: f64,
}

fn shared_decomposition() -> &'static Result<Decomposition, String> {
    static SHARED: OnceLock<Result<Decomposition, String>> = OnceLock::new();
    SHARED.get_or_init(|| {
        let started = Instant::now();
        let schedule = StepSchedule::new(4.0, 10.0).map_err(|e| e.to_string())?;
        let report = bias_variance_experiment(
            |n| LqgInstance::homogeneous(n, desk_agent(), desk_aggregate(5)),
            &[10, 100, 1000],
            &[10, 100, 1000],
            200,
            &schedule,
            7,
        )
        .map_err(|e| e.to_string())?;
        Ok(Decomposition {
            report,
            elapsed: started.elapsed().as_secs_f64(),
        })
    })
}

#[test]
fn criterion_2_variance_vs_iteration_slope() {
    let started = Instant::now();
    let decomposition = match shared_decomposition() {
        Ok(d) => d,
        Err(e) => {
            verdict("2 (variance vs iteration slope)", started, false, e);
            return;
        }
    };
    let slope = decomposition
        .report
        .slope_variance_vs_iteration(100)
        .expect("population 100 is on the grid");
    let ok = (-1.0..=-0.6).contains(&slope) && decomposition.elapsed < 300.0;
    verdict(
        "2 (variance vs iteration slope)",
        started,
        ok,
        &format!(
            "n = 100, J = 200: log₁₀v vs log₁₀k slope {slope:+.3} (window [-1.0, -0.6]), \
             decomposition took {:.0} s (budget 300 s)",
            decomposition.elapsed
        ),
    );
}

#[test]
fn criterion_3_variance_vs_population_slope() {
    let started = Instant::now();
    let decomposition = match shared_decomposition() {
        Ok(d) => d,
        Err(e) => {
            verdict("3 (variance vs population slope)", started, false, e);
            return;
        }
    };
    let slope = decomposition
        .report
        .slope_variance_vs_population(1000)
        .expect("checkpoint 1000 is on the grid");
    let ok = (-1.2..=-0.8).contains(&slope) && decomposition.elapsed < 600.0;
    verdict(
        "3 (variance vs population slope)",
        started,
        ok,
        &format!(
            "k = 1000, J = 200: log₁₀v vs log₁₀n slope {slope:+.3} (window [-1.2, -0.8]), \
             decomposition took {:.0} s (budget 600 s)",
            decomposition.elapsed
        ),
    );
}

#[test]
fn criterion_4_bias_subdominance() {
    let started = Instant::now();
    let decomposition = match shared_decomposition() {
        Ok(d) => d,
        Err(e) => {
            verdict("4 (bias subdominance)", started, false, e);
            return;
        }
    };
    let mut ok = true;
    let mut detail = String::from("at k = 1000:");
    for &n in &[10usize, 100, 1000] {
        let cell = decomposition
            .report
            .cell(1000, n)
            .expect("cell on the grid");
        ok &= cell.bias_norm_sq < cell.variance;
        detail.push_str(&format!(
            " n={n} ‖b‖²={:.2e} vs v={:.2e};",
            cell.bias_norm_sq, cell.variance
        ));
    }
    verdict("4 (bias subdominance)", started, ok, detail.trim_end_matches(';'));
}

// --------------------------------------------------------------------------
// 5. Decentralization gap: on the homogeneous family, the estimated gap at
//    the converged multiplier respects the ν·M²/n bound (within twice the
//    95% half-width) for n ∈ {10, 100, 1000}, and the log-log slope of gap
//    vs n is at most −0.7. Budget: 300 s.
// --------------------------------------------------------------------------

#[test]
fn criterion_5_gap_bound_and_scaling() {
    let started = Instant::now();
    let schedule = StepSchedule::new(4.0, 10.0).unwrap();
    let mut points = Vec::new();
    let mut ok = true;
    let mut detail = String::new();
    for &n in &[10usize, 100, 1000] {
        let instance = LqgInstance::homogeneous(n, desk_agent(), desk_aggregate(5)).unwrap();
        let warmup = deterministic_uzawa(&instance, &schedule, 200).unwrap();
        let lambda = warmup.final_lambda();
        let gap = estimate_gap(&instance, lambda, 4_000, 7).unwrap();
        let second_moment = instance.max_control_second_moment(lambda).unwrap();
        let bound = instance.aggregate_params().nu * second_moment / n as f64;
        let within = gap.estimate <= bound + 2.0 * gap.half_width;
        ok &= within && gap.estimate > 0.0;
        detail.push_str(&format!(
            "n={n} gap {:.3e} ≤ {:.3e}+2·{:.1e} {}; ",
            gap.estimate,
            bound,
            gap.half_width,
            if within { "ok" } else { "VIOLATED" }
        ));
        points.push(((n as f64).ln(), gap.estimate.max(1e-300).ln()));
    }
    let slope = ols_slope(&points);
    let in_budget = started.elapsed().as_secs_f64() < 300.0;
    ok &= slope <= -0.7 && in_budget;
    detail.push_str(&format!("slope {slope:+.3} (must be ≤ -0.7)"));
    verdict("5 (decentralization gap bound)", started, ok, &detail);
}

// --------------------------------------------------------------------------
// 6. Oracle equivalence, three independent solvers against three independent
//    oracles, joint budget 60 s:
//    (a) affine feedback vs multiresolution grid search on 50 random
//        noiseless instances with horizons 1–3, controls within 1e-3;
//    (b) ON/OFF dynamic program vs exhaustive suffix-sequence enumeration on
//        an 8-step × 9-node chain, exact decision agreement at every
//        (step, node);
//    (c) interior-point QP vs brute-force active-set enumeration on 100
//        random tiny instances, objectives within 1e-6.
// --------------------------------------------------------------------------

/// Deterministic open-loop cost ½[Σ_t (d·x_t² + q·u_t² + λ_t·u_t) + d_f·x_T²]
/// for scalar dynamics x_{t+1} = a·x_t + b·u_t — written from the objective
/// definition, not from the solver.
fn scalar_open_loop_cost(
    a: f64,
    b: f64,
    x0: f64,
    d: f64,
    q: f64,
    df: f64,
    lambda: &[f64],
    controls: &[f64],
) -> f64 {
    let mut x = x0;
    let mut cost = 0.0;
    for (t, &u) in controls.iter().enumerate() {
        cost += d * x * x + q * u * u + lambda[t] * u;
        x = a * x + b * u;
    }
    cost += df * x * x;
    0.5 * cost
}

/// Multiresolution grid search over open-loop control sequences: 21 points
/// per axis, shrinking the search box 5× per round. The box always covers
/// the optimum (checked by the interiority assertion on the first round).
fn grid_search_controls(
    a: f64,
    b: f64,
    x0: f64,
    d: f64,
    q: f64,
    df: f64,
    lambda: &[f64],
) -> Vec<f64> {
    let horizon = lambda.len();
    let points = 21usize;
    let mut center = vec![0.0f64; horizon];
    let mut radius = 50.0f64;
    for round in 0..9 {
        let mut best = (f64::INFINITY, center.clone());
        let mut index = vec![0usize; horizon];
        loop {
            let candidate: Vec<f64> = index
                .iter()
                .zip(&center)
                .map(|(&i, &c)| c - radius + 2.0 * radius * i as f64 / (points - 1) as f64)
                .collect();
            let cost = scalar_open_loop_cost(a, b, x0, d, q, df, lambda, &candidate);
            if cost < best.0 {
                best = (cost, candidate);
            }
            // Odometer increment over the product grid.
            let mut axis = 0;
            while axis < horizon {
                index[axis] += 1;
                if index[axis] < points {
                    break;
                }
                index[axis] = 0;
                axis += 1;
            }
            if axis == horizon {
                break;
            }
        }
        if round == 0 {
            for (u, c) in best.1.iter().zip(&center) {
                assert!(
                    (u - c).abs() < 0.98 * radius,
                    "grid search box too small: best control {u} at radius {radius}"
                );
            }
        }
        center = best.1;
        radius /= 5.0;
    }
    center
}

fn check_feedback_vs_grid_search() -> (bool, String) {
    let mut rng = ChaCha12Rng::seed_from_u64(0x6a01);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let horizon = 1 + trial % 3;
        let a = rng.random_range(-1.5..1.5);
        let b = rng.random_range(0.5..2.0);
        let x0 = rng.random_range(-2.0..2.0);
        let d = rng.random_range(0.0..2.0);
        let q = rng.random_range(0.5..3.0);
        let df = rng.random_range(0.0..2.0);
        let lambda: Vec<f64> = (0..horizon).map(|_| rng.random_range(-3.0..3.0)).collect();

        // Noise loading zero: gains and offsets are noise-independent, and a
        // deterministic rollout of the feedback policy is its mean behavior.
        let params = LqgAgentParams::scalar(a, b, 0.0, x0, d, q, df).unwrap();
        let shape = SignalShape::new(vec!["control"], horizon);
        let prices = Signal::from_rows(&shape, &[lambda.clone()]).unwrap();
        let policy = riccati_best_response(&params, &prices).unwrap();

        let mut x = DVector::from_element(1, x0);
        let mut rolled = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let u = policy.control(t, &x);
            rolled.push(u);
            x[0] = a * x[0] + b * u;
        }

        let searched = grid_search_controls(a, b, x0, d, q, df, &lambda);
        for (u, v) in rolled.iter().zip(&searched) {
            worst = worst.max((u - v).abs());
        }
    }
    (
        worst <= 1e-3,
        format!("(a) 50 instances, worst control deviation {worst:.2e} (limit 1e-3)"),
    )
}

/// An 8-step, 9-node device whose chain is effectively deterministic: ON
/// moves exactly one node down (the consumption term dominates the drift),
/// OFF holds (the equilibrium temperature sits on the top node), with
/// residual transition leakage below 1e-8 — orders of magnitude under the
/// decision margins asserted below. Every closed-loop decision is therefore
/// reproduced exactly by enumerating the 2^(remaining steps) ON/OFF suffix
/// sequences.
fn enumeration_device() -> (TclParams, TclGrid, Signal) {
    let params = TclParams {
        gamma: 1e9,
        x_off: 4.0,
        zeta: 500.0,
        sigma: 0.0,
        p_on: 1e6,
        alpha: 0.4,
        beta: 5.0,
        x_bar: 1.0,
        x_min: 0.5,
        x_max: 1.5,
        terminal_weight: 0.7,
        x0: 1.0,
    };
    let grid = TclGrid::new(2, 4.0, 1.0, 0.5, 0.0, 4.0).unwrap();
    let shape = SignalShape::new(vec!["energy", "response"], 2);
    let prices =
        Signal::from_rows(&shape, &[vec![360.0, 1800.0], vec![0.0, 720.0]]).unwrap();
    (params, grid, prices)
}

/// Expected cost of a fixed ON/OFF suffix starting at (`step`, `start`), by
/// exact forward propagation of the node distribution through the upwind
/// chain stencil (independent of the solver's backward recursion).
fn suffix_sequence_cost(
    params: &TclParams,
    grid: &TclGrid,
    prices: &Signal,
    step: usize,
    start: usize,
    sequence: &[bool],
) -> f64 {
    let nodes = grid.nodes();
    let delta = grid.temperature_step();
    let dt = grid.time().dt();
    let steps_per_slot = grid.time().steps_per_slot();
    let kappa = watts_to_mwh(1.0, dt);
    let half_sigma_sq = 0.5 * params.sigma * params.sigma;

    let mut dist = vec![0.0f64; nodes];
    dist[start] = 1.0;
    let mut cost = 0.0;
    for (offset, &on) in sequence.iter().enumerate() {
        let slot = (step + offset) / steps_per_slot;
        let u = if on { params.p_on } else { 0.0 };
        for (i, &mass) in dist.iter().enumerate() {
            let x = grid.node_temperature(i);
            cost += mass * params.discomfort_rate(x) * dt;
            if on {
                cost += mass
                    * (params.p_on * prices.get(0, slot)
                        - params.fr_fraction(x) * params.p_on * prices.get(1, slot))
                    * kappa;
            }
        }
        let mut next = vec![0.0f64; nodes];
        for (i, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let b = params.drift(grid.node_temperature(i), u);
            let pu = dt * (half_sigma_sq + delta * b.max(0.0)) / (delta * delta);
            let pd = dt * (half_sigma_sq + delta * (-b).max(0.0)) / (delta * delta);
            assert!(pu >= 0.0 && pd >= 0.0 && pu + pd <= 1.0);
            next[(i + 1).min(nodes - 1)] += mass * pu;
            next[i.saturating_sub(1)] += mass * pd;
            next[i] += mass * (1.0 - pu - pd);
        }
        dist = next;
    }
    for (i, &mass) in dist.iter().enumerate() {
        cost += mass * params.terminal_cost(grid.node_temperature(i));
    }
    cost
}

fn check_switching_vs_enumeration() -> (bool, String) {
    let (params, grid, prices) = enumeration_device();
    let steps = grid.time().steps();
    let nodes = grid.nodes();
    assert_eq!((steps, nodes), (8, 9), "the enumeration chain is 8 × 9");

    let policy = hjb_best_response(&params, &prices, &grid).unwrap();

    let mut disagreements = 0usize;
    let mut min_margin = f64::INFINITY;
    let mut worst_value_gap: f64 = 0.0;
    for step in 0..steps {
        let remaining = steps - step;
        for node in 0..nodes {
            // Cheapest suffix sequence split by its first action; the solver
            // breaks ties toward OFF, so agreement means ON iff strictly
            // cheaper.
            let mut best = [f64::INFINITY; 2];
            for code in 0u32..(1 << remaining) {
                let sequence: Vec<bool> = (0..remaining).map(|s| code >> s & 1 == 1).collect();
                let cost = suffix_sequence_cost(&params, &grid, &prices, step, node, &sequence);
                let first = sequence[0] as usize;
                best[first] = best[first].min(cost);
            }
            let expected_on = best[1] < best[0];
            min_margin = min_margin.min((best[1] - best[0]).abs());
            if policy.is_on(step, node) != expected_on {
                disagreements += 1;
            }
            if step == 0 {
                let gap = (policy.value_at_start(node) - best[0].min(best[1])).abs();
                worst_value_gap = worst_value_gap.max(gap);
            }
        }
    }
    let ok = disagreements == 0 && min_margin >= 1e-4 && worst_value_gap <= 1e-6;
    (
        ok,
        format!(
            "(b) 8×9 chain, {disagreements} decision disagreements, \
             min ON/OFF margin {min_margin:.1e} (need ≥ 1e-4), start-value gap {worst_value_gap:.1e}"
        ),
    )
}

fn check_qp_vs_active_sets() -> (bool, String) {
    let mut rng = ChaCha12Rng::seed_from_u64(0x6c03);
    let mut worst: f64 = 0.0;
    let mut failures = 0usize;
    for trial in 0..100 {
        let n = 1 + trial % 4;
        let mi = 1 + (trial / 4) % 4;
        // Positive definite curvature Q = MᵀM + I.
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = m.transpose() * &m + DMatrix::identity(n, n);
        let c = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        // Inequalities made feasible by construction around a random point.
        let g = DMatrix::from_fn(mi, n, |_, _| rng.random_range(-1.0..1.0));
        let interior = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let h = &g * &interior + DVector::from_fn(mi, |_, _| rng.random_range(0.1..1.5));
        let problem = QpProblem::new(q, c).with_inequalities(g, h);

        let ipm = qp_solve(&problem, 1e-8);
        let enumerated = qp_solve_by_enumeration(&problem, 1e-8);
        match (ipm, enumerated) {
            (Ok(a), Ok(b)) => worst = worst.max((a.objective - b.objective).abs()),
            _ => failures += 1,
        }
    }
    (
        worst <= 1e-6 && failures == 0,
        format!("(c) 100 instances, {failures} solve failures, worst objective gap {worst:.2e} (limit 1e-6)"),
    )
}

#[test]
fn criterion_6_oracle_equivalence() {
    let started = Instant::now();
    let (ok_a, detail_a) = check_feedback_vs_grid_search();
    let (ok_b, detail_b) = check_switching_vs_enumeration();
    let (ok_c, detail_c) = check_qp_vs_active_sets();
    let in_budget = started.elapsed().as_secs_f64() < 60.0;
    verdict(
        "6 (oracle equivalence)",
        started,
        ok_a && ok_b && ok_c && in_budget,
        &format!("{detail_a}; {detail_b}; {detail_c}"),
    );
}

// --------------------------------------------------------------------------
// 7. Fleet coordination at n = 500 devices, m = 50 sampled agents, K = 75
//    price updates, σ ∈ {0, 1, 2} °C/√h: coordinated system cost never
//    exceeds the uncoordinated baseline, the relative saving is nonincreasing
//    in σ, and prices anticorrelate with consumption. Budget: 1800 s.
// --------------------------------------------------------------------------

#[test]
fn criterion_7_fleet_coordination() {
    let started = Instant::now();
    let config = CoordinationConfig::desk(500);
    assert_eq!((config.sample_size, config.iterations), (50, 75));
    let report = coordination_experiment(&config, 7).unwrap();

    let mut ok = true;
    let mut detail = String::new();
    let mut previous_saving = f64::INFINITY;
    for scenario in &report.scenarios {
        let coordinated_cheaper = scenario.fs_cost <= scenario.bau_cost;
        let saving = scenario.relative_saving();
        let nonincreasing = saving <= previous_saving + 1e-12;
        previous_saving = saving;
        let correlation = scenario.price_consumption_correlation();
        let anticorrelated = correlation < 0.0;
        ok &= coordinated_cheaper && nonincreasing && anticorrelated;
        detail.push_str(&format!(
            "σ={}: {:.2} vs {:.2} (saving {:.2}%{}), corr {:+.3}{}; ",
            scenario.sigma,
            scenario.fs_cost,
            scenario.bau_cost,
            100.0 * saving,
            if coordinated_cheaper && nonincreasing { "" } else { " ORDER VIOLATED" },
            correlation,
            if anticorrelated { "" } else { " NOT NEGATIVE" },
        ));
    }
    let in_budget = started.elapsed().as_secs_f64() < 1800.0;
    verdict(
        "7 (fleet coordination)",
        started,
        ok && in_budget,
        detail.trim_end_matches("; "),
    );
}

// --------------------------------------------------------------------------
// 8. Worker-count determinism: each front-end command, run with the same
//    seed under 1, 4, and 8 worker threads, writes byte-identical CSVs.
// --------------------------------------------------------------------------

/// Runs the binary once and returns the bytes of the named CSVs.
fn run_binary(args: &[&str], dir: &std::path::Path, csvs: &[&str]) -> Vec<(String, Vec<u8>)> {
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_uzawa"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .stdout(std::process::Stdio::null())
        .status()
        .expect("binary runs");
    assert!(status.success(), "{args:?} exited with {status}");
    csvs.iter()
        .map(|name| {
            let bytes = std::fs::read(dir.join(name))
                .unwrap_or_else(|e| panic!("{args:?} did not write {name}: {e}"));
            (name.to_string(), bytes)
        })
        .collect()
}

fn check_workers_agree(base_args: &[&str], csvs: &[&str], scratch: &tempfile::TempDir) -> bool {
    let mut baseline: Option<Vec<(String, Vec<u8>)>> = None;
    for workers in ["1", "4", "8"] {
        let dir = scratch.path().join(format!(
            "{}-w{workers}",
            base_args.first().copied().unwrap_or("run")
        ));
        std::fs::create_dir_all(&dir).unwrap();
        let mut args: Vec<&str> = base_args.to_vec();
        args.extend_from_slice(&["--workers", workers]);
        let outputs = run_binary(&args, &dir, csvs);
        match &baseline {
            None => baseline = Some(outputs),
            Some(reference) => {
                if reference != &outputs {
                    return false;
                }
            }
        }
    }
    true
}

#[test]
fn criterion_8_worker_count_determinism() {
    let started = Instant::now();
    let scratch = tempfile::tempdir().unwrap();

    let toy_ok = check_workers_agree(
        &["toy", "--seed", "7", "--iterations", "2000"],
        &["trace.csv"],
        &scratch,
    );
    let lqg_ok = check_workers_agree(
        &["lqg", "--seed", "7", "--iterations", "10"],
        &[
            "variance_vs_iteration.csv",
            "variance_vs_population.csv",
            "bias.csv",
            "summary.csv",
        ],
        &scratch,
    );

    // Scaled-down fleet run so three repeats stay cheap; the code path (and
    // its parallel reductions) is the same as at full scale.
    let config_path = scratch.path().join("fleet.toml");
    std::fs::write(
        &config_path,
        "[schedule]\na = 0.8\nb = 40.0\n\n[population]\nsize = 40\n\n\
         [algorithm]\niterations = 5\nsample_size = 10\nsigmas = [1.0]\n",
    )
    .unwrap();
    let config_str = config_path.to_str().unwrap();
    let tcl_ok = check_workers_agree(
        &["tcl", "--seed", "7", "--config", config_str],
        &["prices.csv", "aggregate.csv", "dispatch.csv", "costs.csv"],
        &scratch,
    );

    verdict(
        "8 (worker-count determinism)",
        started,
        toy_ok && lqg_ok && tcl_ok,
        &format!(
            "byte-identical CSVs across 1/4/8 workers — toy: {toy_ok}, \
             bias/variance: {lqg_ok}, fleet: {tcl_ok}"
        ),
    );
}
