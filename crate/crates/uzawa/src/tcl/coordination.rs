//! Fleet ↔ system wiring and the volatility-scenario experiment.
//!
//! [`TclAgent`] and [`TclAggregate`] adapt the device and commitment layers
//! to the oracle traits the price-ascent engine works against, and
//! [`coordination_experiment`] runs the full story per volatility scenario:
//! train prices with the sampled ascent, evaluate a fresh fleet under the
//! final prices, and compare the resulting system cost against the
//! uncoordinated thermostat baseline.
//!
//! Price orientation: the engine's multiplier charges agents on both
//! channels, `cost + u·λ_u + r·λ_r`, so a fleet that is *paid* for response
//! sees λ_r < 0. Operator-facing reports flip the response channel into an
//! availability price ρ = −λ_r via [`display_prices`]; the device solver
//! takes the operator pair (p, ρ) directly.

use std::fmt::Write as _;
use std::io;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use super::hjb::{hjb_best_response, OnOffPolicy};
use super::sim::{bau_baseline, discomfort_cost, simulate_tcl, slot_averages};
use super::uc::{aggregate_response, uc_cost, Dispatch, UcInstance};
use super::{watts_to_mwh, TclError, TclGrid, TclParams, TclPopulation};
use crate::ascent::sampled_stochastic_uzawa;
use crate::noise::{NoiseStream, StreamLane};
use crate::problem::{
    fingerprint_hex, AgentOracle, AggregateOracle, OracleError, ProblemInstance, SimOutcome,
};
use crate::report::{sha256_hex, RunManifest};
use crate::schedule::StepSchedule;
use crate::signal::{PriceSignal, Signal, SignalShape};

/// Two-channel slot signal (consumption, response) with the pairing weight
/// that turns (£/MWh)·W pairings into per-device £ per day.
pub fn tcl_signal_shape(slots: usize, slot_seconds: f64) -> SignalShape {
    SignalShape::with_pairing_weight(
        vec!["energy", "response"],
        slots,
        watts_to_mwh(1.0, slot_seconds),
    )
}

/// Flips the response channel between the engine's multiplier orientation
/// (a charge on delivered response) and the operator's availability price
/// (a payment for booked response). The map is its own inverse.
pub fn display_prices(lambda: &PriceSignal) -> PriceSignal {
    let mut display = lambda.clone();
    for l in 0..display.shape().slots() {
        let v = display.get(1, l);
        display.set(1, l, -v);
    }
    display
}

/// One device exposed to the ascent engine.
#[derive(Clone, Debug)]
pub struct TclAgent {
    params: TclParams,
    grid: Arc<TclGrid>,
    shape: SignalShape,
}

impl TclAgent {
    pub fn new(params: TclParams, grid: Arc<TclGrid>, shape: SignalShape) -> Self {
        Self {
            params,
            grid,
            shape,
        }
    }

    pub fn params(&self) -> &TclParams {
        &self.params
    }
}

impl AgentOracle for TclAgent {
    type Policy = OnOffPolicy;

    fn best_response(&self, prices: &PriceSignal) -> Result<OnOffPolicy, OracleError> {
        let operator = display_prices(prices);
        hjb_best_response(&self.params, &operator, &self.grid)
            .map_err(|e| OracleError::Agent(e.to_string()))
    }

    fn simulate(&self, policy: &OnOffPolicy, stream: &mut NoiseStream) -> SimOutcome {
        let path = simulate_tcl(&self.params, policy, &self.grid, stream)
            .expect("policies produced by this agent match its grid");
        let (u, r) = slot_averages(&path, &self.grid);
        let coupling = Signal::from_rows(&self.shape, &[u, r])
            .expect("slot averages match the two-channel shape");
        SimOutcome {
            coupling,
            local_cost: discomfort_cost(&self.params, &path, &self.grid),
        }
    }
}

/// The commitment problem exposed to the ascent engine. The objective is
/// reported per device so it composes with the engine's per-capita pairing:
/// dividing F₀ by n leaves the minimizer of F₀(v) − n·⟨λ, v⟩ unchanged.
#[derive(Clone, Debug)]
pub struct TclAggregate {
    uc: UcInstance,
}

impl TclAggregate {
    pub fn new(uc: UcInstance) -> Self {
        Self { uc }
    }

    pub fn uc(&self) -> &UcInstance {
        &self.uc
    }
}

impl AggregateOracle for TclAggregate {
    fn objective(&self, profile: &Signal) -> Result<f64, OracleError> {
        let dispatch =
            uc_cost(&self.uc, profile).map_err(|e| OracleError::Aggregate(e.to_string()))?;
        Ok(dispatch.cost / self.uc.population as f64)
    }

    fn best_profile(&self, prices: &PriceSignal) -> Result<Signal, OracleError> {
        aggregate_response(&self.uc, prices).map_err(|e| OracleError::Aggregate(e.to_string()))
    }
}

/// A device fleet coupled to the commitment problem through mean consumption
/// and mean booked response.
pub struct TclInstance {
    agents: Vec<TclAgent>,
    aggregate: TclAggregate,
    shape: SignalShape,
    fingerprint: String,
}

impl TclInstance {
    pub fn new(fleet: Vec<TclParams>, uc: UcInstance, grid: TclGrid) -> Result<Self, TclError> {
        uc.validate()?;
        if fleet.is_empty() {
            return Err(TclError::Invalid("fleet must be nonempty".into()));
        }
        if fleet.len() != uc.population {
            return Err(TclError::Invalid(format!(
                "fleet has {} devices but the commitment problem is scaled for {}",
                fleet.len(),
                uc.population
            )));
        }
        if grid.time().slots() != uc.slots() {
            return Err(TclError::Invalid(format!(
                "grid has {} slots, commitment problem has {}",
                grid.time().slots(),
                uc.slots()
            )));
        }
        if (grid.time().slot_seconds() - uc.slot_seconds).abs() > 1e-9 * uc.slot_seconds {
            return Err(TclError::Invalid(format!(
                "grid slots last {} s, commitment slots {} s",
                grid.time().slot_seconds(),
                uc.slot_seconds
            )));
        }
        for params in &fleet {
            params.validate()?;
            if params.p_on > uc.p_on_max * (1.0 + 1e-12) {
                return Err(TclError::Invalid(format!(
                    "device power {} W exceeds the commitment problem's per-device cap {} W",
                    params.p_on, uc.p_on_max
                )));
            }
        }

        let shape = tcl_signal_shape(uc.slots(), uc.slot_seconds);
        let description = format!(
            "tcl-instance v1\nfleet={}\nuc={}\ngrid=({},{},{},{},{})",
            serde_json::to_string(&fleet).expect("device parameters serialize"),
            serde_json::to_string(&uc).expect("commitment parameters serialize"),
            grid.time().steps(),
            grid.time().dt(),
            grid.nodes(),
            grid.node_temperature(0),
            grid.temperature_step(),
        );
        let fingerprint = fingerprint_hex(&description);
        let grid = Arc::new(grid);
        let agents = fleet
            .into_iter()
            .map(|params| TclAgent::new(params, Arc::clone(&grid), shape.clone()))
            .collect();
        Ok(Self {
            agents,
            aggregate: TclAggregate::new(uc),
            shape,
            fingerprint,
        })
    }
}

impl ProblemInstance for TclInstance {
    type Agent = TclAgent;
    type Aggregate = TclAggregate;

    fn agents(&self) -> &[TclAgent] {
        &self.agents
    }

    fn aggregate(&self) -> &TclAggregate {
        &self.aggregate
    }

    fn shape(&self) -> &SignalShape {
        &self.shape
    }

    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }
}

/// Full experiment description: the device template (volatility overridden
/// per scenario), fleet size and heterogeneity, ascent settings, and the
/// system side.
#[derive(Clone, Debug)]
pub struct CoordinationConfig {
    /// Base device; per-scenario volatility is applied on top.
    pub device: TclParams,
    /// Thermal time constants are spread by U[1−s, 1+s] across the fleet.
    pub gamma_spread: f64,
    pub population: usize,
    /// Scenario volatilities [°C per √hour].
    pub sigmas: Vec<f64>,
    /// Agents simulated per ascent iteration (the m of the sampled scheme).
    pub sample_size: usize,
    /// Price updates before evaluation (the K of the run).
    pub iterations: usize,
    pub schedule: StepSchedule,
    pub uc: UcInstance,
    pub grid: TclGrid,
}

impl CoordinationConfig {
    /// Desk-scale run: a few hundred devices against the microgrid desk
    /// commitment problem, 50 sampled agents per iteration, 75 iterations.
    pub fn desk(population: usize) -> Self {
        let device = TclParams::desk();
        let grid = TclGrid::desk(&device);
        Self {
            device,
            gamma_spread: 0.1,
            population,
            sigmas: vec![0.0, 1.0, 2.0],
            sample_size: 50,
            iterations: 75,
            schedule: StepSchedule::new(0.8, 40.0).expect("desk schedule is valid"),
            uc: UcInstance::desk(population),
            grid,
        }
    }

    pub fn validate(&self) -> Result<(), TclError> {
        self.device.validate()?;
        self.uc.validate()?;
        if self.population == 0 {
            return Err(TclError::Invalid("population must be positive".into()));
        }
        if self.sample_size == 0 {
            return Err(TclError::Invalid("sample size must be at least 1".into()));
        }
        if self.sigmas.is_empty() {
            return Err(TclError::Invalid("at least one volatility scenario is required".into()));
        }
        if self.sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(TclError::Invalid(
                "scenario volatilities must be finite and nonnegative".into(),
            ));
        }
        if self.uc.population != self.population {
            return Err(TclError::Invalid(format!(
                "config population {} disagrees with the commitment problem's {}",
                self.population, self.uc.population
            )));
        }
        Ok(())
    }
}

/// Outcome of one volatility scenario.
#[derive(Clone, Debug)]
pub struct ScenarioReport {
    /// Scenario volatility [°C per √hour].
    pub sigma: f64,
    /// Final operator-facing prices (p, ρ) per slot.
    pub prices: Signal,
    /// Evaluated mean per-device consumption and response [W].
    pub fs_profile: Signal,
    /// Thermostat-baseline mean per-device consumption [W].
    pub bau_consumption: Vec<f64>,
    /// System production cost at the coordinated profile [£].
    pub fs_cost: f64,
    /// System production cost at the baseline profile [£].
    pub bau_cost: f64,
    /// System dispatch backing `fs_cost`.
    pub dispatch: Dispatch,
    /// Mean realized comfort cost per device under coordination [£].
    pub fs_mean_discomfort: f64,
    /// Mean realized comfort cost per device under the thermostat rule [£].
    pub bau_mean_discomfort: f64,
}

impl ScenarioReport {
    pub fn saving(&self) -> f64 {
        self.bau_cost - self.fs_cost
    }

    pub fn relative_saving(&self) -> f64 {
        self.saving() / self.bau_cost
    }

    /// Pearson correlation between the energy price and the coordinated
    /// consumption across slots; load shifting away from expensive slots
    /// shows up as a negative value.
    pub fn price_consumption_correlation(&self) -> f64 {
        let p = self.prices.channel(0);
        let u = self.fs_profile.channel(0);
        let n = p.len() as f64;
        let mp = p.iter().sum::<f64>() / n;
        let mu = u.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut vp = 0.0;
        let mut vu = 0.0;
        for (a, b) in p.iter().zip(u) {
            cov += (a - mp) * (b - mu);
            vp += (a - mp) * (a - mp);
            vu += (b - mu) * (b - mu);
        }
        if vp <= 0.0 || vu <= 0.0 {
            return 0.0;
        }
        cov / (vp * vu).sqrt()
    }
}

/// All scenarios of one experiment run.
#[derive(Clone, Debug)]
pub struct CoordinationReport {
    pub scenarios: Vec<ScenarioReport>,
    pub technology_names: Vec<String>,
    pub population: usize,
    pub sample_size: usize,
    pub iterations: usize,
    pub master_seed: u64,
}

/// Runs every volatility scenario with the same master seed: population
/// draws, training noise and evaluation noise reuse identical streams, so
/// scenarios differ only through the volatility itself (common random
/// numbers). The baseline is simulated on the same evaluation streams as the
/// coordinated fleet.
pub fn coordination_experiment(
    config: &CoordinationConfig,
    seed: u64,
) -> Result<CoordinationReport, TclError> {
    config.validate()?;
    let shape = tcl_signal_shape(config.uc.slots(), config.uc.slot_seconds);
    let mut scenarios = Vec::with_capacity(config.sigmas.len());

    for &sigma in &config.sigmas {
        let population = TclPopulation {
            base: config.device.clone().with_sigma_per_sqrt_hour(sigma),
            size: config.population,
            gamma_spread: config.gamma_spread,
        };
        let fleet = population.build(seed)?;
        let instance = TclInstance::new(fleet.clone(), config.uc.clone(), config.grid.clone())?;

        let trace = sampled_stochastic_uzawa(
            &instance,
            config.sample_size,
            &config.schedule,
            config.iterations,
            seed,
        )
        .map_err(|e| TclError::Coordination(format!("price iteration failed: {e}")))?;
        let lambda = trace.final_lambda().clone();

        // Fresh evaluation population: everyone best-responds to the final
        // prices and is simulated on the evaluation noise lane.
        let eval: Vec<SimOutcome> = instance
            .agents()
            .par_iter()
            .enumerate()
            .map(|(i, agent)| {
                let policy = agent.best_response(&lambda)?;
                let mut stream = NoiseStream::derive_lane(seed, StreamLane::Evaluation, i as u64, 0);
                Ok(agent.simulate(&policy, &mut stream))
            })
            .collect::<Result<Vec<_>, OracleError>>()
            .map_err(|e| TclError::Coordination(format!("evaluation failed: {e}")))?;

        let mut fs_profile = Signal::zeros(&shape);
        let mut fs_mean_discomfort = 0.0;
        for outcome in &eval {
            fs_profile.add_assign(&outcome.coupling);
            fs_mean_discomfort += outcome.local_cost;
        }
        fs_profile.scale(1.0 / eval.len() as f64);
        fs_mean_discomfort /= eval.len() as f64;

        let dispatch = uc_cost(&config.uc, &fs_profile)?;
        let fs_cost = dispatch.cost;

        let bau = bau_baseline(&fleet, &config.grid, seed)?;
        let mut bau_profile = Signal::zeros(&shape);
        for (l, &u) in bau.aggregate_u.iter().enumerate() {
            bau_profile.set(0, l, u);
        }
        let bau_cost = uc_cost(&config.uc, &bau_profile)?.cost;
        let bau_mean_discomfort =
            bau.per_tcl_costs.iter().sum::<f64>() / bau.per_tcl_costs.len() as f64;

        scenarios.push(ScenarioReport {
            sigma,
            prices: display_prices(&lambda),
            fs_profile,
            bau_consumption: bau.aggregate_u,
            fs_cost,
            bau_cost,
            dispatch,
            fs_mean_discomfort,
            bau_mean_discomfort,
        });
    }

    Ok(CoordinationReport {
        scenarios,
        technology_names: config.uc.technologies.iter().map(|t| t.name.clone()).collect(),
        population: config.population,
        sample_size: config.sample_size,
        iterations: config.iterations,
        master_seed: seed,
    })
}

/// Writes the run artifacts: per-scenario prices, aggregate profiles, system
/// dispatch and the cost comparison, plus the exact config snapshot and a
/// manifest with content hashes.
pub fn write_artifacts(
    report: &CoordinationReport,
    config_snapshot: &str,
    command_line: &str,
    dir: &Path,
) -> io::Result<()> {
    let mut manifest = RunManifest::begin(
        command_line.to_string(),
        Some(sha256_hex(config_snapshot.as_bytes())),
        report.master_seed,
    );

    let mut prices = String::from("sigma,slot,p,rho\n");
    let mut aggregate = String::from("sigma,slot,u,r,bau_u\n");
    let mut dispatch = String::from("sigma,slot,technology,h,g,r\n");
    let mut costs = String::from("scenario,bau_cost,fs_cost,saving\n");
    for scenario in &report.scenarios {
        let sigma = scenario.sigma;
        for l in 0..scenario.prices.shape().slots() {
            let _ = writeln!(
                prices,
                "{sigma},{l},{},{}",
                scenario.prices.get(0, l),
                scenario.prices.get(1, l)
            );
            let _ = writeln!(
                aggregate,
                "{sigma},{l},{},{},{}",
                scenario.fs_profile.get(0, l),
                scenario.fs_profile.get(1, l),
                scenario.bau_consumption[l]
            );
        }
        for (l, slot) in scenario.dispatch.slots.iter().enumerate() {
            for (j, name) in report.technology_names.iter().enumerate() {
                let _ = writeln!(
                    dispatch,
                    "{sigma},{l},{name},{},{},{}",
                    slot.commitment[j], slot.production[j], slot.response[j]
                );
            }
        }
        let _ = writeln!(
            costs,
            "{sigma},{},{},{}",
            scenario.bau_cost,
            scenario.fs_cost,
            scenario.saving()
        );
    }

    manifest.emit(dir, "prices.csv", prices.as_bytes())?;
    manifest.emit(dir, "aggregate.csv", aggregate.as_bytes())?;
    manifest.emit(dir, "dispatch.csv", dispatch.as_bytes())?;
    manifest.emit(dir, "costs.csv", costs.as_bytes())?;
    manifest.emit(dir, "config.toml", config_snapshot.as_bytes())?;
    manifest.finish(dir)
}
