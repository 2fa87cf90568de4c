//! Structured-text run configuration for the command-line front end.
//!
//! Every file is TOML. Key names are part of the command-line contract;
//! the sections and their defaults are:
//!
//! ```toml
//! [schedule]        # step sizes ρ_k = a/(b+k+1); both keys required when
//! a = 0.8           # the section is present. A config file supplied to the
//! b = 40.0          # lqg and tcl commands must contain this section.
//!
//! [seed]
//! master = 7        # overridden by --seed
//!
//! [lqg]             # bias/variance study grid
//! populations = [10, 100]      # agent counts n
//! checkpoints = [10, 30, 100]  # iteration counts k at which to decompose
//! runs = 20                    # replicates J per population
//! horizon = 5                  # tracking horizon T
//! spread = 0.0                 # 0 = identical agents, else U[1±spread] scaling
//! nu = 1.0                     # aggregate tracking weight
//! target_slope = 0.1           # tracking target r_t = target_slope·t
//!
//! [lqg.agent]       # scalar agent dynamics; all seven keys or none
//! a = 1.0
//! b = 1.0
//! c = 1.0
//! x0 = 1.0
//! state_cost = 1.0
//! control_cost = 1.0
//! terminal_cost = 1.0
//!
//! [population]      # device fleet for the tcl command
//! size = 300
//! gamma_spread = 0.1
//! # [population.device] — full device parameter table (see TclParams)
//!
//! [grid]            # device state grid; slots follow the [uc] system
//! dt_target = 7.6   # requested decision step [s]
//! delta_t = 0.15    # temperature node spacing [°C]
//! x_lo = -24.0      # default: device band padded by 3 °C
//! x_hi = -11.0
//!
//! [algorithm]       # coordination loop
//! iterations = 75            # overridden by --iterations; 0 = report λ⁰
//! sample_size = 50           # sampled agents per iteration
//! sigmas = [0.0, 1.0, 2.0]   # scenario volatilities [°C/√h]; --sigma wins
//!
//! # [uc] — full commitment system (see UcInstance); defaults to the
//! # built-in demo system sized to [population].size
//! ```

use std::fmt::Display;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lqg::{LqgAgentParams, LqgAggregateParams};
use crate::schedule::StepSchedule;
use crate::tcl::{CoordinationConfig, TclGrid, TclParams, UcInstance};

/// Problems that make a run configuration unusable. The front end reports
/// these and exits with status 2.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("config parse error in {origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("config error at {key}: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: impl Into<String>, message: impl Display) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        message: message.to_string(),
    }
}

/// `[schedule]`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub a: f64,
    pub b: f64,
}

/// `[seed]`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    pub master: u64,
}

/// `[lqg.agent]` — scalar dynamics and costs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x0: f64,
    pub state_cost: f64,
    pub control_cost: f64,
    pub terminal_cost: f64,
}

/// `[lqg]`
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LqgSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub populations: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agent: Option<AgentSection>,
}

/// `[population]`
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_spread: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub device: Option<TclParams>,
}

/// `[grid]`
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_hi: Option<f64>,
}

/// `[algorithm]`
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
}

/// A parsed run configuration; resolve methods fill in defaults and produce
/// the typed plan for one subcommand plus the fully explicit effective
/// config used for the `config.toml` artifact.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<SeedSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lqg: Option<LqgSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub population: Option<PopulationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<AlgorithmSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uc: Option<UcInstance>,
    /// Whether this config came from an explicit file; file configs must
    /// spell out `[schedule]` for the lqg and tcl commands.
    #[serde(skip)]
    pub from_file: bool,
}

/// Resolved inputs for the `toy` command.
#[derive(Clone, Copy, Debug)]
pub struct ToyPlan {
    pub schedule: StepSchedule,
    pub iterations: usize,
    pub seed: u64,
}

/// Resolved inputs for the `lqg` command.
#[derive(Clone, Debug)]
pub struct LqgPlan {
    pub populations: Vec<usize>,
    pub checkpoints: Vec<usize>,
    pub runs: usize,
    pub horizon: usize,
    pub spread: f64,
    pub agent: LqgAgentParams,
    pub aggregate: LqgAggregateParams,
    pub schedule: StepSchedule,
    pub seed: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses config text; `origin` names the source in diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })?;
        config.from_file = true;
        Ok(config)
    }

    /// TOML text of this config, used as the reproducibility snapshot.
    pub fn snapshot(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }

    fn schedule_or(&self, a: f64, b: f64) -> Result<StepSchedule, ConfigError> {
        match &self.schedule {
            Some(s) => StepSchedule::new(s.a, s.b).map_err(|e| invalid("[schedule]", e)),
            None => Ok(StepSchedule::new(a, b).expect("built-in schedule is valid")),
        }
    }

    fn schedule_required(&self, a: f64, b: f64) -> Result<StepSchedule, ConfigError> {
        if self.from_file && self.schedule.is_none() {
            return Err(invalid(
                "[schedule]",
                "section is required in a config file (keys a and b)",
            ));
        }
        self.schedule_or(a, b)
    }

    fn master_seed(&self, fallback: u64) -> u64 {
        self.seed.map(|s| s.master).unwrap_or(fallback)
    }

    /// Resolves the toy run: single-slot saddle point, defaults
    /// a = 1, b = 10, 5000 iterations, seed 7.
    pub fn resolve_toy(&self) -> Result<(ToyPlan, RunConfig), ConfigError> {
        let schedule = self.schedule_or(1.0, 10.0)?;
        let iterations = self
            .algorithm
            .as_ref()
            .and_then(|a| a.iterations)
            .unwrap_or(5000);
        let seed = self.master_seed(7);
        let plan = ToyPlan {
            schedule,
            iterations,
            seed,
        };
        let effective = RunConfig {
            schedule: Some(ScheduleSection {
                a: schedule.a(),
                b: schedule.b(),
            }),
            seed: Some(SeedSection { master: seed }),
            algorithm: Some(AlgorithmSection {
                iterations: Some(iterations),
                sample_size: None,
                sigmas: None,
            }),
            ..RunConfig::default()
        };
        Ok((plan, effective))
    }

    /// Resolves the bias/variance study. Defaults are smoke scale:
    /// n ∈ {10, 100}, k ∈ {10, 30, 100}, J = 20 over a 5-step horizon.
    pub fn resolve_lqg(&self) -> Result<(LqgPlan, RunConfig), ConfigError> {
        let schedule = self.schedule_required(4.0, 10.0)?;
        let seed = self.master_seed(7);
        let section = self.lqg.clone().unwrap_or_default();

        let populations = section.populations.unwrap_or_else(|| vec![10, 100]);
        if populations.is_empty() || populations.contains(&0) {
            return Err(invalid(
                "[lqg].populations",
                "need a nonempty list of agent counts ≥ 1",
            ));
        }
        let checkpoints = section.checkpoints.unwrap_or_else(|| vec![10, 30, 100]);
        if checkpoints.is_empty() || checkpoints.contains(&0) {
            return Err(invalid(
                "[lqg].checkpoints",
                "need a nonempty list of iteration counts ≥ 1",
            ));
        }
        let runs = section.runs.unwrap_or(20);
        if runs == 0 {
            return Err(invalid("[lqg].runs", "need at least one replicate"));
        }
        let horizon = section.horizon.unwrap_or(5);
        if horizon == 0 {
            return Err(invalid("[lqg].horizon", "horizon must be ≥ 1"));
        }
        let spread = section.spread.unwrap_or(0.0);
        if !(0.0..1.0).contains(&spread) {
            return Err(invalid("[lqg].spread", "spread must lie in [0, 1)"));
        }
        let nu = section.nu.unwrap_or(1.0);
        let target_slope = section.target_slope.unwrap_or(0.1);
        if !target_slope.is_finite() {
            return Err(invalid("[lqg].target_slope", "must be finite"));
        }
        let agent_section = section.agent.unwrap_or(AgentSection {
            a: 1.0,
            b: 1.0,
            c: 1.0,
            x0: 1.0,
            state_cost: 1.0,
            control_cost: 1.0,
            terminal_cost: 1.0,
        });
        let agent = LqgAgentParams::scalar(
            agent_section.a,
            agent_section.b,
            agent_section.c,
            agent_section.x0,
            agent_section.state_cost,
            agent_section.control_cost,
            agent_section.terminal_cost,
        )
        .map_err(|e| invalid("[lqg.agent]", e))?;
        let aggregate = LqgAggregateParams::new(
            nu,
            (0..horizon).map(|t| target_slope * t as f64).collect(),
        )
        .map_err(|e| invalid("[lqg].nu", e))?;

        let plan = LqgPlan {
            populations: populations.clone(),
            checkpoints: checkpoints.clone(),
            runs,
            horizon,
            spread,
            agent,
            aggregate,
            schedule,
            seed,
        };
        let effective = RunConfig {
            schedule: Some(ScheduleSection {
                a: schedule.a(),
                b: schedule.b(),
            }),
            seed: Some(SeedSection { master: seed }),
            lqg: Some(LqgSection {
                populations: Some(populations),
                checkpoints: Some(checkpoints),
                runs: Some(runs),
                horizon: Some(horizon),
                spread: Some(spread),
                nu: Some(nu),
                target_slope: Some(target_slope),
                agent: Some(agent_section),
            }),
            ..RunConfig::default()
        };
        Ok((plan, effective))
    }

    /// Resolves the fleet-coordination run. Defaults: 300 devices of the
    /// demo kind against the demo commitment system, 75 iterations of the
    /// sampled scheme with 50 agents per step, σ ∈ {0, 1, 2}.
    pub fn resolve_tcl(&self) -> Result<(CoordinationConfig, u64, RunConfig), ConfigError> {
        let schedule = self.schedule_required(0.8, 40.0)?;
        let seed = self.master_seed(7);

        let population = self.population.clone().unwrap_or_default();
        let size = population.size.unwrap_or(300);
        if size == 0 {
            return Err(invalid("[population].size", "fleet must be nonempty"));
        }
        let gamma_spread = population.gamma_spread.unwrap_or(0.1);
        if !(0.0..1.0).contains(&gamma_spread) {
            return Err(invalid(
                "[population].gamma_spread",
                "spread must lie in [0, 1)",
            ));
        }
        let device = population.device.clone().unwrap_or_else(TclParams::desk);
        device
            .validate()
            .map_err(|e| invalid("[population.device]", e))?;

        let algorithm = self.algorithm.clone().unwrap_or_default();
        let iterations = algorithm.iterations.unwrap_or(75);
        let sample_size = algorithm.sample_size.unwrap_or(50);
        if sample_size == 0 {
            return Err(invalid("[algorithm].sample_size", "must be ≥ 1"));
        }
        let sigmas = algorithm
            .sigmas
            .unwrap_or_else(|| vec![0.0, 1.0, 2.0]);
        if sigmas.is_empty() || sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(invalid(
                "[algorithm].sigmas",
                "need a nonempty list of finite volatilities ≥ 0",
            ));
        }

        let uc = match &self.uc {
            Some(uc) => {
                uc.validate().map_err(|e| invalid("[uc]", e))?;
                if uc.population != size {
                    return Err(invalid(
                        "[uc].population",
                        format!(
                            "must match [population].size ({} vs {})",
                            uc.population, size
                        ),
                    ));
                }
                uc.clone()
            }
            None => UcInstance::desk(size),
        };

        let grid_section = self.grid.unwrap_or_default();
        let dt_target = grid_section.dt_target.unwrap_or(7.6);
        let delta_t = grid_section.delta_t.unwrap_or(0.15);
        let x_lo = grid_section.x_lo.unwrap_or(device.x_min - 3.0);
        let x_hi = grid_section.x_hi.unwrap_or(device.x_max + 3.0);
        let grid = TclGrid::new(
            uc.slots(),
            uc.slot_seconds,
            dt_target,
            delta_t,
            x_lo,
            x_hi,
        )
        .map_err(|e| invalid("[grid]", e))?;

        let config = CoordinationConfig {
            device: device.clone(),
            gamma_spread,
            population: size,
            sigmas: sigmas.clone(),
            sample_size,
            iterations,
            schedule,
            uc: uc.clone(),
            grid,
        };
        config
            .validate()
            .map_err(|e| invalid("tcl configuration", e))?;

        let effective = RunConfig {
            schedule: Some(ScheduleSection {
                a: schedule.a(),
                b: schedule.b(),
            }),
            seed: Some(SeedSection { master: seed }),
            population: Some(PopulationSection {
                size: Some(size),
                gamma_spread: Some(gamma_spread),
                device: Some(device),
            }),
            grid: Some(GridSection {
                dt_target: Some(dt_target),
                delta_t: Some(delta_t),
                x_lo: Some(x_lo),
                x_hi: Some(x_hi),
            }),
            algorithm: Some(AlgorithmSection {
                iterations: Some(iterations),
                sample_size: Some(sample_size),
                sigmas: Some(sigmas),
            }),
            uc: Some(uc),
            ..RunConfig::default()
        };
        Ok((config, seed, effective))
    }
}
