//! Bias/variance decomposition of the stochastic multiplier around the
//! exact-gradient fixed point, across population sizes and iteration counts.
//!
//! For each population size n, a deterministic reference multiplier λ̄ⁿ is
//! computed with the exact-gradient ascent; J independent stochastic runs
//! then yield, at each checkpoint k,
//!
//! ```text
//! b_{k,n} = (1/J) Σ_j λ^{k,n,j} − λ̄ⁿ            (bias vector)
//! v_{k,n} = (1/J) Σ_j ‖λ^{k,n,j} − λ̄ⁿ − b_{k,n}‖²   (variance)
//! ℓ_{k,n} = v_{k,n} + ‖b_{k,n}‖²                 (total loss, exact identity)
//! ```

use rayon::prelude::*;

use super::{LqgError, LqgInstance};
use crate::ascent::{deterministic_uzawa, stochastic_uzawa, AscentError};
use crate::noise::NoiseStream;
use crate::problem::ProblemInstance;
use crate::schedule::StepSchedule;
use crate::signal::Signal;

/// Iteration count for the exact-gradient reference multiplier.
pub const REFERENCE_ITERATIONS: usize = 10_000;

#[derive(Clone, Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment setup: {0}")]
    Invalid(String),
    #[error("instance construction for n = {population}: {source}")]
    Instance {
        population: usize,
        source: LqgError,
    },
    #[error("reference ascent for n = {population}: {source}")]
    Reference {
        population: usize,
        source: AscentError,
    },
    #[error("replicate {replicate} for n = {population}: {source}")]
    Replicate {
        population: usize,
        replicate: usize,
        source: AscentError,
    },
}

#[derive(Clone, Debug)]
pub struct BiasVarianceCell {
    pub population: usize,
    pub iterations: usize,
    /// Bias vector over the price coordinates.
    pub bias: Vec<f64>,
    pub bias_norm_sq: f64,
    pub variance: f64,
    /// Always computed as `variance + bias_norm_sq`.
    pub loss: f64,
}

#[derive(Clone, Debug)]
pub struct BiasVarianceReport {
    pub populations: Vec<usize>,
    pub checkpoints: Vec<usize>,
    pub runs: usize,
    /// Population-major, checkpoint-minor.
    pub cells: Vec<BiasVarianceCell>,
}

impl BiasVarianceReport {
    pub fn cell(&self, iterations: usize, population: usize) -> Option<&BiasVarianceCell> {
        self.cells
            .iter()
            .find(|c| c.iterations == iterations && c.population == population)
    }

    /// OLS slope of log₁₀ variance against log₁₀ k for a fixed population.
    pub fn slope_variance_vs_iteration(&self, population: usize) -> Option<f64> {
        let points: Vec<(f64, f64)> = self
            .cells
            .iter()
            .filter(|c| c.population == population && c.variance > 0.0)
            .map(|c| ((c.iterations as f64).log10(), c.variance.log10()))
            .collect();
        (points.len() >= 2).then(|| ols_slope(&points))
    }

    /// OLS slope of log₁₀ variance against log₁₀ n for a fixed checkpoint.
    pub fn slope_variance_vs_population(&self, iterations: usize) -> Option<f64> {
        let points: Vec<(f64, f64)> = self
            .cells
            .iter()
            .filter(|c| c.iterations == iterations && c.variance > 0.0)
            .map(|c| ((c.population as f64).log10(), c.variance.log10()))
            .collect();
        (points.len() >= 2).then(|| ols_slope(&points))
    }

    /// Table with one row per checkpoint: `log10_k, log10 v per population`.
    pub fn variance_vs_iteration_csv(&self) -> String {
        let mut out = String::from("log10_k");
        for n in &self.populations {
            out.push_str(&format!(",n={n}"));
        }
        out.push('\n');
        for &k in &self.checkpoints {
            out.push_str(&format!("{}", (k as f64).log10()));
            for &n in &self.populations {
                let v = self.cell(k, n).map_or(f64::NAN, |c| c.variance);
                out.push_str(&format!(",{}", v.log10()));
            }
            out.push('\n');
        }
        out
    }

    /// Table with one row per population: `log10_n, log10 v per checkpoint`.
    pub fn variance_vs_population_csv(&self) -> String {
        let mut out = String::from("log10_n");
        for k in &self.checkpoints {
            out.push_str(&format!(",k={k}"));
        }
        out.push('\n');
        for &n in &self.populations {
            out.push_str(&format!("{}", (n as f64).log10()));
            for &k in &self.checkpoints {
                let v = self.cell(k, n).map_or(f64::NAN, |c| c.variance);
                out.push_str(&format!(",{}", v.log10()));
            }
            out.push('\n');
        }
        out
    }

    /// Full decomposition, one row per (k, n) cell.
    pub fn bias_csv(&self) -> String {
        let mut out = String::from("k,n,bias_norm_sq,variance,loss\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                c.iterations, c.population, c.bias_norm_sq, c.variance, c.loss
            ));
        }
        out
    }
}

/// Ordinary least squares slope through (x, y) points.
pub fn ols_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxy: f64 = points
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mean_x) * (x - mean_x)).sum();
    sxy / sxx
}

/// Runs the full grid: one deterministic reference plus `runs` independent
/// stochastic replicates per population size, decomposed at each checkpoint.
///
/// Replicates run in parallel; every replicate's noise is derived from
/// `(seed, population index, replicate index)`, so the report is identical
/// for any worker count.
pub fn bias_variance_experiment<F>(
    make_instance: F,
    populations: &[usize],
    checkpoints: &[usize],
    runs: usize,
    schedule: &StepSchedule,
    seed: u64,
) -> Result<BiasVarianceReport, ExperimentError>
where
    F: Fn(usize) -> Result<LqgInstance, LqgError> + Sync,
{
    if populations.is_empty() || checkpoints.is_empty() {
        return Err(ExperimentError::Invalid(
            "need at least one population size and one checkpoint".into(),
        ));
    }
    if runs == 0 {
        return Err(ExperimentError::Invalid("need at least one run".into()));
    }
    if checkpoints.iter().any(|&k| k == 0) {
        return Err(ExperimentError::Invalid("checkpoints must be ≥ 1".into()));
    }
    let max_k = *checkpoints.iter().max().expect("nonempty");

    let mut cells = Vec::with_capacity(populations.len() * checkpoints.len());
    for (n_index, &n) in populations.iter().enumerate() {
        let instance = make_instance(n).map_err(|source| ExperimentError::Instance {
            population: n,
            source,
        })?;
        let reference = deterministic_uzawa(&instance, schedule, REFERENCE_ITERATIONS)
            .map_err(|source| ExperimentError::Reference {
                population: n,
                source,
            })?
            .final_lambda()
            .clone();

        // J replicates, each returning its multiplier at every checkpoint.
        let replicate_lambdas: Vec<Vec<Signal>> = (0..runs)
            .into_par_iter()
            .map(|j| {
                let master = NoiseStream::derive_master(
                    seed,
                    "bias-variance-replicate",
                    (n_index * runs + j) as u64,
                );
                let trace = stochastic_uzawa(&instance, schedule, max_k, master).map_err(
                    |source| ExperimentError::Replicate {
                        population: n,
                        replicate: j,
                        source,
                    },
                )?;
                Ok(checkpoints
                    .iter()
                    .map(|&k| {
                        trace
                            .lambda_at(k)
                            .expect("checkpoint within recorded trace")
                            .clone()
                    })
                    .collect())
            })
            .collect::<Result<_, ExperimentError>>()?;

        for (c_index, &k) in checkpoints.iter().enumerate() {
            let mut mean = Signal::zeros(instance.shape());
            for lambdas in &replicate_lambdas {
                mean.add_assign(&lambdas[c_index]);
            }
            mean.scale(1.0 / runs as f64);

            let mut bias_signal = mean;
            bias_signal.axpy(-1.0, &reference);

            let mut variance = 0.0;
            for lambdas in &replicate_lambdas {
                let mut deviation = lambdas[c_index].clone();
                deviation.axpy(-1.0, &reference);
                deviation.axpy(-1.0, &bias_signal);
                variance += deviation.norm_sq();
            }
            variance /= runs as f64;

            let bias_norm_sq = bias_signal.norm_sq();
            cells.push(BiasVarianceCell {
                population: n,
                iterations: k,
                bias: bias_signal.values().to_vec(),
                bias_norm_sq,
                variance,
                loss: variance + bias_norm_sq,
            });
        }
    }

    Ok(BiasVarianceReport {
        populations: populations.to_vec(),
        checkpoints: checkpoints.to_vec(),
        runs,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lqg::{desk_agent, desk_aggregate, LqgAgentParams, LqgInstance};
    use approx::assert_abs_diff_eq;

    fn small_family(n: usize) -> Result<LqgInstance, LqgError> {
        LqgInstance::heterogeneous(n, desk_agent(), desk_aggregate(3), 23, 0.2)
    }

    #[test]
    fn ols_slope_recovers_exact_line() {
        let points: Vec<(f64, f64)> = (1..6)
            .map(|i| (i as f64, -0.8 * i as f64 + 3.0))
            .collect();
        assert_abs_diff_eq!(ols_slope(&points), -0.8, epsilon = 1e-12);
    }

    #[test]
    fn single_run_has_zero_variance_and_loss_equals_bias() {
        let schedule = StepSchedule::new(1.0, 5.0).unwrap();
        let report =
            bias_variance_experiment(small_family, &[2], &[2, 5], 1, &schedule, 7).unwrap();
        for cell in &report.cells {
            assert_eq!(cell.variance, 0.0);
            assert_eq!(cell.loss.to_bits(), cell.bias_norm_sq.to_bits());
        }
    }

    #[test]
    fn zero_noise_replicates_have_zero_variance() {
        let noiseless = |n: usize| {
            let agent = LqgAgentParams::scalar(1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0)?;
            LqgInstance::homogeneous(n, agent, desk_aggregate(3))
        };
        let schedule = StepSchedule::new(1.0, 5.0).unwrap();
        let report =
            bias_variance_experiment(noiseless, &[3], &[4, 8], 10, &schedule, 11).unwrap();
        for cell in &report.cells {
            // Replicates are bit-identical; only mean round-off remains.
            assert!(cell.variance < 1e-28, "variance {}", cell.variance);
        }
    }

    #[test]
    fn loss_identity_holds_bit_exactly() {
        let schedule = StepSchedule::new(1.0, 5.0).unwrap();
        let report =
            bias_variance_experiment(small_family, &[4], &[8, 16], 12, &schedule, 3).unwrap();
        for cell in &report.cells {
            assert_eq!(
                cell.loss.to_bits(),
                (cell.variance + cell.bias_norm_sq).to_bits()
            );
        }
    }

    #[test]
    fn variance_shrinks_with_iterations_and_population() {
        let schedule = StepSchedule::new(2.0, 10.0).unwrap();
        let report = bias_variance_experiment(
            small_family,
            &[4, 16],
            &[16, 128],
            60,
            &schedule,
            19,
        )
        .unwrap();
        for &n in &[4usize, 16] {
            let early = report.cell(16, n).unwrap().variance;
            let late = report.cell(128, n).unwrap().variance;
            assert!(
                late < early,
                "variance did not shrink in k for n={n}: {early} → {late}"
            );
        }
        for &k in &[16usize, 128] {
            let small = report.cell(k, 4).unwrap().variance;
            let large = report.cell(k, 16).unwrap().variance;
            assert!(
                large < small,
                "variance did not shrink in n at k={k}: {small} → {large}"
            );
        }
        assert!(report.slope_variance_vs_iteration(16).is_some());
    }

    #[test]
    fn csv_tables_have_expected_layout() {
        let schedule = StepSchedule::new(1.0, 5.0).unwrap();
        let report =
            bias_variance_experiment(small_family, &[2, 4], &[2, 4], 3, &schedule, 5).unwrap();

        let by_iteration = report.variance_vs_iteration_csv();
        let mut lines = by_iteration.lines();
        assert_eq!(lines.next().unwrap(), "log10_k,n=2,n=4");
        assert_eq!(by_iteration.lines().count(), 3);
        let first_row = by_iteration.lines().nth(1).unwrap();
        let first_field: f64 = first_row.split(',').next().unwrap().parse().unwrap();
        assert_abs_diff_eq!(first_field, (2.0f64).log10(), epsilon = 1e-12);

        let by_population = report.variance_vs_population_csv();
        assert_eq!(by_population.lines().next().unwrap(), "log10_n,k=2,k=4");

        let bias = report.bias_csv();
        assert_eq!(bias.lines().next().unwrap(), "k,n,bias_norm_sq,variance,loss");
        assert_eq!(bias.lines().count(), 5);
    }
}
