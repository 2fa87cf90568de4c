//! Dual ascent traces and their CSV serialization.

use std::io::{self, Write};
use std::time::Duration;

use crate::schedule::StepSchedule;
use crate::signal::Signal;

/// One stored iteration: the multiplier λ^k before the update, the ascent
/// direction Y^{k+1}, and the step ρ_k that produced λ^{k+1}.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub k: usize,
    pub lambda: Signal,
    pub direction: Signal,
    pub rho: f64,
    /// Periodic dual-value estimate Ŵ(λ^k), when the run requested it.
    pub dual_value: Option<f64>,
    pub wall: Duration,
}

/// Full history of one ascent run. With thinning 1 (the default) every
/// iteration is stored and the exact update identity
/// λ^{k+1} = λ^k + ρ_k·Y^{k+1} can be re-checked bit-for-bit.
#[derive(Clone, Debug)]
pub struct DualTrace {
    records: Vec<IterationRecord>,
    final_lambda: Signal,
    iterations: usize,
    thinning: usize,
}

impl DualTrace {
    pub(crate) fn new(
        records: Vec<IterationRecord>,
        final_lambda: Signal,
        iterations: usize,
        thinning: usize,
    ) -> Self {
        Self {
            records,
            final_lambda,
            iterations,
            thinning,
        }
    }

    /// Stored per-iteration records (all of them when thinning is 1).
    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    /// λ^K after the last update.
    pub fn final_lambda(&self) -> &Signal {
        &self.final_lambda
    }

    /// Number of iterations K the run performed.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn thinning(&self) -> usize {
        self.thinning
    }

    /// λ^k at a stored iteration, or the final multiplier for k = K.
    pub fn lambda_at(&self, k: usize) -> Option<&Signal> {
        if k == self.iterations {
            return Some(&self.final_lambda);
        }
        if k % self.thinning != 0 {
            return None;
        }
        self.records.get(k / self.thinning).map(|r| &r.lambda)
    }

    /// Re-checks λ^{k+1} = λ^k + ρ_k Y^{k+1} bit-for-bit on unthinned traces.
    pub fn verify_update_identity(&self) -> bool {
        if self.thinning != 1 {
            return true;
        }
        for (i, rec) in self.records.iter().enumerate() {
            let mut next = rec.lambda.clone();
            next.axpy(rec.rho, &rec.direction);
            let target = if i + 1 < self.records.len() {
                &self.records[i + 1].lambda
            } else {
                &self.final_lambda
            };
            if next.values() != target.values() {
                return false;
            }
        }
        true
    }

    /// Long-format CSV: `k, rho_k, channel, slot, lambda, Y`, one row per
    /// stored iteration × channel × slot.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,rho_k,channel,slot,lambda,Y")?;
        for rec in &self.records {
            let shape = rec.lambda.shape().clone();
            for (c, name) in shape.channel_names().iter().enumerate() {
                for slot in 0..shape.slots() {
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        rec.k,
                        rec.rho,
                        name,
                        slot,
                        rec.lambda.get(c, slot),
                        rec.direction.get(c, slot),
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Metadata sidecar written next to each trace CSV.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct TraceMeta {
    pub seed: u64,
    pub schedule_a: f64,
    pub schedule_b: f64,
    pub iterations: usize,
    pub instance: String,
}

impl TraceMeta {
    pub fn new(seed: u64, schedule: &StepSchedule, iterations: usize, instance: String) -> Self {
        Self {
            seed,
            schedule_a: schedule.a(),
            schedule_b: schedule.b(),
            iterations,
            instance,
        }
    }

    pub fn write_json<W: Write>(&self, out: W) -> io::Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(io::Error::other)
    }
}
