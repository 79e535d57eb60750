//! Independent seeded runs executed in parallel.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate, ModelConfig, Schedule, StopReason, Trajectory};
use crate::error::{HkError, Result};
use crate::monitors::{check_trajectory, violation_counts};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "MIXED_HK_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub seed: u64,
    pub steps: usize,
    pub stop: Option<StopReason>,
    pub tau_delta: Option<u64>,
    pub tau_bound: Option<f64>,
    pub consensus: bool,
    pub violations: BTreeMap<String, usize>,
}

impl RunRecord {
    pub fn total_violations(&self) -> usize {
        self.violations.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauStats {
    pub found: usize,
    pub min: Option<u64>,
    pub max: Option<u64>,
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub runs: usize,
    pub seed_base: u64,
    pub delta: f64,
    pub tau: TauStats,
    pub consensus_rate: f64,
    pub violations: BTreeMap<String, usize>,
    pub total_violations: usize,
    pub records: Vec<RunRecord>,
}

/// Worker count from `MIXED_HK_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Steps of an asynchronous trajectory where more than one agent moved.
pub fn multi_agent_steps(traj: &Trajectory) -> usize {
    traj.states
        .windows(2)
        .filter(|w| (0..w[0].n()).filter(|&i| w[0].opinion(i) != w[1].opinion(i)).count() > 1)
        .count()
}

/// Runs `template` with seeds `seed_base + i` for `i < num_runs` and checks each
/// trajectory at `delta` (default `eps / 4`). `on_run` sees every trajectory,
/// e.g. to persist it; it is called from worker threads.
pub fn batch_run_with<F>(
    template: &ModelConfig,
    num_runs: usize,
    seed_base: u64,
    delta: Option<f64>,
    on_run: F,
) -> Result<BatchSummary>
where
    F: Fn(usize, &Trajectory) -> Result<()> + Sync,
{
    if num_runs == 0 {
        return Err(HkError::Config("num_runs must be at least 1".into()));
    }
    template.validate()?;
    let delta = delta.unwrap_or(template.epsilon / 4.0);
    let job = || {
        (0..num_runs)
            .into_par_iter()
            .map(|index| {
                let mut cfg = template.clone();
                cfg.seed = seed_base.wrapping_add(index as u64);
                let traj = simulate(&cfg)?;
                on_run(index, &traj)?;
                let report = check_trajectory(&traj, delta);
                let mut violations = violation_counts(&report);
                violations.insert("online".into(), traj.violations.len());
                if matches!(cfg.schedule, Schedule::Asynchronous) {
                    violations.insert("async_single_agent".into(), multi_agent_steps(&traj));
                }
                Ok(RunRecord {
                    index,
                    seed: cfg.seed,
                    steps: traj.steps(),
                    stop: traj.stop,
                    tau_delta: report.summary.tau_delta,
                    tau_bound: report.summary.tau_bound,
                    consensus: report.summary.consensus_reached,
                    violations,
                })
            })
            .collect::<Result<Vec<RunRecord>>>()
    };
    let records = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HkError::Config(format!("cannot build thread pool: {e}")))?
            .install(job)?,
        None => job()?,
    };
    Ok(summarize(records, seed_base, delta))
}

pub fn batch_run(template: &ModelConfig, num_runs: usize, seed_base: u64) -> Result<BatchSummary> {
    batch_run_with(template, num_runs, seed_base, None, |_, _| Ok(()))
}

fn summarize(records: Vec<RunRecord>, seed_base: u64, delta: f64) -> BatchSummary {
    let taus: Vec<u64> = records.iter().filter_map(|r| r.tau_delta).collect();
    let mut violations = BTreeMap::new();
    for r in &records {
        for (k, v) in &r.violations {
            *violations.entry(k.clone()).or_insert(0) += v;
        }
    }
    let total_violations = violations.values().sum();
    let runs = records.len();
    BatchSummary {
        runs,
        seed_base,
        delta,
        tau: TauStats {
            found: taus.len(),
            min: taus.iter().copied().min(),
            max: taus.iter().copied().max(),
            mean: (!taus.is_empty()).then(|| taus.iter().sum::<u64>() as f64 / taus.len() as f64),
        },
        consensus_rate: records.iter().filter(|r| r.consensus).count() as f64 / runs as f64,
        violations,
        total_violations,
        records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{InitialSource, MonitorFlags};

    fn template(schedule: Schedule) -> ModelConfig {
        ModelConfig {
            n: 6,
            d: 2,
            epsilon: 0.3,
            max_steps: 100,
            consensus_tol: 1e-12,
            seed: 0,
            schedule,
            initial: InitialSource::Uniform { low: 0.0, high: 1.0 },
            monitors: MonitorFlags::default(),
        }
    }

    #[test]
    fn deterministic_given_seed_base() {
        let a = batch_run(&template(Schedule::Synchronous), 8, 100).unwrap();
        let b = batch_run(&template(Schedule::Synchronous), 8, 100).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total_violations, 0);
        assert_eq!(a.records.iter().map(|r| r.seed).collect::<Vec<_>>(), (100..108).collect::<Vec<_>>());
    }

    #[test]
    fn async_moves_one_agent() {
        let s = batch_run(&template(Schedule::Asynchronous), 6, 5).unwrap();
        assert_eq!(s.violations["async_single_agent"], 0);
        assert_eq!(s.total_violations, 0);
    }

    #[test]
    fn zero_runs_rejected() {
        assert!(batch_run(&template(Schedule::Synchronous), 0, 0).is_err());
    }
}
