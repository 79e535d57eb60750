use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contraction::{contraction_check, theorem1_monitor, Theorem1Verdict};
use super::energy::energy_slack;
use super::metrics::{step_metrics, StepMetrics};
use super::theorems::{
    corollary_bounds, interaction_equivalence, tau_delta, theorem2_terms, theorem3_component_bounds, Theorem3Verdict,
};
use crate::dynamics::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceVerdict {
    pub delta: f64,
    pub tau_delta: Option<u64>,
    /// `None` when the recorded `sup alpha` is 1.
    pub tau_bound: Option<f64>,
    pub consensus_reached: bool,
    pub final_diameter: f64,
    /// Final partial sum of the summability terms, per agent.
    pub summability_partial_sums: Vec<f64>,
    #[serde(rename = "A_set")]
    pub a_set: Vec<u64>,
    #[serde(rename = "A_bound")]
    pub a_bound: Option<f64>,
}

/// Largest stubbornness recorded along the trajectory.
pub fn recorded_sup_alpha(traj: &Trajectory) -> f64 {
    traj.alphas.iter().flatten().copied().fold(0.0, f64::max)
}

pub fn convergence_verdict(traj: &Trajectory, delta: f64) -> ConvergenceVerdict {
    let eps = traj.header.epsilon;
    let bounds = corollary_bounds(traj.header.n, eps, delta, recorded_sup_alpha(traj)).ok();
    let final_diameter = traj.last().map_or(0.0, super::global_diameter);
    let summability = (0..traj.header.n)
        .map(|i| theorem2_terms(traj, i).ok().and_then(|t| t.partial_sums.last().copied()).unwrap_or(0.0))
        .collect();
    let (a_set, a_bound) = match interaction_equivalence(traj, delta) {
        Ok(r) => (r.a_set, r.a_bound),
        Err(_) => (Vec::new(), bounds.map(|b| b.a_bound)),
    };
    ConvergenceVerdict {
        delta,
        tau_delta: tau_delta(traj, delta),
        tau_bound: bounds.map(|b| b.tau_bound),
        consensus_reached: final_diameter <= traj.header.consensus_tol,
        final_diameter,
        summability_partial_sums: summability,
        a_set,
        a_bound,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub metrics: StepMetrics,
    pub nl8_ok: bool,
    pub energy_monotone_ok: bool,
    pub nonexpansion_ok: bool,
    /// `None` off the epsilon-trivial regime.
    pub contraction_ok: Option<bool>,
    pub theorem2_ok: bool,
    pub theorem3: Vec<Theorem3Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub nl8_violations: usize,
    pub energy_violations: usize,
    pub contraction_violations: usize,
    pub nonexpansion_violations: usize,
    pub theorem2_violations: usize,
    pub theorem3_violations: usize,
    pub interaction_violations: usize,
    pub a_set_violations: usize,
    pub tau_delta: Option<u64>,
    pub tau_bound: Option<f64>,
    pub tau_within_bound: Option<bool>,
    #[serde(rename = "A_set")]
    pub a_set: Vec<u64>,
    #[serde(rename = "A_bound")]
    pub a_bound: Option<f64>,
    pub consensus_reached: bool,
    pub final_diameter: f64,
}

impl CheckSummary {
    pub fn total_violations(&self) -> usize {
        self.nl8_violations
            + self.energy_violations
            + self.contraction_violations
            + self.nonexpansion_violations
            + self.theorem2_violations
            + self.theorem3_violations
            + self.interaction_violations
            + self.a_set_violations
            + usize::from(self.tau_within_bound == Some(false))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub delta: f64,
    pub steps: Vec<StepRecord>,
    pub theorem1: Theorem1Verdict,
    pub convergence: ConvergenceVerdict,
    pub summary: CheckSummary,
    /// The contraction constant is the distinct-pair maximum; allowing `i = j`
    /// would give `max a_i` instead.
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.summary.total_violations() == 0
    }
}

/// Re-derives every per-step inequality from the stored states. Steps are
/// evaluated in parallel.
pub fn check_trajectory(traj: &Trajectory, delta: f64) -> CheckReport {
    let steps: Vec<StepRecord> = (0..traj.alphas.len())
        .into_par_iter()
        .map(|k| {
            let (state, next, alpha) = (&traj.states[k], &traj.states[k + 1], &traj.alphas[k]);
            let metrics = step_metrics(state, next, alpha);
            let slack = energy_slack(state);
            let z_next = metrics.z - metrics.nl8_lhs;
            let c = contraction_check(state, next, alpha);
            let nbrs = crate::dynamics::neighborhoods(state);
            let theorem2_ok = (0..state.n())
                .all(|i| super::theorems::theorem2_step(state, next, alpha[i], i, &nbrs[i]).holds);
            let theorem3 = theorem3_component_bounds(state, next, alpha, delta).into_iter().map(|(_, v)| v).collect();
            StepRecord {
                nl8_ok: metrics.nl8_lhs >= metrics.nl8_rhs - slack,
                energy_monotone_ok: z_next <= metrics.z + slack,
                nonexpansion_ok: c.nonexpansion_holds,
                contraction_ok: c.contraction_holds,
                theorem2_ok,
                theorem3,
                metrics,
            }
        })
        .collect();
    let convergence = convergence_verdict(traj, delta);
    let interaction = interaction_equivalence(traj, delta).ok();
    let count = |f: &dyn Fn(&StepRecord) -> bool| steps.iter().filter(|s| f(s)).count();
    let summary = CheckSummary {
        nl8_violations: count(&|s| !s.nl8_ok),
        energy_violations: count(&|s| !s.energy_monotone_ok),
        contraction_violations: count(&|s| s.contraction_ok == Some(false)),
        nonexpansion_violations: count(&|s| !s.nonexpansion_ok),
        theorem2_violations: count(&|s| !s.theorem2_ok),
        theorem3_violations: steps.iter().flat_map(|s| &s.theorem3).filter(|v| v.is_violation()).count(),
        interaction_violations: interaction.as_ref().map_or(0, |r| r.violations),
        a_set_violations: interaction.as_ref().map_or(0, |r| {
            r.a_set_violations + usize::from(r.a_within_bound == Some(false))
        }),
        tau_delta: convergence.tau_delta,
        tau_bound: convergence.tau_bound,
        tau_within_bound: match (convergence.tau_delta, convergence.tau_bound) {
            (Some(t), Some(b)) => Some((t as f64) < b),
            _ => None,
        },
        a_set: convergence.a_set.clone(),
        a_bound: convergence.a_bound,
        consensus_reached: convergence.consensus_reached,
        final_diameter: convergence.final_diameter,
    };
    let mut notes = vec!["beta is the maximum over distinct agent pairs".to_string()];
    if interaction.is_none() {
        notes.push(format!("interaction equivalence skipped: delta = {delta} exceeds eps/4"));
    }
    if traj.header.n == 2 {
        notes.push("n = 2: displacement bound checked non-strictly".into());
    }
    let theorem1 = theorem1_monitor(traj, 0.5);
    CheckReport { delta, steps, theorem1, convergence, summary, notes }
}

/// Counts by check name, for batch summaries.
pub fn violation_counts(report: &CheckReport) -> BTreeMap<String, usize> {
    let s = &report.summary;
    BTreeMap::from([
        ("nl8".to_string(), s.nl8_violations),
        ("energy".to_string(), s.energy_violations),
        ("contraction".to_string(), s.contraction_violations),
        ("nonexpansion".to_string(), s.nonexpansion_violations),
        ("theorem2".to_string(), s.theorem2_violations),
        ("theorem3".to_string(), s.theorem3_violations),
        ("interaction".to_string(), s.interaction_violations),
        ("a_set".to_string(), s.a_set_violations),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, InitialSource, ModelConfig, MonitorFlags, Schedule};

    #[test]
    fn clean_sync_run_has_no_violations() {
        let cfg = ModelConfig {
            n: 8,
            d: 2,
            epsilon: 0.4,
            max_steps: 60,
            consensus_tol: 1e-12,
            seed: 11,
            schedule: Schedule::Synchronous,
            initial: InitialSource::Uniform { low: 0.0, high: 1.0 },
            monitors: MonitorFlags::default(),
        };
        let traj = simulate(&cfg).unwrap();
        let report = check_trajectory(&traj, 0.1);
        assert!(report.ok(), "{:?}", report.summary);
        assert!(report.summary.tau_delta.is_some());
        let json = serde_json::to_value(&report.summary).unwrap();
        for key in ["nl8_violations", "contraction_violations", "tau_delta", "tau_bound", "A_set"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
