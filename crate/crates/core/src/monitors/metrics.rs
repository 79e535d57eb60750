use serde::{Deserialize, Serialize};

use super::contraction::{beta, diameter_slack, global_diameter};
use super::energy::{displacement_sq, energy, energy_slack, nl8_lower_bound_with};
use super::theorems::theorem2_step;
use crate::dynamics::{neighborhoods, MonitorFlags, OpinionState, Violation};
use crate::profile::{build_profile, component_diameters};

/// Per-step quantities for the pair `(x(t), x(t+1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub t: u64,
    #[serde(rename = "Z")]
    pub z: f64,
    pub beta: Option<f64>,
    pub diam_global: f64,
    pub diam_per_component: Vec<f64>,
    pub displacement_sq: Vec<f64>,
    pub nl8_lhs: f64,
    pub nl8_rhs: f64,
    pub interaction_flag: bool,
}

pub fn step_metrics(state: &OpinionState, next: &OpinionState, alpha: &[f64]) -> StepMetrics {
    step_metrics_with(state, next, alpha, &neighborhoods(state))
}

pub(crate) fn step_metrics_with(
    state: &OpinionState,
    next: &OpinionState,
    alpha: &[f64],
    nbrs: &[Vec<usize>],
) -> StepMetrics {
    let z = energy(state);
    let z_next = energy(next);
    let profile = build_profile(state);
    StepMetrics {
        t: state.t(),
        z,
        beta: beta(alpha).ok(),
        diam_global: global_diameter(state),
        diam_per_component: component_diameters(state, &profile),
        displacement_sq: displacement_sq(state, next),
        nl8_lhs: z - z_next,
        nl8_rhs: nl8_lower_bound_with(nbrs, state, next, alpha),
        interaction_flag: components_interact(&profile.component_ids, next),
    }
}

/// Whether an edge of `G(t+1)` joins two components of `G(t)`.
pub fn components_interact(ids_before: &[usize], next: &OpinionState) -> bool {
    build_profile(next).edges().iter().any(|&(i, j)| ids_before[i] != ids_before[j])
}

/// Violations of the inequalities selected by `flags` on one step.
pub(crate) fn online_checks(
    state: &OpinionState,
    next: &OpinionState,
    alpha: &[f64],
    nbrs: &[Vec<usize>],
    m: &StepMetrics,
    flags: &MonitorFlags,
) -> Vec<Violation> {
    let t = state.t();
    let mut out = Vec::new();
    let mut flag = |check: &str, lhs: f64, rhs: f64| out.push(Violation { t, check: check.into(), lhs, rhs });
    if flags.nl8 {
        let slack = energy_slack(state);
        if m.nl8_lhs < m.nl8_rhs - slack {
            flag("nl8", m.nl8_lhs, m.nl8_rhs);
        }
        let z_next = m.z - m.nl8_lhs;
        if z_next > m.z + slack {
            flag("energy_monotone", z_next, m.z);
        }
    }
    if flags.contraction {
        let after = global_diameter(next);
        let slack = diameter_slack(m.diam_global);
        if after > m.diam_global + slack {
            flag("nonexpansion", after, m.diam_global);
        }
        if let Some(b) = m.beta {
            if m.diam_global <= state.epsilon() && after > b * m.diam_global + slack {
                flag("contraction", after, b * m.diam_global);
            }
        }
    }
    if flags.theorem2 {
        for (i, list) in nbrs.iter().enumerate() {
            let s = theorem2_step(state, next, alpha[i], i, list);
            if !s.holds {
                flag(&format!("theorem2_agent_{i}"), s.movement, s.term);
            }
        }
    }
    out
}
