use serde::{Deserialize, Serialize};

use crate::dynamics::{OpinionState, Trajectory};
use crate::error::{HkError, Result};
use crate::profile::diameter;

/// `max over distinct i != j with a_i >= a_j of a_i - (a_i - a_j) / n`.
///
/// Attained by the two largest entries: `a_(1) (1 - 1/n) + a_(2) / n`.
pub fn beta(alpha: &[f64]) -> Result<f64> {
    let n = alpha.len();
    if n < 2 {
        return Err(HkError::Domain("beta needs at least two agents".into()));
    }
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &a in alpha {
        if a > first {
            second = first;
            first = a;
        } else if a > second {
            second = a;
        }
    }
    let nf = n as f64;
    Ok(first - (first - second) / nf)
}

pub fn global_diameter(state: &OpinionState) -> f64 {
    diameter(state.opinions()).expect("states are nonempty")
}

/// Additive slack for diameter inequalities, `1e-12` at unit scale.
pub fn diameter_slack(diam: f64) -> f64 {
    1e-12 * diam.max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionVerdict {
    pub diam_before: f64,
    pub diam_after: f64,
    pub beta: Option<f64>,
    /// Whether `G(t)` is epsilon-trivial, i.e. the contraction bound applies.
    pub applicable: bool,
    /// `diam(t+1) <= beta diam(t)`; `None` when not applicable.
    pub contraction_holds: Option<bool>,
    /// `diam(t+1) <= diam(t)`, checked on every step.
    pub nonexpansion_holds: bool,
}

pub fn contraction_check(state: &OpinionState, next: &OpinionState, alpha: &[f64]) -> ContractionVerdict {
    let before = global_diameter(state);
    let after = global_diameter(next);
    let slack = diameter_slack(before);
    let beta = beta(alpha).ok();
    let applicable = before <= state.epsilon() && beta.is_some();
    let contraction_holds = if applicable { beta.map(|b| after <= b * before + slack) } else { None };
    ContractionVerdict {
        diam_before: before,
        diam_after: after,
        beta,
        applicable,
        contraction_holds,
        nonexpansion_holds: after <= before + slack,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Verdict {
    /// First recorded time at which `G(t)` is epsilon-trivial.
    pub start: Option<u64>,
    /// Steps where `diam(s)` exceeded `prod beta * diam(start)`.
    pub envelope_violations: usize,
    /// Steps after `start` with `beta <= delta_cap`.
    pub contracting_steps: usize,
    /// Finite-horizon stand-in for `limsup beta < 1`: contracting steps keep
    /// occurring in the second half of the horizon after `start`.
    pub hypothesis_met: bool,
    /// `delta_cap ^ contracting_steps * diam(start)`.
    pub geometric_bound: f64,
    pub final_diameter: f64,
    pub surrogate: bool,
}

/// Checks the product-of-betas envelope from the first epsilon-trivial time on.
pub fn theorem1_monitor(traj: &Trajectory, delta_cap: f64) -> Theorem1Verdict {
    let states = &traj.states;
    let final_diameter = states.last().map_or(0.0, global_diameter);
    let Some(k0) = states.iter().position(|s| global_diameter(s) <= s.epsilon()) else {
        return Theorem1Verdict {
            start: None,
            envelope_violations: 0,
            contracting_steps: 0,
            hypothesis_met: false,
            geometric_bound: f64::NAN,
            final_diameter,
            surrogate: true,
        };
    };
    let d0 = global_diameter(&states[k0]);
    let mut envelope = d0;
    let mut violations = 0;
    let mut contracting = Vec::new();
    for k in k0..states.len().saturating_sub(1) {
        let b = beta(&traj.alphas[k]).unwrap_or(1.0);
        envelope *= b;
        if b <= delta_cap {
            contracting.push(k);
        }
        let d = global_diameter(&states[k + 1]);
        if d > envelope + diameter_slack(d0) {
            violations += 1;
        }
    }
    let horizon = states.len().saturating_sub(1);
    let midpoint = k0 + (horizon.saturating_sub(k0)) / 2;
    let hypothesis_met = delta_cap < 1.0 && contracting.last().is_some_and(|&k| k >= midpoint);
    Theorem1Verdict {
        start: Some(states[k0].t()),
        envelope_violations: violations,
        contracting_steps: contracting.len(),
        hypothesis_met,
        geometric_bound: delta_cap.powi(contracting.len() as i32) * d0,
        final_diameter,
        surrogate: true,
    }
}
