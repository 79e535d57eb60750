use serde::{Deserialize, Serialize};

use super::contraction::global_diameter;
use super::energy::displacement_sq;
use crate::dynamics::{dist, neighborhoods, OpinionState, Trajectory};
use crate::error::{HkError, Result};
use crate::profile::{all_components_trivial, build_profile, component_diameters};

/// Relative slack on the displacement lower bound.
pub const THEOREM3_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Step {
    /// `|x_i(t) - x_i(t+1)|`.
    pub movement: f64,
    /// `(1 - a_i)(1 - 1/|N_i|) d_t^i`.
    pub term: f64,
    pub holds: bool,
}

pub(crate) fn theorem2_step(
    state: &OpinionState,
    next: &OpinionState,
    alpha_i: f64,
    i: usize,
    nbrs_i: &[usize],
) -> Theorem2Step {
    let xi = state.opinion(i);
    let reach = nbrs_i.iter().map(|&j| dist(xi, state.opinion(j))).fold(0.0, f64::max);
    let size = nbrs_i.len() as f64;
    let term = (1.0 - alpha_i) * (1.0 - 1.0 / size) * reach;
    let movement = dist(xi, next.opinion(i));
    Theorem2Step { movement, term, holds: movement <= term + 1e-12 * state.epsilon().max(1.0) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Terms {
    pub agent: usize,
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub movements: Vec<f64>,
    /// Times where the movement exceeded its term.
    pub violations: Vec<u64>,
}

/// Summability terms for agent `i` along a trajectory.
pub fn theorem2_terms(traj: &Trajectory, i: usize) -> Result<Theorem2Terms> {
    if i >= traj.header.n {
        return Err(HkError::Domain(format!("agent {i} out of range for n = {}", traj.header.n)));
    }
    let mut out =
        Theorem2Terms { agent: i, terms: Vec::new(), partial_sums: Vec::new(), movements: Vec::new(), violations: Vec::new() };
    let mut total = 0.0;
    for (k, alpha) in traj.alphas.iter().enumerate() {
        let (state, next) = (&traj.states[k], &traj.states[k + 1]);
        let nbrs = neighborhoods(state);
        let s = theorem2_step(state, next, alpha[i], i, &nbrs[i]);
        total += s.term;
        out.terms.push(s.term);
        out.partial_sums.push(total);
        out.movements.push(s.movement);
        if !s.holds {
            out.violations.push(state.t());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Theorem3Verdict {
    NotApplicable { reason: String },
    Checked {
        /// `sum_i |x_i(t) - x_i(t+1)|^2`.
        lhs: f64,
        /// `2 delta^2 (1 - max a)^2 / n^8`.
        rhs: f64,
        holds: bool,
        /// `n = 2`, where the underlying isoperimetric bound is not strict.
        boundary: bool,
    },
}

impl Theorem3Verdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, Theorem3Verdict::Checked { holds: false, .. })
    }
}

/// `2 delta^2 (1 - max a)^2 / n^8`.
pub fn theorem3_rhs(n: usize, delta: f64, max_alpha: f64) -> f64 {
    2.0 * delta * delta * (1.0 - max_alpha).powi(2) / (n as f64).powi(8)
}

fn theorem3_compare(n: usize, lhs: f64, rhs: f64) -> Theorem3Verdict {
    let boundary = n == 2;
    let floor = rhs * (1.0 - THEOREM3_RTOL);
    let holds = if boundary { lhs >= floor } else { lhs > floor };
    Theorem3Verdict::Checked { lhs, rhs, holds, boundary }
}

/// Displacement lower bound on a connected, `delta`-nontrivial profile with every `a_i < 1`.
pub fn theorem3_step_bound(state: &OpinionState, next: &OpinionState, alpha: &[f64], delta: f64) -> Theorem3Verdict {
    let na = |reason: &str| Theorem3Verdict::NotApplicable { reason: reason.into() };
    if alpha.iter().any(|&a| a >= 1.0) {
        return na("some alpha_i = 1");
    }
    if !build_profile(state).is_connected() {
        return na("profile is disconnected");
    }
    if global_diameter(state) <= delta {
        return na("profile is delta-trivial");
    }
    let lhs = displacement_sq(state, next).iter().sum();
    let max_alpha = alpha.iter().copied().fold(0.0, f64::max);
    theorem3_compare(state.n(), lhs, theorem3_rhs(state.n(), delta, max_alpha))
}

/// The same bound applied to each `delta`-nontrivial component with at least two
/// agents, using the component's size for `n`. Components of `G(t)` evolve
/// independently for one step, so each is a system of its own.
pub fn theorem3_component_bounds(
    state: &OpinionState,
    next: &OpinionState,
    alpha: &[f64],
    delta: f64,
) -> Vec<(Vec<usize>, Theorem3Verdict)> {
    let profile = build_profile(state);
    let diams = component_diameters(state, &profile);
    let disp = displacement_sq(state, next);
    let mut out = Vec::new();
    for (comp, &diam) in profile.components().into_iter().zip(&diams) {
        if comp.len() < 2 || diam <= delta {
            continue;
        }
        let verdict = if comp.iter().any(|&i| alpha[i] >= 1.0) {
            Theorem3Verdict::NotApplicable { reason: "some alpha_i = 1 in component".into() }
        } else {
            let lhs = comp.iter().map(|&i| disp[i]).sum();
            let max_alpha = comp.iter().map(|&i| alpha[i]).fold(0.0, f64::max);
            theorem3_compare(comp.len(), lhs, theorem3_rhs(comp.len(), delta, max_alpha))
        };
        out.push((comp, verdict));
    }
    out
}

/// First recorded time at which every component of `G(t)` is `delta`-trivial.
pub fn tau_delta(traj: &Trajectory, delta: f64) -> Option<u64> {
    traj.states.iter().find(|s| all_components_trivial(s, delta)).map(OpinionState::t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryBounds {
    pub tau_bound: f64,
    pub a_bound: f64,
}

/// `tau < n^10 (eps/delta)^2 / (8 (1 - s)^2)` and `|A| <= n^10 / (2 (1 - s)^2)`.
pub fn corollary_bounds(n: usize, epsilon: f64, delta: f64, sup_alpha: f64) -> Result<CorollaryBounds> {
    if !(0.0..1.0).contains(&sup_alpha) {
        return Err(HkError::Domain(format!("bounds need 0 <= sup alpha < 1, got {sup_alpha}")));
    }
    if !(delta > 0.0 && delta <= epsilon) {
        return Err(HkError::Domain(format!("bounds need 0 < delta <= epsilon, got delta = {delta}")));
    }
    let n10 = (n as f64).powi(10);
    let gap2 = (1.0 - sup_alpha).powi(2);
    let ratio = epsilon / delta;
    Ok(CorollaryBounds { tau_bound: n10 * ratio * ratio / (8.0 * gap2), a_bound: n10 / (2.0 * gap2) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionStep {
    pub t: u64,
    /// Some component of `G(t+1)` is `delta`-nontrivial.
    pub delta_nontrivial: bool,
    /// Distinct components of `G(t)` interact at `t + 1`.
    pub interact: bool,
    /// Some component of `G(t+1)` is `eps/2`-nontrivial.
    pub half_eps_nontrivial: bool,
}

impl InteractionStep {
    pub fn equivalent(&self) -> bool {
        self.delta_nontrivial == self.interact && self.interact == self.half_eps_nontrivial
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionReport {
    pub delta: f64,
    /// Steps where every component of `G(t)` was `delta`-trivial.
    pub steps: Vec<InteractionStep>,
    pub violations: usize,
    /// First-interaction times `t_m`, `m >= 4`.
    pub a_set: Vec<u64>,
    /// `t_m` where no component of `G(t_m)` was `eps/2`-nontrivial.
    pub a_set_violations: usize,
    pub a_bound: Option<f64>,
    pub a_within_bound: Option<bool>,
}

fn max_component_diameter(state: &OpinionState) -> f64 {
    let profile = build_profile(state);
    component_diameters(state, &profile).into_iter().fold(0.0, f64::max)
}

/// Checks the three-way equivalence on every applicable step and builds the set of
/// first-interaction times.
pub fn interaction_equivalence(traj: &Trajectory, delta: f64) -> Result<InteractionReport> {
    let eps = traj.header.epsilon;
    if !(delta > 0.0 && delta <= eps / 4.0) {
        return Err(HkError::Domain(format!("equivalence needs 0 < delta <= eps/4, got {delta}")));
    }
    let diam: Vec<f64> = traj.states.iter().map(max_component_diameter).collect();
    let mut steps = Vec::new();
    for k in 0..traj.states.len().saturating_sub(1) {
        if diam[k] > delta {
            continue;
        }
        let ids = build_profile(&traj.states[k]).component_ids;
        steps.push(InteractionStep {
            t: traj.states[k].t(),
            delta_nontrivial: diam[k + 1] > delta,
            interact: super::metrics::components_interact(&ids, &traj.states[k + 1]),
            half_eps_nontrivial: diam[k + 1] > eps / 2.0,
        });
    }
    let violations = steps.iter().filter(|s| !s.equivalent()).count();
    let a_idx = first_interaction_indices(&diam, eps);
    let a_set_violations = a_idx.iter().filter(|&&k| diam[k] <= eps / 2.0).count();
    let a_set: Vec<u64> = a_idx.iter().map(|&k| traj.states[k].t()).collect();
    let sup = traj.alphas.iter().flatten().copied().fold(0.0, f64::max);
    let a_bound = corollary_bounds(traj.header.n, eps, delta, sup).ok().map(|b| b.a_bound);
    Ok(InteractionReport {
        delta,
        steps,
        violations,
        a_within_bound: a_bound.map(|b| a_set.len() as f64 <= b),
        a_set,
        a_set_violations,
        a_bound,
    })
}

/// Indices `t_m = min A_m` with `A_m = {t in [tau_m, tau_{m+1}) : D(t) > eps/m}`,
/// where `D` is the largest component diameter and `tau_m` the first `t` with
/// `D(t) <= eps/m`. Only the largest `m` sharing a value of `tau_m` has a
/// nonempty interval, so it suffices to walk the running-minimum records of `D`.
pub(crate) fn first_interaction_indices(diam: &[f64], eps: f64) -> Vec<usize> {
    let trivial = |k: usize, m: u64| diam[k] <= eps / m as f64;
    // Largest m with D <= eps/m, or None when D = 0 (every m qualifies).
    let level = |d: f64| -> Option<u64> {
        if d == 0.0 {
            return None;
        }
        let mut m = (eps / d).floor().min(u64::MAX as f64 / 4.0) as u64;
        while m > 0 && d > eps / m as f64 {
            m -= 1;
        }
        while d <= eps / (m + 1) as f64 {
            m += 1;
        }
        Some(m)
    };
    let mut out = Vec::new();
    let mut best: Option<u64> = Some(0);
    for k in 0..diam.len() {
        let lv = level(diam[k]);
        let improves = match (best, lv) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(b), Some(l)) => l > b,
        };
        if !improves {
            continue;
        }
        best = lv;
        let Some(m) = lv else { break };
        if m < 4 {
            continue;
        }
        // tau_m = k; scan up to tau_{m+1}
        let mut j = k + 1;
        while j < diam.len() && !trivial(j, m + 1) {
            if !trivial(j, m) {
                out.push(j);
                break;
            }
            j += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate_from, step, InitialSource, ModelConfig, MonitorFlags, Schedule};

    fn run(coords: Vec<Vec<f64>>, eps: f64, schedule: Schedule, steps: u64) -> Trajectory {
        let cfg = ModelConfig {
            n: coords.len(),
            d: coords[0].len(),
            epsilon: eps,
            max_steps: steps,
            consensus_tol: 1e-300,
            seed: 1,
            schedule,
            initial: InitialSource::Inline { coords: coords.clone() },
            monitors: MonitorFlags::default(),
        };
        simulate_from(&cfg, OpinionState::from_rows(0, eps, &coords).unwrap()).unwrap()
    }

    #[test]
    fn corollary_examples() {
        let b = corollary_bounds(3, 1.0, 0.25, 0.5).unwrap();
        assert_eq!(b.tau_bound, 472392.0);
        assert_eq!(b.a_bound, 118098.0);
        let s = corollary_bounds(5, 2.0, 0.5, 0.0).unwrap();
        assert_eq!(s.tau_bound, 5f64.powi(10) * 16.0 / 8.0);
        assert!(corollary_bounds(3, 1.0, 0.25, 1.0).is_err());
        assert!(corollary_bounds(3, 1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn tau_examples() {
        let traj = run(vec![vec![0.0], vec![5.0], vec![10.0]], 1.0, Schedule::Synchronous, 3);
        assert_eq!(tau_delta(&traj, 0.1), Some(0));

        let traj = run(vec![vec![-0.5], vec![0.5]], 1.0, Schedule::Constant { alpha: vec![0.5, 0.5] }, 10);
        assert_eq!(tau_delta(&traj, 0.25), Some(2));

        let traj = run(vec![vec![0.0], vec![0.3], vec![0.9]], 1.0, Schedule::Synchronous, 5);
        assert_eq!(tau_delta(&traj, 0.1), Some(1));
    }

    #[test]
    fn theorem2_isolated_and_stubborn() {
        let traj = run(vec![vec![0.0], vec![3.0]], 1.0, Schedule::Synchronous, 1);
        let terms = theorem2_terms(&traj, 0).unwrap();
        assert!(terms.terms.iter().all(|&t| t == 0.0));
        let traj = run(vec![vec![0.0], vec![0.5]], 1.0, Schedule::Constant { alpha: vec![1.0, 0.0] }, 5);
        let terms = theorem2_terms(&traj, 0).unwrap();
        assert!(terms.terms.iter().all(|&t| t == 0.0));
        assert!(terms.violations.is_empty());
    }

    #[test]
    fn theorem2_power_law_partial_sums_are_bounded() {
        let coords = vec![vec![0.0], vec![0.4], vec![0.7], vec![1.0]];
        let traj = run(coords, 0.5, Schedule::PowerLaw { a: 2.0 }, 300);
        for i in 0..4 {
            let terms = theorem2_terms(&traj, i).unwrap();
            assert!(terms.violations.is_empty());
            let bound = 0.5 * std::f64::consts::PI.powi(2) / 6.0;
            assert!(*terms.partial_sums.last().unwrap() <= bound);
        }
    }

    #[test]
    fn theorem3_examples() {
        let s = OpinionState::new(0, 1, 1.0, vec![0.0, 1.0]).unwrap();
        let next = step(&s, &[0.0, 0.0]).unwrap();
        match theorem3_step_bound(&s, &next, &[0.0, 0.0], 0.5) {
            Theorem3Verdict::Checked { lhs, rhs, holds, boundary } => {
                assert_eq!(lhs, 0.5);
                assert_eq!(rhs, 2.0 * 0.25 / 256.0);
                assert!(holds && boundary);
            }
            v => panic!("{v:?}"),
        }
        let alpha = [0.999_999, 0.999_999];
        let next = step(&s, &alpha).unwrap();
        assert!(!theorem3_step_bound(&s, &next, &alpha, 0.5).is_violation());

        let s = OpinionState::new(0, 1, 1.0, vec![0.0, 2.0]).unwrap();
        let next = step(&s, &[0.0, 0.0]).unwrap();
        assert!(matches!(theorem3_step_bound(&s, &next, &[0.0, 0.0], 0.5), Theorem3Verdict::NotApplicable { .. }));
    }

    #[test]
    fn interaction_far_clusters_and_single_cluster() {
        let coords = vec![vec![0.0], vec![0.1], vec![3.0], vec![3.1]];
        let traj = run(coords, 1.0, Schedule::Constant { alpha: vec![0.5; 4] }, 5);
        let rep = interaction_equivalence(&traj, 0.25).unwrap();
        assert!(!rep.steps.is_empty());
        for s in &rep.steps {
            assert!(!s.delta_nontrivial && !s.interact && !s.half_eps_nontrivial);
        }
        assert_eq!(rep.violations, 0);

        let traj = run(vec![vec![0.0], vec![0.1]], 1.0, Schedule::Synchronous, 3);
        let rep = interaction_equivalence(&traj, 0.25).unwrap();
        assert!(rep.steps.iter().all(|s| !s.interact && !s.delta_nontrivial && !s.half_eps_nontrivial));
    }

    #[test]
    fn interaction_engineered_contact() {
        // A pair 0.25 apart collapses to the origin, which lands within eps of B.
        let coords = vec![vec![-0.125, 0.0], vec![0.125, 0.0], vec![0.0, 0.995]];
        let traj = run(coords, 1.0, Schedule::Synchronous, 1);
        let rep = interaction_equivalence(&traj, 0.25).unwrap();
        assert_eq!(rep.steps.len(), 1);
        let s = rep.steps[0];
        assert!(s.delta_nontrivial && s.interact && s.half_eps_nontrivial);
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn first_interaction_records() {
        // D: 0.2 (m=5), 0.1 (m=10), 0.6 (nontrivial for m=10), 0.05
        let idx = first_interaction_indices(&[0.2, 0.1, 0.6, 0.05], 1.0);
        assert_eq!(idx, vec![2]);
        // monotone decrease never re-grows
        assert!(first_interaction_indices(&[0.5, 0.25, 0.125, 0.0], 1.0).is_empty());
    }
}
