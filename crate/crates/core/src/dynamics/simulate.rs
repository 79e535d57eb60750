use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::schedule::Schedule;
use super::state::{neighborhoods, step_with_neighborhoods, OpinionState, MAX_MAGNITUDE};
use crate::error::{HkError, Result};
use crate::monitors::{online_checks, step_metrics_with, StepMetrics};
use crate::profile::{build_profile, component_diameters, detect_merge_events, MergeEvent};

pub const FORMAT_VERSION: u32 = 1;

fn default_consensus_tol() -> f64 {
    1e-12
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSource {
    /// One row per agent.
    Inline { coords: Vec<Vec<f64>> },
    /// CSV with header `agent,coord_0,...`.
    File { path: PathBuf },
    /// Independent uniform draws in `[low, high)^d`, seeded by the run seed.
    Uniform { low: f64, high: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorFlags {
    #[serde(default = "yes")]
    pub metrics: bool,
    #[serde(default = "yes")]
    pub nl8: bool,
    #[serde(default = "yes")]
    pub contraction: bool,
    #[serde(default = "yes")]
    pub theorem2: bool,
    #[serde(default = "yes")]
    pub merges: bool,
}

impl Default for MonitorFlags {
    fn default() -> Self {
        MonitorFlags { metrics: true, nl8: true, contraction: true, theorem2: true, merges: true }
    }
}

impl MonitorFlags {
    pub fn none() -> Self {
        MonitorFlags { metrics: false, nl8: false, contraction: false, theorem2: false, merges: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub max_steps: u64,
    #[serde(default = "default_consensus_tol")]
    pub consensus_tol: f64,
    #[serde(default)]
    pub seed: u64,
    pub schedule: Schedule,
    pub initial: InitialSource,
    #[serde(default)]
    pub monitors: MonitorFlags,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.validate_located().map_err(|(_, e)| e)
    }

    /// Like `validate`, also naming the offending key.
    pub(crate) fn validate_located(&self) -> std::result::Result<(), (&'static str, HkError)> {
        let bad = |key: &'static str, m: String| Err((key, HkError::Config(m)));
        if self.n == 0 {
            return bad("n", "n must be at least 1".into());
        }
        if self.d == 0 {
            return bad("d", "d must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon <= MAX_MAGNITUDE) {
            return bad("epsilon", format!("epsilon must lie in (0, {MAX_MAGNITUDE:e}], got {}", self.epsilon));
        }
        if self.max_steps == 0 {
            return bad("max_steps", "max_steps must be at least 1".into());
        }
        if !(self.consensus_tol.is_finite() && self.consensus_tol > 0.0) {
            return bad("consensus_tol", format!("consensus_tol must be positive, got {}", self.consensus_tol));
        }
        self.schedule.validate(self.n).map_err(|e| ("schedule", e))?;
        match &self.initial {
            InitialSource::Inline { coords } => {
                if coords.len() != self.n {
                    return bad("coords", format!("initial.coords has {} rows, expected n = {}", coords.len(), self.n));
                }
                if let Some(i) = coords.iter().position(|r| r.len() != self.d) {
                    let m = format!("initial.coords row {i} has {} entries, expected d = {}", coords[i].len(), self.d);
                    return bad("coords", m);
                }
            }
            InitialSource::Uniform { low, high } => {
                if !(low.abs() <= MAX_MAGNITUDE && high.abs() <= MAX_MAGNITUDE && low < high) {
                    return bad("low", format!("initial uniform range [{low}, {high}) is empty or out of range"));
                }
            }
            InitialSource::File { .. } => {}
        }
        Ok(())
    }
}

/// Builds `x(0)`.
pub fn initial_state(config: &ModelConfig) -> Result<OpinionState> {
    let state = match &config.initial {
        InitialSource::Inline { coords } => OpinionState::from_rows(0, config.epsilon, coords)?,
        InitialSource::File { path } => {
            let rows = crate::io::read_initial_csv(path)?;
            OpinionState::from_rows(0, config.epsilon, &rows)?
        }
        InitialSource::Uniform { low, high } => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            // keep clear of the per-step streams used by the asynchronous schedule
            rng.set_stream(u64::MAX);
            let x = (0..config.n * config.d).map(|_| rng.random_range(*low..*high)).collect();
            OpinionState::new(0, config.d, config.epsilon, x)?
        }
    };
    if state.n() != config.n || state.d() != config.d {
        return Err(HkError::Config(format!(
            "initial opinions are {}x{}, config says n = {}, d = {}",
            state.n(),
            state.d(),
            config.n,
            config.d
        )));
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    /// `x(t) = x(t-1)` bitwise, and the state is a fixed point for every later step.
    SteadyState { t: u64 },
    /// Every component of `G(t)` has diameter at most `consensus_tol`.
    Consensus { t: u64 },
    MaxSteps { t: u64 },
}

impl StopReason {
    pub fn t(&self) -> u64 {
        match *self {
            StopReason::SteadyState { t } | StopReason::Consensus { t } | StopReason::MaxSteps { t } => t,
        }
    }
}

/// A monitored inequality that failed beyond its rounding slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: u64,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub format_version: u32,
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub consensus_tol: f64,
    pub schedule: Schedule,
}

/// `states[k]` is `x(k)`; `alphas[k]` is the `alpha(k)` that produced `states[k + 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub header: TrajectoryHeader,
    pub states: Vec<OpinionState>,
    pub alphas: Vec<Vec<f64>>,
    #[serde(default)]
    pub metrics: Vec<StepMetrics>,
    #[serde(default)]
    pub events: Vec<MergeEvent>,
    #[serde(default)]
    pub violations: Vec<Violation>,
    #[serde(default)]
    pub stop: Option<StopReason>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<&OpinionState> {
        self.states.last()
    }

    /// Number of recorded steps.
    pub fn steps(&self) -> usize {
        self.alphas.len()
    }
}

pub fn simulate(config: &ModelConfig) -> Result<Trajectory> {
    config.validate()?;
    let x0 = initial_state(config)?;
    simulate_from(config, x0)
}

/// Runs from an explicit `x(0)`; the config's `initial` field is ignored.
pub fn simulate_from(config: &ModelConfig, x0: OpinionState) -> Result<Trajectory> {
    config.validate()?;
    if x0.n() != config.n || x0.d() != config.d || x0.epsilon() != config.epsilon {
        return Err(HkError::Config("initial state does not match n, d, epsilon of the config".into()));
    }
    let flags = config.monitors;
    let time_invariant = matches!(config.schedule, Schedule::Synchronous | Schedule::Constant { .. });
    let mut traj = Trajectory {
        header: TrajectoryHeader {
            format_version: FORMAT_VERSION,
            n: config.n,
            d: config.d,
            epsilon: config.epsilon,
            seed: config.seed,
            consensus_tol: config.consensus_tol,
            schedule: config.schedule.clone(),
        },
        states: vec![x0.at_time(0)],
        alphas: Vec::new(),
        metrics: Vec::new(),
        events: Vec::new(),
        violations: Vec::new(),
        stop: None,
    };
    for t in 0..config.max_steps {
        let state = traj.states.last().expect("nonempty");
        let alpha = config.schedule.alpha(t, config.n, config.seed)?;
        let nbrs = neighborhoods(state);
        let next = step_with_neighborhoods(state, &alpha, &nbrs)?;
        if flags.metrics || flags.nl8 || flags.contraction || flags.theorem2 {
            let m = step_metrics_with(state, &next, &alpha, &nbrs);
            traj.violations.extend(online_checks(state, &next, &alpha, &nbrs, &m, &flags));
            if flags.metrics {
                traj.metrics.push(m);
            }
        }
        let unchanged = next.same_opinions(state);
        let steady = unchanged && (time_invariant || is_hk_fixed_point(state, &nbrs));
        traj.alphas.push(alpha);
        traj.states.push(next);
        let next = traj.states.last().expect("just pushed");
        if steady {
            traj.stop = Some(StopReason::SteadyState { t: t + 1 });
            break;
        }
        let profile = build_profile(next);
        if component_diameters(next, &profile).iter().all(|&d| d <= config.consensus_tol) {
            traj.stop = Some(StopReason::Consensus { t: t + 1 });
            break;
        }
    }
    if traj.stop.is_none() {
        traj.stop = Some(StopReason::MaxSteps { t: config.max_steps });
    }
    if flags.merges {
        traj.events = detect_merge_events(&traj.states);
    }
    Ok(traj)
}

/// Whether every agent already sits bitwise on its neighbor mean, so no
/// stubbornness vector can move anybody.
fn is_hk_fixed_point(state: &OpinionState, nbrs: &[Vec<usize>]) -> bool {
    let sync = vec![0.0; state.n()];
    match step_with_neighborhoods(state, &sync, nbrs) {
        Ok(next) => next.same_opinions(state),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(coords: Vec<Vec<f64>>, schedule: Schedule, max_steps: u64) -> ModelConfig {
        ModelConfig {
            n: coords.len(),
            d: coords[0].len(),
            epsilon: 1.0,
            max_steps,
            consensus_tol: 1e-300,
            seed: 7,
            schedule,
            initial: InitialSource::Inline { coords },
            monitors: MonitorFlags::default(),
        }
    }

    #[test]
    fn single_agent_is_steady_at_one() {
        let traj = simulate(&config(vec![vec![0.3]], Schedule::Synchronous, 10)).unwrap();
        assert_eq!(traj.len(), 2);
        assert_eq!(traj.stop, Some(StopReason::SteadyState { t: 1 }));
    }

    #[test]
    fn separated_pair_is_steady_at_one() {
        let traj = simulate(&config(vec![vec![0.0], vec![1.5]], Schedule::Synchronous, 10)).unwrap();
        assert_eq!(traj.stop, Some(StopReason::SteadyState { t: 1 }));
    }

    #[test]
    fn example1_gap_halves_without_steady_state() {
        let cfg = config(vec![vec![-0.5], vec![0.5]], Schedule::Constant { alpha: vec![0.5, 0.5] }, 50);
        let traj = simulate(&cfg).unwrap();
        assert_eq!(traj.stop, Some(StopReason::MaxSteps { t: 50 }));
        for (t, s) in traj.states.iter().enumerate() {
            let gap = s.opinion(1)[0] - s.opinion(0)[0];
            assert_eq!(gap, 0.5f64.powi(t as i32));
        }
        assert!(traj.violations.is_empty());
    }

    #[test]
    fn consensus_stop_for_sync_complete_profile() {
        let cfg = config(vec![vec![0.0], vec![0.5], vec![0.75]], Schedule::Synchronous, 10);
        let traj = simulate(&cfg).unwrap();
        assert!(matches!(traj.stop, Some(StopReason::SteadyState { t: 2 }) | Some(StopReason::Consensus { t: 1 })));
    }

    #[test]
    fn async_unchanged_step_does_not_stop() {
        // agent 2 is isolated; picking it leaves the state unchanged but the
        // pair (0, 1) can still move later
        let mut cfg = config(vec![vec![0.0], vec![0.5], vec![5.0]], Schedule::Asynchronous, 200);
        cfg.monitors = MonitorFlags::none();
        let traj = simulate(&cfg).unwrap();
        let last = traj.last().unwrap();
        assert_eq!(last.opinion(0), last.opinion(1));
    }

    #[test]
    fn identical_configs_are_bitwise_reproducible() {
        let mut cfg = config(vec![vec![0.0; 2]; 6], Schedule::Asynchronous, 40);
        cfg.initial = InitialSource::Uniform { low: 0.0, high: 1.0 };
        cfg.epsilon = 0.4;
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.states.len(), b.states.len());
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!(x.same_opinions(y));
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = config(vec![vec![0.0]], Schedule::Synchronous, 1);
        cfg.epsilon = -1.0;
        assert!(matches!(simulate(&cfg), Err(HkError::Config(_))));
        let mut cfg = config(vec![vec![0.0]], Schedule::Synchronous, 1);
        cfg.max_steps = 0;
        assert!(cfg.validate().is_err());
        let cfg = config(vec![vec![0.0], vec![1.0]], Schedule::Constant { alpha: vec![0.5, 1.5] }, 1);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn table_exhaustion_is_an_error() {
        let cfg = config(vec![vec![0.0], vec![0.5]], Schedule::Table { table: vec![vec![0.5, 0.5]] }, 3);
        assert!(matches!(simulate(&cfg), Err(HkError::ScheduleExhausted { t: 1, len: 1 })));
    }
}
