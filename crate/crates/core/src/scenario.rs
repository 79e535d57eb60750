//! Built-in scenarios with executable expected outcomes.
//!
//! Where a construction leaves `epsilon` symbolic the scenario uses 1. All
//! assertions are scale-free in `epsilon`, so the choice does not matter.

use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate, InitialSource, ModelConfig, MonitorFlags, Schedule, StopReason, Trajectory};
use crate::error::{HkError, Result};
use crate::monitors::{check_trajectory, theorem2_terms};
use crate::profile::{build_profile, check_delta_equilibrium, MergeEvent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub config: ModelConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionOutcome {
    /// The statement this assertion makes executable.
    pub claim: String,
    pub expected: String,
    pub observed: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub seed: u64,
    pub passed: bool,
    pub stop: Option<StopReason>,
    pub states: usize,
    pub assertions: Vec<AssertionOutcome>,
}

pub const SCENARIO_NAMES: [&str; 6] = ["example1", "example2", "example3", "sync-hk", "async-hk", "powerlaw-a2"];

fn base(n: usize, d: usize, epsilon: f64, max_steps: u64, schedule: Schedule, initial: InitialSource) -> ModelConfig {
    ModelConfig {
        n,
        d,
        epsilon,
        max_steps,
        consensus_tol: 1e-12,
        seed: 0,
        schedule,
        initial,
        monitors: MonitorFlags::default(),
    }
}

pub fn scenario(name: &str) -> Result<Scenario> {
    let (description, config) = match name {
        "example1" => {
            // Centred at the origin so the halving gap stays representable far past
            // the horizon; starting from (0, eps) the smaller opinion drifts towards
            // eps/2 and float rounding closes the gap after about 54 steps.
            let mut c = base(
                2,
                1,
                1.0,
                200,
                Schedule::Constant { alpha: vec![0.5, 0.5] },
                InitialSource::Inline { coords: vec![vec![-0.5], vec![0.5]] },
            );
            c.consensus_tol = 1e-300;
            ("two half-stubborn agents at distance eps approach forever", c)
        }
        "example2" => {
            let mut c = base(
                3,
                2,
                1.0,
                2,
                Schedule::Table { table: vec![vec![0.0, 0.0, 0.0], vec![1.0 / 3.0, 0.5, 0.0]] },
                InitialSource::Inline { coords: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 1.0]] },
            );
            c.consensus_tol = 1e-300;
            ("agents 1 and 2 merge at t = 1 and depart at t = 2", c)
        }
        "example3" => {
            // Agent 3 sits at squared distance 1 + 4^-(t+1) from agent 1. Past t = 25
            // the excess drops below half an ulp of 1, the neighbor test turns
            // true in floating point and agent 3 joins the pair.
            let mut c = base(
                3,
                2,
                1.0,
                25,
                Schedule::Constant { alpha: vec![0.5, 0.5, 0.0] },
                InitialSource::Inline { coords: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 1.0]] },
            );
            c.consensus_tol = 1e-300;
            ("the pair converges to a point exactly eps from agent 3; no delta-equilibrium", c)
        }
        "sync-hk" => (
            "synchronous HK from uniform opinions",
            base(10, 2, 0.3, 1000, Schedule::Synchronous, InitialSource::Uniform { low: 0.0, high: 1.0 }),
        ),
        "async-hk" => (
            "asynchronous HK from uniform opinions",
            base(8, 1, 0.3, 500, Schedule::Asynchronous, InitialSource::Uniform { low: 0.0, high: 1.0 }),
        ),
        "powerlaw-a2" => {
            let mut c =
                base(20, 2, 0.3, 2000, Schedule::PowerLaw { a: 2.0 }, InitialSource::Uniform { low: 0.0, high: 1.0 });
            c.monitors.metrics = false;
            ("stubbornness 1 - (t+1)^-2: summable openness", c)
        }
        _ => return Err(HkError::Config(format!("unknown scenario {name:?}; known: {}", SCENARIO_NAMES.join(", ")))),
    };
    Ok(Scenario { name: name.into(), description: description.into(), config })
}

pub fn builtin_scenarios() -> Vec<Scenario> {
    SCENARIO_NAMES.iter().map(|n| scenario(n).expect("builtin")).collect()
}

struct Asserter(Vec<AssertionOutcome>);

impl Asserter {
    fn check(&mut self, claim: &str, expected: impl ToString, observed: impl ToString, passed: bool) {
        self.0.push(AssertionOutcome {
            claim: claim.into(),
            expected: expected.to_string(),
            observed: observed.to_string(),
            passed,
        });
    }
}

pub fn run_scenario(name: &str) -> Result<ScenarioReport> {
    run_scenario_config(&scenario(name)?)
}

/// Runs a scenario, optionally overriding its seed first.
pub fn run_scenario_seeded(name: &str, seed: Option<u64>) -> Result<(ScenarioReport, Trajectory)> {
    let mut s = scenario(name)?;
    if let Some(seed) = seed {
        s.config.seed = seed;
    }
    let traj = simulate(&s.config)?;
    Ok((evaluate(&s, &traj)?, traj))
}

pub fn run_scenario_config(s: &Scenario) -> Result<ScenarioReport> {
    let traj = simulate(&s.config)?;
    evaluate(s, &traj)
}

fn evaluate(s: &Scenario, traj: &Trajectory) -> Result<ScenarioReport> {
    let mut a = Asserter(Vec::new());
    let eps = s.config.epsilon;
    match s.name.as_str() {
        "example1" => {
            let steady = matches!(traj.stop, Some(StopReason::SteadyState { .. }));
            a.check(
                "termination time is not finite: no exact steady state",
                format!("no steady state in {} steps", s.config.max_steps),
                format!("{:?}", traj.stop),
                !steady && traj.steps() as u64 == s.config.max_steps,
            );
            let worst = traj
                .states
                .iter()
                .map(|st| {
                    let gap = (st.opinion(1)[0] - st.opinion(0)[0]).abs();
                    (gap - eps * 0.5f64.powi(st.t() as i32)).abs()
                })
                .fold(0.0, f64::max);
            a.check("gap halves every step: gap(t) = eps / 2^t", "max deviation <= 1e-12", worst, worst <= 1e-12);
        }
        "example2" => {
            let expected = MergeEvent { t: 1, i: 0, j: 1, departed: true, departed_at: Some(2) };
            let found = traj.events.iter().find(|e| e.i == 0 && e.j == 1).cloned();
            a.check(
                "merging agents may depart at the next step",
                format!("{expected:?}"),
                format!("{found:?}"),
                found.as_ref() == Some(&expected),
            );
            if let Some(x2) = traj.states.get(2) {
                let want = [[0.5, 2.0 / 9.0], [0.5, 1.0 / 6.0]];
                let err = (0..2)
                    .flat_map(|i| (0..2).map(move |k| (i, k)))
                    .map(|(i, k)| (x2.opinion(i)[k] - want[i][k] * eps).abs())
                    .fold(0.0, f64::max);
                a.check("x_1(2) = (eps/2, 2eps/9), x_2(2) = (eps/2, eps/6)", "error <= 1e-15", err, err <= 1e-15);
            }
            let complete = traj.states.get(1).is_some_and(|s| build_profile(s).edges().len() == 3);
            a.check(
                "an eps-trivial profile need not be a steady state",
                "G(1) complete and x(2) != x(1)",
                complete,
                complete && !traj.states[2].same_opinions(&traj.states[1]),
            );
        }
        "example3" => {
            let isolated = traj.states.iter().all(|st| build_profile(st).graph.degree(2) == 0);
            a.check("vertex 3 is isolated at every recorded step", true, isolated, isolated);
            let mut found = Vec::new();
            for st in &traj.states {
                for delta in [eps, eps / 2.0, eps / 10.0] {
                    if check_delta_equilibrium(st, delta)?.exists {
                        found.push((st.t(), delta));
                    }
                }
            }
            a.check(
                "no delta-equilibrium for delta in {eps, eps/2, eps/10}",
                "none at any recorded t",
                format!("{found:?}"),
                found.is_empty(),
            );
        }
        "sync-hk" | "async-hk" | "powerlaw-a2" => {
            let report = check_trajectory(traj, eps / 4.0);
            let v = report.summary.total_violations() + traj.violations.len();
            a.check("every monitored inequality holds", 0, v, v == 0);
            match s.name.as_str() {
                "sync-hk" => {
                    let finite = matches!(
                        traj.stop,
                        Some(StopReason::SteadyState { .. }) | Some(StopReason::Consensus { .. })
                    );
                    a.check(
                        "synchronous HK terminates in finite time",
                        "steady state or consensus",
                        format!("{:?}", traj.stop),
                        finite,
                    );
                }
                "async-hk" => {
                    let bad = traj
                        .states
                        .windows(2)
                        .filter(|w| (0..w[0].n()).filter(|&i| w[0].opinion(i) != w[1].opinion(i)).count() > 1)
                        .count();
                    a.check("asynchronous steps move at most one agent", 0, bad, bad == 0);
                }
                _ => {
                    let bound = eps * std::f64::consts::PI.powi(2) / 6.0;
                    let mut worst_sum: f64 = 0.0;
                    let mut step_violations = 0;
                    for i in 0..traj.header.n {
                        let terms = theorem2_terms(traj, i)?;
                        worst_sum = worst_sum.max(terms.partial_sums.last().copied().unwrap_or(0.0));
                        step_violations += terms.violations.len();
                    }
                    a.check(
                        "summability terms are bounded by eps * pi^2 / 6",
                        format!("<= {bound}"),
                        worst_sum,
                        worst_sum <= bound,
                    );
                    a.check("per-step movement within its summability term", 0, step_violations, step_violations == 0);
                    let tail = traj
                        .states
                        .windows(2)
                        .filter(|w| w[0].t() >= 1000)
                        .flat_map(|w| (0..w[0].n()).map(move |i| crate::dynamics::dist(w[0].opinion(i), w[1].opinion(i))))
                        .fold(0.0, f64::max);
                    a.check("movement after t = 1000 below 1e-6 eps", 1e-6 * eps, tail, tail < 1e-6 * eps);
                }
            }
        }
        other => return Err(HkError::Config(format!("no assertions defined for scenario {other:?}"))),
    }
    let passed = a.0.iter().all(|x| x.passed);
    Ok(ScenarioReport {
        name: s.name.clone(),
        seed: s.config.seed,
        passed,
        stop: traj.stop,
        states: traj.states.len(),
        assertions: a.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{config_to_toml, parse_config_str};

    #[test]
    fn all_builtins_round_trip_through_toml() {
        for s in builtin_scenarios() {
            let text = config_to_toml(&s.config).unwrap();
            assert_eq!(parse_config_str(&text, None).unwrap(), s.config, "{}", s.name);
        }
    }

    #[test]
    fn counterexamples_pass() {
        for name in ["example1", "example2", "example3"] {
            let r = run_scenario(name).unwrap();
            assert!(r.passed, "{r:#?}");
        }
    }

    #[test]
    fn unknown_name() {
        assert!(scenario("nope").is_err());
    }
}
