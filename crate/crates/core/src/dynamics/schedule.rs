use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::state::validate_alpha;
use crate::error::{HkError, Result};

/// Rule producing the stubbornness vector `alpha(t)` in `[0, 1]^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// Everybody absolutely open-minded: the synchronous HK model.
    Synchronous,
    /// One uniformly chosen agent open-minded, everybody else absolutely stubborn.
    Asynchronous,
    Constant { alpha: Vec<f64> },
    /// `alpha_i(t) = 1 - min(1, (t + 1)^-a)` for every agent.
    PowerLaw { a: f64 },
    /// Explicit per-step rows; running past the last row is an error.
    Table { table: Vec<Vec<f64>> },
}

impl Schedule {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Schedule::Synchronous | Schedule::Asynchronous => Ok(()),
            Schedule::Constant { alpha } => validate_alpha(alpha, n),
            Schedule::PowerLaw { a } => {
                if a.is_finite() && *a > 1.0 {
                    Ok(())
                } else {
                    Err(HkError::Config(format!("power-law exponent must satisfy a > 1, got {a}")))
                }
            }
            Schedule::Table { table } => {
                if table.is_empty() {
                    return Err(HkError::Config("schedule table has no rows".into()));
                }
                for (t, row) in table.iter().enumerate() {
                    validate_alpha(row, n).map_err(|e| HkError::Config(format!("schedule table row {t}: {e}")))?;
                }
                Ok(())
            }
        }
    }

    /// `alpha(t)`. The asynchronous draw is derived from `(seed, t)` alone, so any
    /// step can be replayed without rerunning the prefix.
    pub fn alpha(&self, t: u64, n: usize, seed: u64) -> Result<Vec<f64>> {
        match self {
            Schedule::Synchronous => Ok(vec![0.0; n]),
            Schedule::Asynchronous => {
                let chosen = async_agent(seed, t, n);
                Ok((0..n).map(|i| if i == chosen { 0.0 } else { 1.0 }).collect())
            }
            Schedule::Constant { alpha } => Ok(alpha.clone()),
            Schedule::PowerLaw { a } => {
                let open = (1.0 / ((t as f64) + 1.0).powf(*a)).min(1.0);
                Ok(vec![1.0 - open; n])
            }
            Schedule::Table { table } => table
                .get(t as usize)
                .cloned()
                .ok_or(HkError::ScheduleExhausted { t, len: table.len() }),
        }
    }

    /// `sup_t max_i alpha_i(t)`.
    pub fn sup_alpha(&self) -> f64 {
        match self {
            Schedule::Synchronous => 0.0,
            // power law tends to 1, asynchronous always has stubborn agents (n > 1)
            Schedule::Asynchronous | Schedule::PowerLaw { .. } => 1.0,
            Schedule::Constant { alpha } => alpha.iter().copied().fold(0.0, f64::max),
            Schedule::Table { table } => table.iter().flatten().copied().fold(0.0, f64::max),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Schedule::Synchronous => "synchronous",
            Schedule::Asynchronous => "asynchronous",
            Schedule::Constant { .. } => "constant",
            Schedule::PowerLaw { .. } => "power_law",
            Schedule::Table { .. } => "table",
        }
    }
}

/// The open-minded agent `i(t)` of the asynchronous schedule.
pub fn async_agent(seed: u64, t: u64, n: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t);
    rng.random_range(0..n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synchronous_is_zero() {
        for t in [0, 1, 17, 1_000_000] {
            assert_eq!(Schedule::Synchronous.alpha(t, 4, 9).unwrap(), vec![0.0; 4]);
        }
    }

    #[test]
    fn power_law_values() {
        let s = Schedule::PowerLaw { a: 2.0 };
        assert_eq!(s.alpha(0, 3, 0).unwrap(), vec![0.0; 3]);
        let a9 = s.alpha(9, 3, 0).unwrap();
        assert!(a9.iter().all(|a| (a - 0.99).abs() < 1e-15));
    }

    #[test]
    fn asynchronous_has_one_open_agent() {
        let s = Schedule::Asynchronous;
        for t in 0..200 {
            let a = s.alpha(t, 3, 42).unwrap();
            assert_eq!(a.iter().filter(|&&v| v == 0.0).count(), 1);
            assert_eq!(a.iter().filter(|&&v| v == 1.0).count(), 2);
        }
    }

    #[test]
    fn asynchronous_replays_out_of_order() {
        let s = Schedule::Asynchronous;
        let forward: Vec<_> = (0..50).map(|t| s.alpha(t, 7, 5).unwrap()).collect();
        for t in (0..50).rev() {
            assert_eq!(s.alpha(t, 7, 5).unwrap(), forward[t as usize]);
        }
    }

    #[test]
    fn asynchronous_is_roughly_uniform() {
        let mut counts = [0usize; 4];
        for t in 0..4000 {
            counts[async_agent(3, t, 4)] += 1;
        }
        assert!(counts.iter().all(|&c| (850..1150).contains(&c)), "{counts:?}");
    }

    #[test]
    fn table_runs_out() {
        let s = Schedule::Table { table: vec![vec![0.0, 0.0], vec![0.5, 1.0]] };
        assert_eq!(s.alpha(1, 2, 0).unwrap(), vec![0.5, 1.0]);
        assert!(matches!(s.alpha(2, 2, 0), Err(HkError::ScheduleExhausted { t: 2, len: 2 })));
    }

    #[test]
    fn validation() {
        assert!(Schedule::PowerLaw { a: 1.0 }.validate(2).is_err());
        assert!(Schedule::Constant { alpha: vec![0.2, 1.2] }.validate(2).is_err());
        assert!(Schedule::Constant { alpha: vec![0.2] }.validate(2).is_err());
        assert!(Schedule::Table { table: vec![] }.validate(2).is_err());
        assert!(Schedule::Constant { alpha: vec![0.0, 1.0] }.validate(2).is_ok());
    }
}
