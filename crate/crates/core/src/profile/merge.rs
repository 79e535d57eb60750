use serde::{Deserialize, Serialize};

use crate::dynamics::{dist, OpinionState};

/// Relative tolerance for two opinions to count as the same.
pub const MERGE_RTOL: f64 = 1e-14;

/// Agents `i < j` (0-based) hold the same opinion at `t` but not at `t - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "merge")]
pub struct MergeEvent {
    pub t: u64,
    pub i: usize,
    pub j: usize,
    pub departed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub departed_at: Option<u64>,
}

pub fn opinions_coincide(a: &[f64], b: &[f64]) -> bool {
    if a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()) {
        return true;
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    dist(a, b) <= MERGE_RTOL * norm(a).max(norm(b))
}

pub fn detect_merge_events(states: &[OpinionState]) -> Vec<MergeEvent> {
    let mut events = Vec::new();
    let Some(first) = states.first() else {
        return events;
    };
    let n = first.n();
    for w in 1..states.len() {
        let (prev, cur) = (&states[w - 1], &states[w]);
        for i in 0..n {
            for j in (i + 1)..n {
                if opinions_coincide(cur.opinion(i), cur.opinion(j))
                    && !opinions_coincide(prev.opinion(i), prev.opinion(j))
                {
                    let departed_at = states[w + 1..]
                        .iter()
                        .find(|s| !opinions_coincide(s.opinion(i), s.opinion(j)))
                        .map(OpinionState::t);
                    events.push(MergeEvent { t: cur.t(), i, j, departed: departed_at.is_some(), departed_at });
                }
            }
        }
    }
    events
}
