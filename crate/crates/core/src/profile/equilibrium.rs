use serde::{Deserialize, Serialize};

use super::{build_profile, hull_distance, sq_diameter};
use crate::dynamics::OpinionState;
use crate::error::{HkError, Result};

/// Relative band under which a hull distance does not count as exceeding `epsilon`.
pub const SEPARATION_BAND: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EquilibriumWitness {
    /// Two pieces whose hulls are within `epsilon`, forcing them into one group.
    HullsTooClose { left: Vec<usize>, right: Vec<usize>, distance: f64 },
    DiameterExceeds { group: Vec<usize>, diameter: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumVerdict {
    pub exists: bool,
    /// The canonical candidate partition that was tested.
    pub partition: Vec<Vec<usize>>,
    pub witness: Option<EquilibriumWitness>,
}

struct Group {
    members: Vec<usize>,
    formed_by: Option<(Vec<usize>, Vec<usize>, f64)>,
}

/// Decides whether `x(t)` is a `delta`-equilibrium.
///
/// Any valid partition must keep each component of `G(t)` inside one group and
/// must join two groups whose hulls are within `epsilon`. Merging components
/// transitively under that rule therefore yields the finest partition that can
/// satisfy the separation condition; every other candidate is coarser and has
/// group diameters at least as large. Testing this one partition is exact.
/// The single-group partition is allowed.
pub fn check_delta_equilibrium(state: &OpinionState, delta: f64) -> Result<EquilibriumVerdict> {
    if !(delta > 0.0) {
        return Err(HkError::Domain(format!("delta must be positive, got {delta}")));
    }
    let threshold = state.epsilon() * (1.0 + SEPARATION_BAND);
    let mut groups: Vec<Group> = build_profile(state)
        .components()
        .into_iter()
        .map(|members| Group { members, formed_by: None })
        .collect();

    let pts = |g: &[usize]| g.iter().map(|&i| state.opinion(i)).collect::<Vec<_>>();
    'merge: loop {
        for a in 0..groups.len() {
            for b in (a + 1)..groups.len() {
                let dist = hull_distance(&pts(&groups[a].members), &pts(&groups[b].members))?;
                if dist <= threshold {
                    let right = groups.remove(b);
                    let left = &mut groups[a];
                    let formed = (left.members.clone(), right.members.clone(), dist);
                    left.members.extend(right.members);
                    left.members.sort_unstable();
                    left.formed_by = Some(formed);
                    continue 'merge;
                }
            }
        }
        break;
    }
    groups.sort_by_key(|g| g.members[0]);

    let mut witness = None;
    for g in &groups {
        let sq = sq_diameter(pts(&g.members))?;
        if sq > delta * delta {
            let diam = sq.sqrt();
            witness = Some(match &g.formed_by {
                Some((left, right, distance)) => {
                    EquilibriumWitness::HullsTooClose { left: left.clone(), right: right.clone(), distance: *distance }
                }
                None => EquilibriumWitness::DiameterExceeds { group: g.members.clone(), diameter: diam },
            });
            break;
        }
    }
    Ok(EquilibriumVerdict {
        exists: witness.is_none(),
        partition: groups.into_iter().map(|g| g.members).collect(),
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example3(eps: f64) -> OpinionState {
        OpinionState::from_rows(0, eps, &[vec![0.0, 0.0], vec![eps, 0.0], vec![eps / 2.0, eps]]).unwrap()
    }

    #[test]
    fn example3_has_no_equilibrium() {
        let s = example3(1.0);
        for delta in [1.0, 0.5, 0.1, 1e-3] {
            let v = check_delta_equilibrium(&s, delta).unwrap();
            assert!(!v.exists, "delta = {delta}");
            assert!(v.witness.is_some());
        }
    }

    #[test]
    fn far_singletons_are_an_equilibrium() {
        let s = OpinionState::new(0, 1, 1.0, vec![0.0, 3.0]).unwrap();
        let v = check_delta_equilibrium(&s, 0.5).unwrap();
        assert!(v.exists);
        assert_eq!(v.partition, vec![vec![0], vec![1]]);
    }

    #[test]
    fn single_tight_cluster_is_an_equilibrium() {
        let s = OpinionState::new(0, 2, 1.0, vec![0.0, 0.0, 0.05, 0.0, 0.0, 0.05]).unwrap();
        let delta = 0.2;
        assert!(crate::profile::diameter(s.opinions()).unwrap() <= delta / 2.0);
        assert!(check_delta_equilibrium(&s, delta).unwrap().exists);
    }

    #[test]
    fn rejects_nonpositive_delta() {
        assert!(check_delta_equilibrium(&example3(1.0), 0.0).is_err());
    }

    /// Every set partition of `0..n` as restricted-growth strings.
    fn all_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
        fn rec(i: usize, n: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
            if i == n {
                let k = labels.iter().max().map_or(0, |m| m + 1);
                let mut parts = vec![Vec::new(); k];
                for (v, &l) in labels.iter().enumerate() {
                    parts[l].push(v);
                }
                out.push(parts);
                return;
            }
            let k = labels.iter().max().map_or(0, |m| m + 1);
            for l in 0..=k {
                labels.push(l);
                rec(i + 1, n, labels, out);
                labels.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, n, &mut Vec::new(), &mut out);
        out
    }

    fn exhaustive(state: &OpinionState, delta: f64) -> bool {
        let threshold = state.epsilon() * (1.0 + SEPARATION_BAND);
        let pts = |g: &[usize]| g.iter().map(|&i| state.opinion(i)).collect::<Vec<_>>();
        all_partitions(state.n()).iter().any(|parts| {
            parts.iter().all(|g| crate::profile::sq_diameter(pts(g)).unwrap() <= delta * delta)
                && parts.iter().enumerate().all(|(a, ga)| {
                    parts[a + 1..].iter().all(|gb| hull_distance(&pts(ga), &pts(gb)).unwrap() > threshold)
                })
        })
    }

    #[test]
    fn partition_enumeration_counts_are_bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52, 203];
        for n in 1..=6 {
            assert_eq!(all_partitions(n).len(), bell[n]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn canonical_candidate_matches_exhaustive_search(
            n in 1usize..=8,
            seed_pts in prop::collection::vec(prop::collection::vec(0.0..3.0f64, 2), 8),
            delta in 0.05..1.0f64,
        ) {
            let rows: Vec<Vec<f64>> = seed_pts[..n].to_vec();
            let s = OpinionState::from_rows(0, 0.6, &rows).unwrap();
            let v = check_delta_equilibrium(&s, delta).unwrap();
            prop_assert_eq!(v.exists, exhaustive(&s, delta));
        }
    }
}
