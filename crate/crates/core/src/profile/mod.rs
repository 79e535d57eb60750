//! The opinion profile `G(t)` and the geometric predicates built on it.

mod equilibrium;
mod geometry;
mod graph;
mod merge;

pub use equilibrium::{check_delta_equilibrium, EquilibriumVerdict, EquilibriumWitness};
pub use geometry::{
    diameter, hull_distance, hull_distance_with, is_delta_trivial, sq_diameter, HullDistance, HullDistanceOptions,
};
pub use graph::Graph;
pub use merge::{detect_merge_events, opinions_coincide, MergeEvent};

pub(crate) use graph::groups_from_ids;

use serde::{Deserialize, Serialize};

use crate::dynamics::{sq_dist, OpinionState};

/// `G(t)`: agents joined when their opinions are within `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub t: u64,
    pub graph: Graph,
    pub component_ids: Vec<usize>,
}

impl Profile {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        self.graph.edges()
    }

    pub fn components(&self) -> Vec<Vec<usize>> {
        groups_from_ids(&self.component_ids)
    }

    pub fn is_connected(&self) -> bool {
        self.component_ids.iter().all(|&c| c == 0)
    }
}

pub fn build_profile(state: &OpinionState) -> Profile {
    let n = state.n();
    let eps2 = state.epsilon() * state.epsilon();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if sq_dist(state.opinion(i), state.opinion(j)) <= eps2 {
                edges.push((i, j));
            }
        }
    }
    let graph = Graph::new(n, edges).expect("pairs i < j are distinct and in range");
    let component_ids = graph.component_ids();
    Profile { t: state.t(), graph, component_ids }
}

/// Diameter of every component of `G(t)`, in component-label order.
pub fn component_diameters(state: &OpinionState, profile: &Profile) -> Vec<f64> {
    profile
        .components()
        .iter()
        .map(|c| diameter(c.iter().map(|&i| state.opinion(i))).expect("components are nonempty"))
        .collect()
}

/// Whether every component of `G(t)` is `delta`-trivial.
pub fn all_components_trivial(state: &OpinionState, delta: f64) -> bool {
    build_profile(state)
        .components()
        .iter()
        .all(|c| is_delta_trivial(c.iter().map(|&i| state.opinion(i)), delta))
}
