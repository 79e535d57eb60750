use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{HkError, Result};

/// Largest accepted coordinate magnitude and epsilon. Keeps every squared
/// distance and energy finite.
pub const MAX_MAGNITUDE: f64 = 1e100;

/// Opinions of `n` agents in `R^d` at time `t`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionState {
    t: u64,
    n: usize,
    d: usize,
    epsilon: f64,
    x: Vec<f64>,
}

impl OpinionState {
    pub fn new(t: u64, d: usize, epsilon: f64, x: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(HkError::Config("dimension d must be at least 1".into()));
        }
        if x.is_empty() || !x.len().is_multiple_of(d) {
            return Err(HkError::Config(format!(
                "coordinate buffer of length {} does not hold n >= 1 rows of dimension {d}",
                x.len()
            )));
        }
        if !(epsilon > 0.0 && epsilon <= MAX_MAGNITUDE) {
            return Err(HkError::Config(format!("epsilon must lie in (0, {MAX_MAGNITUDE:e}], got {epsilon}")));
        }
        if let Some(pos) = x.iter().position(|v| !(v.abs() <= MAX_MAGNITUDE)) {
            return Err(HkError::Config(format!(
                "coordinate {} for agent {} (axis {}) is not finite or exceeds {MAX_MAGNITUDE:e} in magnitude",
                x[pos],
                pos / d,
                pos % d
            )));
        }
        Ok(Self { t, n: x.len() / d, d, epsilon, x })
    }

    pub fn from_rows(t: u64, epsilon: f64, rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(HkError::Config(format!("agent {i} has {} coordinates, expected {d}", rows[i].len())));
        }
        Self::new(t, d, epsilon, rows.concat())
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn coords(&self) -> &[f64] {
        &self.x
    }

    pub fn opinion(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn opinions(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.d)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.opinions().map(<[f64]>::to_vec).collect()
    }

    /// Same state relabelled with another time index.
    pub fn at_time(mut self, t: u64) -> Self {
        self.t = t;
        self
    }

    /// Bit-for-bit equality of the opinion coordinates.
    pub fn same_opinions(&self, other: &Self) -> bool {
        self.n == other.n
            && self.d == other.d
            && self.x.iter().zip(&other.x).all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Whether agents `i` and `j` are within the confidence bound.
    pub fn are_neighbors(&self, i: usize, j: usize) -> bool {
        sq_dist(self.opinion(i), self.opinion(j)) <= self.epsilon * self.epsilon
    }

    /// Restriction to a subset of agents, in the given order.
    pub fn subset(&self, agents: &[usize]) -> Result<Self> {
        let x = agents.iter().flat_map(|&i| self.opinion(i).iter().copied()).collect();
        Self::new(self.t, self.d, self.epsilon, x)
    }
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// `N_i(t)` for every agent, each list ascending. The test is on squared
/// distances, `|x_i - x_j|^2 <= eps^2`, so the boundary is inclusive.
pub fn neighborhoods(state: &OpinionState) -> Vec<Vec<usize>> {
    let n = state.n();
    let eps2 = state.epsilon() * state.epsilon();
    let mut nbrs: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if sq_dist(state.opinion(i), state.opinion(j)) <= eps2 {
                nbrs[i].push(j);
                nbrs[j].push(i);
            }
        }
    }
    for list in &mut nbrs {
        list.sort_unstable();
    }
    nbrs
}

/// Row-stochastic `A(t)` with `A_ij = 1{j in N_i} / |N_i|`.
pub fn averaging_matrix(state: &OpinionState) -> DMatrix<f64> {
    let n = state.n();
    let mut a = DMatrix::zeros(n, n);
    for (i, nbrs) in neighborhoods(state).iter().enumerate() {
        let w = 1.0 / nbrs.len() as f64;
        for &j in nbrs {
            a[(i, j)] = w;
        }
    }
    a
}

pub(crate) fn validate_alpha(alpha: &[f64], n: usize) -> Result<()> {
    if alpha.len() != n {
        return Err(HkError::Config(format!("alpha has length {}, expected n = {n}", alpha.len())));
    }
    if let Some(i) = alpha.iter().position(|a| !(0.0..=1.0).contains(a)) {
        return Err(HkError::Config(format!("alpha[{i}] = {} outside [0, 1]", alpha[i])));
    }
    Ok(())
}

/// One application of the mixed update
/// `x(t+1) = diag(alpha) x(t) + (I - diag(alpha)) A(t) x(t)`.
pub fn step(state: &OpinionState, alpha: &[f64]) -> Result<OpinionState> {
    let nbrs = neighborhoods(state);
    step_with_neighborhoods(state, alpha, &nbrs)
}

pub(crate) fn step_with_neighborhoods(
    state: &OpinionState,
    alpha: &[f64],
    nbrs: &[Vec<usize>],
) -> Result<OpinionState> {
    validate_alpha(alpha, state.n())?;
    let d = state.d();
    let mut next = Vec::with_capacity(state.coords().len());
    let mut mean = vec![0.0; d];
    for (i, (&a, list)) in alpha.iter().zip(nbrs).enumerate() {
        let own = state.opinion(i);
        // Stubborn or isolated agents keep their exact bits.
        if a == 1.0 || list.len() == 1 {
            next.extend_from_slice(own);
            continue;
        }
        mean.iter_mut().for_each(|m| *m = 0.0);
        for &j in list {
            for (m, v) in mean.iter_mut().zip(state.opinion(j)) {
                *m += v;
            }
        }
        let count = list.len() as f64;
        if a == 0.0 {
            next.extend(mean.iter().map(|m| m / count));
        } else {
            next.extend(own.iter().zip(&mean).map(|(x, m)| a * x + (1.0 - a) * (m / count)));
        }
    }
    OpinionState::new(state.t() + 1, d, state.epsilon(), next)
}
