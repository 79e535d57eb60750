use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eigen::{eigh, max_abs};
use super::laplacian::laplacian;
use crate::dynamics::{averaging_matrix, validate_alpha, OpinionState};
use crate::error::{HkError, Result};
use crate::profile::{build_profile, Graph};

/// `I - B(t) = (I - diag(alpha)) (I + D)^-1 L` with both sides kept for inspection.
#[derive(Debug, Clone)]
pub struct UpdateFactorization {
    pub i_minus_b: DMatrix<f64>,
    /// `1 - alpha_i`.
    pub stubborn_factor: Vec<f64>,
    /// `1 / (1 + d_i)`.
    pub degree_factor: Vec<f64>,
    pub laplacian: DMatrix<f64>,
    /// Max-abs entry of `I - B` minus the product.
    pub residual: f64,
}

impl UpdateFactorization {
    pub fn product(&self) -> DMatrix<f64> {
        let w: Vec<f64> = self.stubborn_factor.iter().zip(&self.degree_factor).map(|(s, g)| s * g).collect();
        DMatrix::from_diagonal(&DVector::from_vec(w)) * &self.laplacian
    }
}

fn require_open(alpha: &[f64]) -> Result<()> {
    if let Some(i) = alpha.iter().position(|&a| a >= 1.0) {
        return Err(HkError::Precondition(format!("alpha[{i}] = 1: the factor I - diag(alpha) is singular")));
    }
    Ok(())
}

/// `B(t) = diag(alpha) + (I - diag(alpha)) A(t)`.
pub fn update_matrix(a: &DMatrix<f64>, alpha: &[f64]) -> DMatrix<f64> {
    let n = alpha.len();
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = (1.0 - alpha[i]) * a[(i, j)];
        }
        b[(i, i)] += alpha[i];
    }
    b
}

/// Factorization against the averaging matrix `A(t)` of the update rule.
pub fn update_factorization(state: &OpinionState, alpha: &[f64]) -> Result<UpdateFactorization> {
    validate_alpha(alpha, state.n())?;
    require_open(alpha)?;
    let graph = build_profile(state).graph;
    let b = update_matrix(&averaging_matrix(state), alpha);
    Ok(factor(&graph, alpha, DMatrix::identity(state.n(), state.n()) - b))
}

/// Same factorization with `A` built from the graph alone (`A_ij = 1 / (1 + d_i)` on
/// closed neighbourhoods).
pub fn update_factorization_for_graph(graph: &Graph, alpha: &[f64]) -> Result<UpdateFactorization> {
    validate_alpha(alpha, graph.n())?;
    require_open(alpha)?;
    let n = graph.n();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let w = 1.0 / (1.0 + graph.degree(i) as f64);
        a[(i, i)] = w;
        for &j in graph.neighbors(i) {
            a[(i, j)] = w;
        }
    }
    let b = update_matrix(&a, alpha);
    Ok(factor(graph, alpha, DMatrix::identity(n, n) - b))
}

fn factor(graph: &Graph, alpha: &[f64], i_minus_b: DMatrix<f64>) -> UpdateFactorization {
    let mut f = UpdateFactorization {
        i_minus_b,
        stubborn_factor: alpha.iter().map(|a| 1.0 - a).collect(),
        degree_factor: (0..graph.n()).map(|i| 1.0 / (1.0 + graph.degree(i) as f64)).collect(),
        laplacian: laplacian(graph),
        residual: 0.0,
    };
    f.residual = max_abs(&(&f.i_minus_b - f.product()));
    f
}

/// Numeric tolerance for the chain inequalities.
pub const CHAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainVerdicts {
    pub qtq_eigenvalues: Vec<f64>,
    pub lambda2_qtq: f64,
    pub lambda2_laplacian: f64,
    /// `((1 - max alpha) / n)^2 * lambda2(L)^2`.
    pub chain_bound: f64,
    /// 0 is a simple eigenvalue of `Q'Q`, with eigenvector along the all-ones vector.
    pub zero_simple: bool,
    pub kernel_is_ones: bool,
    pub chain_holds: bool,
    /// Smallest eigenvalue of `L` simple with an all-positive eigenvector.
    pub perron_simple: bool,
    pub perron_positive: bool,
    /// Smallest sampled Rayleigh quotient of `Q'Q` on unit vectors orthogonal to ones.
    pub rayleigh_min: f64,
    pub courant_fischer_holds: bool,
}

impl ChainVerdicts {
    pub fn all_hold(&self) -> bool {
        self.zero_simple
            && self.kernel_is_ones
            && self.chain_holds
            && self.perron_simple
            && self.perron_positive
            && self.courant_fischer_holds
    }
}

pub const RAYLEIGH_SAMPLES: usize = 1000;

pub fn lambda2_chain_check(state: &OpinionState, alpha: &[f64], seed: u64) -> Result<ChainVerdicts> {
    let f = update_factorization(state, alpha)?;
    chain_from_factorization(&build_profile(state).graph, alpha, &f, seed)
}

pub fn lambda2_chain_check_graph(graph: &Graph, alpha: &[f64], seed: u64) -> Result<ChainVerdicts> {
    let f = update_factorization_for_graph(graph, alpha)?;
    chain_from_factorization(graph, alpha, &f, seed)
}

/// Smallest eigenvalue simple and its eigenvector positive, for a generalized
/// Laplacian of a connected graph. Returns `(simple, positive)`.
pub fn perron_check(m: &DMatrix<f64>) -> Result<(bool, bool)> {
    let e = eigh(m)?;
    let tol = CHAIN_TOL * max_abs(m).max(1.0);
    let simple = e.values.len() < 2 || e.values[1] - e.values[0] > tol;
    let v = e.vector(0);
    let positive = v.iter().all(|&x| x > 0.0) || v.iter().all(|&x| x < 0.0);
    Ok((simple, positive))
}

fn chain_from_factorization(graph: &Graph, alpha: &[f64], f: &UpdateFactorization, seed: u64) -> Result<ChainVerdicts> {
    let n = graph.n();
    if n > super::cheeger::MAX_CHEEGER_N {
        return Err(HkError::SizeLimit { n, max: super::cheeger::MAX_CHEEGER_N, what: "lambda2 chain check" });
    }
    if !graph.is_connected() {
        return Err(HkError::Precondition("profile is disconnected: the zero eigenvalue is not simple".into()));
    }
    let q = &f.i_minus_b;
    let qtq = q.transpose() * q;
    let eq = eigh(&qtq)?;
    let el = eigh(&f.laplacian)?;

    let zero_tol = 1e-12 * max_abs(&qtq).max(1.0);
    let (mu1, mu2) = (eq.values[0], eq.values.get(1).copied().unwrap_or(f64::INFINITY));
    let zero_simple = mu1.abs() <= zero_tol && mu2 > zero_tol;
    let ones = 1.0 / (n as f64).sqrt();
    let kernel_is_ones = eq.vector(0).iter().map(|v| v * ones).sum::<f64>().abs() >= 1.0 - CHAIN_TOL;

    let max_alpha = alpha.iter().copied().fold(0.0, f64::max);
    let lambda2_l = el.values.get(1).copied().unwrap_or(0.0);
    let chain_bound = ((1.0 - max_alpha) / n as f64).powi(2) * lambda2_l * lambda2_l;
    let lambda2_qtq = if n >= 2 { mu2 } else { 0.0 };
    let chain_holds = n < 2 || lambda2_qtq >= chain_bound - CHAIN_TOL;

    let (perron_simple, perron_positive) = perron_check(&f.laplacian)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rayleigh_min = f64::INFINITY;
    if n >= 2 {
        for _ in 0..RAYLEIGH_SAMPLES {
            let mut x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let mean = x.mean();
            x.iter_mut().for_each(|v| *v -= mean);
            let norm = x.norm();
            if norm == 0.0 {
                continue;
            }
            x /= norm;
            rayleigh_min = rayleigh_min.min((q * &x).norm_squared());
        }
    }
    let courant_fischer_holds = n < 2 || rayleigh_min >= lambda2_qtq - CHAIN_TOL;

    Ok(ChainVerdicts {
        qtq_eigenvalues: eq.values,
        lambda2_qtq,
        lambda2_laplacian: lambda2_l,
        chain_bound,
        zero_simple,
        kernel_is_ones,
        chain_holds,
        perron_simple,
        perron_positive,
        rayleigh_min,
        courant_fischer_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_profile_synchronous() {
        // four agents within epsilon of each other: D = 3I, so I - B = L / 4
        let s = OpinionState::new(0, 1, 1.0, vec![0.0, 0.1, 0.2, 0.3]).unwrap();
        let f = update_factorization(&s, &[0.0; 4]).unwrap();
        let expected = laplacian(&Graph::complete(4)) / 4.0;
        assert!(max_abs(&(&f.i_minus_b - expected)) <= 1e-15);
        assert!(f.residual <= 1e-12);
    }

    #[test]
    fn isolated_agent_row_is_zero() {
        let s = OpinionState::new(0, 1, 1.0, vec![0.0, 0.5, 5.0]).unwrap();
        let f = update_factorization(&s, &[0.2, 0.4, 0.6]).unwrap();
        assert!(f.i_minus_b.row(2).iter().all(|&v| v == 0.0));
        assert!(f.residual <= 1e-12);
    }

    #[test]
    fn stubborn_agent_is_rejected() {
        let s = OpinionState::new(0, 1, 1.0, vec![0.0, 0.5]).unwrap();
        assert!(matches!(update_factorization(&s, &[1.0, 0.0]), Err(HkError::Precondition(_))));
    }

    #[test]
    fn k2_chain() {
        // I - B = L / 2, Q'Q = L^2 / 4 with spectrum (0, 1)
        let s = OpinionState::new(0, 1, 1.0, vec![0.0, 1.0]).unwrap();
        let v = lambda2_chain_check(&s, &[0.0, 0.0], 1).unwrap();
        assert!((v.qtq_eigenvalues[0]).abs() < 1e-15);
        assert!((v.qtq_eigenvalues[1] - 1.0).abs() < 1e-14);
        // bound: (1/2)^2 * 2^2 = 1, tight
        assert!((v.chain_bound - 1.0).abs() < 1e-15);
        assert!(v.all_hold(), "{v:?}");
    }

    #[test]
    fn p3_chain() {
        let s = OpinionState::new(0, 1, 1.0, vec![0.0, 1.0, 2.0]).unwrap();
        let v = lambda2_chain_check(&s, &[0.5, 0.5, 0.5], 2).unwrap();
        assert!(v.all_hold(), "{v:?}");
    }

    #[test]
    fn disconnected_chain_is_rejected() {
        let s = OpinionState::new(0, 1, 1.0, vec![0.0, 0.5, 3.0, 3.5]).unwrap();
        assert!(matches!(lambda2_chain_check(&s, &[0.0; 4], 0), Err(HkError::Precondition(_))));
    }

    #[test]
    fn graph_and_state_routes_agree() {
        let s = OpinionState::new(0, 2, 0.6, vec![0.0, 0.0, 0.5, 0.1, 0.9, 0.3, 0.2, 0.4]).unwrap();
        let alpha = [0.1, 0.7, 0.3, 0.0];
        let a = update_factorization(&s, &alpha).unwrap();
        let b = update_factorization_for_graph(&build_profile(&s).graph, &alpha).unwrap();
        assert!(max_abs(&(&a.i_minus_b - &b.i_minus_b)) <= 1e-15);
    }
}
