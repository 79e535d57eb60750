//! Laplacian spectra of opinion profiles: eigen-decomposition, Cheeger
//! sandwich, and the factorisation of `I - B(t)` behind the displacement bound.

mod cheeger;
mod eigen;
mod factorization;
mod laplacian;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use cheeger::{cheeger_constant, MAX_CHEEGER_N};
pub use eigen::{eigh, Eigh, MAX_DENSE_N};
pub use factorization::{
    lambda2_chain_check, lambda2_chain_check_graph, perron_check, update_factorization, update_factorization_for_graph,
    update_matrix, ChainVerdicts, UpdateFactorization, CHAIN_TOL, RAYLEIGH_SAMPLES,
};
pub use laplacian::{is_generalized_laplacian, laplacian};

use crate::error::{HkError, Result};
use crate::profile::Graph;

pub const SPECTRAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub n: usize,
    pub laplacian: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub lambda2: f64,
    /// `None` when the graph is too large for subset enumeration.
    pub cheeger: Option<f64>,
    pub max_degree: usize,
    pub components: usize,
    pub verdicts: BTreeMap<String, bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SpectralReport {
    pub fn all_hold(&self) -> bool {
        self.verdicts.values().all(|&v| v)
    }
}

/// Spectrum plus Cheeger-sandwich verdicts; errors if `n` exceeds the enumeration cap.
pub fn check_cheeger(graph: &Graph) -> Result<SpectralReport> {
    if graph.n() > MAX_CHEEGER_N {
        return Err(HkError::SizeLimit { n: graph.n(), max: MAX_CHEEGER_N, what: "exhaustive Cheeger constant; skip this check" });
    }
    spectral_report(graph)
}

/// Like [`check_cheeger`], but records a note and skips the Cheeger verdicts on
/// graphs above the enumeration cap.
pub fn spectral_report(graph: &Graph) -> Result<SpectralReport> {
    let n = graph.n();
    if n == 0 {
        return Err(HkError::Domain("empty graph".into()));
    }
    if n > MAX_DENSE_N {
        return Err(HkError::SizeLimit { n, max: MAX_DENSE_N, what: "dense eigensolver" });
    }
    let l = laplacian(graph);
    let e = eigh(&l)?;
    let lambda2 = e.values.get(1).copied().unwrap_or(0.0);
    let max_degree = graph.max_degree();
    let components = graph.components().len();
    let connected = components == 1;
    let mut verdicts = BTreeMap::new();
    let mut notes = Vec::new();

    let zero_tol = SPECTRAL_TOL * (2.0 * max_degree as f64).max(1.0);
    let zeros = e.values.iter().filter(|v| v.abs() <= zero_tol).count();
    verdicts.insert("laplacian_psd".to_string(), e.values[0] >= -1e-10);
    verdicts.insert("zero_multiplicity_equals_components".to_string(), zeros == components);

    let cheeger = match n {
        1 => {
            notes.push("single vertex: Cheeger constant undefined".into());
            None
        }
        _ if n > MAX_CHEEGER_N => {
            notes.push(format!("cheeger skipped: n = {n} > {MAX_CHEEGER_N}"));
            None
        }
        _ => Some(cheeger_constant(graph)?),
    };
    if let Some(i) = cheeger {
        let lower = if max_degree == 0 { 0.0 } else { i * i / (2.0 * max_degree as f64) };
        verdicts.insert("cheeger_upper".to_string(), 2.0 * i >= lambda2 - SPECTRAL_TOL);
        verdicts.insert("cheeger_lower".to_string(), lambda2 >= lower - SPECTRAL_TOL);
        if connected {
            verdicts.insert("cheeger_at_least_2_over_n".to_string(), i >= 2.0 / n as f64 - 1e-12);
        }
    }
    if connected && n >= 2 {
        let gap = 2.0 / (n as f64).powi(3);
        let holds = if n == 2 {
            notes.push("n = 2: i(G) = 2/n exactly, gap asserted non-strictly".into());
            lambda2 >= gap - SPECTRAL_TOL
        } else {
            lambda2 > gap
        };
        verdicts.insert("theorem3_gap".to_string(), holds);
    }

    Ok(SpectralReport {
        n,
        laplacian: (0..n).map(|i| l.row(i).iter().copied().collect()).collect(),
        eigenvalues: e.values,
        lambda2,
        cheeger,
        max_degree,
        components,
        verdicts,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p3_report() {
        let r = check_cheeger(&Graph::path(3)).unwrap();
        assert_eq!(r.cheeger, Some(1.0));
        assert!((r.lambda2 - 1.0).abs() < 1e-13);
        assert!(r.all_hold(), "{:?}", r.verdicts);
    }

    #[test]
    fn k2_upper_bound_is_tight() {
        let r = check_cheeger(&Graph::complete(2)).unwrap();
        assert!((2.0 * r.cheeger.unwrap() - r.lambda2).abs() < 1e-13);
        assert!(r.all_hold());
    }

    #[test]
    fn large_graph_skips_cheeger_with_note() {
        let g = Graph::path(20);
        assert!(matches!(check_cheeger(&g), Err(HkError::SizeLimit { .. })));
        let r = spectral_report(&g).unwrap();
        assert!(r.cheeger.is_none());
        assert!(r.notes.iter().any(|s| s.contains("cheeger skipped")));
        assert!(r.verdicts["theorem3_gap"]);
    }

    #[test]
    fn json_shape() {
        let r = check_cheeger(&Graph::path(3)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["eigenvalues", "lambda2", "cheeger", "verdicts"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    /// Every labelled graph on `n` vertices.
    fn all_graphs(n: usize) -> impl Iterator<Item = Graph> {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).collect();
        (0u32..(1 << pairs.len())).map(move |mask| {
            Graph::new(n, pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &e)| e)).unwrap()
        })
    }

    #[test]
    fn connected_graphs_up_to_five_vertices() {
        for n in 2..=5 {
            for g in all_graphs(n).filter(Graph::is_connected) {
                let r = check_cheeger(&g).unwrap();
                assert!(r.all_hold(), "{:?} {:?}", g.edges(), r.verdicts);
            }
        }
    }
}
