use nalgebra::DMatrix;

use super::eigen::check_symmetric;
use crate::error::Result;
use crate::profile::Graph;

/// `L = D - A` of a simple graph.
pub fn laplacian(graph: &Graph) -> DMatrix<f64> {
    let n = graph.n();
    let mut l = DMatrix::zeros(n, n);
    for &(u, v) in graph.edges() {
        l[(u, v)] = -1.0;
        l[(v, u)] = -1.0;
        l[(u, u)] += 1.0;
        l[(v, v)] += 1.0;
    }
    l
}

/// Symmetric, negative exactly on edges, zero on non-edges; the diagonal is free.
pub fn is_generalized_laplacian(m: &DMatrix<f64>, graph: &Graph) -> Result<bool> {
    check_symmetric(m, 1e-12)?;
    if m.nrows() != graph.n() {
        return Ok(false);
    }
    let n = graph.n();
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let ok = if graph.has_edge(x, y) { m[(x, y)] < 0.0 } else { m[(x, y)] == 0.0 };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
