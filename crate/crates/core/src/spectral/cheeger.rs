use rayon::prelude::*;

use crate::error::{HkError, Result};
use crate::profile::Graph;

/// Largest graph for which the isoperimetric number is enumerated.
pub const MAX_CHEEGER_N: usize = 16;

/// `i(G) = min |dS| / |S|` over nonempty `S` with `|S| <= n / 2`, by
/// enumerating all vertex subsets.
pub fn cheeger_constant(graph: &Graph) -> Result<f64> {
    let n = graph.n();
    if n > MAX_CHEEGER_N {
        return Err(HkError::SizeLimit { n, max: MAX_CHEEGER_N, what: "exhaustive Cheeger constant; skip this check" });
    }
    if n < 2 {
        return Err(HkError::Domain("Cheeger constant needs at least two vertices".into()));
    }
    let adj = graph.adjacency_masks();
    let full = (1u64 << n) - 1;
    let half = (n / 2) as u32;
    let ratio = |s: u64| -> f64 {
        let mut boundary = 0u32;
        let mut rest = s;
        while rest != 0 {
            let u = rest.trailing_zeros() as usize;
            boundary += (adj[u] & !s & full).count_ones();
            rest &= rest - 1;
        }
        boundary as f64 / s.count_ones() as f64
    };
    let best = (1..=full)
        .into_par_iter()
        .filter(|s| s.count_ones() <= half)
        .map(ratio)
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best)
}
