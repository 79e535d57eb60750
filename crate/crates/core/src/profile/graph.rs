use serde::{Deserialize, Serialize};

use crate::error::{HkError, Result};

/// Simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    #[serde(skip)]
    adj: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct GraphRepr {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = HkError;

    fn try_from(r: GraphRepr) -> Result<Self> {
        Graph::new(r.n, r.edges)
    }
}

impl Graph {
    /// Edges are normalised to `(min, max)`; self-loops and duplicates are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut norm: Vec<(usize, usize)> = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(HkError::Domain(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(HkError::Domain(format!("self-loop at vertex {u}")));
            }
            norm.push((u.min(v), u.max(v)));
        }
        norm.sort_unstable();
        let before = norm.len();
        norm.dedup();
        if norm.len() != before {
            return Err(HkError::Domain("duplicate edge".into()));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &norm {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Self { n, edges: norm, adj })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v)));
        Self::new(n, edges).expect("complete graph is simple")
    }

    pub fn path(n: usize) -> Self {
        Self::new(n, (1..n).map(|v| (v - 1, v))).expect("path graph is simple")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Component label per vertex; labels are `0..k` in order of smallest member.
    pub fn component_ids(&self) -> Vec<usize> {
        let mut ids = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut stack = Vec::new();
        for root in 0..self.n {
            if ids[root] != usize::MAX {
                continue;
            }
            ids[root] = next;
            stack.push(root);
            while let Some(u) = stack.pop() {
                for &v in &self.adj[u] {
                    if ids[v] == usize::MAX {
                        ids[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        ids
    }

    pub fn components(&self) -> Vec<Vec<usize>> {
        groups_from_ids(&self.component_ids())
    }

    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.component_ids().iter().all(|&c| c == 0)
    }

    /// Adjacency as bitmasks, for subset enumeration on small graphs.
    pub(crate) fn adjacency_masks(&self) -> Vec<u64> {
        self.adj.iter().map(|list| list.iter().fold(0u64, |m, &v| m | (1u64 << v))).collect()
    }
}

pub(crate) fn groups_from_ids(ids: &[usize]) -> Vec<Vec<usize>> {
    let k = ids.iter().copied().max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); k];
    for (v, &c) in ids.iter().enumerate() {
        groups[c].push(v);
    }
    groups
}
