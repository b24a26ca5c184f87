use fixedbitset::FixedBitSet;

use super::{Decision, DpModel};
use crate::Graph;

/// Maximum weighted cut with sides S (decision 1) and T (decision 0).
///
/// The state keeps, for every unplaced vertex `k`,
/// `sigma_k = w(k, T-side) - w(k, S-side)` over the vertices placed so far.
/// With `incoming_v = w(v, placed)` fixed by the ordering, placing `v` in S
/// gains `(incoming_v + sigma_v) / 2` and placing it in T gains
/// `(incoming_v - sigma_v) / 2`. Path lengths are kept in half units
/// (`value_scale() == 2`) so merge corrections stay integral.
#[derive(Debug, Clone)]
pub struct Mcp {
    n: usize,
    adj: Vec<Vec<(usize, i64)>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct McpState {
    // dense over all vertices; entries of placed vertices are pinned to 0
    sigma: Vec<i64>,
}

impl McpState {
    pub fn from_sigma(sigma: Vec<i64>) -> Self {
        McpState { sigma }
    }

    pub fn sigma(&self, k: usize) -> i64 {
        self.sigma[k]
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.sigma
    }
}

/// Layer data for inserting one vertex.
#[derive(Debug, Clone)]
pub struct McpContext {
    /// Total weight between the vertex and already placed vertices.
    pub incoming: i64,
    /// First layer: the vertex is forced into S (cut symmetry).
    pub first: bool,
    /// Unplaced neighbors and edge weights.
    pub open_neighbors: Vec<(usize, i64)>,
}

impl Mcp {
    pub fn new(g: &Graph) -> Self {
        Mcp {
            n: g.n(),
            adj: (0..g.n()).map(|v| g.adjacency(v).to_vec()).collect(),
        }
    }
}

impl DpModel for Mcp {
    type State = McpState;
    type Context = McpContext;

    fn num_vars(&self) -> usize {
        self.n
    }

    fn root(&self) -> McpState {
        McpState {
            sigma: vec![0; self.n],
        }
    }

    fn layer_context(&self, placed: &FixedBitSet, var: usize) -> McpContext {
        let mut incoming = 0;
        let mut open_neighbors = Vec::new();
        for &(u, w) in &self.adj[var] {
            if placed.contains(u) {
                incoming += w;
            } else {
                open_neighbors.push((u, w));
            }
        }
        McpContext {
            incoming,
            first: placed.is_clear(),
            open_neighbors,
        }
    }

    fn transition(
        &self,
        state: &McpState,
        var: usize,
        decision: Decision,
        ctx: &McpContext,
    ) -> Option<(McpState, i64)> {
        if ctx.first && decision == 0 {
            return None;
        }
        let sv = state.sigma[var];
        let cost = if decision == 1 {
            ctx.incoming + sv
        } else {
            ctx.incoming - sv
        };
        let mut sigma = state.sigma.clone();
        sigma[var] = 0;
        for &(k, w) in &ctx.open_neighbors {
            if decision == 1 {
                sigma[k] -= w;
            } else {
                sigma[k] += w;
            }
        }
        Some((McpState { sigma }, cost))
    }

    fn merge(&self, states: &[&McpState]) -> (McpState, Vec<i64>) {
        let n = self.n;
        let mut merged = vec![0i64; n];
        for (k, slot) in merged.iter_mut().enumerate() {
            let all_nonneg = states.iter().all(|s| s.sigma[k] >= 0);
            let all_nonpos = states.iter().all(|s| s.sigma[k] <= 0);
            let smallest = states.iter().map(|s| s.sigma[k].abs()).min().unwrap_or(0);
            *slot = if all_nonneg {
                smallest
            } else if all_nonpos {
                -smallest
            } else {
                0
            };
        }
        let corrections = states
            .iter()
            .map(|s| s.sigma.iter().zip(&merged).map(|(a, b)| a.abs() - b.abs()).sum())
            .collect();
        (McpState { sigma: merged }, corrections)
    }

    fn value_scale(&self) -> i64 {
        2
    }
}
