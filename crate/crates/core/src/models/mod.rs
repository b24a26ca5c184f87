//! Dynamic-programming formulations consumed by the diagram compiler.
//!
//! A model supplies the root state, the transition and arc cost for each
//! binary decision, and the merge operator used by relaxed compilation.
//! Arc costs and merge corrections are integers in model units; the
//! objective value of a path is its length divided by
//! [`DpModel::value_scale`].

use std::fmt::Debug;
use std::hash::Hash;

use fixedbitset::FixedBitSet;

mod mcp;
mod misp;

pub use mcp::{Mcp, McpContext, McpState};
pub use misp::{Misp, MispState};

/// Arc label: 1 selects the vertex (MISP) or places it on side S (MCP).
pub type Decision = u8;

pub trait DpModel {
    type State: Clone + Eq + Hash + Ord + Debug;
    /// Per-layer data that depends only on the ordering prefix.
    type Context;

    fn num_vars(&self) -> usize;

    fn root(&self) -> Self::State;

    /// Context for inserting `var` after the vertices in `placed`.
    fn layer_context(&self, placed: &FixedBitSet, var: usize) -> Self::Context;

    /// Successor state and arc cost, or `None` when the decision is infeasible.
    fn transition(
        &self,
        state: &Self::State,
        var: usize,
        decision: Decision,
        ctx: &Self::Context,
    ) -> Option<(Self::State, i64)>;

    /// Merges a nonempty set of states into one that admits every completion
    /// of each input. Returns the merged state and, per input, a correction
    /// added to the arcs entering the merged node.
    fn merge(&self, states: &[&Self::State]) -> (Self::State, Vec<i64>);

    /// Path-length units per unit of objective.
    fn value_scale(&self) -> i64 {
        1
    }
}

impl<M: DpModel + ?Sized> DpModel for &M {
    type State = M::State;
    type Context = M::Context;

    fn num_vars(&self) -> usize {
        (**self).num_vars()
    }
    fn root(&self) -> Self::State {
        (**self).root()
    }
    fn layer_context(&self, placed: &FixedBitSet, var: usize) -> Self::Context {
        (**self).layer_context(placed, var)
    }
    fn transition(
        &self,
        state: &Self::State,
        var: usize,
        decision: Decision,
        ctx: &Self::Context,
    ) -> Option<(Self::State, i64)> {
        (**self).transition(state, var, decision, ctx)
    }
    fn merge(&self, states: &[&Self::State]) -> (Self::State, Vec<i64>) {
        (**self).merge(states)
    }
    fn value_scale(&self) -> i64 {
        (**self).value_scale()
    }
}
