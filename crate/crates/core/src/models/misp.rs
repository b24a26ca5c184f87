use fixedbitset::FixedBitSet;

use super::{Decision, DpModel};
use crate::Graph;

/// Maximum independent set: one binary variable per vertex, cost 1 per
/// selected vertex.
#[derive(Debug, Clone)]
pub struct Misp {
    n: usize,
    neighbors: Vec<FixedBitSet>,
}

/// Vertices still allowed to join the independent set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MispState {
    pub eligible: FixedBitSet,
}

impl MispState {
    pub fn contains(&self, v: usize) -> bool {
        self.eligible.contains(v)
    }

    pub fn vertices(&self) -> Vec<usize> {
        self.eligible.ones().collect()
    }
}

impl Misp {
    pub fn new(g: &Graph) -> Self {
        let n = g.n();
        let neighbors = (0..n)
            .map(|v| {
                let mut set = FixedBitSet::with_capacity(n);
                for &(u, _) in g.adjacency(v) {
                    set.insert(u);
                }
                set
            })
            .collect();
        Misp { n, neighbors }
    }

    /// State holding exactly `vertices`; handy for tests and heuristics.
    pub fn state_of(&self, vertices: &[usize]) -> MispState {
        let mut eligible = FixedBitSet::with_capacity(self.n);
        for &v in vertices {
            eligible.insert(v);
        }
        MispState { eligible }
    }
}

impl DpModel for Misp {
    type State = MispState;
    type Context = ();

    fn num_vars(&self) -> usize {
        self.n
    }

    fn root(&self) -> MispState {
        let mut eligible = FixedBitSet::with_capacity(self.n);
        eligible.insert_range(..);
        MispState { eligible }
    }

    fn layer_context(&self, _placed: &FixedBitSet, _var: usize) {}

    fn transition(
        &self,
        state: &MispState,
        var: usize,
        decision: Decision,
        _ctx: &(),
    ) -> Option<(MispState, i64)> {
        let mut next = state.clone();
        next.eligible.set(var, false);
        if decision == 1 {
            if !state.eligible.contains(var) {
                return None;
            }
            next.eligible.difference_with(&self.neighbors[var]);
            Some((next, 1))
        } else {
            Some((next, 0))
        }
    }

    fn merge(&self, states: &[&MispState]) -> (MispState, Vec<i64>) {
        let mut merged = states[0].clone();
        for s in &states[1..] {
            merged.eligible.union_with(&s.eligible);
        }
        (merged, vec![0; states.len()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> Graph {
        Graph::from_edges(3, [(0, 1, 1), (1, 2, 1)]).unwrap()
    }

    #[test]
    fn root_is_all_vertices() {
        let m = Misp::new(&p3());
        assert_eq!(m.root().vertices(), vec![0, 1, 2]);
        let e = Misp::new(&Graph::empty(4));
        assert_eq!(e.root().vertices(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn transitions_on_path() {
        let m = Misp::new(&p3());
        let all = m.root();
        let (s, c) = m.transition(&all, 1, 1, &()).unwrap();
        assert!(s.vertices().is_empty());
        assert_eq!(c, 1);

        let s02 = m.state_of(&[0, 2]);
        assert!(m.transition(&s02, 1, 1, &()).is_none());

        let (s, c) = m.transition(&all, 0, 0, &()).unwrap();
        assert_eq!(s.vertices(), vec![1, 2]);
        assert_eq!(c, 0);
    }

    #[test]
    fn merge_is_union() {
        let m = Misp::new(&p3());
        let (s, corr) = m.merge(&[&m.state_of(&[0, 2]), &m.state_of(&[1, 2])]);
        assert_eq!(s.vertices(), vec![0, 1, 2]);
        assert_eq!(corr, vec![0, 0]);

        let single = m.state_of(&[1]);
        assert_eq!(m.merge(&[&single]).0, single);

        let empty = m.state_of(&[]);
        assert_eq!(m.merge(&[&empty, &empty]).0, empty);
    }
}
