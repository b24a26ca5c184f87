//! Layer-by-layer decision diagram compilation.
//!
//! A diagram starts from a single root node and grows one layer per
//! inserted variable. Nodes of a new layer that carry identical states are
//! combined. In relaxed mode a layer wider than `W` keeps its `W - 1` best
//! nodes (by longest-path value) and merges the rest into one node; in
//! restricted mode the surplus nodes are dropped. Relaxed diagrams yield
//! upper bounds, restricted diagrams lower bounds, exact diagrams the
//! optimum.

use std::collections::HashMap;
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;

use crate::models::{Decision, DpModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Exact,
    /// Width-capped by merging.
    Relaxed(usize),
    /// Width-capped by deletion.
    Restricted(usize),
}

impl Mode {
    pub fn width(self) -> Option<usize> {
        match self {
            Mode::Exact => None,
            Mode::Relaxed(w) | Mode::Restricted(w) => Some(w),
        }
    }
}

/// Arc entering a node from `parent` in the previous layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub parent: usize,
    pub decision: Decision,
    /// Transition cost plus any merge correction, in model units.
    pub cost: i64,
}

#[derive(Debug, Clone)]
pub struct Node<S> {
    pub state: S,
    /// Longest path length from the root, in model units.
    pub value: i64,
    pub arcs: Vec<Arc>,
}

/// Best root-to-terminal path of a complete diagram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LongestPath {
    /// Objective value (path length over the model's value scale, floored).
    pub value: i64,
    /// Raw path length in model units.
    pub length: i64,
    /// `(vertex, decision)` in ordering order.
    pub assignment: Vec<(usize, Decision)>,
}

#[derive(Debug, Clone)]
pub struct DecisionDiagram<M: DpModel> {
    model: M,
    mode: Mode,
    reduce: bool,
    layers: Vec<Vec<Node<M::State>>>,
    ordering: Vec<usize>,
    inserted: FixedBitSet,
}

impl<M: DpModel> DecisionDiagram<M> {
    /// Diagram holding only the root node.
    pub fn new(model: M, mode: Mode) -> Result<Self> {
        if mode.width() == Some(0) {
            return Err(Error::ZeroWidth);
        }
        let n = model.num_vars();
        let root = Node {
            state: model.root(),
            value: 0,
            arcs: Vec::new(),
        };
        Ok(DecisionDiagram {
            model,
            mode,
            reduce: true,
            layers: vec![vec![root]],
            ordering: Vec::new(),
            inserted: FixedBitSet::with_capacity(n),
        })
    }

    /// Keeps nodes with equal states apart instead of combining them.
    pub fn without_reduction(mut self) -> Self {
        self.reduce = false;
        self
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn is_inserted(&self, v: usize) -> bool {
        self.inserted.contains(v)
    }

    pub fn inserted_set(&self) -> &FixedBitSet {
        &self.inserted
    }

    /// Vertices not yet inserted, ascending.
    pub fn remaining(&self) -> Vec<usize> {
        self.inserted.zeroes().collect()
    }

    pub fn is_complete(&self) -> bool {
        self.ordering.len() == self.model.num_vars()
    }

    pub fn layers(&self) -> &[Vec<Node<M::State>>] {
        &self.layers
    }

    pub fn last_layer(&self) -> &[Node<M::State>] {
        self.layers.last().expect("root layer always present")
    }

    pub fn layer_widths(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    /// Maximum layer width.
    pub fn width(&self) -> usize {
        self.layers.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Total node count.
    pub fn size(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Longest path to the last built layer, in model units.
    pub fn raw_bound(&self) -> i64 {
        self.last_layer().iter().map(|n| n.value).max().unwrap_or(0)
    }

    /// Longest path to the last built layer, in objective units (floored).
    pub fn bound(&self) -> i64 {
        self.raw_bound().div_euclid(self.model.value_scale())
    }

    /// Inserts `var` as the next layer and returns the change in [`bound`].
    ///
    /// [`bound`]: DecisionDiagram::bound
    pub fn insert(&mut self, var: usize) -> Result<i64> {
        let n = self.model.num_vars();
        if var >= n {
            return Err(Error::VertexOutOfRange { vertex: var, n });
        }
        if self.inserted.contains(var) {
            return Err(Error::AlreadyInserted(var));
        }
        let before = self.bound();
        let ctx = self.model.layer_context(&self.inserted, var);
        let last = self.last_layer();

        let mut next: Vec<Node<M::State>> = Vec::with_capacity(2 * last.len());
        let mut index: HashMap<M::State, usize> = HashMap::new();
        for (pi, parent) in last.iter().enumerate() {
            for decision in [0, 1] {
                let Some((state, cost)) = self.model.transition(&parent.state, var, decision, &ctx) else {
                    continue;
                };
                let arc = Arc {
                    parent: pi,
                    decision,
                    cost,
                };
                let value = parent.value + cost;
                if self.reduce {
                    if let Some(&i) = index.get(&state) {
                        let node = &mut next[i];
                        node.arcs.push(arc);
                        node.value = node.value.max(value);
                        continue;
                    }
                    index.insert(state.clone(), next.len());
                }
                next.push(Node {
                    state,
                    value,
                    arcs: vec![arc],
                });
            }
        }
        debug_assert!(!next.is_empty(), "every state has a feasible decision");

        match self.mode {
            Mode::Relaxed(w) if next.len() > w => next = self.merge_down(next, w),
            Mode::Restricted(w) if next.len() > w => {
                let keep = rank(&next);
                let mut kept: Vec<usize> = keep[..w].to_vec();
                kept.sort_unstable();
                let mut slots: Vec<Option<Node<M::State>>> = next.into_iter().map(Some).collect();
                next = kept.into_iter().map(|i| slots[i].take().unwrap()).collect();
            }
            _ => {}
        }

        self.layers.push(next);
        self.ordering.push(var);
        self.inserted.insert(var);
        Ok(self.bound() - before)
    }

    fn merge_down(&self, next: Vec<Node<M::State>>, width: usize) -> Vec<Node<M::State>> {
        let order = rank(&next);
        let mut is_kept = vec![false; next.len()];
        for &i in &order[..width - 1] {
            is_kept[i] = true;
        }
        let mut kept = Vec::with_capacity(width);
        let mut victims = Vec::new();
        for (i, node) in next.into_iter().enumerate() {
            if is_kept[i] {
                kept.push(node);
            } else {
                victims.push(node);
            }
        }
        let states: Vec<&M::State> = victims.iter().map(|v| &v.state).collect();
        let (state, corrections) = self.model.merge(&states);
        let parents = self.last_layer();
        let mut arcs = Vec::new();
        for (victim, corr) in victims.iter().zip(corrections) {
            debug_assert!(corr >= 0, "merge corrections never shrink a path");
            arcs.extend(victim.arcs.iter().map(|a| Arc {
                cost: a.cost + corr,
                ..*a
            }));
        }
        let value = arcs
            .iter()
            .map(|a| parents[a.parent].value + a.cost)
            .max()
            .unwrap_or(0);
        match kept.iter_mut().find(|k| self.reduce && k.state == state) {
            Some(twin) => {
                twin.arcs.extend(arcs);
                twin.value = twin.value.max(value);
            }
            None => kept.push(Node { state, value, arcs }),
        }
        kept
    }

    /// Best complete path, decoded through parent links.
    pub fn longest_path(&self) -> Result<LongestPath> {
        if !self.is_complete() {
            return Err(Error::Incomplete {
                inserted: self.ordering.len(),
                n: self.model.num_vars(),
            });
        }
        let last = self.last_layer();
        let (mut idx, _) = last
            .iter()
            .enumerate()
            .max_by_key(|(i, n)| (n.value, std::cmp::Reverse(*i)))
            .expect("terminal layer is nonempty");
        let length = last[idx].value;
        let mut assignment = Vec::with_capacity(self.ordering.len());
        for depth in (1..self.layers.len()).rev() {
            let node = &self.layers[depth][idx];
            let parents = &self.layers[depth - 1];
            let arc = node
                .arcs
                .iter()
                .find(|a| parents[a.parent].value + a.cost == node.value)
                .expect("node value is attained by some arc");
            assignment.push((self.ordering[depth - 1], arc.decision));
            idx = arc.parent;
        }
        assignment.reverse();
        Ok(LongestPath {
            value: length.div_euclid(self.model.value_scale()),
            length,
            assignment,
        })
    }

    /// Graphviz rendering; node labels are values, arc labels `decision/cost`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dd {\n  rankdir=TB;\n");
        for (depth, layer) in self.layers.iter().enumerate() {
            let var = if depth == 0 {
                "root".to_string()
            } else {
                format!("x{}", self.ordering[depth - 1])
            };
            let _ = writeln!(out, "  subgraph layer{depth} {{ rank=same; // {var}");
            for (i, node) in layer.iter().enumerate() {
                let _ = writeln!(out, "    n{depth}_{i} [label=\"{}\"];", node.value);
            }
            out.push_str("  }\n");
            for (i, node) in layer.iter().enumerate() {
                for arc in &node.arcs {
                    let style = if arc.decision == 1 { "solid" } else { "dashed" };
                    let _ = writeln!(
                        out,
                        "  n{}_{} -> n{depth}_{i} [label=\"{}/{}\", style={style}];",
                        depth - 1,
                        arc.parent,
                        arc.decision,
                        arc.cost
                    );
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

// Node indices best first: value descending, then state order, then insertion.
fn rank<S: Ord>(nodes: &[Node<S>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| {
        nodes[b]
            .value
            .cmp(&nodes[a].value)
            .then_with(|| nodes[a].state.cmp(&nodes[b].state))
            .then(a.cmp(&b))
    });
    order
}

/// Compiles a full diagram under a static ordering.
pub fn compile<M: DpModel>(model: M, ordering: &[usize], mode: Mode) -> Result<DecisionDiagram<M>> {
    let n = model.num_vars();
    if ordering.len() != n {
        return Err(Error::InvalidConfig(format!(
            "ordering has {} entries, expected {n}",
            ordering.len()
        )));
    }
    let mut dd = DecisionDiagram::new(model, mode)?;
    for &v in ordering {
        dd.insert(v)?;
    }
    Ok(dd)
}

/// Compiles a full diagram, asking `next` for each variable given the
/// partial diagram and the remaining vertices.
pub fn compile_with_policy<M, F>(model: M, mode: Mode, mut next: F) -> Result<DecisionDiagram<M>>
where
    M: DpModel,
    F: FnMut(&DecisionDiagram<M>, &[usize]) -> Result<usize>,
{
    let mut dd = DecisionDiagram::new(model, mode)?;
    while !dd.is_complete() {
        let remaining = dd.remaining();
        let v = next(&dd, &remaining)?;
        dd.insert(v)?;
    }
    Ok(dd)
}
