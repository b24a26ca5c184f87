//! Baseline variable-ordering heuristics. All tie-breaks go to the lowest
//! vertex id.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::dd::DecisionDiagram;
use crate::models::{DpModel, MispState};
use crate::{Error, Graph, Result, Rng};

/// Ordering method names as used on the command line and in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingSpec {
    /// Uniform random permutation.
    Rand,
    /// Maximal path decomposition.
    Mpd,
    /// Ascending degree.
    Deg,
    /// Descending incident weight.
    Maxw,
    /// Fewest occurrences in the last layer's states (dynamic, MISP only).
    Min,
    /// Greedy policy of a trained Q-network (dynamic).
    Learned,
}

impl OrderingSpec {
    pub const ALL: [OrderingSpec; 6] = [
        OrderingSpec::Rand,
        OrderingSpec::Mpd,
        OrderingSpec::Deg,
        OrderingSpec::Maxw,
        OrderingSpec::Min,
        OrderingSpec::Learned,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OrderingSpec::Rand => "rand",
            OrderingSpec::Mpd => "mpd",
            OrderingSpec::Deg => "deg",
            OrderingSpec::Maxw => "maxw",
            OrderingSpec::Min => "min",
            OrderingSpec::Learned => "learned",
        }
    }

    /// Whether the ordering is a fixed permutation computed up front.
    pub fn is_static(self) -> bool {
        !matches!(self, OrderingSpec::Min | OrderingSpec::Learned)
    }

    /// Static permutation for the static kinds; `seed` only matters for RAND.
    pub fn permutation(self, g: &Graph, seed: u64) -> Result<Vec<usize>> {
        match self {
            OrderingSpec::Rand => Ok(rand_ordering(g, seed)),
            OrderingSpec::Mpd => Ok(mpd_ordering(g)),
            OrderingSpec::Deg => Ok(deg_ordering(g)),
            OrderingSpec::Maxw => Ok(maxweight_ordering(g)),
            OrderingSpec::Min | OrderingSpec::Learned => {
                Err(Error::InvalidConfig(format!("{self} is a dynamic ordering")))
            }
        }
    }
}

impl fmt::Display for OrderingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrderingSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "max-weight" | "maxweight" => return Ok(OrderingSpec::Maxw),
            _ => {}
        }
        OrderingSpec::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown ordering {s:?}")))
    }
}

/// Seeded uniform permutation (Fisher–Yates).
pub fn rand_ordering(g: &Graph, seed: u64) -> Vec<usize> {
    let mut rng = Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..g.n()).collect();
    perm.shuffle(&mut rng);
    perm
}

/// Maximal path decomposition.
///
/// Each path starts at the lowest unvisited vertex, grows at its tail to the
/// lowest unvisited neighbor until stuck, then grows at its head the same
/// way. Paths are read head to tail and concatenated in creation order.
pub fn mpd_ordering(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let next_from =
        |v: usize, visited: &[bool]| g.adjacency(v).iter().map(|&(u, _)| u).find(|&u| !visited[u]);
    for start in 0..n {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut path = VecDeque::from([start]);
        while let Some(u) = next_from(*path.back().unwrap(), &visited) {
            visited[u] = true;
            path.push_back(u);
        }
        while let Some(u) = next_from(*path.front().unwrap(), &visited) {
            visited[u] = true;
            path.push_front(u);
        }
        order.extend(path);
    }
    order
}

/// Ascending degree.
pub fn deg_ordering(g: &Graph) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..g.n()).collect();
    perm.sort_by_key(|&v| g.adjacency(v).len());
    perm
}

/// Descending sum of incident edge weights.
pub fn maxweight_ordering(g: &Graph) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..g.n()).collect();
    perm.sort_by_key(|&v| std::cmp::Reverse(g.adjacency(v).iter().map(|&(_, w)| w).sum::<i64>()));
    perm
}

/// MIN: the remaining vertex present in the fewest states of the last layer.
pub fn min_states_next<M>(dd: &DecisionDiagram<M>, remaining: &[usize]) -> Result<usize>
where
    M: DpModel<State = MispState>,
{
    let count = |v: usize| dd.last_layer().iter().filter(|n| n.state.contains(v)).count();
    remaining
        .iter()
        .copied()
        .min_by_key(|&v| (count(v), v))
        .ok_or(Error::NoRemainingVariable)
}
