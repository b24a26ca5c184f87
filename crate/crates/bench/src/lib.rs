//! Fixtures shared by the benchmarks.

use ddorder_core::ordering::rand_ordering;
use ddorder_core::qnet::GraphFeatures;
use ddorder_core::rlenv::Transition;
use ddorder_core::{generate_ba, BaConfig, Graph};

/// A BA graph of `n` vertices with attachment 4, weighted for max-cut when
/// `weighted` is set.
pub fn instance(n: usize, weighted: bool, seed: u64) -> Graph {
    generate_ba(&BaConfig {
        n,
        nu: 4.min(n - 1),
        weight_low: 1,
        weight_high: if weighted { 10 } else { 1 },
        seed,
    })
    .expect("valid generator config")
}

/// `count` replay samples on one graph, each a random partial ordering
/// followed by one more vertex.
pub fn samples(g: &Graph, count: usize) -> Vec<Transition> {
    (0..count as u64)
        .map(|s| {
            let order = rand_ordering(g, s);
            let k = s as usize % g.n();
            Transition {
                graph_id: 0,
                inserted_before: order[..k].to_vec(),
                action: order[k],
                reward: -1.0,
                terminal: k + 1 == g.n(),
            }
        })
        .collect()
}

pub fn features(g: &Graph) -> GraphFeatures {
    GraphFeatures::new(g, 1.0)
}
