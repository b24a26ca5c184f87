#![allow(dead_code)]

use ddorder_core::qnet::{self, GraphFeatures, QParams};
use ddorder_core::rlenv::Transition;
use ddorder_core::{generate_ba, BaConfig, Graph, Rng};
use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};

pub struct Case {
    pub params: QParams,
    pub graphs: Vec<GraphFeatures>,
    pub samples: Vec<(usize, Transition)>,
}

pub fn random_case(seed: u64) -> Case {
    let mut rng = Rng::seed_from_u64(seed);
    let dim = rng.random_range(1..=4);
    let depth = rng.random_range(1..=2);
    let params = QParams::random_in(dim, depth, 0.5, &mut rng);
    let mut graphs = Vec::new();
    let mut samples = Vec::new();
    for gi in 0..2 {
        let n = rng.random_range(2..=8);
        let g: Graph = generate_ba(&BaConfig {
            n,
            nu: rng.random_range(1..n),
            weight_low: 1,
            weight_high: 10,
            seed: rng.random(),
        })
        .unwrap();
        graphs.push(GraphFeatures::new(&g, 0.1));
        for _ in 0..3 {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let k = rng.random_range(0..n);
            samples.push((
                gi,
                Transition {
                    graph_id: gi,
                    inserted_before: order[..k].to_vec(),
                    action: order[k],
                    reward: rng.random_range(-3.0..3.0),
                    terminal: k + 1 == n,
                },
            ));
        }
    }
    Case {
        params,
        graphs,
        samples,
    }
}

/// Largest relative difference, in Euclidean norm, between the analytic
/// gradient of half the batch loss and its central finite difference.
pub fn gradient_error(case: &Case, step: f64) -> f64 {
    let batch: Vec<qnet::Sample<'_>> = case
        .samples
        .iter()
        .map(|(gi, t)| (&case.graphs[*gi], t))
        .collect();
    let targets = qnet::td_targets(&case.params, &batch, 1.0);
    let (_, grad) = qnet::loss_grad_with_targets(&case.params, &batch, &targets).unwrap();
    let analytic = grad.to_flat();
    let base = case.params.to_flat();
    let half_loss = |flat: &[f64]| {
        let mut p = case.params.clone();
        p.set_flat(flat);
        qnet::loss_grad_with_targets(&p, &batch, &targets).unwrap().0 / 2.0
    };
    let mut numeric = vec![0.0; base.len()];
    for i in 0..base.len() {
        let mut plus = base.clone();
        plus[i] += step;
        let mut minus = base.clone();
        minus[i] -= step;
        numeric[i] = (half_loss(&plus) - half_loss(&minus)) / (2.0 * step);
    }
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(&analytic).max(norm(&numeric)).max(1e-12)
}
