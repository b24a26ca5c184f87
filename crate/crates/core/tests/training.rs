use ddorder_core::dd::Mode;
use ddorder_core::ordering::rand_ordering;
use ddorder_core::trainer::{self, EpsilonSchedule, InstanceProvider, TrainConfig};
use ddorder_core::*;
use rand::SeedableRng;

/// Hands out a fixed list of graphs in a cycle.
struct Cycle {
    graphs: Vec<Graph>,
    next: usize,
}

impl InstanceProvider for Cycle {
    fn next_instance(&mut self, _rng: &mut Rng) -> Result<Graph> {
        let g = self.graphs[self.next % self.graphs.len()].clone();
        self.next += 1;
        Ok(g)
    }
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn full_exploration_matches_random_orderings() {
    let mut cfg = TrainConfig::desk(Problem::Misp, Sense::Ub);
    let graphs = cfg.distribution.batch(50, 77).unwrap();
    cfg.episodes = 100;
    cfg.epsilon = EpsilonSchedule {
        start: 1.0,
        end: 1.0,
        decay_fraction: 0.5,
    };
    cfg.train_set_size = graphs.len();
    cfg.validation_set_size = graphs.len();
    cfg.validation_every = cfg.episodes;
    cfg.refresh_every = cfg.episodes;
    cfg.dim = 8;
    cfg.depth = 2;
    cfg.batch_size = 8;
    cfg.seed = 4;
    let outcome = trainer::train(
        &cfg,
        &mut Cycle {
            graphs: graphs.clone(),
            next: 0,
        },
    )
    .unwrap();
    let explored: Vec<f64> = outcome.log.iter().map(|r| r.bound as f64).collect();

    // episodes pick graphs uniformly from the set, so sample RAND the same way
    let mut random = Vec::new();
    for (i, g) in graphs.iter().enumerate() {
        for t in 0..2 {
            let order = rand_ordering(g, (i * 2 + t) as u64);
            random.push(
                compile(Misp::new(g), &order, Mode::Relaxed(cfg.width))
                    .unwrap()
                    .bound() as f64,
            );
        }
    }

    let (ma, sa) = mean_and_se(&explored);
    let (mb, sb) = mean_and_se(&random);
    let tolerance = 2.0 * (sa * sa + sb * sb).sqrt();
    assert!(
        (ma - mb).abs() <= tolerance,
        "explored mean {ma:.3} vs random mean {mb:.3}, tolerance {tolerance:.3}"
    );
}

#[test]
fn greedy_ordering_is_a_permutation() {
    let cfg = TrainConfig::desk(Problem::Mcp, Sense::Lb);
    let g = cfg.distribution.batch(1, 3).unwrap().remove(0);
    let params = QParams::random(8, 2, &mut Rng::seed_from_u64(5));
    let gf = qnet::GraphFeatures::new(&g, cfg.weight_scale);
    let mut order = trainer::greedy_ordering(&params, &gf);
    order.sort_unstable();
    assert_eq!(order, (0..g.n()).collect::<Vec<_>>());
}
