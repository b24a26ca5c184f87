//! Neural fitted Q-learning of variable orderings.
//!
//! Each episode draws a training graph, builds its diagram one vertex at a
//! time with an ε-greedy policy over the Q-network, stores every step in a
//! FIFO replay buffer, and once the buffer holds a full batch performs one
//! optimizer step per environment step on a batch sampled uniformly with
//! replacement. Parameters are periodically scored on a fixed validation set
//! and the best-scoring ones are kept.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng as _, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::qnet::{self, AdamConfig, GraphFeatures, ModelFile, OptimizerState, QParams};
use crate::rlenv::{AnyEnv, Transition};
use crate::{generate_ba, BaConfig, Error, Graph, Problem, Result, Rng, Sense};

/// Random Barabási–Albert graphs with a size drawn uniformly in
/// `[n_min, n_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaDistribution {
    pub n_min: usize,
    pub n_max: usize,
    pub nu: usize,
    pub weight_low: i64,
    pub weight_high: i64,
}

impl BaDistribution {
    pub fn sample(&self, rng: &mut Rng) -> Result<Graph> {
        if self.n_min > self.n_max {
            return Err(Error::InvalidConfig("n_min > n_max".into()));
        }
        generate_ba(&BaConfig {
            n: rng.random_range(self.n_min..=self.n_max),
            nu: self.nu,
            weight_low: self.weight_low,
            weight_high: self.weight_high,
            seed: rng.random(),
        })
    }

    /// `count` graphs from one seed.
    pub fn batch(&self, count: usize, seed: u64) -> Result<Vec<Graph>> {
        let mut rng = Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }
}

/// Source of training and validation graphs.
pub trait InstanceProvider {
    fn next_instance(&mut self, rng: &mut Rng) -> Result<Graph>;
}

impl InstanceProvider for BaDistribution {
    fn next_instance(&mut self, rng: &mut Rng) -> Result<Graph> {
        self.sample(rng)
    }
}

/// Linear ε decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    /// Fraction of the episodes over which ε decays.
    pub decay_fraction: f64,
}

pub fn epsilon_at(schedule: &EpsilonSchedule, episode: usize, episodes: usize) -> f64 {
    let horizon = schedule.decay_fraction * episodes as f64;
    if horizon <= 0.0 || episode as f64 >= horizon {
        return schedule.end;
    }
    let frac = episode as f64 / horizon;
    schedule.start + (schedule.end - schedule.start) * frac
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub problem: Problem,
    pub sense: Sense,
    /// Width of the diagrams built during training.
    pub width: usize,
    pub episodes: usize,
    pub batch_size: usize,
    pub epsilon: EpsilonSchedule,
    pub reward_scale: f64,
    pub learning_rate: f64,
    pub gamma: f64,
    pub replay_capacity: usize,
    pub train_set_size: usize,
    /// Episodes between training-set regenerations.
    pub refresh_every: usize,
    pub validation_set_size: usize,
    /// Episodes between validation runs; the last episode is always scored.
    pub validation_every: usize,
    pub dim: usize,
    pub depth: usize,
    /// Multiplier applied to edge weights before they enter the network.
    pub weight_scale: f64,
    pub distribution: BaDistribution,
    pub seed: u64,
}

impl TrainConfig {
    /// Desk-scale defaults for `problem` and `sense`.
    pub fn desk(problem: Problem, sense: Sense) -> Self {
        let (distribution, weight_scale) = match problem {
            Problem::Misp => (
                BaDistribution {
                    n_min: 20,
                    n_max: 30,
                    nu: 4,
                    weight_low: 1,
                    weight_high: 1,
                },
                1.0,
            ),
            Problem::Mcp => (
                BaDistribution {
                    n_min: 15,
                    n_max: 20,
                    nu: 4,
                    weight_low: 1,
                    weight_high: 10,
                },
                0.01,
            ),
        };
        TrainConfig {
            problem,
            sense,
            width: 2,
            episodes: 2000,
            batch_size: 32,
            epsilon: EpsilonSchedule {
                start: 1.0,
                end: 0.05,
                decay_fraction: 0.5,
            },
            reward_scale: 1.0,
            learning_rate: 1e-3,
            gamma: 1.0,
            replay_capacity: 10_000,
            train_set_size: 100,
            refresh_every: 500,
            validation_set_size: 20,
            validation_every: 100,
            dim: qnet::DEFAULT_DIM,
            depth: qnet::DEFAULT_DEPTH,
            weight_scale,
            distribution,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        let e = &self.epsilon;
        if !(0.0 <= e.end && e.end <= e.start && e.start <= 1.0) {
            return fail("epsilon must satisfy 0 <= end <= start <= 1");
        }
        if self.batch_size == 0 {
            return fail("batch size must be at least 1");
        }
        if self.replay_capacity < self.batch_size {
            return fail("replay capacity must be at least the batch size");
        }
        if self.width == 0 {
            return Err(Error::ZeroWidth);
        }
        if self.train_set_size == 0 {
            return Err(Error::Empty("training set".into()));
        }
        if self.validation_set_size == 0 {
            return Err(Error::Empty("validation set".into()));
        }
        if self.dim == 0 || self.depth == 0 {
            return fail("embedding dimension and depth must be positive");
        }
        if self.refresh_every == 0 || self.validation_every == 0 {
            return fail("refresh and validation periods must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail("gamma must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            ..AdamConfig::default()
        }
    }
}

/// Bounded FIFO store of transitions with their graphs.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<(Arc<GraphFeatures>, Transition)>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, graph: Arc<GraphFeatures>, tr: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back((graph, tr));
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i).map(|(_, t)| t)
    }

    /// `count` indices drawn uniformly with replacement.
    pub fn sample_indices(&self, count: usize, rng: &mut Rng) -> Vec<usize> {
        (0..count)
            .map(|_| rng.random_range(0..self.items.len()))
            .collect()
    }

    fn batch(&self, idx: &[usize]) -> Vec<qnet::Sample<'_>> {
        idx.iter()
            .map(|&i| {
                let (g, t) = &self.items[i];
                (g.as_ref(), t)
            })
            .collect()
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub epsilon: f64,
    pub mean_loss: Option<f64>,
    /// Sum of scaled rewards.
    pub episode_return: f64,
    /// Final bound of the episode's diagram.
    pub bound: i64,
    pub validation: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the best validation score.
    pub best: QParams,
    pub best_validation: f64,
    /// Parameters after the last episode.
    pub last: QParams,
    pub last_validation: f64,
    pub log: Vec<EpisodeRecord>,
    pub samples_stored: usize,
    pub optimizer_steps: u64,
}

impl TrainOutcome {
    pub fn model_file(&self, cfg: &TrainConfig) -> ModelFile {
        ModelFile {
            problem: cfg.problem,
            sense: cfg.sense,
            width: cfg.width,
            weight_scale: cfg.weight_scale,
            config: serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null),
            params: self.best.clone(),
        }
    }
}

/// Greedy ordering under `params`; ties go to the lowest vertex.
pub fn greedy_ordering(params: &QParams, gf: &GraphFeatures) -> Vec<usize> {
    let mut order = Vec::with_capacity(gf.n());
    while order.len() < gf.n() {
        let v = qnet::greedy_action(params, gf, &order).expect("a vertex remains");
        order.push(v);
    }
    order
}

/// Mean scaled return of the greedy policy over `graphs`.
pub fn validation_score(
    cfg: &TrainConfig,
    params: &QParams,
    graphs: &[(Graph, Arc<GraphFeatures>)],
) -> Result<f64> {
    let mut total = 0.0;
    for (g, gf) in graphs {
        let mut env = AnyEnv::reset(cfg.problem, g, cfg.sense, cfg.width)?;
        let mut ret = 0;
        for v in greedy_ordering(params, gf) {
            ret += env.step(v)?;
        }
        total += cfg.reward_scale * ret as f64;
    }
    Ok(total / graphs.len() as f64)
}

fn with_features(graphs: Vec<Graph>, scale: f64) -> Vec<(Graph, Arc<GraphFeatures>)> {
    graphs
        .into_iter()
        .map(|g| {
            let gf = Arc::new(GraphFeatures::new(&g, scale));
            (g, gf)
        })
        .collect()
}

/// Trains from a fresh random initialization.
pub fn train(cfg: &TrainConfig, provider: &mut dyn InstanceProvider) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let params = QParams::random(cfg.dim, cfg.depth, &mut rng);
    run(cfg, provider, params, rng)
}

/// Continues training from `init`. A model trained for the other bound
/// direction is refused unless `allow_sense_switch` is set.
pub fn train_from(
    cfg: &TrainConfig,
    provider: &mut dyn InstanceProvider,
    init: &ModelFile,
    allow_sense_switch: bool,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    init.ensure_problem(cfg.problem)?;
    if init.sense != cfg.sense && !allow_sense_switch {
        return Err(Error::ModelMismatch(format!(
            "model was trained for {} bounds; refusing to continue in {} mode",
            init.sense, cfg.sense
        )));
    }
    if (init.params.dim, init.params.depth) != (cfg.dim, cfg.depth) {
        return Err(Error::ModelMismatch(
            "network shape differs from configuration".into(),
        ));
    }
    let rng = Rng::seed_from_u64(cfg.seed);
    run(cfg, provider, init.params.clone(), rng)
}

fn run(
    cfg: &TrainConfig,
    provider: &mut dyn InstanceProvider,
    mut params: QParams,
    mut rng: Rng,
) -> Result<TrainOutcome> {
    let mut draw_set = |count: usize, rng: &mut Rng| -> Result<Vec<Graph>> {
        (0..count).map(|_| provider.next_instance(rng)).collect()
    };
    let validation = with_features(draw_set(cfg.validation_set_size, &mut rng)?, cfg.weight_scale);
    let mut training = with_features(draw_set(cfg.train_set_size, &mut rng)?, cfg.weight_scale);
    let mut graph_ids: Vec<usize> = (0..training.len()).collect();
    let mut next_id = training.len();

    let mut opt = OptimizerState::new(&params, cfg.adam());
    let mut buffer = ReplayBuffer::new(cfg.replay_capacity);
    let mut best = params.clone();
    let mut best_validation = f64::NEG_INFINITY;
    let mut last_validation = f64::NEG_INFINITY;
    let mut log = Vec::with_capacity(cfg.episodes);
    let mut samples_stored = 0;

    for episode in 0..cfg.episodes {
        if episode > 0 && episode % cfg.refresh_every == 0 {
            training = with_features(draw_set(cfg.train_set_size, &mut rng)?, cfg.weight_scale);
            graph_ids = (next_id..next_id + training.len()).collect();
            next_id += training.len();
        }
        let eps = epsilon_at(&cfg.epsilon, episode, cfg.episodes);
        let pick = rng.random_range(0..training.len());
        let (graph, features) = &training[pick];
        let mut env = AnyEnv::reset(cfg.problem, graph, cfg.sense, cfg.width)?;

        let mut episode_return = 0.0;
        let mut losses = Vec::new();
        while !env.is_terminal() {
            let actions = env.actions();
            let explore = rng.random::<f64>() < eps;
            let action = if explore {
                actions[rng.random_range(0..actions.len())]
            } else {
                qnet::greedy_action(&params, features, env.inserted()).expect("actions remain")
            };
            let before = env.inserted().to_vec();
            let reward = cfg.reward_scale * env.step(action)? as f64;
            episode_return += reward;
            buffer.push(
                Arc::clone(features),
                Transition {
                    graph_id: graph_ids[pick],
                    inserted_before: before,
                    action,
                    reward,
                    terminal: env.is_terminal(),
                },
            );
            samples_stored += 1;

            if buffer.len() >= cfg.batch_size {
                let idx = buffer.sample_indices(cfg.batch_size, &mut rng);
                let batch = buffer.batch(&idx);
                let (loss, grad) = qnet::td_loss_grad(&params, &batch, cfg.gamma)?;
                qnet::adam_step(&mut params, &mut opt, &grad);
                losses.push(loss);
            }
        }

        let last_episode = episode + 1 == cfg.episodes;
        let validation_now = if (episode + 1) % cfg.validation_every == 0 || last_episode {
            let score = validation_score(cfg, &params, &validation)?;
            if score > best_validation {
                best_validation = score;
                best = params.clone();
            }
            last_validation = score;
            Some(score)
        } else {
            None
        };
        log.push(EpisodeRecord {
            episode,
            epsilon: eps,
            mean_loss: (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64),
            episode_return,
            bound: env.bound(),
            validation: validation_now,
        });
    }

    if cfg.episodes == 0 {
        best_validation = validation_score(cfg, &params, &validation)?;
        last_validation = best_validation;
    }
    Ok(TrainOutcome {
        best,
        best_validation,
        last: params,
        last_validation,
        log,
        samples_stored,
        optimizer_steps: opt.step,
    })
}

/// Writes the log as one JSON object per line.
pub fn write_log(log: &[EpisodeRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for rec in log {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Saves a trained model. Same as [`ModelFile::save`] on the outcome's best
/// parameters.
pub fn checkpoint_save(outcome: &TrainOutcome, cfg: &TrainConfig, path: impl AsRef<Path>) -> Result<()> {
    outcome.model_file(cfg).save(path)
}

pub fn checkpoint_load(path: impl AsRef<Path>) -> Result<ModelFile> {
    ModelFile::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg(problem: Problem, sense: Sense) -> TrainConfig {
        TrainConfig {
            episodes: 3,
            batch_size: 4,
            replay_capacity: 16,
            train_set_size: 3,
            validation_set_size: 2,
            validation_every: 2,
            refresh_every: 2,
            dim: 4,
            depth: 2,
            distribution: BaDistribution {
                n_min: 6,
                n_max: 8,
                nu: 2,
                ..TrainConfig::desk(problem, sense).distribution
            },
            ..TrainConfig::desk(problem, sense)
        }
    }

    #[test]
    fn epsilon_schedule() {
        let s = EpsilonSchedule {
            start: 1.0,
            end: 0.0,
            decay_fraction: 1.0,
        };
        assert_eq!(epsilon_at(&s, 0, 100), 1.0);
        assert_eq!(epsilon_at(&s, 50, 100), 0.5);
        assert_eq!(epsilon_at(&s, 100, 100), 0.0);
        let half = EpsilonSchedule {
            start: 0.9,
            end: 0.1,
            decay_fraction: 0.5,
        };
        assert_eq!(epsilon_at(&half, 60, 100), 0.1);
        assert_eq!(epsilon_at(&half, 0, 100), 0.9);
    }

    #[test]
    fn replay_buffer_is_fifo() {
        let gf = Arc::new(GraphFeatures::new(&Graph::empty(1), 1.0));
        let mut buf = ReplayBuffer::new(3);
        for i in 0..5 {
            buf.push(
                Arc::clone(&gf),
                Transition {
                    graph_id: i,
                    inserted_before: vec![],
                    action: 0,
                    reward: i as f64,
                    terminal: true,
                },
            );
            assert!(buf.len() <= 3);
        }
        let ids: Vec<usize> = (0..3).map(|i| buf.get(i).unwrap().graph_id).collect();
        assert_eq!(ids, vec![2, 3, 4]);
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::desk(Problem::Misp, Sense::Ub);
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.epsilon.end = 0.5;
        bad.epsilon.start = 0.2;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.replay_capacity = 8;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.train_set_size = 0;
        assert!(matches!(bad.validate(), Err(Error::Empty(_))));
    }

    #[test]
    fn single_episode_accounting() {
        let mut cfg = tiny_cfg(Problem::Misp, Sense::Ub);
        cfg.episodes = 1;
        cfg.distribution.n_min = 4;
        cfg.distribution.n_max = 4;
        cfg.distribution.nu = 1;
        let mut provider = cfg.distribution;
        let out = train(&cfg, &mut provider).unwrap();
        assert_eq!(out.samples_stored, 4);
        assert!(out.optimizer_steps <= 4);
        assert_eq!(out.log.len(), 1);
    }

    #[test]
    fn training_is_deterministic() {
        for problem in [Problem::Misp, Problem::Mcp] {
            let cfg = tiny_cfg(problem, Sense::Lb);
            let a = train(&cfg, &mut cfg.distribution.clone()).unwrap();
            let b = train(&cfg, &mut cfg.distribution.clone()).unwrap();
            assert_eq!(a.best, b.best);
            assert_eq!(a.log, b.log);
            assert!(a.best.is_finite());
        }
    }

    #[test]
    fn returns_match_bounds_and_best_beats_last() {
        for sense in [Sense::Ub, Sense::Lb] {
            let mut cfg = tiny_cfg(Problem::Mcp, sense);
            cfg.episodes = 6;
            cfg.reward_scale = 0.1;
            let out = train(&cfg, &mut cfg.distribution.clone()).unwrap();
            for rec in &out.log {
                let expected = match sense {
                    Sense::Ub => -cfg.reward_scale * rec.bound as f64,
                    Sense::Lb => cfg.reward_scale * rec.bound as f64,
                };
                assert!((rec.episode_return - expected).abs() < 1e-9);
            }
            assert!(out.best_validation >= out.last_validation);
        }
    }

    #[test]
    fn sense_switch_requires_override() {
        let cfg = tiny_cfg(Problem::Misp, Sense::Ub);
        let out = train(&cfg, &mut cfg.distribution.clone()).unwrap();
        let model = out.model_file(&cfg);
        let mut lb = cfg.clone();
        lb.sense = Sense::Lb;
        assert!(matches!(
            train_from(&lb, &mut lb.distribution.clone(), &model, false),
            Err(Error::ModelMismatch(_))
        ));
        assert!(train_from(&lb, &mut lb.distribution.clone(), &model, true).is_ok());
        let mut mcp = cfg.clone();
        mcp.problem = Problem::Mcp;
        assert!(train_from(&mcp, &mut mcp.distribution.clone(), &model, true).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let cfg = tiny_cfg(Problem::Misp, Sense::Ub);
        let out = train(&cfg, &mut cfg.distribution.clone()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        checkpoint_save(&out, &cfg, &path).unwrap();
        let back = checkpoint_load(&path).unwrap();
        assert_eq!(back.params, out.best);
        assert_eq!(back.config["episodes"], 3);
        let log = dir.path().join("log.jsonl");
        write_log(&out.log, &log).unwrap();
        assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 3);
    }
}
