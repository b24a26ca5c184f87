//! Action-value approximator over (graph, inserted set, candidate vertex).
//!
//! Vertex embeddings follow a structure2vec recursion run for `depth`
//! rounds from zero:
//!
//! ```text
//! mu_v <- relu(t1 * x_v + t2 * sum_{u in N(v)} mu_u + t3 * sum_{u in N(v)} relu(t4 * w(v,u)))
//! ```
//!
//! where `x_v` flags inserted vertices and `w` is the scaled edge weight.
//! A candidate `v` scores
//! `t5 . relu([t6 * sum_u mu_u ; t7 * mu_v])`.
//!
//! Gradients of the squared temporal-difference loss are computed by a
//! hand-written reverse pass; targets are held constant.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rlenv::Transition;
use crate::{Error, Graph, Problem, Result, Rng, Sense};

pub const DEFAULT_DIM: usize = 64;
pub const DEFAULT_DEPTH: usize = 4;
pub const INIT_RANGE: f64 = 0.01;

/// The seven parameter tensors plus their shape hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct QParams {
    pub dim: usize,
    pub depth: usize,
    pub theta1: Array1<f64>,
    pub theta2: Array2<f64>,
    pub theta3: Array2<f64>,
    pub theta4: Array1<f64>,
    pub theta5: Array1<f64>,
    pub theta6: Array2<f64>,
    pub theta7: Array2<f64>,
}

impl QParams {
    pub fn zeros(dim: usize, depth: usize) -> Self {
        let p = dim;
        QParams {
            dim,
            depth,
            theta1: Array1::zeros(p),
            theta2: Array2::zeros((p, p)),
            theta3: Array2::zeros((p, p)),
            theta4: Array1::zeros(p),
            theta5: Array1::zeros(2 * p),
            theta6: Array2::zeros((p, p)),
            theta7: Array2::zeros((p, p)),
        }
    }

    /// Uniform initialization in `[-INIT_RANGE, INIT_RANGE]`.
    pub fn random(dim: usize, depth: usize, rng: &mut Rng) -> Self {
        Self::random_in(dim, depth, INIT_RANGE, rng)
    }

    pub fn random_in(dim: usize, depth: usize, range: f64, rng: &mut Rng) -> Self {
        let mut params = Self::zeros(dim, depth);
        for t in params.tensors_mut() {
            for x in t.iter_mut() {
                *x = rng.random_range(-range..=range);
            }
        }
        params
    }

    /// Tensor names in storage order.
    pub const NAMES: [&'static str; 7] = [
        "theta1", "theta2", "theta3", "theta4", "theta5", "theta6", "theta7",
    ];

    pub fn tensors(&self) -> [&[f64]; 7] {
        [
            self.theta1.as_slice().unwrap(),
            self.theta2.as_slice().unwrap(),
            self.theta3.as_slice().unwrap(),
            self.theta4.as_slice().unwrap(),
            self.theta5.as_slice().unwrap(),
            self.theta6.as_slice().unwrap(),
            self.theta7.as_slice().unwrap(),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 7] {
        [
            self.theta1.as_slice_mut().unwrap(),
            self.theta2.as_slice_mut().unwrap(),
            self.theta3.as_slice_mut().unwrap(),
            self.theta4.as_slice_mut().unwrap(),
            self.theta5.as_slice_mut().unwrap(),
            self.theta6.as_slice_mut().unwrap(),
            self.theta7.as_slice_mut().unwrap(),
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// All parameters flattened in storage order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&flat[offset..offset + t.len()]);
            offset += t.len();
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }
}

/// Adjacency with scaled weights, precomputed once per graph.
#[derive(Debug, Clone)]
pub struct GraphFeatures {
    n: usize,
    adj: Vec<Vec<(usize, f64)>>,
}

impl GraphFeatures {
    pub fn new(g: &Graph, weight_scale: f64) -> Self {
        GraphFeatures {
            n: g.n(),
            adj: (0..g.n())
                .map(|v| {
                    g.adjacency(v)
                        .iter()
                        .map(|&(u, w)| (u, w as f64 * weight_scale))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    // rows of out[v] = sum over neighbors u of m[u]
    fn neighbor_sum(&self, m: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(m.raw_dim());
        for (v, nbrs) in self.adj.iter().enumerate() {
            let mut row = out.row_mut(v);
            for &(u, _) in nbrs {
                row += &m.row(u);
            }
        }
        out
    }
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

fn step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Intermediate values kept for the reverse pass.
struct Forward {
    tags: Array1<f64>,
    edge: Array2<f64>,
    // sums[t] = A mu^t, pre[t] = pre-activation of mu^{t+1}, t = 0..depth
    sums: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    mu: Array2<f64>,
    pooled: Array1<f64>,
    head_pool: Array1<f64>,
    head_cand: Array2<f64>,
}

fn tags_of(n: usize, inserted: &[usize]) -> Array1<f64> {
    let mut tags = Array1::zeros(n);
    for &v in inserted {
        tags[v] = 1.0;
    }
    tags
}

fn forward(params: &QParams, gf: &GraphFeatures, inserted: &[usize]) -> Forward {
    let n = gf.n;
    let p = params.dim;
    let tags = tags_of(n, inserted);

    let mut edge = Array2::zeros((n, p));
    for (v, nbrs) in gf.adj.iter().enumerate() {
        for &(_, w) in nbrs {
            for j in 0..p {
                edge[[v, j]] += relu(params.theta4[j] * w);
            }
        }
    }
    // constant part of every round
    let mut base = edge.dot(&params.theta3.t());
    for v in 0..n {
        if tags[v] != 0.0 {
            base.row_mut(v).scaled_add(tags[v], &params.theta1);
        }
    }

    let mut mu = Array2::zeros((n, p));
    let mut sums = Vec::with_capacity(params.depth);
    let mut pre = Vec::with_capacity(params.depth);
    for t in 0..params.depth {
        let sum = gf.neighbor_sum(&mu);
        // the first round starts from zero embeddings
        let z = if t == 0 {
            base.clone()
        } else {
            &base + &sum.dot(&params.theta2.t())
        };
        mu = z.mapv(relu);
        sums.push(sum);
        pre.push(z);
    }
    let pooled = mu.sum_axis(Axis(0));
    let head_pool = params.theta6.dot(&pooled);
    let head_cand = mu.dot(&params.theta7.t());
    Forward {
        tags,
        edge,
        sums,
        pre,
        mu,
        pooled,
        head_pool,
        head_cand,
    }
}

impl Forward {
    fn q(&self, params: &QParams, v: usize) -> f64 {
        let p = params.dim;
        let pool: f64 = (0..p).map(|i| params.theta5[i] * relu(self.head_pool[i])).sum();
        let cand: f64 = (0..p)
            .map(|i| params.theta5[p + i] * relu(self.head_cand[[v, i]]))
            .sum();
        pool + cand
    }

    /// Accumulates `upstream * dQ(action)/dparams` into `grad`.
    fn backward(
        &self,
        params: &QParams,
        gf: &GraphFeatures,
        action: usize,
        upstream: f64,
        grad: &mut QParams,
    ) {
        let p = params.dim;
        let n = gf.n;
        let mut d_pool = Array1::zeros(p);
        let mut d_cand = Array1::zeros(p);
        for i in 0..p {
            let hp = self.head_pool[i];
            let hc = self.head_cand[[action, i]];
            grad.theta5[i] += upstream * relu(hp);
            grad.theta5[p + i] += upstream * relu(hc);
            d_pool[i] = upstream * params.theta5[i] * step(hp);
            d_cand[i] = upstream * params.theta5[p + i] * step(hc);
        }
        let mu_a = self.mu.row(action);
        for i in 0..p {
            for j in 0..p {
                grad.theta6[[i, j]] += d_pool[i] * self.pooled[j];
                grad.theta7[[i, j]] += d_cand[i] * mu_a[j];
            }
        }
        let d_pooled = params.theta6.t().dot(&d_pool);
        let mut d_mu = Array2::zeros((n, p));
        for mut row in d_mu.rows_mut() {
            row.assign(&d_pooled);
        }
        let extra = params.theta7.t().dot(&d_cand);
        d_mu.row_mut(action).scaled_add(1.0, &extra);

        // theta1 and theta3 enter every round identically, so their
        // gradients only need the sum over rounds
        let mut d_pre_total: Array2<f64> = Array2::zeros((n, p));
        for t in (0..params.depth).rev() {
            let d_pre = &d_mu * &self.pre[t].mapv(step);
            d_pre_total += &d_pre;
            if t > 0 {
                grad.theta2.scaled_add(1.0, &d_pre.t().dot(&self.sums[t]));
                let d_sum = d_pre.dot(&params.theta2);
                d_mu = gf.neighbor_sum(&d_sum);
            }
        }
        grad.theta1.scaled_add(1.0, &d_pre_total.t().dot(&self.tags));
        grad.theta3.scaled_add(1.0, &d_pre_total.t().dot(&self.edge));
        let d_edge = d_pre_total.dot(&params.theta3);
        for (v, nbrs) in gf.adj.iter().enumerate() {
            for &(_, w) in nbrs {
                for j in 0..p {
                    if params.theta4[j] * w > 0.0 {
                        grad.theta4[j] += d_edge[[v, j]] * w;
                    }
                }
            }
        }
    }
}

/// Final-round vertex embeddings, one row per vertex.
pub fn embed(params: &QParams, gf: &GraphFeatures, inserted: &[usize]) -> Array2<f64> {
    forward(params, gf, inserted).mu
}

/// Q-values of every vertex not in `inserted`, ascending by vertex.
pub fn qvalues(params: &QParams, gf: &GraphFeatures, inserted: &[usize]) -> Vec<(usize, f64)> {
    let fwd = forward(params, gf, inserted);
    let mut taken = vec![false; gf.n];
    for &v in inserted {
        taken[v] = true;
    }
    (0..gf.n)
        .filter(|&v| !taken[v])
        .map(|v| (v, fwd.q(params, v)))
        .collect()
}

/// Highest-valued candidate, lowest id on ties.
pub fn greedy_action(params: &QParams, gf: &GraphFeatures, inserted: &[usize]) -> Option<usize> {
    best_of(&qvalues(params, gf, inserted)).map(|(v, _)| v)
}

fn best_of(values: &[(usize, f64)]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for &(v, q) in values {
        if best.is_none_or(|(_, b)| q > b) {
            best = Some((v, q));
        }
    }
    best
}

/// One replay sample bound to its graph.
pub type Sample<'a> = (&'a GraphFeatures, &'a Transition);

/// Q-learning targets: the reward, plus `gamma` times the best successor
/// value for non-terminal samples.
pub fn td_targets(params: &QParams, batch: &[Sample<'_>], gamma: f64) -> Vec<f64> {
    batch
        .iter()
        .map(|(gf, tr)| {
            if tr.terminal {
                return tr.reward;
            }
            let mut next = tr.inserted_before.clone();
            next.push(tr.action);
            let best = best_of(&qvalues(params, gf, &next)).map_or(0.0, |(_, q)| q);
            tr.reward + gamma * best
        })
        .collect()
}

/// Mean squared error against fixed `targets`, and the gradient of half of
/// it, `(1/2N) * sum_j (y_j - Q_j)^2`.
pub fn loss_grad_with_targets(
    params: &QParams,
    batch: &[Sample<'_>],
    targets: &[f64],
) -> Result<(f64, QParams)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let count = batch.len() as f64;
    let mut grad = QParams::zeros(params.dim, params.depth);
    let mut loss = 0.0;
    for ((gf, tr), &y) in batch.iter().zip(targets) {
        let fwd = forward(params, gf, &tr.inserted_before);
        let q = fwd.q(params, tr.action);
        loss += (y - q) * (y - q);
        fwd.backward(params, gf, tr.action, (q - y) / count, &mut grad);
    }
    Ok((loss / count, grad))
}

/// Loss and semi-gradient of a batch of replay samples.
pub fn td_loss_grad(params: &QParams, batch: &[Sample<'_>], gamma: f64) -> Result<(f64, QParams)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let targets = td_targets(params, batch, gamma);
    loss_grad_with_targets(params, batch, &targets)
}

/// Adaptive-moment optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// In-place bias-corrected adaptive-moment update; `step` counts from 1.
pub fn adam_update(
    params: &mut [f64],
    grad: &[f64],
    first: &mut [f64],
    second: &mut [f64],
    step: u64,
    cfg: &AdamConfig,
) {
    let c1 = 1.0 - cfg.beta1.powi(step as i32);
    let c2 = 1.0 - cfg.beta2.powi(step as i32);
    for i in 0..params.len() {
        let g = grad[i];
        first[i] = cfg.beta1 * first[i] + (1.0 - cfg.beta1) * g;
        second[i] = cfg.beta2 * second[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = first[i] / c1;
        let v_hat = second[i] / c2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub first: QParams,
    pub second: QParams,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(params: &QParams, config: AdamConfig) -> Self {
        OptimizerState {
            config,
            first: QParams::zeros(params.dim, params.depth),
            second: QParams::zeros(params.dim, params.depth),
            step: 0,
        }
    }
}

pub fn adam_step(params: &mut QParams, state: &mut OptimizerState, grad: &QParams) {
    state.step += 1;
    let cfg = state.config;
    let step = state.step;
    let grads = grad.tensors();
    for (((p, g), m), v) in params
        .tensors_mut()
        .into_iter()
        .zip(grads)
        .zip(state.first.tensors_mut())
        .zip(state.second.tensors_mut())
    {
        adam_update(p, g, m, v, step, &cfg);
    }
}

const MAGIC: &str = "ddorder-qnet";
const VERSION: u32 = 1;

/// Trained network with the settings it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub problem: Problem,
    pub sense: Sense,
    pub width: usize,
    pub weight_scale: f64,
    /// Free-form provenance (the resolved training configuration).
    pub config: serde_json::Value,
    pub params: QParams,
}

impl ModelFile {
    /// Text layout, one item per line:
    ///
    /// ```text
    /// ddorder-qnet 1
    /// problem <misp|mcp>
    /// sense <ub|lb>
    /// width <W>
    /// dim <p>
    /// depth <T>
    /// weight_scale <f64>
    /// config <json>
    /// <tensor name> <len>
    /// <len space-separated f64, shortest round-trip form>
    /// ... (seven tensors)
    /// end
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {VERSION}");
        let _ = writeln!(out, "problem {}", self.problem);
        let _ = writeln!(out, "sense {}", self.sense);
        let _ = writeln!(out, "width {}", self.width);
        let _ = writeln!(out, "dim {}", self.params.dim);
        let _ = writeln!(out, "depth {}", self.params.depth);
        let _ = writeln!(out, "weight_scale {:e}", self.weight_scale);
        let _ = writeln!(out, "config {}", self.config);
        for (name, t) in QParams::NAMES.iter().zip(self.params.tensors()) {
            let _ = writeln!(out, "{name} {}", t.len());
            let row: Vec<String> = t.iter().map(|x| format!("{x:e}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::ModelFormat(m.to_string());
        let mut lines = text.lines();
        let field = |lines: &mut std::str::Lines<'_>, key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad("truncated file"))?;
            let (k, v) = line
                .split_once(' ')
                .ok_or_else(|| bad(&format!("malformed line {line:?}")))?;
            if k != key {
                return Err(bad(&format!("expected {key:?}, found {k:?}")));
            }
            Ok(v.to_string())
        };
        let version = field(&mut lines, MAGIC)?;
        if version.trim() != VERSION.to_string() {
            return Err(bad(&format!("unsupported version {version}, expected {VERSION}")));
        }
        let parse_usize = |s: String| s.trim().parse::<usize>().map_err(|_| bad("bad integer"));
        let problem: Problem = field(&mut lines, "problem")?.parse()?;
        let sense: Sense = field(&mut lines, "sense")?.parse()?;
        let width = parse_usize(field(&mut lines, "width")?)?;
        let dim = parse_usize(field(&mut lines, "dim")?)?;
        let depth = parse_usize(field(&mut lines, "depth")?)?;
        let weight_scale: f64 = field(&mut lines, "weight_scale")?
            .trim()
            .parse()
            .map_err(|_| bad("bad weight scale"))?;
        let config: serde_json::Value = serde_json::from_str(&field(&mut lines, "config")?)?;
        let mut params = QParams::zeros(dim, depth);
        for (name, tensor) in QParams::NAMES.iter().zip(params.tensors_mut()) {
            let len = parse_usize(field(&mut lines, name)?)?;
            if len != tensor.len() {
                return Err(bad(&format!(
                    "{name} has {len} entries, expected {}",
                    tensor.len()
                )));
            }
            let values = lines.next().ok_or_else(|| bad("truncated file"))?;
            let parsed: Vec<f64> = values
                .split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|_| bad("bad number")))
                .collect::<Result<_>>()?;
            if parsed.len() != len {
                return Err(bad(&format!("{name}: truncated values")));
            }
            tensor.copy_from_slice(&parsed);
        }
        if lines.next() != Some("end") {
            return Err(bad("missing end marker"));
        }
        Ok(ModelFile {
            problem,
            sense,
            width,
            weight_scale,
            config,
            params,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    /// Refuses a model trained for another problem.
    pub fn ensure_problem(&self, problem: Problem) -> Result<()> {
        if self.problem != problem {
            return Err(Error::ModelMismatch(format!(
                "model was trained for {}, not {problem}",
                self.problem
            )));
        }
        Ok(())
    }

    pub fn features(&self, g: &Graph) -> GraphFeatures {
        GraphFeatures::new(g, self.weight_scale)
    }
}
