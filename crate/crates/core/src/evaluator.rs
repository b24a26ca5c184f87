//! Ground-truth oracles, optimality gaps, method comparison and
//! Dolan–Moré performance profiles.
//!
//! The oracles work directly on the graph with bit masks and never touch the
//! diagram code, so agreement between the two is meaningful.

use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use rand::{Rng as _, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::dd::{compile, compile_with_policy, DecisionDiagram, Mode};
use crate::models::DpModel;
use crate::ordering::min_states_next;
use crate::qnet::ModelFile;
use crate::trainer::greedy_ordering;
use crate::{Error, Graph, Mcp, Misp, OrderingSpec, Problem, Result, Rng, Sense};

pub const MISP_ORACLE_LIMIT: usize = 30;
pub const MCP_ORACLE_LIMIT: usize = 24;
/// Shift added to gaps before taking profile ratios, so that rows where the
/// best method closes the gap completely still have finite ratios.
pub const PROFILE_SHIFT: f64 = 1e-9;
pub const REPORT_HEADER: [&str; 8] = [
    "instance", "method", "sense", "width", "bound", "optimum", "gap", "ms",
];
pub const PROFILE_HEADER: [&str; 3] = ["method", "tau", "fraction"];

/// Maximum independent set size by branch and bound.
pub fn brute_force_misp(g: &Graph) -> Result<i64> {
    let n = g.n();
    if n > MISP_ORACLE_LIMIT {
        return Err(Error::OracleLimit {
            n,
            limit: MISP_ORACLE_LIMIT,
        });
    }
    let mut closed = vec![0u32; n];
    for e in g.edges() {
        closed[e.u] |= 1 << e.v;
        closed[e.v] |= 1 << e.u;
    }
    for (v, mask) in closed.iter_mut().enumerate() {
        *mask |= 1 << v;
    }
    let all = if n == 0 { 0 } else { u32::MAX >> (32 - n) };
    let mut best = 0;
    misp_search(&closed, all, 0, &mut best);
    Ok(best as i64)
}

fn misp_search(closed: &[u32], cand: u32, size: u32, best: &mut u32) {
    if size + cand.count_ones() <= *best {
        return;
    }
    // branch on the candidate with the most candidate neighbors
    let mut pick = None;
    let mut top = 0;
    let mut rest = cand;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let deg = (closed[v] & cand).count_ones() - 1;
        if deg > top {
            top = deg;
            pick = Some(v);
        }
    }
    let Some(v) = pick else {
        // the candidates are pairwise non-adjacent
        *best = (*best).max(size + cand.count_ones());
        return;
    };
    misp_search(closed, cand & !closed[v], size + 1, best);
    misp_search(closed, cand & !(1 << v), size, best);
}

/// Maximum cut weight by enumerating every partition with vertex 0 fixed,
/// visited in Gray-code order so each step flips one vertex.
pub fn brute_force_mcp(g: &Graph) -> Result<i64> {
    let n = g.n();
    if n > MCP_ORACLE_LIMIT {
        return Err(Error::OracleLimit {
            n,
            limit: MCP_ORACLE_LIMIT,
        });
    }
    if n <= 1 {
        return Ok(0);
    }
    let mut adj: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
    for e in g.edges() {
        adj[e.u].push((e.v, e.weight));
        adj[e.v].push((e.u, e.weight));
    }
    let mut side = vec![false; n];
    let mut cut = 0i64;
    let mut best = 0i64;
    for step in 1u64..(1u64 << (n - 1)) {
        let v = step.trailing_zeros() as usize + 1;
        for &(u, w) in &adj[v] {
            cut += if side[u] == side[v] { w } else { -w };
        }
        side[v] = !side[v];
        best = best.max(cut);
    }
    Ok(best)
}

/// Optimum of `problem` on `g`, or `None` past the oracle size limit.
pub fn oracle_optimum(problem: Problem, g: &Graph) -> Result<Option<i64>> {
    let res = match problem {
        Problem::Misp => brute_force_misp(g),
        Problem::Mcp => brute_force_mcp(g),
    };
    match res {
        Ok(v) => Ok(Some(v)),
        Err(Error::OracleLimit { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `|bound − optimum| / optimum`.
pub fn optimality_gap(bound: f64, optimum: i64) -> Result<f64> {
    if optimum <= 0 {
        if bound == optimum as f64 {
            return Ok(0.0);
        }
        return Err(Error::InvalidConfig(format!(
            "optimality gap needs a positive optimum, got {optimum}"
        )));
    }
    Ok((bound - optimum as f64).abs() / optimum as f64)
}

/// Bound and shape of one compiled diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    pub bound: i64,
    pub layer_widths: Vec<usize>,
    pub dot: Option<String>,
    /// Compilation time only, ordering computation excluded.
    pub ms: f64,
}

fn finish<M: DpModel>(dd: DecisionDiagram<M>, started: Instant, want_dot: bool) -> Compiled {
    let ms = started.elapsed().as_secs_f64() * 1e3;
    Compiled {
        bound: dd.bound(),
        layer_widths: dd.layer_widths(),
        dot: want_dot.then(|| dd.to_dot()),
        ms,
    }
}

/// Compiles `g` under `method`. `seed` drives RAND; `model` is required for
/// the learned ordering.
pub fn compile_method(
    problem: Problem,
    g: &Graph,
    method: OrderingSpec,
    mode: Mode,
    seed: u64,
    model: Option<&ModelFile>,
    want_dot: bool,
) -> Result<Compiled> {
    let order = match method {
        OrderingSpec::Min => None,
        OrderingSpec::Learned => {
            let m = model.ok_or_else(|| Error::InvalidConfig("the learned ordering needs a model".into()))?;
            m.ensure_problem(problem)?;
            Some(greedy_ordering(&m.params, &m.features(g)))
        }
        _ => Some(method.permutation(g, seed)?),
    };
    let started = Instant::now();
    match (problem, order) {
        (Problem::Misp, Some(o)) => Ok(finish(compile(Misp::new(g), &o, mode)?, started, want_dot)),
        (Problem::Mcp, Some(o)) => Ok(finish(compile(Mcp::new(g), &o, mode)?, started, want_dot)),
        (Problem::Misp, None) => {
            let dd = compile_with_policy(Misp::new(g), mode, min_states_next)?;
            Ok(finish(dd, started, want_dot))
        }
        (Problem::Mcp, None) => Err(Error::InvalidConfig(
            "the min ordering is only defined for misp".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub problem: Problem,
    pub sense: Sense,
    pub width: usize,
    pub methods: Vec<OrderingSpec>,
    pub rand_trials: usize,
    pub seed: u64,
    /// When false the `ms` column is written as 0 so reports are
    /// reproducible byte for byte.
    pub timing: bool,
    pub jobs: usize,
}

impl EvalConfig {
    pub fn new(problem: Problem, sense: Sense, width: usize, methods: Vec<OrderingSpec>) -> Self {
        EvalConfig {
            problem,
            sense,
            width,
            methods,
            rand_trials: 100,
            seed: 0,
            timing: true,
            jobs: 1,
        }
    }

    pub fn validate(&self, model: Option<&ModelFile>) -> Result<()> {
        if self.width == 0 {
            return Err(Error::ZeroWidth);
        }
        if self.methods.is_empty() {
            return Err(Error::Empty("method list".into()));
        }
        if self.rand_trials == 0 && self.methods.contains(&OrderingSpec::Rand) {
            return Err(Error::InvalidConfig("rand needs at least one trial".into()));
        }
        if self.problem == Problem::Mcp && self.methods.contains(&OrderingSpec::Min) {
            return Err(Error::InvalidConfig(
                "the min ordering is only defined for misp".into(),
            ));
        }
        if self.methods.contains(&OrderingSpec::Learned) {
            match model {
                None => return Err(Error::InvalidConfig("the learned ordering needs a model".into())),
                Some(m) => m.ensure_problem(self.problem)?,
            }
        }
        Ok(())
    }
}

/// Spread of the RAND trials on one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: usize,
    pub mean_bound: f64,
    /// Tightest bound seen (lowest for upper bounds, highest for lower).
    pub best_bound: i64,
    pub worst_bound: i64,
    pub mean_gap: Option<f64>,
    pub best_gap: Option<f64>,
    pub worst_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub instance: String,
    pub method: OrderingSpec,
    pub sense: Sense,
    pub width: usize,
    /// Trial mean for RAND.
    pub bound: f64,
    pub optimum: Option<i64>,
    pub gap: Option<f64>,
    pub ms: f64,
    /// Present on RAND rows of freshly computed reports.
    #[serde(skip)]
    pub trials: Option<TrialStats>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

/// Evaluates every method on every instance. Rows come out grouped by
/// instance in input order, methods in configuration order, whatever the
/// number of jobs.
pub fn evaluate_methods(
    instances: &[(String, Graph)],
    cfg: &EvalConfig,
    model: Option<&ModelFile>,
) -> Result<EvalReport> {
    cfg.validate(model)?;
    let jobs = cfg.jobs.max(1).min(instances.len().max(1));
    let mut per_instance: Vec<Option<Result<Vec<EvalRow>>>> = (0..instances.len()).map(|_| None).collect();
    if jobs == 1 {
        for (i, slot) in per_instance.iter_mut().enumerate() {
            *slot = Some(evaluate_instance(i, &instances[i], cfg, model));
        }
    } else {
        let results: Vec<(usize, Result<Vec<EvalRow>>)> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..jobs)
                .map(|j| {
                    s.spawn(move || {
                        (j..instances.len())
                            .step_by(jobs)
                            .map(|i| (i, evaluate_instance(i, &instances[i], cfg, model)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("evaluation worker panicked"))
                .collect()
        });
        for (i, r) in results {
            per_instance[i] = Some(r);
        }
    }
    let mut rows = Vec::new();
    for r in per_instance {
        rows.extend(r.expect("every instance evaluated")?);
    }
    Ok(EvalReport { rows })
}

fn evaluate_instance(
    index: usize,
    (name, g): &(String, Graph),
    cfg: &EvalConfig,
    model: Option<&ModelFile>,
) -> Result<Vec<EvalRow>> {
    let mode = cfg.sense.mode(cfg.width);
    let optimum = oracle_optimum(cfg.problem, g)?;
    let gap_of = |bound: f64| optimum.map(|opt| optimality_gap(bound, opt)).transpose();
    let mut rows = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let mut row = EvalRow {
            instance: name.clone(),
            method,
            sense: cfg.sense,
            width: cfg.width,
            bound: 0.0,
            optimum,
            gap: None,
            ms: 0.0,
            trials: None,
        };
        if method == OrderingSpec::Rand {
            let mut rng = Rng::seed_from_u64(cfg.seed);
            rng.set_stream(index as u64);
            let mut bounds = Vec::with_capacity(cfg.rand_trials);
            let mut ms = 0.0;
            for _ in 0..cfg.rand_trials {
                let c = compile_method(cfg.problem, g, method, mode, rng.random(), None, false)?;
                bounds.push(c.bound);
                ms += c.ms;
            }
            let mean = bounds.iter().sum::<i64>() as f64 / bounds.len() as f64;
            let (best, worst) = match cfg.sense {
                Sense::Ub => (*bounds.iter().min().unwrap(), *bounds.iter().max().unwrap()),
                Sense::Lb => (*bounds.iter().max().unwrap(), *bounds.iter().min().unwrap()),
            };
            let gaps: Option<Vec<f64>> = bounds
                .iter()
                .map(|&b| gap_of(b as f64))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .collect();
            let mean_gap = gaps.as_ref().map(|gs| gs.iter().sum::<f64>() / gs.len() as f64);
            row.bound = mean;
            row.gap = mean_gap;
            row.ms = ms / cfg.rand_trials as f64;
            row.trials = Some(TrialStats {
                trials: cfg.rand_trials,
                mean_bound: mean,
                best_bound: best,
                worst_bound: worst,
                mean_gap,
                best_gap: gap_of(best as f64)?,
                worst_gap: gap_of(worst as f64)?,
            });
        } else {
            let c = compile_method(cfg.problem, g, method, mode, cfg.seed, model, false)?;
            row.bound = c.bound as f64;
            row.gap = gap_of(row.bound)?;
            row.ms = c.ms;
        }
        if !cfg.timing {
            row.ms = 0.0;
        }
        rows.push(row);
    }
    Ok(rows)
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl EvalReport {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Methods in first-appearance order.
    pub fn methods(&self) -> Vec<OrderingSpec> {
        let mut out = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.method) {
                out.push(r.method);
            }
        }
        out
    }

    /// Mean gap of `method` over the rows that have one.
    pub fn mean_gap(&self, method: OrderingSpec) -> Option<f64> {
        let gaps: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.method == method)
            .filter_map(|r| r.gap)
            .collect();
        (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(REPORT_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.instance.clone(),
                r.method.to_string(),
                r.sense.to_string(),
                r.width.to_string(),
                r.bound.to_string(),
                fmt_opt(r.optimum),
                fmt_opt(r.gap),
                format!("{:.3}", r.ms),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let header = rd.headers()?.clone();
        if header.iter().ne(REPORT_HEADER) {
            return Err(Error::InvalidConfig(format!(
                "unexpected report header {:?}",
                header.iter().collect::<Vec<_>>()
            )));
        }
        let bad = |field: &str, v: &str| Error::InvalidConfig(format!("bad {field} value {v:?}"));
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let f = |i: usize| rec.get(i).unwrap_or("");
            let opt = |i: usize| (!f(i).is_empty()).then(|| f(i));
            rows.push(EvalRow {
                instance: f(0).to_string(),
                method: f(1).parse()?,
                sense: f(2).parse()?,
                width: f(3).parse().map_err(|_| bad("width", f(3)))?,
                bound: f(4).parse().map_err(|_| bad("bound", f(4)))?,
                optimum: opt(5)
                    .map(|v| v.parse().map_err(|_| bad("optimum", v)))
                    .transpose()?,
                gap: opt(6).map(|v| v.parse().map_err(|_| bad("gap", v))).transpose()?,
                ms: f(7).parse().map_err(|_| bad("ms", f(7)))?,
                trials: None,
            });
        }
        Ok(EvalReport { rows })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Instance × method gap matrix over instances where every method has a
    /// gap. Instances appear in first-appearance order.
    pub fn gap_matrix(&self) -> (Vec<OrderingSpec>, Vec<Vec<f64>>) {
        let methods = self.methods();
        let mut instances: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !instances.contains(&r.instance.as_str()) {
                instances.push(&r.instance);
            }
        }
        let mut matrix = Vec::new();
        for inst in instances {
            let row: Option<Vec<f64>> = methods
                .iter()
                .map(|&m| {
                    self.rows
                        .iter()
                        .find(|r| r.instance == inst && r.method == m)
                        .and_then(|r| r.gap)
                })
                .collect();
            matrix.extend(row);
        }
        (methods, matrix)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub method: String,
    /// `(tau, fraction of instances with ratio <= tau)`.
    pub points: Vec<(f64, f64)>,
}

/// Performance profiles of an instance × method gap matrix. Every curve is
/// sampled at the union of distinct ratios.
pub fn performance_profile(methods: &[String], gaps: &[Vec<f64>]) -> Result<Vec<ProfileCurve>> {
    if methods.is_empty() || gaps.is_empty() {
        return Err(Error::Empty("gap matrix".into()));
    }
    let mut ratios = vec![Vec::with_capacity(gaps.len()); methods.len()];
    for row in gaps {
        if row.len() != methods.len() {
            return Err(Error::InvalidConfig(
                "gap row length differs from method count".into(),
            ));
        }
        if row.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InvalidConfig(
                "gaps must be finite and non-negative".into(),
            ));
        }
        let best = row.iter().copied().fold(f64::INFINITY, f64::min) + PROFILE_SHIFT;
        for (m, g) in row.iter().enumerate() {
            ratios[m].push((g + PROFILE_SHIFT) / best);
        }
    }
    let mut taus: Vec<f64> = ratios.iter().flatten().copied().collect();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    let total = gaps.len() as f64;
    Ok(methods
        .iter()
        .zip(ratios)
        .map(|(name, mut rs)| {
            rs.sort_by(f64::total_cmp);
            let mut below = 0;
            let points = taus
                .iter()
                .map(|&t| {
                    while below < rs.len() && rs[below] <= t {
                        below += 1;
                    }
                    (t, below as f64 / total)
                })
                .collect();
            ProfileCurve {
                method: name.clone(),
                points,
            }
        })
        .collect())
}

/// Profiles of a report's gap matrix.
pub fn report_profile(report: &EvalReport) -> Result<Vec<ProfileCurve>> {
    let (methods, matrix) = report.gap_matrix();
    let names: Vec<String> = methods.iter().map(|m| m.to_string()).collect();
    performance_profile(&names, &matrix)
}

pub fn write_profile_csv<W: Write>(curves: &[ProfileCurve], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROFILE_HEADER)?;
    for c in curves {
        for (tau, frac) in &c.points {
            w.write_record([c.method.clone(), tau.to_string(), frac.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
