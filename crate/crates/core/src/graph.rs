//! Weighted simple undirected graphs, the Barabási–Albert generator, and the
//! `p edge` instance file format.
//!
//! Vertices are dense `0..n` ids in memory. Instance files use 1-based ids:
//!
//! ```text
//! c optional comment lines
//! p edge <n> <m>
//! e <u> <v> <w>
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng as _, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Rng};

/// Undirected edge with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: i64,
}

/// Immutable weighted simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    // sorted by (u, v)
    edges: Vec<Edge>,
    // per vertex, (neighbor, weight) sorted by neighbor
    adj: Vec<Vec<(usize, i64)>>,
}

impl Graph {
    /// Graph with `n` vertices and no edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from `(u, v, weight)` triples, rejecting self-loops,
    /// parallel edges and out-of-range endpoints.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, i64)>,
    {
        let mut list = Vec::new();
        for (a, b, weight) in edges {
            for x in [a, b] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if a == b {
                return Err(Error::InvalidConfig(format!("self-loop on vertex {a}")));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            list.push(Edge { u, v, weight });
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(Error::InvalidConfig(format!(
                "duplicate edge ({}, {})",
                w[0].u, w[0].v
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for e in &list {
            adj[e.u].push((e.v, e.weight));
            adj[e.v].push((e.u, e.weight));
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        Ok(Graph { n, edges: list, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    fn check(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n })
        }
    }

    /// `(neighbor, weight)` pairs of `v`, sorted by neighbor.
    pub fn adjacency(&self, v: usize) -> &[(usize, i64)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> Result<usize> {
        self.check(v)?;
        Ok(self.adj[v].len())
    }

    pub fn neighbors(&self, v: usize) -> Result<impl Iterator<Item = usize> + '_> {
        self.check(v)?;
        Ok(self.adj[v].iter().map(|&(u, _)| u))
    }

    /// Sum of the weights of the edges incident to `v`.
    pub fn incident_weight(&self, v: usize) -> Result<i64> {
        self.check(v)?;
        Ok(self.adj[v].iter().map(|&(_, w)| w).sum())
    }

    /// Weight of edge `(u, v)`, if present.
    pub fn weight(&self, u: usize, v: usize) -> Option<i64> {
        let row = self.adj.get(u)?;
        row.binary_search_by_key(&v, |&(x, _)| x).ok().map(|i| row[i].1)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weight(u, v).is_some()
    }

    /// Same graph with vertex `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::InvalidConfig("permutation length differs from n".into()));
        }
        Graph::from_edges(
            self.n,
            self.edges.iter().map(|e| (perm[e.u], perm[e.v], e.weight)),
        )
    }
}

/// Parameters of the Barabási–Albert generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaConfig {
    pub n: usize,
    /// Attachment parameter: edges added per new vertex.
    pub nu: usize,
    pub weight_low: i64,
    pub weight_high: i64,
    pub seed: u64,
}

impl BaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nu == 0 || self.nu >= self.n {
            return Err(Error::InvalidConfig(format!(
                "attachment parameter must satisfy 1 <= nu < n (nu = {}, n = {})",
                self.nu, self.n
            )));
        }
        if self.weight_low > self.weight_high {
            return Err(Error::InvalidConfig(format!(
                "weight bounds reversed: [{}, {}]",
                self.weight_low, self.weight_high
            )));
        }
        Ok(())
    }
}

/// Barabási–Albert graph via the repeated-endpoints urn.
///
/// Starts from `nu` isolated vertices; each new vertex links to `nu` distinct
/// targets. The first new vertex takes all initial vertices, later targets
/// are drawn from the urn holding every edge endpoint seen so far, so
/// selection is proportional to degree. Always yields `nu * (n - nu)` edges.
pub fn generate_ba(cfg: &BaConfig) -> Result<Graph> {
    cfg.validate()?;
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let nu = cfg.nu;
    let mut pairs = Vec::with_capacity(nu * (cfg.n - nu));
    let mut targets: Vec<usize> = (0..nu).collect();
    let mut urn: Vec<usize> = Vec::with_capacity(2 * nu * cfg.n);
    for source in nu..cfg.n {
        for &t in &targets {
            pairs.push((source, t));
        }
        urn.extend_from_slice(&targets);
        urn.extend(std::iter::repeat_n(source, nu));
        if source + 1 == cfg.n {
            break;
        }
        targets.clear();
        while targets.len() < nu {
            let pick = urn[rng.random_range(0..urn.len())];
            if !targets.contains(&pick) {
                targets.push(pick);
            }
        }
    }
    let edges: Vec<_> = pairs
        .into_iter()
        .map(|(a, b)| (a, b, rng.random_range(cfg.weight_low..=cfg.weight_high)))
        .collect();
    Graph::from_edges(cfg.n, edges)
}

/// `count` graphs sharing `cfg` except for the seed; instance seeds are
/// drawn from a generator seeded with `cfg.seed`.
pub fn generate_ba_batch(cfg: &BaConfig, count: usize) -> Result<Vec<Graph>> {
    cfg.validate()?;
    let mut rng = Rng::seed_from_u64(cfg.seed);
    (0..count)
        .map(|_| {
            generate_ba(&BaConfig {
                seed: rng.random(),
                ..*cfg
            })
        })
        .collect()
}

/// Renders `g` in the instance file format.
pub fn format_instance(g: &Graph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p edge {} {}", g.n(), g.m());
    for e in g.edges() {
        let _ = writeln!(out, "e {} {} {}", e.u + 1, e.v + 1, e.weight);
    }
    out
}

pub fn save_instance(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_instance(g))?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_instance(&text).map_err(|(line, message)| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })
}

/// Parses the instance format; errors carry the 1-based line number.
/// A missing weight on an `e` line defaults to 1 (plain DIMACS).
pub fn parse_instance(text: &str) -> std::result::Result<Graph, (usize, String)> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| -> std::result::Result<i64, (usize, String)> {
            s.parse::<i64>()
                .map_err(|_| (line_no, format!("not an integer: {s:?}")))
        };
        match fields[0] {
            "p" => {
                if header.is_some() {
                    return Err((line_no, "second problem line".into()));
                }
                if fields.len() != 4 || fields[1] != "edge" {
                    return Err((line_no, "expected `p edge <n> <m>`".into()));
                }
                let (n, m) = (num(fields[2])?, num(fields[3])?);
                if n < 0 || m < 0 {
                    return Err((line_no, "negative size".into()));
                }
                header = Some((n as usize, m as usize));
            }
            "e" => {
                let Some((n, _)) = header else {
                    return Err((line_no, "edge line before problem line".into()));
                };
                if !(3..=4).contains(&fields.len()) {
                    return Err((line_no, "expected `e <u> <v> [<w>]`".into()));
                }
                let (a, b) = (num(fields[1])?, num(fields[2])?);
                let w = if fields.len() == 4 { num(fields[3])? } else { 1 };
                if a < 1 || b < 1 || a as usize > n || b as usize > n {
                    return Err((line_no, format!("endpoint out of range 1..={n}")));
                }
                let (a, b) = (a as usize - 1, b as usize - 1);
                if a == b {
                    return Err((line_no, "self-loop".into()));
                }
                if !seen.insert((a.min(b), a.max(b))) {
                    return Err((line_no, "duplicate edge".into()));
                }
                edges.push((a, b, w));
            }
            other => return Err((line_no, format!("unknown line type {other:?}"))),
        }
    }
    let Some((n, m)) = header else {
        return Err((last_line.max(1), "missing `p edge` line".into()));
    };
    if edges.len() != m {
        return Err((
            last_line.max(1),
            format!("header announces {m} edges, found {}", edges.len()),
        ));
    }
    Graph::from_edges(n, edges).map_err(|e| (last_line.max(1), e.to_string()))
}
