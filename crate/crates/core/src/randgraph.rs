//! Seeded random undirected graphs: ER, BA, WS, DP and the staged FB baseline.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    /// Erdős-Rényi: every pair independently with probability `p`.
    Er,
    /// Barabási-Albert linear preferential attachment.
    Ba,
    /// Watts-Strogatz ring lattice with rewiring.
    Ws,
    /// Distance probability: ring pairs with probability `alpha * p^(beta * d)`.
    Dp,
    /// Staged baseline: independent WS stages joined by merge vertices.
    Fb,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 5] = [
        GeneratorKind::Er,
        GeneratorKind::Ba,
        GeneratorKind::Ws,
        GeneratorKind::Dp,
        GeneratorKind::Fb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Er => "er",
            GeneratorKind::Ba => "ba",
            GeneratorKind::Ws => "ws",
            GeneratorKind::Dp => "dp",
            GeneratorKind::Fb => "fb",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GeneratorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown generator `{s}` (expected er, ba, ws, dp or fb)")))
    }
}

/// Parameters of one generator run. Fields a generator does not use are
/// carried along and echoed into serialized output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    pub n: usize,
    pub p: f64,
    pub m: usize,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub stages: usize,
    pub seed: u64,
}

pub const DEFAULT_FB_STAGES: usize = 3;

impl GeneratorConfig {
    /// Per-family defaults used by the CLI and the sweeps.
    ///
    /// ER `p = 0.2`, BA `m = 5`, WS `k = 4, p = 0.75` (FB stages use the same
    /// WS settings), DP `p = 0.5, alpha = 1, beta = 1`.
    pub fn preset(kind: GeneratorKind, n: usize, seed: u64) -> Self {
        let base = GeneratorConfig {
            kind,
            n,
            p: 0.2,
            m: 5,
            k: 4,
            alpha: 1.0,
            beta: 1.0,
            stages: DEFAULT_FB_STAGES,
            seed,
        };
        match kind {
            GeneratorKind::Er | GeneratorKind::Ba => base,
            GeneratorKind::Ws | GeneratorKind::Fb => GeneratorConfig { p: 0.75, ..base },
            GeneratorKind::Dp => GeneratorConfig { p: 0.5, ..base },
        }
    }

    pub fn er(n: usize, p: f64, seed: u64) -> Self {
        GeneratorConfig { p, ..Self::preset(GeneratorKind::Er, n, seed) }
    }

    pub fn ba(n: usize, m: usize, seed: u64) -> Self {
        GeneratorConfig { m, ..Self::preset(GeneratorKind::Ba, n, seed) }
    }

    pub fn ws(n: usize, k: usize, p: f64, seed: u64) -> Self {
        GeneratorConfig { k, p, ..Self::preset(GeneratorKind::Ws, n, seed) }
    }

    pub fn dp(n: usize, p: f64, alpha: f64, beta: f64, seed: u64) -> Self {
        GeneratorConfig { p, alpha, beta, ..Self::preset(GeneratorKind::Dp, n, seed) }
    }

    pub fn fb(n: usize, k: usize, p: f64, stages: usize, seed: u64) -> Self {
        GeneratorConfig { k, p, stages, ..Self::preset(GeneratorKind::Fb, n, seed) }
    }

    pub fn validate(&self) -> Result<()> {
        let needs_p = !matches!(self.kind, GeneratorKind::Ba);
        if needs_p && !(0.0..=1.0).contains(&self.p) {
            return Err(Error::config(format!("probability p = {} is outside [0, 1]", self.p)));
        }
        match self.kind {
            GeneratorKind::Er => {}
            GeneratorKind::Ba => {
                if self.m == 0 || self.m >= self.n {
                    return Err(Error::config(format!("BA requires 0 < m < n (m = {}, n = {})", self.m, self.n)));
                }
            }
            GeneratorKind::Ws => check_lattice(self.k, self.n)?,
            GeneratorKind::Dp => {
                if !(self.alpha >= 0.0) || !(self.beta >= 0.0) {
                    return Err(Error::config(format!(
                        "DP requires alpha >= 0 and beta >= 0 (alpha = {}, beta = {})",
                        self.alpha, self.beta
                    )));
                }
            }
            GeneratorKind::Fb => {
                if self.stages < 1 || self.stages > self.n {
                    return Err(Error::config(format!(
                        "FB stage count {} must lie in [1, n = {}]",
                        self.stages, self.n
                    )));
                }
                for size in stage_sizes(self.n, self.stages) {
                    check_lattice(self.k, size)?;
                }
            }
        }
        Ok(())
    }
}

fn check_lattice(k: usize, n: usize) -> Result<()> {
    if k == 0 || k % 2 == 1 {
        return Err(Error::config(format!("WS lattice degree k = {k} must be even and positive")));
    }
    if k >= n {
        return Err(Error::config(format!("WS lattice degree k = {k} must be below the ring size {n}")));
    }
    Ok(())
}

/// Contiguous stage sizes; the first `n % stages` stages get one extra vertex.
pub fn stage_sizes(n: usize, stages: usize) -> Vec<usize> {
    let base = n / stages;
    let extra = n % stages;
    (0..stages).map(|s| base + usize::from(s < extra)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UndirectedGraph {
    pub n: usize,
    /// Sorted lexicographically, each pair stored as `(min, max)`.
    pub edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
    /// First vertex of every stage after the first (FB only).
    #[serde(default)]
    pub stage_markers: Vec<usize>,
}

impl UndirectedGraph {
    /// Builds a graph from arbitrary pairs, normalizing orientation and order.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::invariant(format!("self-loop on vertex {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::invariant(format!("edge ({u}, {v}) has an endpoint outside 0..{n}")));
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(Error::invariant(format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(UndirectedGraph {
            n,
            edges: set.into_iter().collect(),
            generator: None,
            stage_markers: Vec::new(),
        })
    }

    fn from_set(n: usize, set: BTreeSet<(usize, usize)>, cfg: &GeneratorConfig) -> Self {
        UndirectedGraph {
            n,
            edges: set.into_iter().collect(),
            generator: Some(cfg.clone()),
            stage_markers: Vec::new(),
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbor lists, each sorted ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Checks the structural invariants; used when loading external files.
    pub fn validate(&self) -> Result<()> {
        let rebuilt = UndirectedGraph::new(self.n, self.edges.iter().copied())?;
        if rebuilt.edges != self.edges {
            return Err(Error::invariant("edge list is not sorted with u < v"));
        }
        if self.stage_markers.windows(2).any(|w| w[0] >= w[1])
            || self.stage_markers.iter().any(|&m| m == 0 || m >= self.n)
        {
            return Err(Error::invariant("stage markers must be strictly increasing inside 1..n"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: UndirectedGraph = serde_json::from_str(text).map_err(|e| Error::Malformed {
            what: "graph JSON",
            message: e.to_string(),
        })?;
        g.validate()?;
        Ok(g)
    }
}

/// Dispatches on `cfg.kind`.
pub fn generate(cfg: &GeneratorConfig) -> Result<UndirectedGraph> {
    match cfg.kind {
        GeneratorKind::Er => generate_er(cfg),
        GeneratorKind::Ba => generate_ba(cfg),
        GeneratorKind::Ws => generate_ws(cfg),
        GeneratorKind::Dp => generate_dp(cfg),
        GeneratorKind::Fb => generate_fb(cfg),
    }
}

fn expect_kind(cfg: &GeneratorConfig, kind: GeneratorKind) -> Result<()> {
    if cfg.kind != kind {
        return Err(Error::config(format!("expected a {kind} configuration, got {}", cfg.kind)));
    }
    cfg.validate()
}

/// One Bernoulli draw per pair `(u, v)`, `u < v`, in lexicographic order.
fn bernoulli_pairs(cfg: &GeneratorConfig, prob: impl Fn(usize, usize) -> f64) -> BTreeSet<(usize, usize)> {
    let mut rng = rng::stream(cfg.seed, rng::GRAPH);
    let mut edges = BTreeSet::new();
    for u in 0..cfg.n {
        for v in u + 1..cfg.n {
            let draw: f64 = rng.random();
            if draw < prob(u, v) {
                edges.insert((u, v));
            }
        }
    }
    edges
}

pub fn generate_er(cfg: &GeneratorConfig) -> Result<UndirectedGraph> {
    expect_kind(cfg, GeneratorKind::Er)?;
    let edges = bernoulli_pairs(cfg, |_, _| cfg.p);
    Ok(UndirectedGraph::from_set(cfg.n, edges, cfg))
}

/// Vertices `0..m` start disconnected. Each later vertex attaches `m` distinct
/// edges to earlier vertices, choosing targets with weight `degree + 1`;
/// repeated targets are redrawn.
pub fn generate_ba(cfg: &GeneratorConfig) -> Result<UndirectedGraph> {
    expect_kind(cfg, GeneratorKind::Ba)?;
    let mut rng = rng::stream(cfg.seed, rng::GRAPH);
    let mut degree = vec![0u64; cfg.n];
    let mut edges = BTreeSet::new();
    let mut chosen = Vec::with_capacity(cfg.m);
    for v in cfg.m..cfg.n {
        chosen.clear();
        let total: u64 = degree[..v].iter().map(|d| d + 1).sum();
        while chosen.len() < cfg.m {
            let mut ticket = rng.random_range(0..total);
            let target = degree[..v]
                .iter()
                .position(|&d| {
                    if ticket <= d {
                        true
                    } else {
                        ticket -= d + 1;
                        false
                    }
                })
                .expect("ticket lies inside the total weight");
            if !chosen.contains(&target) {
                chosen.push(target);
            }
        }
        for &t in &chosen {
            degree[t] += 1;
            degree[v] += 1;
            edges.insert((t, v));
        }
    }
    Ok(UndirectedGraph::from_set(cfg.n, edges, cfg))
}

/// Ring lattice on `n` vertices plus rewiring; returns local edges and the
/// number of rewired edges.
fn ws_edges(rng: &mut rng::Rng, n: usize, k: usize, p: f64) -> (BTreeSet<(usize, usize)>, usize) {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    let mut rewired = 0;
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            let draw: f64 = rng.random();
            if draw >= p || adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
            rewired += 1;
        }
    }
    let edges = adj
        .iter()
        .enumerate()
        .flat_map(|(u, ns)| ns.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
        .collect();
    (edges, rewired)
}

pub fn generate_ws(cfg: &GeneratorConfig) -> Result<UndirectedGraph> {
    generate_ws_traced(cfg).map(|(g, _)| g)
}

/// Like [`generate_ws`] but also reports how many lattice edges were rewired.
pub fn generate_ws_traced(cfg: &GeneratorConfig) -> Result<(UndirectedGraph, usize)> {
    expect_kind(cfg, GeneratorKind::Ws)?;
    let mut rng = rng::stream(cfg.seed, rng::GRAPH);
    let (edges, rewired) = ws_edges(&mut rng, cfg.n, cfg.k, cfg.p);
    Ok((UndirectedGraph::from_set(cfg.n, edges, cfg), rewired))
}

/// Number of ring steps between `u` and `v` along the shorter side.
pub fn ring_distance(n: usize, u: usize, v: usize) -> Result<usize> {
    if u == v {
        return Err(Error::config(format!("ring distance of vertex {u} to itself is undefined")));
    }
    if u >= n || v >= n {
        return Err(Error::config(format!("vertices ({u}, {v}) outside ring of size {n}")));
    }
    let gap = u.abs_diff(v);
    Ok(gap.min(n - gap))
}

/// Edge probability between two vertices at ring distance `d`, clamped to 1.
pub fn dp_probability(p: f64, alpha: f64, beta: f64, d: usize) -> f64 {
    (alpha * p.powf(beta * d as f64)).min(1.0)
}

pub fn generate_dp(cfg: &GeneratorConfig) -> Result<UndirectedGraph> {
    expect_kind(cfg, GeneratorKind::Dp)?;
    let n = cfg.n;
    let edges = bernoulli_pairs(cfg, |u, v| {
        let gap = v - u;
        dp_probability(cfg.p, cfg.alpha, cfg.beta, gap.min(n - gap))
    });
    Ok(UndirectedGraph::from_set(n, edges, cfg))
}

/// Independent WS graphs on contiguous vertex ranges. Stage `s` draws from
/// stream `GRAPH + s`, so a single stage reproduces [`generate_ws`].
pub fn generate_fb(cfg: &GeneratorConfig) -> Result<UndirectedGraph> {
    expect_kind(cfg, GeneratorKind::Fb)?;
    let mut edges = BTreeSet::new();
    let mut markers = Vec::new();
    let mut offset = 0;
    for (s, size) in stage_sizes(cfg.n, cfg.stages).into_iter().enumerate() {
        if s > 0 {
            markers.push(offset);
        }
        let mut rng = rng::stream(cfg.seed, rng::GRAPH + s as u64);
        let (local, _) = ws_edges(&mut rng, size, cfg.k, cfg.p);
        edges.extend(local.into_iter().map(|(u, v)| (u + offset, v + offset)));
        offset += size;
    }
    let mut g = UndirectedGraph::from_set(cfg.n, edges, cfg);
    g.stage_markers = markers;
    Ok(g)
}
