//! Orientation of undirected graphs into single-source, single-sink DAGs.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::randgraph::UndirectedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Input,
    Block,
    Merge,
    Output,
}

impl VertexKind {
    pub fn name(self) -> &'static str {
        match self {
            VertexKind::Input => "input",
            VertexKind::Block => "block",
            VertexKind::Merge => "merge",
            VertexKind::Output => "output",
        }
    }

    pub fn is_synthetic(self) -> bool {
        matches!(self, VertexKind::Input | VertexKind::Output)
    }

    fn dot_shape(self) -> &'static str {
        match self {
            VertexKind::Input => "invtriangle",
            VertexKind::Block => "box",
            VertexKind::Merge => "diamond",
            VertexKind::Output => "triangle",
        }
    }
}

/// A validated architecture DAG.
///
/// Block vertices keep their generator IDs `0..n_blocks`; FB merge vertices
/// follow, then the synthetic input and output vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchDag {
    kinds: Vec<VertexKind>,
    edges: Vec<(usize, usize)>,
    input: usize,
    output: usize,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    topo: Vec<usize>,
    source: UndirectedGraph,
}

/// Kahn's algorithm, always releasing the smallest ready vertex ID first.
pub fn topological_order(n: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for &(u, v) in edges {
        indeg[v] += 1;
        succ[u].push(v);
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| indeg[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &w in &succ[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.push(Reverse(w));
            }
        }
    }
    if order.len() != n {
        return Err(Error::Cycle);
    }
    Ok(order)
}

impl ArchDag {
    /// Validates and indexes a directed graph with one input and one output.
    pub fn new(kinds: Vec<VertexKind>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = kinds.len();
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invariant(format!("edge {u}->{v} references a vertex outside 0..{n}")));
            }
            if u == v {
                return Err(Error::invariant(format!("self-loop on vertex {u}")));
            }
            if !set.insert((u, v)) {
                return Err(Error::invariant(format!("duplicate edge {u}->{v}")));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let find = |kind| {
            let mut it = (0..n).filter(|&v| kinds[v] == kind);
            match (it.next(), it.next()) {
                (Some(v), None) => Ok(v),
                _ => Err(Error::invariant(format!("expected exactly one {kind:?} vertex"))),
            }
        };
        let input = find(VertexKind::Input)?;
        let output = find(VertexKind::Output)?;

        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        for &(u, v) in &edges {
            succ[u].push(v);
            pred[v].push(u);
        }
        let topo = topological_order(n, &edges)?;
        for v in 0..n {
            if v != input && pred[v].is_empty() {
                return Err(Error::invariant(format!("vertex {v} has no predecessor")));
            }
            if v != output && succ[v].is_empty() {
                return Err(Error::invariant(format!("vertex {v} has no successor")));
            }
        }
        if !pred[input].is_empty() || !succ[output].is_empty() {
            return Err(Error::invariant("input must be a source and output a sink"));
        }
        // In a DAG where every non-input vertex has a predecessor, walking
        // predecessors always ends at the input, so reachability follows.

        let block_ids: Vec<usize> = (0..n).filter(|&v| kinds[v] == VertexKind::Block).collect();
        let n_blocks = block_ids.len();
        let source = if block_ids.iter().enumerate().all(|(i, &v)| i == v) {
            UndirectedGraph::new(
                n_blocks,
                edges.iter().copied().filter(|&(u, v)| u < n_blocks && v < n_blocks),
            )?
        } else {
            UndirectedGraph::new(0, [])?
        };

        Ok(ArchDag {
            kinds,
            edges,
            input,
            output,
            succ,
            pred,
            topo,
            source,
        })
    }

    /// Blocks `0..n_blocks` with the given edges, plus an input feeding every
    /// in-degree-0 block and an output fed by every out-degree-0 block.
    pub fn augment(n_blocks: usize, block_edges: &[(usize, usize)]) -> Result<Self> {
        let kinds = vec![VertexKind::Block; n_blocks];
        Self::augment_kinds(kinds, block_edges)
    }

    fn augment_kinds(mut kinds: Vec<VertexKind>, inner: &[(usize, usize)]) -> Result<Self> {
        let n = kinds.len();
        let input = n;
        let output = n + 1;
        kinds.push(VertexKind::Input);
        kinds.push(VertexKind::Output);
        let mut indeg = vec![0usize; n];
        let mut outdeg = vec![0usize; n];
        for &(u, v) in inner {
            outdeg[u] += 1;
            indeg[v] += 1;
        }
        let mut edges = inner.to_vec();
        edges.extend((0..n).filter(|&v| indeg[v] == 0).map(|v| (input, v)));
        edges.extend((0..n).filter(|&v| outdeg[v] == 0).map(|v| (v, output)));
        if n == 0 {
            edges.push((input, output));
        }
        ArchDag::new(kinds, edges)
    }

    /// `n` blocks in sequence.
    pub fn chain(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Self::augment(n, &edges).expect("a chain is a valid DAG")
    }

    /// `n` independent blocks between input and output.
    pub fn parallel(n: usize) -> Self {
        Self::augment(n, &[]).expect("independent blocks form a valid DAG")
    }

    pub fn n_vertices(&self) -> usize {
        self.kinds.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn input(&self) -> usize {
        self.input
    }

    pub fn output(&self) -> usize {
        self.output
    }

    pub fn kind(&self, v: usize) -> VertexKind {
        self.kinds[v]
    }

    pub fn kinds(&self) -> &[VertexKind] {
        &self.kinds
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.pred[v]
    }

    /// Deterministic topological order (smallest ready ID first).
    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    /// Undirected graph this DAG was oriented from (empty when hand-built
    /// with non-contiguous block IDs).
    pub fn source_graph(&self) -> &UndirectedGraph {
        &self.source
    }

    pub fn n_blocks(&self) -> usize {
        self.kinds.iter().filter(|k| **k == VertexKind::Block).count()
    }

    /// Longest-path distance (in edges) of every vertex from the input.
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.n_vertices()];
        for &v in &self.topo {
            for &w in &self.succ[v] {
                depth[w] = depth[w].max(depth[v] + 1);
            }
        }
        depth
    }

    pub fn to_dot(&self) -> String {
        render_dot(self, |v| v.to_string(), |_, _| None)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DagDocument::from(self)).expect("DAG serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DagDocument = serde_json::from_str(text).map_err(|e| Error::Malformed {
            what: "DAG JSON",
            message: e.to_string(),
        })?;
        doc.into_dag()
    }

    pub(crate) fn with_source(mut self, source: UndirectedGraph) -> Self {
        self.source = source;
        self
    }
}

/// JSON layout: the undirected graph fields plus the oriented view.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct DagDocument {
    #[serde(flatten)]
    pub graph: UndirectedGraph,
    pub directed_edges: Vec<(usize, usize)>,
    pub input: usize,
    pub output: usize,
    pub vertex_kind: Vec<VertexKind>,
}

impl From<&ArchDag> for DagDocument {
    fn from(d: &ArchDag) -> Self {
        DagDocument {
            graph: d.source.clone(),
            directed_edges: d.edges.clone(),
            input: d.input,
            output: d.output,
            vertex_kind: d.kinds.clone(),
        }
    }
}

impl DagDocument {
    pub fn into_dag(self) -> Result<ArchDag> {
        self.graph.validate()?;
        let dag = ArchDag::new(self.vertex_kind, self.directed_edges)?;
        if dag.input != self.input || dag.output != self.output {
            return Err(Error::invariant("input/output IDs disagree with vertex kinds"));
        }
        Ok(dag.with_source(self.graph))
    }
}

pub(crate) fn render_dot(
    dag: &ArchDag,
    vertex_label: impl Fn(usize) -> String,
    edge_label: impl Fn(usize, usize) -> Option<String>,
) -> String {
    let mut out = String::from("digraph arch {\n  rankdir=TB;\n");
    for v in 0..dag.n_vertices() {
        let kind = dag.kind(v);
        let name = match kind {
            VertexKind::Input => "in".to_string(),
            VertexKind::Output => "out".to_string(),
            _ => vertex_label(v),
        };
        let _ = writeln!(out, "  v{v} [label=\"{name}\", shape={}];", kind.dot_shape());
    }
    for &(u, v) in dag.edges() {
        match edge_label(u, v) {
            Some(label) => {
                let _ = writeln!(out, "  v{u} -> v{v} [label=\"{label}\"];");
            }
            None => {
                let _ = writeln!(out, "  v{u} -> v{v};");
            }
        }
    }
    out.push_str("}\n");
    out
}

/// DFS discovery times, roots taken in ascending ID, neighbors visited in
/// ascending ID.
fn discovery_times(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut disc = vec![usize::MAX; n];
    let mut clock = 0;
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = clock;
        clock += 1;
        stack.push((root, 0));
        while let Some(top) = stack.last_mut() {
            let (v, next) = *top;
            if let Some(&w) = adj[v].get(next) {
                top.1 += 1;
                if disc[w] == usize::MAX {
                    disc[w] = clock;
                    clock += 1;
                    stack.push((w, 0));
                }
            } else {
                stack.pop();
            }
        }
    }
    disc
}

/// Orients every edge from the endpoint discovered first by a DFS (smallest
/// IDs first) and adds the synthetic input and output vertices.
///
/// For staged (FB) graphs a merge vertex is placed at each stage marker, fed
/// by every sink of the preceding stage and feeding every source of the next.
pub fn orient(g: &UndirectedGraph) -> Result<ArchDag> {
    g.validate()?;
    let disc = discovery_times(&g.adjacency());
    let inner: Vec<(usize, usize)> = g
        .edges
        .iter()
        .map(|&(u, v)| if disc[u] < disc[v] { (u, v) } else { (v, u) })
        .collect();

    if g.stage_markers.is_empty() {
        return Ok(ArchDag::augment(g.n, &inner)?.with_source(g.clone()));
    }

    let mut bounds = vec![0];
    bounds.extend_from_slice(&g.stage_markers);
    bounds.push(g.n);
    let mut indeg = vec![0usize; g.n];
    let mut outdeg = vec![0usize; g.n];
    for &(u, v) in &inner {
        outdeg[u] += 1;
        indeg[v] += 1;
    }
    let mut kinds = vec![VertexKind::Block; g.n];
    let mut edges = inner;
    for (i, w) in bounds.windows(3).enumerate() {
        let merge = g.n + i;
        kinds.push(VertexKind::Merge);
        edges.extend((w[0]..w[1]).filter(|&v| outdeg[v] == 0).map(|v| (v, merge)));
        edges.extend((w[1]..w[2]).filter(|&v| indeg[v] == 0).map(|v| (merge, v)));
    }
    Ok(ArchDag::augment_kinds(kinds, &edges)?.with_source(g.clone()))
}

/// Number of vertices on the longest input-to-output path.
///
/// The DAG is acyclic by construction (see [`ArchDag::new`]), so this cannot
/// fail; [`topological_order`] reports cycles in raw edge lists.
pub fn longest_path_length(d: &ArchDag) -> usize {
    d.depths()[d.output()] + 1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthWidthHistogram {
    /// `widths[depth]` = number of vertices at that longest-path depth.
    pub widths: Vec<usize>,
}

impl DepthWidthHistogram {
    pub fn total(&self) -> usize {
        self.widths.iter().sum()
    }

    pub fn max_width(&self) -> usize {
        self.widths.iter().copied().max().unwrap_or(0)
    }
}

pub fn depth_width_histogram(d: &ArchDag) -> DepthWidthHistogram {
    let depths = d.depths();
    let mut widths = vec![0; depths[d.output()] + 1];
    for &depth in &depths {
        widths[depth] += 1;
    }
    DepthWidthHistogram { widths }
}
