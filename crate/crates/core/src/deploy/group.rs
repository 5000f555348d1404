use std::collections::BTreeMap;

use serde::Serialize;

use super::Workload;

/// Blocks contracted along sequential paths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupedDag {
    /// Each group lists its vertices in path order.
    pub groups: Vec<Vec<usize>>,
    pub group_weights: Vec<u64>,
    /// `(from_group, to_group, bytes)`, one entry per connected pair, bytes summed.
    pub group_edges: Vec<(usize, usize, u64)>,
    #[serde(skip)]
    group_of: Vec<Option<usize>>,
}

impl GroupedDag {
    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// `None` for the synthetic input and output.
    pub fn group_of(&self, v: usize) -> Option<usize> {
        self.group_of[v]
    }
}

/// Merges `v -> w` whenever `v` has out-degree 1 and `w` in-degree 1 (both
/// non-synthetic). Groups are ordered by the topological position of their
/// first vertex.
pub fn group_chains(w: &Workload) -> GroupedDag {
    let dag = &w.dag;
    let n = dag.n_vertices();
    let real = |v: usize| !dag.kind(v).is_synthetic();
    let joins_next = |v: usize| -> Option<usize> {
        match dag.successors(v) {
            [s] if real(v) && real(*s) && dag.predecessors(*s).len() == 1 => Some(*s),
            _ => None,
        }
    };
    let mut has_prev = vec![false; n];
    for v in 0..n {
        if let Some(s) = joins_next(v) {
            has_prev[s] = true;
        }
    }
    let mut groups = Vec::new();
    let mut group_of = vec![None; n];
    for &head in dag.topo_order() {
        if !real(head) || has_prev[head] {
            continue;
        }
        let mut path = vec![head];
        let mut v = head;
        while let Some(s) = joins_next(v) {
            path.push(s);
            v = s;
        }
        for &x in &path {
            group_of[x] = Some(groups.len());
        }
        groups.push(path);
    }
    let group_weights = groups.iter().map(|g| g.iter().map(|&v| w.flops[v]).sum()).collect();
    let mut edges: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for &(u, v) in dag.edges() {
        if let (Some(a), Some(b)) = (group_of[u], group_of[v]) {
            if a != b {
                *edges.entry((a, b)).or_default() += w.out_bytes[u];
            }
        }
    }
    GroupedDag {
        groups,
        group_weights,
        group_edges: edges.into_iter().map(|((a, b), c)| (a, b, c)).collect(),
        group_of,
    }
}
