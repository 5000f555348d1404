//! Multilevel P-way partitioner on the connectivity-minus-one objective.
//!
//! 1. Coarsen by heavy-connectivity matching until the hypergraph is small.
//! 2. Build several seeded greedy assignments at the coarsest level, refine
//!    each, keep the best.
//! 3. Project back level by level, refining with k-way FM passes.
//!
//! Every comparison of two states is lexicographic on (overload, cut), where
//! overload is the total weight above the balance limit. A balanced state
//! therefore always beats an unbalanced one.

use rand::seq::SliceRandom;

use super::hypergraph::{balance_limit, Hypergraph, Partition};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone)]
pub struct PartitionOptions {
    /// Greedy starts tried at the coarsest level.
    pub initial_tries: usize,
    /// Refinement stops after a pass without improvement or after this many passes.
    pub max_passes: usize,
    /// Coarsening stops once at most `max(coarsen_per_part * P, 16)` vertices remain.
    pub coarsen_per_part: usize,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        PartitionOptions {
            initial_tries: 8,
            max_passes: 20,
            coarsen_per_part: 3,
        }
    }
}

/// Partitions `h` into `n_parts` parts with `W_p <= epsilon * W_avg`.
///
/// When no balanced partition is found the least-overloaded one is returned
/// with [`Partition::is_best_effort`] set.
pub fn partition(h: &Hypergraph, n_parts: usize, epsilon: f64, seed: u64) -> Result<Partition> {
    partition_with(h, n_parts, epsilon, seed, &PartitionOptions::default())
}

pub fn partition_with(
    h: &Hypergraph,
    n_parts: usize,
    epsilon: f64,
    seed: u64,
    opts: &PartitionOptions,
) -> Result<Partition> {
    partition_from_stream(h, n_parts, epsilon, &mut rng::stream(seed, rng::PARTITION), opts)
}

/// [`partition_with`] drawing from a caller-chosen stream.
pub(crate) fn partition_from_stream(
    h: &Hypergraph,
    n_parts: usize,
    epsilon: f64,
    rng: &mut rng::Rng,
    opts: &PartitionOptions,
) -> Result<Partition> {
    if n_parts == 0 || n_parts > h.n_vertices() {
        return Err(Error::config(format!(
            "cannot split {} vertices into {n_parts} non-empty parts",
            h.n_vertices()
        )));
    }
    if !(epsilon >= 1.0) || !epsilon.is_finite() {
        return Err(Error::config(format!("imbalance bound {epsilon} must be a finite value >= 1")));
    }
    if n_parts == 1 {
        return Partition::from_assignment(h, vec![0; h.n_vertices()], 1, epsilon);
    }
    let limit = balance_limit(h.total_weight(), n_parts, epsilon);

    let target = (opts.coarsen_per_part * n_parts).max(16);
    let max_cluster = (h.total_weight() / (2 * n_parts as u64)).max(1);
    let mut levels: Vec<Hypergraph> = vec![h.clone()];
    let mut maps: Vec<Vec<usize>> = Vec::new();
    while levels.last().unwrap().n_vertices() > target {
        let fine = levels.last().unwrap();
        let (coarse, map) = coarsen(fine, max_cluster, rng);
        if coarse.n_vertices() * 10 > fine.n_vertices() * 9 || coarse.n_vertices() < n_parts {
            break;
        }
        levels.push(coarse);
        maps.push(map);
    }

    let coarsest = levels.last().unwrap();
    let mut best: Option<(Vec<usize>, (u64, u64))> = None;
    for t in 0..opts.initial_tries.max(1) {
        let start = greedy_assignment(coarsest, n_parts, limit, t % 2 == 0, rng);
        let mut r = Refiner::new(coarsest, n_parts, limit, start);
        r.run(opts.max_passes);
        let score = r.score();
        if best.as_ref().is_none_or(|(_, s)| score < *s) {
            best = Some((r.part, score));
        }
    }
    let mut assignment = best.expect("at least one initial try").0;

    for level in (0..maps.len()).rev() {
        let fine = &levels[level];
        let map = &maps[level];
        let projected: Vec<usize> = (0..fine.n_vertices()).map(|v| assignment[map[v]]).collect();
        let mut r = Refiner::new(fine, n_parts, limit, projected);
        r.run(opts.max_passes);
        assignment = r.part;
    }
    Partition::from_assignment(h, assignment, n_parts, epsilon)
}

/// Runs FM passes on `assignment` in place and returns the cut after the
/// starting state and after every pass.
pub fn refine(
    h: &Hypergraph,
    assignment: &mut Vec<usize>,
    n_parts: usize,
    epsilon: f64,
    max_passes: usize,
) -> Result<Vec<u64>> {
    Partition::from_assignment(h, assignment.clone(), n_parts, epsilon)?;
    let limit = balance_limit(h.total_weight(), n_parts, epsilon);
    let mut r = Refiner::new(h, n_parts, limit, std::mem::take(assignment));
    let trace = r.run(max_passes);
    *assignment = r.part;
    Ok(trace)
}

/// Heavy-connectivity matching: each unmatched vertex (random order) pairs
/// with the unmatched neighbor sharing the most `cost / (|e| - 1)`.
fn coarsen(h: &Hypergraph, max_cluster: u64, rng: &mut rng::Rng) -> (Hypergraph, Vec<usize>) {
    let n = h.n_vertices();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut map = vec![usize::MAX; n];
    let mut rating = vec![0.0f64; n];
    let mut touched = Vec::new();
    let mut next = 0;
    for &v in &order {
        if map[v] != usize::MAX {
            continue;
        }
        for &e in h.nets_of(v) {
            let pins = h.pins(e);
            let r = h.cost(e) as f64 / (pins.len() - 1) as f64;
            for &u in pins {
                if u != v && map[u] == usize::MAX && h.weight(u) + h.weight(v) <= max_cluster {
                    if rating[u] == 0.0 {
                        touched.push(u);
                    }
                    rating[u] += r.max(f64::MIN_POSITIVE);
                }
            }
        }
        let mate = touched
            .iter()
            .copied()
            .max_by(|&a, &b| rating[a].total_cmp(&rating[b]).then(b.cmp(&a)));
        for &u in &touched {
            rating[u] = 0.0;
        }
        touched.clear();
        map[v] = next;
        if let Some(u) = mate {
            map[u] = next;
        }
        next += 1;
    }

    let mut weights = vec![0u64; next];
    for v in 0..n {
        weights[map[v]] += h.weight(v);
    }
    let mut nets = Vec::new();
    let mut costs = Vec::new();
    for e in 0..h.n_nets() {
        let mut pins: Vec<usize> = h.pins(e).iter().map(|&v| map[v]).collect();
        pins.sort_unstable();
        pins.dedup();
        if pins.len() >= 2 {
            nets.push(pins);
            costs.push(h.cost(e));
        }
    }
    let coarse = Hypergraph::new(weights, nets, costs).expect("contracted hyperedges stay well-formed");
    (coarse, map)
}

/// Seeds one vertex per part, then places each remaining vertex in the
/// non-overflowing part it is most connected to (lightest on ties).
fn greedy_assignment(h: &Hypergraph, k: usize, limit: u64, by_weight: bool, rng: &mut rng::Rng) -> Vec<usize> {
    let n = h.n_vertices();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    if by_weight {
        order.sort_by_key(|&v| std::cmp::Reverse(h.weight(v)));
    }
    let mut part = vec![usize::MAX; n];
    let mut pw = vec![0u64; k];
    let mut affinity = vec![0u64; k];
    let mut mark = vec![usize::MAX; k];
    for (i, &v) in order.iter().enumerate() {
        let w = h.weight(v);
        let p = if i < k {
            i
        } else {
            affinity.iter_mut().for_each(|a| *a = 0);
            for &e in h.nets_of(v) {
                for &u in h.pins(e) {
                    let q = part[u];
                    if q != usize::MAX && mark[q] != e {
                        mark[q] = e;
                        affinity[q] += h.cost(e);
                    }
                }
            }
            (0..k)
                .min_by_key(|&q| (pw[q] + w > limit, std::cmp::Reverse(affinity[q]), pw[q], q))
                .expect("k >= 1")
        };
        part[v] = p;
        pw[p] += w;
    }
    part
}

type MoveKey = (u8, i64, i64, usize, usize);

struct Refiner<'a> {
    h: &'a Hypergraph,
    k: usize,
    limit: u64,
    part: Vec<usize>,
    pw: Vec<u64>,
    size: Vec<usize>,
    /// `cnt[e * k + p]` = pins of net `e` in part `p`.
    cnt: Vec<u32>,
    cut: u64,
}

impl<'a> Refiner<'a> {
    fn new(h: &'a Hypergraph, k: usize, limit: u64, part: Vec<usize>) -> Self {
        let mut pw = vec![0u64; k];
        let mut size = vec![0usize; k];
        for (v, &p) in part.iter().enumerate() {
            pw[p] += h.weight(v);
            size[p] += 1;
        }
        let mut cnt = vec![0u32; h.n_nets() * k];
        let mut cut = 0;
        for e in 0..h.n_nets() {
            let row = &mut cnt[e * k..(e + 1) * k];
            for &v in h.pins(e) {
                row[part[v]] += 1;
            }
            let conn = row.iter().filter(|&&c| c > 0).count() as u64;
            cut += h.cost(e) * (conn - 1);
        }
        Refiner {
            h,
            k,
            limit,
            part,
            pw,
            size,
            cnt,
            cut,
        }
    }

    fn overload(&self) -> u64 {
        self.pw.iter().map(|&w| w.saturating_sub(self.limit)).sum()
    }

    fn score(&self) -> (u64, u64) {
        (self.overload(), self.cut)
    }

    fn move_vertex(&mut self, v: usize, to: usize) {
        let from = self.part[v];
        let k = self.k;
        for &e in self.h.nets_of(v) {
            let c = self.h.cost(e);
            let row = &mut self.cnt[e * k..(e + 1) * k];
            row[from] -= 1;
            if row[from] == 0 {
                self.cut -= c;
            }
            if row[to] == 0 {
                self.cut += c;
            }
            row[to] += 1;
        }
        let w = self.h.weight(v);
        self.pw[from] -= w;
        self.pw[to] += w;
        self.size[from] -= 1;
        self.size[to] += 1;
        self.part[v] = to;
    }

    /// Best move of an unlocked vertex. Moves that keep the overload from
    /// growing rank first (by overload change, then cut change); the rest only
    /// run when nothing else is left, which lets a pass swap vertices across
    /// a tight balance limit.
    fn best_move(&self, locked: &[bool], penalty: &mut [u64]) -> Option<MoveKey> {
        let k = self.k;
        let mut best: Option<MoveKey> = None;
        for v in 0..self.part.len() {
            let from = self.part[v];
            if locked[v] || self.size[from] == 1 {
                continue;
            }
            let mut base = 0u64;
            penalty.iter_mut().for_each(|p| *p = 0);
            for &e in self.h.nets_of(v) {
                let c = self.h.cost(e);
                let row = &self.cnt[e * k..(e + 1) * k];
                if row[from] == 1 {
                    base += c;
                }
                for (q, &n) in row.iter().enumerate() {
                    if n == 0 {
                        penalty[q] += c;
                    }
                }
            }
            let w = self.h.weight(v);
            let over = |x: u64| x.saturating_sub(self.limit) as i64;
            let from_delta = over(self.pw[from] - w) - over(self.pw[from]);
            for to in 0..k {
                if to == from {
                    continue;
                }
                let d_over = from_delta + over(self.pw[to] + w) - over(self.pw[to]);
                let loss = penalty[to] as i64 - base as i64;
                let key = if d_over > 0 {
                    (1, loss, d_over, v, to)
                } else {
                    (0, d_over, loss, v, to)
                };
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
        best
    }

    /// One FM pass with rollback to the best prefix. Returns whether the
    /// state improved.
    fn pass(&mut self) -> bool {
        let n = self.part.len();
        let start = self.score();
        let mut best = start;
        let mut best_len = 0;
        let mut locked = vec![false; n];
        let mut moves: Vec<(usize, usize)> = Vec::new();
        let mut penalty = vec![0u64; self.k];
        while let Some((_, _, _, v, to)) = self.best_move(&locked, &mut penalty) {
            moves.push((v, self.part[v]));
            self.move_vertex(v, to);
            locked[v] = true;
            let s = self.score();
            if s < best {
                best = s;
                best_len = moves.len();
            }
        }
        for &(v, from) in moves[best_len..].iter().rev() {
            self.move_vertex(v, from);
        }
        best < start
    }

    fn run(&mut self, max_passes: usize) -> Vec<u64> {
        let mut trace = vec![self.cut];
        for _ in 0..max_passes {
            let improved = self.pass();
            trace.push(self.cut);
            if !improved {
                break;
            }
        }
        trace
    }
}
