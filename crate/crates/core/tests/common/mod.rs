//! Strategies and property checks shared by the property suite and the
//! acceptance run.

#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use parwire::archmodel::{elaborate, ArchSpec, StagingConfig, StagingMode};
use parwire::dagify::{orient, topological_order, ArchDag, VertexKind};
use parwire::deploy::{
    critical_path_time, group_chains, place_greedy, run_schedule, simulate, vertex_units, CostParams, SimOptions,
    Workload,
};
use parwire::hypart::{partition, total_communication, Hypergraph, Partition};
use parwire::randgraph::{generate, GeneratorConfig, GeneratorKind, UndirectedGraph};
use parwire::score::{cs, ScoreWeights};

pub mod criteria;

pub const CASES: u32 = 1000;

pub fn config() -> Config {
    Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    }
}

/// Arbitrary simple graph on up to `max_n` vertices.
pub fn any_graph(max_n: usize) -> impl Strategy<Value = UndirectedGraph> {
    (0..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let len = pairs.len();
        proptest::collection::vec(any::<bool>(), len).prop_map(move |mask| {
            let edges = pairs.iter().zip(&mask).filter(|(_, &m)| m).map(|(&e, _)| e);
            UndirectedGraph::new(n, edges).expect("pairs are distinct")
        })
    })
}

pub fn any_kind() -> impl Strategy<Value = GeneratorKind> {
    prop::sample::select(GeneratorKind::ALL.to_vec())
}

pub fn any_mode() -> impl Strategy<Value = StagingMode> {
    prop::sample::select(vec![StagingMode::Uniform, StagingMode::Greedy, StagingMode::Probabilistic])
}

/// Preset generator with vertex count in `lo..=hi` (lo >= 15 keeps the FB stages valid).
pub fn any_generator(lo: usize, hi: usize) -> impl Strategy<Value = GeneratorConfig> {
    (any_kind(), lo..=hi, any::<u64>()).prop_map(|(k, n, seed)| GeneratorConfig::preset(k, n, seed))
}

pub fn any_spec(lo: usize, hi: usize) -> impl Strategy<Value = ArchSpec> {
    (any_generator(lo, hi), any_mode(), 32u32..=512).prop_map(|(g, mode, limit)| {
        let dag = orient(&generate(&g).unwrap()).unwrap();
        let cfg = StagingConfig {
            channel_limit: limit,
            ..StagingConfig::with_mode(mode)
        };
        elaborate(&dag, &cfg, g.seed).unwrap()
    })
}

/// Random hypergraph: weights, nets with 2+ distinct pins, costs.
pub fn any_hypergraph(lo: usize, hi: usize) -> impl Strategy<Value = Hypergraph> {
    (lo..=hi).prop_flat_map(|n| {
        let net = proptest::collection::btree_set(0..n, 2..=n.clamp(2, 5));
        (
            proptest::collection::vec(0u64..100, n),
            proptest::collection::vec((net, 1u64..1000), 1..=2 * n),
        )
            .prop_map(|(w, nets)| {
                let (pins, costs): (Vec<Vec<usize>>, Vec<u64>) =
                    nets.into_iter().map(|(s, c)| (s.into_iter().collect(), c)).unzip();
                Hypergraph::new(w, pins, costs).unwrap()
            })
    })
}

pub fn reachable(d: &ArchDag, from: usize, forward: bool) -> Vec<bool> {
    let mut seen = vec![false; d.n_vertices()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(v) = stack.pop() {
        let next = if forward { d.successors(v) } else { d.predecessors(v) };
        for &w in next {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

pub fn check_orientation(g: &UndirectedGraph) -> Result<(), TestCaseError> {
    let d = orient(g).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(topological_order(d.n_vertices(), d.edges()).is_ok());
    let sources: Vec<usize> = (0..d.n_vertices()).filter(|&v| d.predecessors(v).is_empty()).collect();
    let sinks: Vec<usize> = (0..d.n_vertices()).filter(|&v| d.successors(v).is_empty()).collect();
    prop_assert_eq!(sources, vec![d.input()]);
    prop_assert_eq!(sinks, vec![d.output()]);
    prop_assert!(reachable(&d, d.input(), true).iter().all(|&r| r));
    prop_assert!(reachable(&d, d.output(), false).iter().all(|&r| r));
    // every undirected edge appears once, pointing from the smaller DFS discovery time
    let blocks: BTreeSet<(usize, usize)> = d
        .edges()
        .iter()
        .filter(|&&(u, v)| d.kind(u) == VertexKind::Block && d.kind(v) == VertexKind::Block)
        .map(|&(u, v)| (u.min(v), u.max(v)))
        .collect();
    prop_assert_eq!(blocks.into_iter().collect::<Vec<_>>(), g.edges.clone());
    prop_assert_eq!(orient(g).unwrap(), d);
    Ok(())
}

pub fn check_shapes(spec: &ArchSpec) -> Result<(), TestCaseError> {
    let cfg = spec.config();
    for (v, b) in spec.blocks().iter().enumerate() {
        prop_assert!(b.spatial >= 1 && b.out_spatial >= 1 && b.channels >= 1);
        prop_assert!(b.channels <= cfg.channel_limit.max(cfg.input_channels));
        for i in &b.inputs {
            let producer = spec.block(i.from);
            prop_assert_eq!((i.spatial, i.channels), (producer.out_spatial, producer.channels));
            prop_assert_eq!(i.spatial >> i.pools, b.spatial, "vertex {} spatial after pooling", v);
            prop_assert_eq!(i.proj.unwrap_or(i.channels), b.in_channels, "vertex {} channels after projection", v);
        }
        if b.staged {
            prop_assert_eq!(b.out_spatial * 2, b.spatial);
        } else {
            prop_assert_eq!((b.out_spatial, b.channels), (b.spatial, b.in_channels));
        }
        if cfg.mode == StagingMode::Uniform {
            prop_assert!(!b.has_scaling());
            prop_assert_eq!(b.channels, cfg.input_channels);
        }
    }
    Ok(())
}

pub fn check_partition_coverage(h: &Hypergraph, k: usize, eps: f64, seed: u64) -> Result<(), TestCaseError> {
    let k = k.min(h.n_vertices());
    let p = partition(h, k, eps, seed).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(p.assignment().len(), h.n_vertices());
    let parts = p.parts();
    prop_assert_eq!(parts.len(), k);
    let mut seen = vec![0usize; h.n_vertices()];
    for part in &parts {
        prop_assert!(!part.is_empty());
        for &v in part {
            seen[v] += 1;
        }
    }
    prop_assert!(seen.iter().all(|&c| c == 1));
    let avg = h.total_weight() as f64 / k as f64;
    if !p.is_best_effort() {
        prop_assert!(p.part_weights().iter().all(|&w| w as f64 <= eps * avg + 1e-9));
    }
    // relabelling parts leaves the cut unchanged; merging two parts never raises it
    let lambda = total_communication(h, &p).unwrap();
    let shifted: Vec<usize> = p.assignment().iter().map(|&q| (q + 1) % k).collect();
    let relabelled = Partition::from_assignment(h, shifted, k, eps).unwrap();
    prop_assert_eq!(total_communication(h, &relabelled).unwrap(), lambda);
    if k >= 2 {
        let merged: Vec<usize> = p.assignment().iter().map(|&q| if q == k - 1 { 0 } else { q }).collect();
        let merged = Partition::from_assignment(h, merged, k - 1, f64::MAX).unwrap();
        prop_assert!(total_communication(h, &merged).unwrap() <= lambda);
    }
    Ok(())
}

pub fn any_cost() -> impl Strategy<Value = CostParams> {
    (1e6f64..1e10, 1e5f64..1e10, 0.0f64..1e-3).prop_map(|(f, b, l)| CostParams {
        flops_per_time: f,
        bytes_per_time: b,
        latency: l,
    })
}

pub fn check_simulation(
    spec: &ArchSpec,
    n: usize,
    cost: CostParams,
    include_gather: bool,
) -> Result<(), TestCaseError> {
    let w = Workload::from(spec);
    let g = group_chains(&w);
    let p = place_greedy(&g, n, false).unwrap();
    let opts = SimOptions { cost, include_gather };
    let r = simulate(&w, &g, &p, &opts).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let tol = 1e-9 * (1.0 + r.makespan());
    prop_assert!(r.makespan() + tol >= critical_path_time(&w, &cost));
    prop_assert!(r.schedule.busy.iter().all(|&b| r.makespan() + tol >= b));
    let serial: f64 = w.flops.iter().map(|&f| cost.compute_time(f)).sum();
    prop_assert!((r.single_unit_makespan - serial).abs() <= 1e-9 * (1.0 + serial));
    let one = run_schedule(&w, &vec![0; w.dag.n_vertices()], 1, &opts).unwrap();
    prop_assert!((one.makespan - serial).abs() <= 1e-9 * (1.0 + serial));
    for &(u, v) in w.dag.edges() {
        prop_assert!(r.schedule.start[v] + tol >= r.schedule.finish[u]);
    }
    let _ = vertex_units(&w, &g, &p).unwrap();
    Ok(())
}

/// Makespan never grows when the bandwidth grows.
pub fn check_bandwidth_monotone(spec: &ArchSpec, n: usize, cost: CostParams, factor: f64) -> Result<(), TestCaseError> {
    let w = Workload::from(spec);
    let g = group_chains(&w);
    let p = place_greedy(&g, n, false).unwrap();
    let slow = SimOptions { cost, include_gather: true };
    let fast = SimOptions {
        cost: CostParams {
            bytes_per_time: cost.bytes_per_time * factor,
            ..cost
        },
        include_gather: true,
    };
    let a = simulate(&w, &g, &p, &slow).unwrap().makespan();
    let b = simulate(&w, &g, &p, &fast).unwrap().makespan();
    prop_assert!(b <= a * (1.0 + 1e-12), "bandwidth x{} raised makespan {} -> {}", factor, a, b);
    Ok(())
}

pub fn check_groups(spec: &ArchSpec) -> Result<(), TestCaseError> {
    let w = Workload::from(spec);
    let d = &w.dag;
    let g = group_chains(&w);
    let mut seen = vec![0usize; d.n_vertices()];
    for grp in &g.groups {
        for pair in grp.windows(2) {
            prop_assert!(d.successors(pair[0]).contains(&pair[1]));
            prop_assert_eq!(d.successors(pair[0]).len(), 1);
            prop_assert_eq!(d.predecessors(pair[1]).len(), 1);
        }
        for &v in grp {
            seen[v] += 1;
        }
    }
    for v in 0..d.n_vertices() {
        let expect = usize::from(!d.kind(v).is_synthetic());
        prop_assert_eq!(seen[v], expect, "vertex {} covered {} times", v, seen[v]);
    }
    let edges: Vec<(usize, usize)> = g.group_edges.iter().map(|&(a, b, _)| (a, b)).collect();
    prop_assert!(edges.iter().all(|&(a, b)| a != b));
    prop_assert!(topological_order(g.n_groups(), &edges).is_ok());
    Ok(())
}

/// Strict monotonicity of CS in each factor.
pub fn check_cs_monotone(d: f64, l: f64, e: f64, bump: f64) -> Result<(), TestCaseError> {
    let w = ScoreWeights::default();
    let base = cs(d, l, e, &w);
    prop_assert!(cs(d * bump, l, e, &w) > base);
    prop_assert!(cs(d, l * bump, e, &w) > base);
    prop_assert!(cs(d, l, e * bump, &w) > base);
    Ok(())
}

/// Scaling every byte cost by `k` scales the cut and the minimum edge by `k`,
/// so the CS ranking of two architectures is unchanged.
pub fn check_cost_scaling(
    h1: &Hypergraph,
    h2: &Hypergraph,
    seed: u64,
    k: u64,
    eta: (f64, f64),
) -> Result<(), TestCaseError> {
    let w = ScoreWeights::default();
    let score = |h: &Hypergraph, scale: u64, eta: f64| {
        let scaled = Hypergraph::new(
            h.weights().to_vec(),
            (0..h.n_nets()).map(|j| h.pins(j).to_vec()).collect(),
            h.costs().iter().map(|&c| c * scale).collect(),
        )
        .unwrap();
        let p = partition(h, 2, 1.5, seed).unwrap();
        let same = Partition::from_assignment(&scaled, p.assignment().to_vec(), 2, 1.5).unwrap();
        let lambda = total_communication(&scaled, &same).unwrap();
        let u_c = scaled.costs().iter().copied().min().unwrap();
        (lambda, cs(parwire::hypart::load_imbalance(&same), lambda as f64 / (u_c as f64 * 2.0), eta, &w))
    };
    let (l1, a1) = score(h1, 1, eta.0);
    let (l2, a2) = score(h2, 1, eta.1);
    let (k1, b1) = score(h1, k, eta.0);
    let (k2, b2) = score(h2, k, eta.1);
    prop_assert_eq!(k1, l1 * k);
    prop_assert_eq!(k2, l2 * k);
    prop_assert_eq!(a1.partial_cmp(&a2), b1.partial_cmp(&b2));
    prop_assert!((a1 - b1).abs() <= 1e-9 * a1.max(1.0));
    Ok(())
}

/// Runs `check` over `CASES` inputs and reports the failure, if any.
pub fn run<S: Strategy>(strategy: S, check: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(config());
    runner.run(&strategy, check).map_err(|e| e.to_string())
}
