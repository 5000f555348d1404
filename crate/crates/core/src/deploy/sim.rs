//! Discrete-event model of one distributed inference.
//!
//! Each unit runs its vertices one at a time in `(depth, id)` order, starting
//! the next one as soon as its inputs are in. A finished vertex sends one message per remote unit that
//! hosts a consumer; messages between a pair of units share one FIFO link.
//! The input is broadcast for free, so its consumers start ready.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::group::GroupedDag;
use super::place::Placement;
use super::Workload;
use crate::error::{Error, Result};

/// Throughput per unit, bandwidth per link and a fixed per-message latency,
/// all in the same abstract time unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub flops_per_time: f64,
    pub bytes_per_time: f64,
    pub latency: f64,
}

impl Default for CostParams {
    /// Seconds: 1 GFLOP/s units, links where a 32x32x16 float map takes
    /// about ten average block computations, 100 microseconds per message.
    fn default() -> Self {
        CostParams {
            flops_per_time: 1e9,
            bytes_per_time: 16.0e6,
            latency: 1e-4,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.flops_per_time > 0.0) || !(self.bytes_per_time > 0.0) {
            return Err(Error::config("throughput and bandwidth must be positive"));
        }
        if !(self.latency >= 0.0) || !self.latency.is_finite() {
            return Err(Error::config("latency must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn compute_time(&self, flops: u64) -> f64 {
        flops as f64 / self.flops_per_time
    }

    pub fn transfer_time(&self, bytes: u64) -> f64 {
        self.latency + bytes as f64 / self.bytes_per_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Start,
    Finish,
    Send,
    Arrive,
}

impl EventKind {
    fn name(self) -> &'static str {
        match self {
            EventKind::Start => "start",
            EventKind::Finish => "finish",
            EventKind::Send => "send",
            EventKind::Arrive => "arrive",
        }
    }
}

/// `unit` executes (start/finish) or sends/receives (`peer` is the other end).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: f64,
    pub unit: usize,
    pub kind: EventKind,
    pub vertex: usize,
    pub peer: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transfer {
    pub producer: usize,
    pub from_unit: usize,
    pub to_unit: usize,
    pub bytes: u64,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub makespan: f64,
    pub busy: Vec<f64>,
    pub start: Vec<f64>,
    pub finish: Vec<f64>,
    pub transfers: Vec<Transfer>,
    pub trace: Vec<TraceEvent>,
}

impl Schedule {
    /// `time,unit,event,vertex,peer`
    pub fn trace_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["time", "unit", "event", "vertex", "peer"]).expect("in-memory write");
        for e in &self.trace {
            w.write_record([
                e.time.to_string(),
                e.unit.to_string(),
                e.kind.name().to_string(),
                e.vertex.to_string(),
                e.peer.map(|p| p.to_string()).unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub schedule: Schedule,
    pub single_unit_makespan: f64,
}

impl SimResult {
    pub fn makespan(&self) -> f64 {
        self.schedule.makespan
    }

    pub fn speedup(&self) -> f64 {
        self.single_unit_makespan / self.schedule.makespan
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub cost: CostParams,
    /// Count the final gather on the merge unit in the makespan.
    pub include_gather: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            cost: CostParams::default(),
            include_gather: true,
        }
    }
}

/// Unit of every vertex under a placement; input and output sit on the merge unit.
pub fn vertex_units(w: &Workload, g: &GroupedDag, p: &Placement) -> Result<Vec<usize>> {
    (0..w.dag.n_vertices())
        .map(|v| match g.group_of(v) {
            Some(grp) => p.unit_of_group.get(grp).copied().ok_or(Error::Unplaced(v)),
            None if w.dag.kind(v).is_synthetic() => Ok(p.merge_unit),
            None => Err(Error::Unplaced(v)),
        })
        .collect()
}

/// Simulates the placement and the same workload on a single unit.
pub fn simulate(w: &Workload, g: &GroupedDag, p: &Placement, opts: &SimOptions) -> Result<SimResult> {
    let units = vertex_units(w, g, p)?;
    let schedule = run_schedule(w, &units, p.total_units(), opts)?;
    let single = run_schedule(w, &vec![0; units.len()], 1, opts)?;
    Ok(SimResult {
        schedule,
        single_unit_makespan: single.makespan,
    })
}

#[derive(Debug, Clone, Copy)]
enum Pending {
    Done { v: usize, unit: usize },
    Arrive { v: usize, to: usize },
}

struct Event {
    time: f64,
    seq: u64,
    what: Pending,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // min-heap on (time, seq)
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.seq.cmp(&self.seq))
    }
}

/// Event loop over an explicit vertex-to-unit map. The input vertex's entry
/// is ignored.
pub fn run_schedule(w: &Workload, unit_of: &[usize], n_units: usize, opts: &SimOptions) -> Result<Schedule> {
    opts.cost.validate()?;
    let dag = &w.dag;
    let n = dag.n_vertices();
    if unit_of.len() != n {
        return Err(Error::invariant(format!("{} unit entries for {n} vertices", unit_of.len())));
    }
    let input = dag.input();
    if let Some(v) = (0..n).find(|&v| v != input && unit_of[v] >= n_units) {
        return Err(Error::Unplaced(v));
    }
    let cost = &opts.cost;
    let depth = dag.depths();
    let mut pending: Vec<usize> = (0..n).map(|v| dag.predecessors(v).len()).collect();
    // fixed per-unit execution order by (depth, id); a unit waits for its next
    // vertex rather than jumping ahead, which keeps the makespan monotone in
    // every compute and transfer time
    let mut queue: Vec<Vec<usize>> = vec![Vec::new(); n_units];
    let mut by_depth: Vec<usize> = (0..n).filter(|&v| v != input).collect();
    by_depth.sort_by_key(|&v| (depth[v], v));
    for v in by_depth {
        queue[unit_of[v]].push(v);
    }
    let mut next = vec![0usize; n_units];
    let mut idle = vec![true; n_units];
    let mut link_free = vec![0.0f64; n_units * n_units];
    let mut start = vec![0.0f64; n];
    let mut finish = vec![0.0f64; n];
    let mut busy = vec![0.0f64; n_units];
    let mut transfers = Vec::new();
    let mut trace = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut done = 1usize;

    for &s in dag.successors(input) {
        pending[s] -= 1;
    }
    let mut now = 0.0f64;
    loop {
        for u in 0..n_units {
            if idle[u] {
                if let Some(&v) = queue[u].get(next[u]).filter(|&&v| pending[v] == 0) {
                    next[u] += 1;
                    idle[u] = false;
                    let dur = cost.compute_time(w.flops[v]);
                    start[v] = now;
                    busy[u] += dur;
                    trace.push(TraceEvent {
                        time: now,
                        unit: u,
                        kind: EventKind::Start,
                        vertex: v,
                        peer: None,
                    });
                    heap.push(Event {
                        time: now + dur,
                        seq,
                        what: Pending::Done { v, unit: u },
                    });
                    seq += 1;
                }
            }
        }
        let Some(first) = heap.pop() else { break };
        now = first.time;
        let mut batch = vec![first];
        while heap.peek().is_some_and(|e| e.time == now) {
            batch.push(heap.pop().expect("peeked"));
        }
        for ev in batch {
            match ev.what {
                Pending::Done { v, unit } => {
                    idle[unit] = true;
                    finish[v] = now;
                    done += 1;
                    trace.push(TraceEvent {
                        time: now,
                        unit,
                        kind: EventKind::Finish,
                        vertex: v,
                        peer: None,
                    });
                    let mut remote = BTreeSet::new();
                    for &s in dag.successors(v) {
                        if unit_of[s] == unit {
                            pending[s] -= 1;
                        } else {
                            remote.insert(unit_of[s]);
                        }
                    }
                    for to in remote {
                        let link = &mut link_free[unit * n_units + to];
                        let t0 = now.max(*link);
                        let t1 = t0 + cost.transfer_time(w.out_bytes[v]);
                        *link = t1;
                        transfers.push(Transfer {
                            producer: v,
                            from_unit: unit,
                            to_unit: to,
                            bytes: w.out_bytes[v],
                            start: t0,
                            end: t1,
                        });
                        trace.push(TraceEvent {
                            time: t0,
                            unit,
                            kind: EventKind::Send,
                            vertex: v,
                            peer: Some(to),
                        });
                        heap.push(Event {
                            time: t1,
                            seq,
                            what: Pending::Arrive { v, to },
                        });
                        seq += 1;
                    }
                }
                Pending::Arrive { v, to } => {
                    trace.push(TraceEvent {
                        time: now,
                        unit: to,
                        kind: EventKind::Arrive,
                        vertex: v,
                        peer: Some(unit_of[v]),
                    });
                    for &s in dag.successors(v) {
                        if unit_of[s] == to {
                            pending[s] -= 1;
                        }
                    }
                }
            }
        }
    }
    if done != n {
        return Err(Error::invariant(format!("simulation stalled with {} vertices unfinished", n - done)));
    }
    let output = dag.output();
    let makespan = if opts.include_gather {
        finish[output]
    } else {
        (0..n)
            .filter(|&v| !dag.kind(v).is_synthetic())
            .map(|v| finish[v])
            .fold(0.0, f64::max)
    };
    Ok(Schedule {
        makespan,
        busy,
        start,
        finish,
        transfers,
        trace,
    })
}

/// Longest path weighted by compute time: no schedule can beat it.
pub fn critical_path_time(w: &Workload, cost: &CostParams) -> f64 {
    let mut t = vec![0.0f64; w.dag.n_vertices()];
    for &v in w.dag.topo_order() {
        let ready = w.dag.predecessors(v).iter().map(|&u| t[u]).fold(0.0, f64::max);
        t[v] = ready + cost.compute_time(w.flops[v]);
    }
    t[w.dag.output()]
}
