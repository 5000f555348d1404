use crate::archmodel::ArchSpec;
use crate::error::{Error, Result};

/// Vertex-weighted hypergraph with a cost per hyperedge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    weights: Vec<u64>,
    nets: Vec<Vec<usize>>,
    costs: Vec<u64>,
    incidence: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn new(weights: Vec<u64>, nets: Vec<Vec<usize>>, costs: Vec<u64>) -> Result<Self> {
        if nets.len() != costs.len() {
            return Err(Error::invariant(format!(
                "{} hyperedges but {} costs",
                nets.len(),
                costs.len()
            )));
        }
        let n = weights.len();
        let mut incidence = vec![Vec::new(); n];
        for (j, pins) in nets.iter().enumerate() {
            if pins.len() < 2 {
                return Err(Error::invariant(format!("hyperedge {j} has fewer than two pins")));
            }
            for (i, &v) in pins.iter().enumerate() {
                if v >= n {
                    return Err(Error::invariant(format!("hyperedge {j} references unknown vertex {v}")));
                }
                if pins[..i].contains(&v) {
                    return Err(Error::invariant(format!("hyperedge {j} repeats vertex {v}")));
                }
                incidence[v].push(j);
            }
        }
        Ok(Hypergraph {
            weights,
            nets,
            costs,
            incidence,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.weights.len()
    }

    pub fn n_nets(&self) -> usize {
        self.nets.len()
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn weight(&self, v: usize) -> u64 {
        self.weights[v]
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    pub fn pins(&self, net: usize) -> &[usize] {
        &self.nets[net]
    }

    pub fn cost(&self, net: usize) -> u64 {
        self.costs[net]
    }

    pub fn costs(&self) -> &[u64] {
        &self.costs
    }

    /// Hyperedges containing `v`.
    pub fn nets_of(&self, v: usize) -> &[usize] {
        &self.incidence[v]
    }
}

/// One hyperedge per vertex with successors, spanning the producer and all of
/// its consumers and costing the producer's output bytes. Vertex weights are
/// block FLOPs (zero for the synthetic input and output).
pub fn build_hypergraph(spec: &ArchSpec) -> Hypergraph {
    let dag = spec.dag();
    let bytes = spec.vertex_out_bytes();
    let mut nets = Vec::new();
    let mut costs = Vec::new();
    for v in 0..dag.n_vertices() {
        let succ = dag.successors(v);
        if succ.is_empty() {
            continue;
        }
        let mut pins = Vec::with_capacity(succ.len() + 1);
        pins.push(v);
        pins.extend_from_slice(succ);
        nets.push(pins);
        costs.push(bytes[v]);
    }
    Hypergraph::new(spec.vertex_flops().to_vec(), nets, costs).expect("DAG hyperedges are well-formed")
}

/// A P-way assignment of hypergraph vertices to parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assignment: Vec<usize>,
    n_parts: usize,
    part_weights: Vec<u64>,
    epsilon: f64,
    best_effort: bool,
}

impl Partition {
    /// Checks coverage and non-empty parts, and records whether the balance
    /// bound `W_p <= epsilon * W_avg` holds.
    pub fn from_assignment(h: &Hypergraph, assignment: Vec<usize>, n_parts: usize, epsilon: f64) -> Result<Self> {
        if assignment.len() != h.n_vertices() {
            return Err(Error::invariant(format!(
                "assignment covers {} vertices, hypergraph has {}",
                assignment.len(),
                h.n_vertices()
            )));
        }
        let mut part_weights = vec![0u64; n_parts];
        let mut sizes = vec![0usize; n_parts];
        for (v, &p) in assignment.iter().enumerate() {
            if p >= n_parts {
                return Err(Error::invariant(format!("vertex {v} assigned to part {p} of {n_parts}")));
            }
            part_weights[p] += h.weight(v);
            sizes[p] += 1;
        }
        if let Some(p) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::invariant(format!("part {p} is empty")));
        }
        let limit = balance_limit(h.total_weight(), n_parts, epsilon);
        let best_effort = part_weights.iter().any(|&w| w > limit);
        Ok(Partition {
            assignment,
            n_parts,
            part_weights,
            epsilon,
            best_effort,
        })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn part_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn n_parts(&self) -> usize {
        self.n_parts
    }

    pub fn part_weights(&self) -> &[u64] {
        &self.part_weights
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The balance bound could not be met.
    pub fn is_best_effort(&self) -> bool {
        self.best_effort
    }

    pub fn parts(&self) -> Vec<Vec<usize>> {
        let mut parts = vec![Vec::new(); self.n_parts];
        for (v, &p) in self.assignment.iter().enumerate() {
            parts[p].push(v);
        }
        parts
    }
}

/// Largest admissible part weight, `floor(epsilon * total / n_parts)`.
pub(crate) fn balance_limit(total: u64, n_parts: usize, epsilon: f64) -> u64 {
    let exact = epsilon * total as f64 / n_parts as f64;
    (exact + exact.abs() * 1e-12).floor() as u64
}

/// Connectivity-minus-one cut cost: sum over hyperedges of `cost * (parts - 1)`.
pub fn total_communication(h: &Hypergraph, p: &Partition) -> Result<u64> {
    if p.assignment.len() != h.n_vertices() {
        return Err(Error::invariant("partition does not match the hypergraph"));
    }
    let mut seen = vec![usize::MAX; p.n_parts];
    let mut total = 0;
    for j in 0..h.n_nets() {
        let mut connectivity = 0u64;
        for &v in h.pins(j) {
            let part = p.assignment[v];
            if seen[part] != j {
                seen[part] = j;
                connectivity += 1;
            }
        }
        total += h.cost(j) * (connectivity - 1);
    }
    Ok(total)
}

/// `max_p W_p / W_avg`; 1 when the total weight is zero.
pub fn load_imbalance(p: &Partition) -> f64 {
    let total: u64 = p.part_weights.iter().sum();
    if total == 0 {
        return 1.0;
    }
    let avg = total as f64 / p.n_parts as f64;
    *p.part_weights.iter().max().expect("at least one part") as f64 / avg
}
