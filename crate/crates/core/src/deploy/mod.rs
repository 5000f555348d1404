//! Chain grouping, greedy placement and latency simulation.

mod group;
mod place;
mod sim;

pub use group::{group_chains, GroupedDag};
pub use place::{balance_entropy, entropy_of_loads, place_greedy, Placement};
pub use sim::{
    critical_path_time, run_schedule, simulate, vertex_units, CostParams, EventKind, Schedule, SimOptions,
    SimResult, TraceEvent, Transfer,
};

use crate::archmodel::ArchSpec;
use crate::dagify::ArchDag;
use crate::error::{Error, Result};

/// What the simulator needs to know about an architecture: its DAG, per-vertex
/// FLOPs and the bytes each vertex sends to a consumer.
#[derive(Debug, Clone)]
pub struct Workload {
    pub dag: ArchDag,
    pub flops: Vec<u64>,
    pub out_bytes: Vec<u64>,
}

impl Workload {
    pub fn new(dag: ArchDag, flops: Vec<u64>, out_bytes: Vec<u64>) -> Result<Self> {
        let n = dag.n_vertices();
        if flops.len() != n || out_bytes.len() != n {
            return Err(Error::invariant(format!(
                "{} flops and {} byte entries for {n} vertices",
                flops.len(),
                out_bytes.len()
            )));
        }
        Ok(Workload { dag, flops, out_bytes })
    }
}

impl From<&ArchSpec> for Workload {
    fn from(spec: &ArchSpec) -> Self {
        Workload {
            dag: spec.dag().clone(),
            flops: spec.vertex_flops().to_vec(),
            out_bytes: spec.vertex_out_bytes(),
        }
    }
}
