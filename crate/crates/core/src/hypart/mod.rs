//! Hypergraph model of an architecture and a multilevel partitioner for it.

mod hmetis;
mod hypergraph;
mod multilevel;

pub use hmetis::{parse_hmetis, parse_partition, write_hmetis, write_partition};
pub use hypergraph::{build_hypergraph, load_imbalance, total_communication, Hypergraph, Partition};
pub(crate) use multilevel::partition_from_stream;
pub use multilevel::{partition, partition_with, refine, PartitionOptions};
