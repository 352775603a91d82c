//! Topologies, demand matrices and tunnel enumeration.

mod demand;
mod paths;
mod topology;

pub use demand::{generate_demands, DemandMatrix, Flow};
pub use paths::{k_shortest_paths, Path, PathSet};
pub use topology::{Arc, Link, NodeId, Topology};

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid network: {0}")]
    Validation(String),
    #[error("no path from {src} to {dst}")]
    Unreachable { src: String, dst: String },
}
