use std::hash::{Hash, Hasher};
use std::sync::Arc;

use sha2::{Digest, Sha256};

/// A concrete design with its metric vector. Identity is the hash of both.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub id: u64,
    pub params: Arc<Vec<f64>>,
    pub metrics: Arc<[f64]>,
}

impl Candidate {
    pub fn new(params: Vec<f64>, metrics: Vec<f64>) -> Self {
        let mut h = Sha256::new();
        for v in params.iter().chain(&metrics) {
            h.update(v.to_bits().to_le_bytes());
        }
        let digest = h.finalize();
        let id = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        Candidate { id, params: Arc::new(params), metrics: metrics.into() }
    }

    /// Candidate with no design parameters, identified by an explicit id.
    pub fn abstract_point(id: u64, metrics: Vec<f64>) -> Self {
        Candidate { id, params: Arc::new(Vec::new()), metrics: metrics.into() }
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Candidate {}

impl Hash for Candidate {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}
