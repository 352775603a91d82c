use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::prefer;
use crate::scenario::{Candidate, ObjectiveInstance, Scenario, ScenarioError, ScenarioSpec};

#[derive(Debug, thiserror::Error)]
pub enum PoolError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed pool file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid pool: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone)]
pub struct PoolPair {
    pub objective: ObjectiveInstance,
    pub candidate: Candidate,
}

/// Precomputed objective/design pairs for one scenario. Every objective is
/// paired with its best design among all designs in the pool.
#[derive(Debug, Clone)]
pub struct Pool {
    pub scenario: ScenarioSpec,
    pub seed: u64,
    pub pairs: Vec<PoolPair>,
}

#[derive(Serialize, Deserialize)]
struct PairRecord {
    objective: ObjectiveInstance,
    params: Vec<f64>,
    metrics: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PoolRecord {
    scenario: ScenarioSpec,
    seed: u64,
    pairs: Vec<PairRecord>,
}

/// Deterministic per-pair generator, independent of how pairs are scheduled.
fn pair_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Samples `size` objectives and solves each one. Work is spread over the
/// available cores; the result depends only on the scenario, size and seed.
pub fn build_pool(s: &Scenario, size: usize, seed: u64) -> Result<Pool, PoolError> {
    if size == 0 {
        return Err(PoolError::Invalid("pool size must be at least 1".into()));
    }
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(size);
    let solve_one = |i: usize| -> Result<PoolPair, ScenarioError> {
        let mut rng = pair_rng(seed, i);
        let objective = s.sample_objective(&mut rng)?;
        let candidate = s.improve_with(&objective, None, &mut rng)?;
        Ok(PoolPair { objective, candidate })
    };
    let mut slots: Vec<Option<Result<PoolPair, ScenarioError>>> = (0..size).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunk = size.div_ceil(workers);
        for (w, part) in slots.chunks_mut(chunk).enumerate() {
            let solve_one = &solve_one;
            scope.spawn(move || {
                for (k, slot) in part.iter_mut().enumerate() {
                    *slot = Some(solve_one(w * chunk + k));
                }
            });
        }
    });
    let mut pairs = Vec::with_capacity(size);
    for slot in slots {
        pairs.push(slot.expect("every slot is filled")?);
    }
    let mut pool = Pool { scenario: s.spec(), seed, pairs };
    pool.remap_to_pool_best();
    Ok(pool)
}

impl Pool {
    /// Points every objective at its best design among all pool designs.
    pub fn remap_to_pool_best(&mut self) {
        let cands: Vec<Candidate> = self.pairs.iter().map(|p| p.candidate.clone()).collect();
        for p in &mut self.pairs {
            let mut best = &p.candidate;
            for c in &cands {
                if prefer(&p.objective, c, best) == std::cmp::Ordering::Greater {
                    best = c;
                }
            }
            p.candidate = best.clone();
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn build_scenario(&self) -> Result<Scenario, PoolError> {
        Ok(Scenario::from_spec(&self.scenario)?)
    }

    /// Pairs as a plain list for candidate sources.
    pub fn pair_list(&self) -> Vec<(ObjectiveInstance, Candidate)> {
        self.pairs.iter().map(|p| (p.objective.clone(), p.candidate.clone())).collect()
    }

    /// The design of every pair, repeated where pairs share a design.
    pub fn designs(&self) -> Vec<Candidate> {
        self.pairs.iter().map(|p| p.candidate.clone()).collect()
    }

    /// Distinct designs in the pool.
    pub fn candidates(&self) -> Vec<Candidate> {
        let mut seen = std::collections::HashSet::new();
        self.pairs.iter().filter(|p| seen.insert(p.candidate.id)).map(|p| p.candidate.clone()).collect()
    }

    /// A random subset of `size` pairs, re-paired within the subset.
    pub fn subsample(&self, size: usize, seed: u64) -> Pool {
        use rand::seq::SliceRandom;
        let mut idx: Vec<usize> = (0..self.pairs.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        idx.truncate(size.min(self.pairs.len()));
        idx.sort_unstable();
        let mut sub = Pool { scenario: self.scenario.clone(), seed, pairs: idx.iter().map(|&i| self.pairs[i].clone()).collect() };
        sub.remap_to_pool_best();
        sub
    }

    pub fn to_json(&self) -> String {
        let rec = PoolRecord {
            scenario: self.scenario.clone(),
            seed: self.seed,
            pairs: self
                .pairs
                .iter()
                .map(|p| PairRecord {
                    objective: p.objective.clone(),
                    params: p.candidate.params.to_vec(),
                    metrics: p.candidate.metrics.to_vec(),
                })
                .collect(),
        };
        serde_json::to_string(&rec).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, PoolError> {
        let rec: PoolRecord = serde_json::from_str(text)?;
        let mut pairs = Vec::with_capacity(rec.pairs.len());
        for (i, p) in rec.pairs.into_iter().enumerate() {
            p.objective.validate().map_err(|e| PoolError::Invalid(format!("pair {i}: {e}")))?;
            if p.objective.kind() != rec.scenario.kind {
                return Err(PoolError::Invalid(format!("pair {i}: objective kind does not match the scenario")));
            }
            pairs.push(PoolPair { objective: p.objective, candidate: Candidate::new(p.params, p.metrics) });
        }
        if pairs.is_empty() {
            return Err(PoolError::Invalid("pool has no pairs".into()));
        }
        Ok(Pool { scenario: rec.scenario, seed: rec.seed, pairs })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PoolError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PoolError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
