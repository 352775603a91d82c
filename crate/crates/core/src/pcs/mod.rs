//! Pareto candidate sets, preference records and candidate sources.

mod pool;
mod source;
mod synthetic;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::scenario::{Candidate, ObjectiveInstance};

pub use pool::{build_pool, Pool, PoolError, PoolPair};
pub use source::{generate_more, PoolSource, ScenarioSource, Source, MAX_REJECTIONS};
pub use synthetic::{adversarial_pcs, synthetic_pool, LinearObjective, SyntheticPool, TableObjective};

/// Relative tolerance under which two rewards count as equal.
pub const EQ_TOL: f64 = 1e-9;

/// A ranking over candidates expressed as a real-valued reward.
pub trait Objective: Clone + Debug + Send + Sync {
    fn reward(&self, c: &Candidate) -> f64;
}

impl Objective for ObjectiveInstance {
    fn reward(&self, c: &Candidate) -> f64 {
        ObjectiveInstance::reward(self, &c.metrics)
    }
}

/// Compares two rewards, treating values within [`EQ_TOL`] relative as equal.
pub fn reward_cmp(a: f64, b: f64) -> Ordering {
    if a == b {
        return Ordering::Equal;
    }
    if !(a.is_finite() && b.is_finite()) {
        return a.partial_cmp(&b).unwrap_or(Ordering::Equal);
    }
    if (a - b).abs() <= EQ_TOL * a.abs().max(b.abs()) {
        Ordering::Equal
    } else if a < b {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// Lexicographic order on metric vectors.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Order of `a` against `b` under `o`, with equal rewards broken toward the
/// lexicographically smaller metric vector and then the smaller id.
pub fn prefer<O: Objective>(o: &O, a: &Candidate, b: &Candidate) -> Ordering {
    reward_cmp(o.reward(a), o.reward(b))
        .then_with(|| lex_cmp(&b.metrics, &a.metrics))
        .then_with(|| b.id.cmp(&a.id))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefRelation {
    /// `lhs` strictly better.
    Gt,
    /// `lhs` strictly worse.
    Lt,
    Eq,
    /// `lhs` not strictly better.
    NotGreater,
}

#[derive(Debug, Clone)]
pub struct PreferenceRecord {
    pub lhs: Candidate,
    pub rhs: Candidate,
    pub relation: PrefRelation,
    pub query: usize,
}

impl PreferenceRecord {
    pub fn satisfied_by<O: Objective>(&self, o: &O) -> bool {
        let ord = reward_cmp(o.reward(&self.lhs), o.reward(&self.rhs));
        match self.relation {
            PrefRelation::Gt => ord == Ordering::Greater,
            PrefRelation::Lt => ord == Ordering::Less,
            PrefRelation::Eq => ord == Ordering::Equal,
            PrefRelation::NotGreater => ord != Ordering::Greater,
        }
    }
}

pub fn consistent<O: Objective>(o: &O, records: &[PreferenceRecord]) -> bool {
    records.iter().all(|r| r.satisfied_by(o))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PcsError {
    #[error("the preference set eliminated every objective")]
    Unsatisfiable,
    #[error("the candidate set is empty")]
    EmptyPcs,
}

#[derive(Debug, Clone)]
pub struct Entry<O> {
    pub objective: O,
    pub candidate: Candidate,
}

/// Finite partial map from objectives to candidates in which every objective
/// maps to its best candidate among the image.
#[derive(Debug, Clone)]
pub struct Pcs<O> {
    entries: Vec<Entry<O>>,
}

impl<O> Default for Pcs<O> {
    fn default() -> Self {
        Pcs { entries: Vec::new() }
    }
}

impl<O: Objective> Pcs<O> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from raw entries without re-establishing the invariant.
    pub fn from_entries(entries: Vec<Entry<O>>) -> Self {
        Pcs { entries }
    }

    pub fn entries(&self) -> &[Entry<O>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct mapped candidates, in order of first appearance.
    pub fn image(&self) -> Vec<Candidate> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for e in &self.entries {
            seen.entry(e.candidate.id).or_insert_with(|| {
                out.push(e.candidate.clone());
            });
        }
        out
    }

    pub fn image_len(&self) -> usize {
        self.image().len()
    }

    /// Adds `(o, c)`. `o` maps to the best of `c` and the current image, and
    /// every existing objective that prefers `c` is remapped to it.
    pub fn insert(&mut self, o: O, c: Candidate) {
        let mut best = c.clone();
        for e in &self.entries {
            if prefer(&o, &e.candidate, &best) == Ordering::Greater {
                best = e.candidate.clone();
            }
        }
        for e in &mut self.entries {
            if prefer(&e.objective, &c, &e.candidate) == Ordering::Greater {
                e.candidate = c.clone();
            }
        }
        self.entries.push(Entry { objective: o, candidate: best });
    }

    /// Keeps only the entries accepted by `keep`; returns how many were removed.
    pub fn retain(&mut self, mut keep: impl FnMut(&Entry<O>) -> bool) -> usize {
        let before = self.entries.len();
        self.entries.retain(|e| keep(e));
        before - self.entries.len()
    }

    /// Appends `rec` to `records` and drops every objective contradicting it.
    /// Signals `Unsatisfiable` when this empties a nonempty domain; the
    /// pruning is applied either way.
    pub fn update(&mut self, records: &mut Vec<PreferenceRecord>, rec: PreferenceRecord) -> Result<usize, PcsError> {
        let before = self.entries.len();
        let removed = self.retain(|e| rec.satisfied_by(&e.objective));
        records.push(rec);
        if before > 0 && self.entries.is_empty() {
            return Err(PcsError::Unsatisfiable);
        }
        Ok(removed)
    }

    /// Checks the defining invariant: no objective prefers another entry's candidate.
    pub fn invariant_holds(&self) -> bool {
        self.entries.iter().all(|e| {
            self.entries.iter().all(|f| reward_cmp(e.objective.reward(&f.candidate), e.objective.reward(&e.candidate)) != Ordering::Greater)
        })
    }
}
