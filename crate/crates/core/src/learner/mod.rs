//! Query selection and the interactive learning loop.

mod info;
mod session;

use serde::{Deserialize, Serialize};

use crate::scenario::Candidate;

pub use info::{best_query, info_compare, info_propose, ScoredQuery};
pub use session::{run_noprune, run_session, run_session_with, EndReason, SessionConfig, SessionOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Compare,
    Propose,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Compare(Candidate, Candidate),
    Propose(Candidate),
}

/// Identity of a query for de-duplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QueryKey(QueryKind, u64, u64);

impl Query {
    pub fn kind(&self) -> QueryKind {
        match self {
            Query::Compare(..) => QueryKind::Compare,
            Query::Propose(_) => QueryKind::Propose,
        }
    }

    pub fn candidates(&self) -> Vec<&Candidate> {
        match self {
            Query::Compare(a, b) => vec![a, b],
            Query::Propose(c) => vec![c],
        }
    }

    pub fn key(&self) -> QueryKey {
        match self {
            Query::Compare(a, b) => QueryKey(QueryKind::Compare, a.id.min(b.id), a.id.max(b.id)),
            Query::Propose(c) => QueryKey(QueryKind::Propose, c.id, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    LeftBetter,
    RightBetter,
    Equal,
    Accept,
    Reject,
    /// "Too hard to call": logged, but no preference is recorded.
    Abstain,
    Stop,
}

impl Response {
    /// Whether the response is a legal answer to a query of `kind`.
    pub fn fits(self, kind: QueryKind) -> bool {
        match self {
            Response::LeftBetter | Response::RightBetter | Response::Equal => kind == QueryKind::Compare,
            Response::Accept | Response::Reject => kind == QueryKind::Propose,
            Response::Abstain | Response::Stop => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub id: u64,
    pub metrics: Vec<f64>,
}

impl From<&Candidate> for CandidateRecord {
    fn from(c: &Candidate) -> Self {
        CandidateRecord { id: c.id, metrics: c.metrics.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub kind: QueryKind,
    pub candidates: Vec<CandidateRecord>,
    pub info: usize,
}

/// One line of a session transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub iter: usize,
    pub query: QueryRecord,
    pub response: Response,
    pub image_before: usize,
    pub image_after: usize,
    pub r_best_metrics: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    pub records: Vec<TranscriptRecord>,
}

impl Transcript {
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<Self, serde_json::Error> {
        let records = text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect::<Result<_, _>>()?;
        Ok(Transcript { records })
    }
}
