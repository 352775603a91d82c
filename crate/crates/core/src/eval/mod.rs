//! Solution quality, repeated oracle experiments and executable checks of the
//! convergence theory.

mod experiment;
mod theory;

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::pcs::{reward_cmp, Objective};
use crate::scenario::Candidate;

pub use experiment::{
    default_reps, rep_seed, run_experiment, run_reps, run_synthetic, pool_size_sweep, Algo, ExperimentConfig, ExperimentResult,
    SweepRow, TeacherSpec,
};
pub use theory::{
    adversarial_unit_progress, bound_threshold, check_half_lemma, check_logarithmic_bound, check_sortability, median_ci_ranks,
    pcs_from_pairs, sortability_survey, BoundReport, BoundRow, Sortability, SortabilitySurvey, SortMethod, TheoryError,
};

/// Fraction of `pool` that `c` is at least as good as under `gt`.
pub fn quality<O: Objective>(c: &Candidate, pool: &[Candidate], gt: &O) -> f64 {
    assert!(!pool.is_empty(), "quality needs a nonempty pool");
    let r = gt.reward(c);
    let beaten = pool.iter().filter(|p| reward_cmp(r, gt.reward(p)) != Ordering::Less).count();
    beaten as f64 / pool.len() as f64
}

/// Precomputed ranking of a pool under a fixed ground truth.
#[derive(Debug, Clone)]
pub struct Ranker {
    rewards: Vec<f64>,
}

impl Ranker {
    pub fn new<O: Objective>(pool: &[Candidate], gt: &O) -> Self {
        assert!(!pool.is_empty(), "quality needs a nonempty pool");
        let mut rewards: Vec<f64> = pool.iter().map(|c| gt.reward(c)).collect();
        rewards.sort_by(f64::total_cmp);
        Ranker { rewards }
    }

    /// Same value as [`quality`] for the pool and ground truth given to [`Ranker::new`].
    pub fn quality(&self, reward: f64) -> f64 {
        let beaten = self.rewards.partition_point(|&p| reward_cmp(reward, p) != Ordering::Less);
        beaten as f64 / self.rewards.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub query: usize,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

/// Per-query median, min and max of the running best's quality over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityCurve {
    pub points: Vec<CurvePoint>,
    /// Free-form description of the run: scenario, topology, teacher, seed.
    pub meta: serde_json::Value,
}

/// Median of a nonempty sample; the mean of the middle pair for even sizes.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

impl QualityCurve {
    /// Aggregates `samples[rep][q]`, where column 0 is the state before any answer.
    pub fn from_samples(samples: &[Vec<f64>], meta: serde_json::Value) -> Self {
        let width = samples.iter().map(Vec::len).min().unwrap_or(0);
        let points = (1..width)
            .map(|q| {
                let col: Vec<f64> = samples.iter().map(|s| s[q]).collect();
                CurvePoint {
                    query: q,
                    median: median(&col),
                    min: col.iter().copied().fold(f64::INFINITY, f64::min),
                    max: col.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect();
        QualityCurve { points, meta }
    }

    pub fn median_at(&self, query: usize) -> Option<f64> {
        self.points.iter().find(|p| p.query == query).map(|p| p.median)
    }

    pub fn final_median(&self) -> Option<f64> {
        self.points.last().map(|p| p.median)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("query,median,min,max\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{},{}\n", p.query, p.median, p.min, p.max));
        }
        out
    }

    pub fn from_csv(text: &str, meta: serde_json::Value) -> Result<Self, String> {
        let mut points = Vec::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || format!("line {}: expected query,median,min,max", n + 1);
            if cols.len() != 4 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            points.push(CurvePoint { query: cols[0].parse().map_err(|_| bad())?, median: num(cols[1])?, min: num(cols[2])?, max: num(cols[3])? });
        }
        Ok(QualityCurve { points, meta })
    }

    /// Writes `path` as CSV and the metadata next to it with a `.json` extension.
    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv())?;
        std::fs::write(path.with_extension("json"), serde_json::to_string_pretty(&self.meta).expect("serializable"))
    }

    /// Reads a curve written by [`QualityCurve::save`]; the sidecar is optional.
    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let meta = std::fs::read_to_string(path.with_extension("json"))
            .ok()
            .and_then(|s| serde_json::from_str(&s).ok())
            .unwrap_or(serde_json::Value::Null);
        Self::from_csv(&text, meta).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}
