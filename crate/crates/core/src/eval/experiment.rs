use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{QualityCurve, Ranker};
use crate::learner::{run_noprune, run_session_with, EndReason, SessionConfig, SessionOutcome};
use crate::pcs::{synthetic_pool, LinearObjective, Objective, Pool, PoolSource, Source, SyntheticPool};
use crate::scenario::{Candidate, ObjectiveInstance};
use crate::teacher::{EnsembleConfig, ImperfectOracle, NoiseModel, PerfectOracle, Teacher};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Net10Q,
    NoPrune,
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "net10q" => Ok(Algo::Net10Q),
            "noprune" => Ok(Algo::NoPrune),
            _ => Err(format!("unknown algorithm {s:?} (expected net10q or noprune)")),
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algo::Net10Q => "net10q",
            Algo::NoPrune => "noprune",
        })
    }
}

/// Which oracle answers: exact, or with Gaussian noise of `p` percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TeacherSpec {
    Perfect,
    Imperfect(f64),
}

impl FromStr for TeacherSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "perfect" {
            return Ok(TeacherSpec::Perfect);
        }
        let p = s
            .strip_prefix("imperfect:")
            .and_then(|p| p.parse::<f64>().ok())
            .filter(|p| p.is_finite() && *p >= 0.0)
            .ok_or_else(|| format!("unknown teacher {s:?} (expected perfect or imperfect:P)"))?;
        Ok(TeacherSpec::Imperfect(p))
    }
}

impl fmt::Display for TeacherSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TeacherSpec::Perfect => f.write_str("perfect"),
            TeacherSpec::Imperfect(p) => write!(f, "imperfect:{p}"),
        }
    }
}

/// 301 repetitions when `NETQ_FULL=1`, otherwise 31.
pub fn default_reps() -> usize {
    if std::env::var("NETQ_FULL").is_ok_and(|v| v == "1") {
        301
    } else {
        31
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algo: Algo,
    pub teacher: TeacherSpec,
    pub reps: usize,
    pub n_query: usize,
    pub thresh: usize,
    pub ensemble: Option<EnsembleConfig>,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Ten queries, [`default_reps`] repetitions, and backups for noisy teachers.
    pub fn new(algo: Algo, teacher: TeacherSpec, seed: u64) -> Self {
        let ensemble = matches!(teacher, TeacherSpec::Imperfect(_)).then(EnsembleConfig::default);
        ExperimentConfig { algo, teacher, reps: default_reps(), n_query: 10, thresh: 16, ensemble, seed }
    }

    fn session(&self, seed: u64) -> SessionConfig {
        SessionConfig { n_query: self.n_query, thresh: self.thresh, fill: self.thresh, ensemble: self.ensemble, ..SessionConfig::oracle(seed) }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub curve: QualityCurve,
    /// `samples[rep][q]`: quality of the running best after `q` answered queries.
    pub samples: Vec<Vec<f64>>,
    pub ends: Vec<EndReason>,
    /// Longest time the learner took to produce one query, over all sessions.
    pub max_think: Duration,
    pub mean_think: Duration,
}

/// Seed of repetition `rep`, decorrelated from neighbouring repetitions.
pub fn rep_seed(seed: u64, rep: usize) -> u64 {
    let mut z = seed ^ (rep as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs `f(0..reps)` on all available cores and returns the results in order.
pub fn run_reps<T: Send>(reps: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(reps.max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..reps).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, AtomicOrdering::Relaxed);
                if i >= reps {
                    break;
                }
                let out = f(i);
                slots.lock().expect("no worker panicked")[i] = Some(out);
            });
        }
    });
    slots.into_inner().expect("no worker panicked").into_iter().map(|s| s.expect("every rep ran")).collect()
}

struct RepOutcome {
    qualities: Vec<f64>,
    end: EndReason,
    think: Vec<Duration>,
}

/// Quality after each answered query, carrying the final best forward.
fn quality_row(out: &SessionOutcome, before: f64, n_query: usize, q: impl Fn(&Candidate) -> f64) -> Vec<f64> {
    let mut row = vec![before];
    for i in 0..n_query {
        let value = match out.trajectory.get(i).or(out.trajectory.last()) {
            Some(Some(c)) => q(c),
            Some(None) => 0.0,
            None => before,
        };
        row.push(value);
    }
    row
}

fn timed_session<O, S, T>(source: S, teacher: &mut T, cfg: &SessionConfig) -> (SessionOutcome, Vec<Duration>)
where
    O: Objective,
    S: Source<O> + Clone,
    T: Teacher,
{
    let mut think = Vec::new();
    let mut last = Instant::now();
    let out = run_session_with(source, teacher, cfg, &mut |_| {
        let now = Instant::now();
        think.push(now - last);
        last = now;
    });
    (out, think)
}

fn run_one<O: Objective, T: Teacher>(
    algo: Algo,
    source: PoolSource<O>,
    teacher: &mut T,
    session: &SessionConfig,
    before: f64,
    quality: impl Fn(&Candidate) -> f64,
) -> RepOutcome {
    let (out, think) = match algo {
        Algo::Net10Q => timed_session(source, teacher, session),
        Algo::NoPrune => (run_noprune(source, teacher, session), Vec::new()),
    };
    RepOutcome { qualities: quality_row(&out, before, session.n_query, quality), end: out.end, think }
}

fn collect(reps: Vec<RepOutcome>, meta: serde_json::Value) -> ExperimentResult {
    let samples: Vec<Vec<f64>> = reps.iter().map(|r| r.qualities.clone()).collect();
    let think: Vec<Duration> = reps.iter().flat_map(|r| r.think.iter().copied()).collect();
    let max_think = think.iter().copied().max().unwrap_or_default();
    let mean_think = if think.is_empty() { Duration::ZERO } else { think.iter().sum::<Duration>() / think.len() as u32 };
    let mut meta = meta;
    meta["max_think_ms"] = json!(max_think.as_secs_f64() * 1e3);
    meta["mean_think_ms"] = json!(mean_think.as_secs_f64() * 1e3);
    ExperimentResult {
        curve: QualityCurve::from_samples(&samples, meta),
        samples,
        ends: reps.into_iter().map(|r| r.end).collect(),
        max_think,
        mean_think,
    }
}

/// Repeated oracle sessions over a pool. Quality is the rank of the running
/// best among `ranking` under `gt`.
pub fn run_experiment<O: Objective>(
    pairs: &Arc<Vec<(O, Candidate)>>,
    ranking: &[Candidate],
    gt: &O,
    cfg: &ExperimentConfig,
) -> ExperimentResult {
    let ranker = Ranker::new(ranking, gt);
    let rank = |c: &Candidate| ranker.quality(gt.reward(c));
    let reps = run_reps(cfg.reps, |rep| {
        let seed = rep_seed(cfg.seed, rep);
        let source = PoolSource::new(pairs.clone(), seed);
        let session = cfg.session(seed);
        let before = if session.confirm_initial { 0.0 } else { source.clone().initial().map_or(0.0, |c| rank(&c)) };
        match cfg.teacher {
            TeacherSpec::Perfect => run_one(cfg.algo, source, &mut PerfectOracle::new(gt.clone()), &session, before, rank),
            TeacherSpec::Imperfect(p) => {
                let model = NoiseModel::over_pool(p, gt, ranking, seed ^ 0x0bad_5eed);
                run_one(cfg.algo, source, &mut ImperfectOracle::new(gt.clone(), &model), &session, before, rank)
            }
        }
    });
    let meta = json!({
        "algo": cfg.algo,
        "teacher": cfg.teacher.to_string(),
        "reps": cfg.reps,
        "queries": cfg.n_query,
        "seed": cfg.seed,
        "pool": pairs.len(),
        "ranking": ranking.len(),
    });
    collect(reps, meta)
}

/// Perfect-oracle sessions on abstract problems with exactly known quality:
/// each repetition draws a fresh uniform pool and a uniform-angle ground truth,
/// and starts from a silently installed random design.
pub fn run_synthetic(reps: usize, pool_size: usize, n_query: usize, seed: u64) -> ExperimentResult {
    let outcomes = run_reps(reps, |rep| {
        let seed = rep_seed(seed, rep);
        let pool = synthetic_pool(pool_size, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6a7e);
        let gt = LinearObjective::at_angle(rng.random_range(0.0..std::f64::consts::FRAC_PI_2));
        let source = PoolSource::new(Arc::new(pool.pairs), seed);
        let session = SessionConfig { n_query, confirm_initial: false, ..SessionConfig::oracle(seed) };
        let q = |c: &Candidate| SyntheticPool::true_quality(&gt, c);
        let before = source.clone().initial().map_or(0.0, |c| q(&c));
        run_one(Algo::Net10Q, source, &mut PerfectOracle::new(gt.clone()), &session, before, q)
    });
    let meta = json!({ "problem": "synthetic", "reps": reps, "pool": pool_size, "queries": n_query, "seed": seed });
    collect(outcomes, meta)
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub size: usize,
    pub result: ExperimentResult,
}

/// Subsamples `master` to each size and runs the experiment, always ranking
/// against the designs of `master`.
pub fn pool_size_sweep(master: &Pool, sizes: &[usize], gt: &ObjectiveInstance, cfg: &ExperimentConfig) -> Vec<SweepRow> {
    let ranking = master.designs();
    sizes
        .iter()
        .map(|&size| {
            let sub = master.subsample(size, cfg.seed ^ size as u64);
            let pairs = Arc::new(sub.pair_list());
            SweepRow { size, result: run_experiment(&pairs, &ranking, gt, cfg) }
        })
        .collect()
}
