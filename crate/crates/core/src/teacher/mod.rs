//! Answering queries: oracles built from a ground-truth objective, a noisy
//! variant, and a bridge to a human answering over a channel.

use std::cmp::Ordering;
use std::sync::mpsc::{Receiver, RecvTimeoutError, SyncSender};
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::learner::{Query, Response};
use crate::pcs::{reward_cmp, Objective};
use crate::scenario::Candidate;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TeacherError {
    #[error("no answer before the timeout")]
    Timeout,
    #[error("the teacher disconnected")]
    Disconnected,
}

pub trait Teacher {
    fn answer_compare(&mut self, c1: &Candidate, c2: &Candidate) -> Result<Response, TeacherError>;

    fn answer_propose(&mut self, c: &Candidate, r_best: Option<&Candidate>) -> Result<Response, TeacherError>;

    /// Called before every query with its position and whether stopping is allowed.
    fn begin_query(&mut self, _iteration: usize, _can_stop: bool) {}

    fn answer(&mut self, q: &Query, r_best: Option<&Candidate>) -> Result<Response, TeacherError> {
        match q {
            Query::Compare(a, b) => self.answer_compare(a, b),
            Query::Propose(c) => self.answer_propose(c, r_best),
        }
    }
}

fn compare_response(ord: Ordering) -> Response {
    match ord {
        Ordering::Greater => Response::LeftBetter,
        Ordering::Less => Response::RightBetter,
        Ordering::Equal => Response::Equal,
    }
}

/// Answers consistently with a ground-truth objective.
#[derive(Debug, Clone)]
pub struct PerfectOracle<O> {
    pub gt: O,
}

impl<O: Objective> PerfectOracle<O> {
    pub fn new(gt: O) -> Self {
        PerfectOracle { gt }
    }
}

impl<O: Objective> Teacher for PerfectOracle<O> {
    fn answer_compare(&mut self, c1: &Candidate, c2: &Candidate) -> Result<Response, TeacherError> {
        Ok(compare_response(reward_cmp(self.gt.reward(c1), self.gt.reward(c2))))
    }

    fn answer_propose(&mut self, c: &Candidate, r_best: Option<&Candidate>) -> Result<Response, TeacherError> {
        let better = r_best.is_none_or(|r| reward_cmp(self.gt.reward(c), self.gt.reward(r)) == Ordering::Greater);
        Ok(if better { Response::Accept } else { Response::Reject })
    }
}

/// Gaussian perturbation of presented rewards.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Standard deviation as a percentage of `opt_reward - mean_reward`.
    pub p: f64,
    pub mean_reward: f64,
    pub opt_reward: f64,
    pub seed: u64,
}

impl NoiseModel {
    /// Statistics of the ground-truth rewards over `pool`.
    pub fn over_pool<O: Objective>(p: f64, gt: &O, pool: &[Candidate], seed: u64) -> Self {
        let rewards: Vec<f64> = pool.iter().map(|c| gt.reward(c)).filter(|r| r.is_finite()).collect();
        let mean_reward = rewards.iter().sum::<f64>() / rewards.len().max(1) as f64;
        let opt_reward = rewards.iter().copied().fold(mean_reward, f64::max);
        NoiseModel { p, mean_reward, opt_reward, seed }
    }

    pub fn sd(&self) -> f64 {
        self.p / 100.0 * (self.opt_reward - self.mean_reward)
    }
}

/// Oracle that sees a freshly perturbed reward every time a candidate is shown.
#[derive(Debug, Clone)]
pub struct ImperfectOracle<O> {
    perfect: PerfectOracle<O>,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
}

impl<O: Objective> ImperfectOracle<O> {
    pub fn new(gt: O, model: &NoiseModel) -> Self {
        let sd = model.sd();
        let noise = (sd > 0.0).then(|| Normal::new(0.0, sd).expect("finite positive deviation"));
        ImperfectOracle { perfect: PerfectOracle::new(gt), noise, rng: ChaCha8Rng::seed_from_u64(model.seed) }
    }

    fn sample(&mut self, noise: Normal<f64>, c: &Candidate) -> f64 {
        self.perfect.gt.reward(c) + noise.sample(&mut self.rng)
    }
}

impl<O: Objective> Teacher for ImperfectOracle<O> {
    fn answer_compare(&mut self, c1: &Candidate, c2: &Candidate) -> Result<Response, TeacherError> {
        let Some(noise) = self.noise else {
            return self.perfect.answer_compare(c1, c2);
        };
        let (a, b) = (self.sample(noise, c1), self.sample(noise, c2));
        Ok(compare_response(a.partial_cmp(&b).unwrap_or(Ordering::Equal)))
    }

    fn answer_propose(&mut self, c: &Candidate, r_best: Option<&Candidate>) -> Result<Response, TeacherError> {
        let (Some(noise), Some(r)) = (self.noise, r_best) else {
            return self.perfect.answer_propose(c, r_best);
        };
        let (a, b) = (self.sample(noise, c), self.sample(noise, r));
        Ok(if a > b { Response::Accept } else { Response::Reject })
    }
}

/// What the human is shown for one query.
#[derive(Debug, Clone)]
pub struct PendingQuery {
    pub query: Query,
    pub r_best: Option<Candidate>,
    pub iteration: usize,
    pub can_stop: bool,
}

/// Forwards queries to a human over channels and waits for the reply.
pub struct HumanBridge {
    queries: SyncSender<PendingQuery>,
    answers: Receiver<Response>,
    timeout: Duration,
    iteration: usize,
    can_stop: bool,
}

/// Default time to wait for a human answer.
pub const HUMAN_TIMEOUT: Duration = Duration::from_secs(15 * 60);

impl HumanBridge {
    pub fn new(queries: SyncSender<PendingQuery>, answers: Receiver<Response>, timeout: Duration) -> Self {
        HumanBridge { queries, answers, timeout, iteration: 0, can_stop: false }
    }

    fn ask(&mut self, query: Query, r_best: Option<&Candidate>) -> Result<Response, TeacherError> {
        let pending = PendingQuery { query, r_best: r_best.cloned(), iteration: self.iteration, can_stop: self.can_stop };
        self.queries.send(pending).map_err(|_| TeacherError::Disconnected)?;
        match self.answers.recv_timeout(self.timeout) {
            Ok(r) => Ok(r),
            Err(RecvTimeoutError::Timeout) => Err(TeacherError::Timeout),
            Err(RecvTimeoutError::Disconnected) => Err(TeacherError::Disconnected),
        }
    }
}

impl Teacher for HumanBridge {
    fn answer_compare(&mut self, c1: &Candidate, c2: &Candidate) -> Result<Response, TeacherError> {
        self.ask(Query::Compare(c1.clone(), c2.clone()), None)
    }

    fn answer_propose(&mut self, c: &Candidate, r_best: Option<&Candidate>) -> Result<Response, TeacherError> {
        self.ask(Query::Propose(c.clone()), r_best)
    }

    fn answer(&mut self, q: &Query, r_best: Option<&Candidate>) -> Result<Response, TeacherError> {
        self.ask(q.clone(), r_best)
    }

    fn begin_query(&mut self, iteration: usize, can_stop: bool) {
        self.iteration = iteration;
        self.can_stop = can_stop;
    }
}

/// Backup learners that each drop incoming preferences at random and take
/// over when the primary's preferences become unsatisfiable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub replicas: usize,
    pub drop_prob: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig { replicas: 4, drop_prob: 0.2 }
    }
}
