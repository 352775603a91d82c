use std::cmp::Ordering;
use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{best_query, CandidateRecord, Query, QueryRecord, Response, Transcript, TranscriptRecord};
use crate::pcs::{generate_more, reward_cmp, Objective, Pcs, PrefRelation, PreferenceRecord, Source};
use crate::scenario::Candidate;
use crate::teacher::{EnsembleConfig, Teacher, TeacherError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Minimum number of answered queries before the loop may stop on an empty set.
    pub n_query: usize,
    /// The set is topped up whenever its image is smaller than this.
    pub thresh: usize,
    /// Image size a top-up aims for; never below `thresh`.
    pub fill: usize,
    /// Show the first candidate as a Propose instead of installing it silently.
    pub confirm_initial: bool,
    /// Stop after exactly `n_query` answered queries.
    pub cap_queries: bool,
    pub ensemble: Option<EnsembleConfig>,
    pub seed: u64,
}

impl SessionConfig {
    /// Settings for scripted oracle experiments.
    pub fn oracle(seed: u64) -> Self {
        SessionConfig { n_query: 10, thresh: 16, fill: 16, confirm_initial: true, cap_queries: true, ensemble: None, seed }
    }

    /// Settings for live sessions with a person answering.
    pub fn interactive(seed: u64) -> Self {
        SessionConfig { n_query: 10, thresh: 2, fill: 16, confirm_initial: true, cap_queries: false, ensemble: None, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EndReason {
    /// At least `n_query` answers and nothing left to ask.
    Guard,
    QueryCap,
    SourceExhausted,
    Stopped,
    /// The recorded preferences admit no objective, and no backup could take over.
    Unsatisfiable,
    Teacher(TeacherError),
}

#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub r_best: Option<Candidate>,
    pub transcript: Transcript,
    /// Answered queries, excluding abstentions.
    pub queries: usize,
    /// Running best after each answered query.
    pub trajectory: Vec<Option<Candidate>>,
    pub end: EndReason,
}

struct Learner<O, S> {
    pcs: Pcs<O>,
    records: Vec<PreferenceRecord>,
    source: S,
}

struct Replica<S> {
    records: Vec<PreferenceRecord>,
    source: S,
}

struct Run<'a> {
    out: SessionOutcome,
    iter: usize,
    observer: &'a mut dyn FnMut(&TranscriptRecord),
}

impl Run<'_> {
    fn log(&mut self, q: &Query, info: usize, response: Response, before: usize, after: usize, note: Option<String>) {
        self.iter += 1;
        let rec = TranscriptRecord {
            iter: self.iter,
            query: QueryRecord { kind: q.kind(), candidates: q.candidates().into_iter().map(CandidateRecord::from).collect(), info },
            response,
            image_before: before,
            image_after: after,
            r_best_metrics: self.out.r_best.as_ref().map(|c| c.metrics.to_vec()),
            note,
        };
        (self.observer)(&rec);
        self.out.transcript.records.push(rec);
    }

    fn answered(&mut self) {
        self.out.queries += 1;
        self.out.trajectory.push(self.out.r_best.clone());
    }

    fn can_stop(&self) -> bool {
        self.out.r_best.is_some()
    }

    /// Shows the first candidate as a Propose. Returns false when the session ends.
    fn confirm<T: Teacher + ?Sized>(&mut self, teacher: &mut T, first: Candidate) -> bool {
        teacher.begin_query(self.iter + 1, false);
        let q = Query::Propose(first.clone());
        match teacher.answer(&q, None) {
            Err(e) => {
                self.out.end = EndReason::Teacher(e);
                false
            }
            Ok(Response::Stop) => {
                self.log(&q, 0, Response::Stop, 0, 0, None);
                self.out.end = EndReason::Stopped;
                false
            }
            Ok(resp) => {
                if resp != Response::Reject {
                    self.out.r_best = Some(first);
                }
                self.log(&q, 0, resp, 0, 0, None);
                self.answered();
                true
            }
        }
    }
}

fn empty_outcome() -> SessionOutcome {
    SessionOutcome { r_best: None, transcript: Transcript::default(), queries: 0, trajectory: Vec::new(), end: EndReason::SourceExhausted }
}

/// Runs the voting-guided loop until its termination condition.
pub fn run_session<O, S, T>(source: S, teacher: &mut T, cfg: &SessionConfig) -> SessionOutcome
where
    O: Objective,
    S: Source<O> + Clone,
    T: Teacher + ?Sized,
{
    run_session_with(source, teacher, cfg, &mut |_| {})
}

/// Like [`run_session`], reporting every transcript record as it is written.
pub fn run_session_with<O, S, T>(
    source: S,
    teacher: &mut T,
    cfg: &SessionConfig,
    observer: &mut dyn FnMut(&TranscriptRecord),
) -> SessionOutcome
where
    O: Objective,
    S: Source<O> + Clone,
    T: Teacher + ?Sized,
{
    let mut replicas: Vec<Replica<S>> = cfg
        .ensemble
        .map(|e| (0..e.replicas).map(|_| Replica { records: Vec::new(), source: source.clone() }).collect())
        .unwrap_or_default();
    let drop_prob = cfg.ensemble.map_or(0.0, |e| e.drop_prob);
    let mut drop_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut main = Learner { pcs: Pcs::new(), records: Vec::new(), source };
    let mut run = Run { out: empty_outcome(), iter: 0, observer };

    let Some(first) = main.source.initial() else {
        return run.out;
    };
    if cfg.confirm_initial {
        if !run.confirm(teacher, first) {
            return run.out;
        }
    } else {
        run.out.r_best = Some(first);
    }

    let mut skip = HashSet::new();
    loop {
        let count = run.out.queries;
        if cfg.cap_queries && count >= cfg.n_query {
            run.out.end = EndReason::QueryCap;
            break;
        }
        if count >= cfg.n_query && main.pcs.is_empty() {
            run.out.end = EndReason::Guard;
            break;
        }
        if main.pcs.image_len() < cfg.thresh {
            generate_more(&mut main.pcs, &mut main.source, &main.records, run.out.r_best.as_ref(), cfg.fill.max(cfg.thresh));
        }
        let scored = match best_query(&main.pcs, run.out.r_best.as_ref(), &skip) {
            Ok(q) => q,
            Err(_) if !skip.is_empty() => {
                // Every remaining query was declined; widen the set or give up.
                let target = main.pcs.image_len() + cfg.thresh.max(1);
                if generate_more(&mut main.pcs, &mut main.source, &main.records, run.out.r_best.as_ref(), target) == 0 {
                    run.out.end = EndReason::SourceExhausted;
                    break;
                }
                continue;
            }
            Err(_) => {
                run.out.end = if count >= cfg.n_query { EndReason::Guard } else { EndReason::SourceExhausted };
                break;
            }
        };
        let q = scored.query;
        teacher.begin_query(run.iter + 1, run.can_stop());
        let mut response = match teacher.answer(&q, run.out.r_best.as_ref()) {
            Ok(r) => r,
            Err(e) => {
                run.out.end = EndReason::Teacher(e);
                break;
            }
        };
        let mut note = None;
        if !response.fits(q.kind()) {
            note = Some(format!("{response:?} does not answer a {:?} query", q.kind()));
            response = Response::Abstain;
        }
        let before = main.pcs.image_len();
        let qid = run.iter + 1;
        let record = move |lhs: &Candidate, rhs: &Candidate, relation| PreferenceRecord {
            lhs: lhs.clone(),
            rhs: rhs.clone(),
            relation,
            query: qid,
        };
        let mut new_records = Vec::new();
        match (&q, response) {
            (_, Response::Stop) => {
                run.log(&q, scored.info, response, before, before, note);
                run.out.end = EndReason::Stopped;
                break;
            }
            (_, Response::Abstain) => {
                skip.insert(q.key());
                run.log(&q, scored.info, response, before, before, note);
                continue;
            }
            (Query::Compare(a, b), r) => {
                let rel = match r {
                    Response::LeftBetter => PrefRelation::Gt,
                    Response::RightBetter => PrefRelation::Lt,
                    _ => PrefRelation::Eq,
                };
                new_records.push(record(a, b, rel));
            }
            (Query::Propose(c), Response::Accept) => {
                if let Some(old) = &run.out.r_best {
                    new_records.push(record(c, old, PrefRelation::Gt));
                }
            }
            (Query::Propose(c), _) => {
                if let Some(old) = &run.out.r_best {
                    new_records.push(record(c, old, PrefRelation::NotGreater));
                }
            }
        }
        for rec in new_records {
            for r in &mut replicas {
                if drop_rng.random::<f64>() >= drop_prob {
                    r.records.push(rec.clone());
                }
            }
            // An emptied set is handled below, together with acceptance pruning.
            let _ = main.pcs.update(&mut main.records, rec);
        }
        if let (Query::Propose(c), Response::Accept) = (&q, response) {
            main.pcs.retain(|e| reward_cmp(e.objective.reward(&e.candidate), e.objective.reward(c)) == Ordering::Greater);
            run.out.r_best = Some(c.clone());
        }
        skip.clear();
        if before > 0 && main.pcs.is_empty() && !main.source.satisfiable(&main.records) {
            let mut chosen: Option<usize> = None;
            for k in 0..replicas.len() {
                if chosen.is_some_and(|c| replicas[c].records.len() >= replicas[k].records.len()) {
                    continue;
                }
                let r = &mut replicas[k];
                if r.source.satisfiable(&r.records) {
                    chosen = Some(k);
                }
            }
            let Some(k) = chosen else {
                run.log(&q, scored.info, response, before, 0, Some("preferences are unsatisfiable".into()));
                run.answered();
                run.out.end = EndReason::Unsatisfiable;
                break;
            };
            let r = replicas.remove(k);
            note = Some(format!("backup {k} took over with {} of {} preferences", r.records.len(), main.records.len()));
            main = Learner { pcs: Pcs::new(), records: r.records, source: r.source };
        }
        let after = main.pcs.image_len();
        run.log(&q, scored.info, response, before, after, note);
        run.answered();
    }
    run.out
}

/// Baseline that proposes the optimum of a random objective every round and
/// never prunes.
pub fn run_noprune<O, S, T>(mut source: S, teacher: &mut T, cfg: &SessionConfig) -> SessionOutcome
where
    O: Objective,
    S: Source<O>,
    T: Teacher + ?Sized,
{
    let mut observer = |_: &TranscriptRecord| {};
    let mut run = Run { out: empty_outcome(), iter: 0, observer: &mut observer };
    let Some(first) = source.initial() else {
        return run.out;
    };
    if cfg.confirm_initial {
        if !run.confirm(teacher, first) {
            return run.out;
        }
    } else {
        run.out.r_best = Some(first);
    }
    run.out.end = EndReason::QueryCap;
    while run.out.queries < cfg.n_query {
        let Some((_, c)) = source.random_pair() else {
            run.out.end = EndReason::SourceExhausted;
            break;
        };
        if run.out.r_best.as_ref().is_some_and(|r| r.id == c.id) {
            continue;
        }
        teacher.begin_query(run.iter + 1, run.can_stop());
        let q = Query::Propose(c.clone());
        let response = match teacher.answer(&q, run.out.r_best.as_ref()) {
            Ok(r) => r,
            Err(e) => {
                run.out.end = EndReason::Teacher(e);
                break;
            }
        };
        match response {
            Response::Stop => {
                run.log(&q, 0, response, 0, 0, None);
                run.out.end = EndReason::Stopped;
                break;
            }
            Response::Accept => run.out.r_best = Some(c),
            Response::Reject => {}
            _ => {
                run.log(&q, 0, response, 0, 0, None);
                continue;
            }
        }
        run.log(&q, 0, response, 0, 0, None);
        run.answered();
    }
    run.out
}
