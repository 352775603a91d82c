mod support;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::{mpsc, Arc};
use std::time::Duration;

use netq_core::learner::{
    best_query, info_compare, info_propose, run_noprune, run_session, EndReason, Query, Response, SessionConfig, Transcript,
};
use netq_core::pcs::{
    adversarial_pcs, consistent, generate_more, reward_cmp, synthetic_pool, Entry, LinearObjective, Objective, Pcs, PoolSource,
    PrefRelation, PreferenceRecord, SyntheticPool, TableObjective,
};
use netq_core::scenario::Candidate;
use netq_core::teacher::{EnsembleConfig, HumanBridge, ImperfectOracle, NoiseModel, PerfectOracle, Teacher, TeacherError};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::info_oracle;

fn pt(id: u64, m: &[f64]) -> Candidate {
    Candidate::abstract_point(id, m.to_vec())
}

fn table(rewards: &[(u64, f64)]) -> TableObjective {
    TableObjective { rewards: Arc::new(rewards.iter().copied().collect::<HashMap<_, _>>()) }
}

fn synthetic_source(size: usize, seed: u64) -> (SyntheticPool, PoolSource<LinearObjective>) {
    let pool = synthetic_pool(size, seed);
    let src = PoolSource::new(Arc::new(pool.pairs.clone()), seed ^ 0x5eed);
    (pool, src)
}

/// Pool on a concave arc: every candidate is Pareto optimal, so sessions stay busy.
fn arc_source(size: usize, seed: u64) -> PoolSource<LinearObjective> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = (0..size)
        .map(|i| {
            let theta: f64 = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
            let c = pt(i as u64 + 1, &[theta.cos(), theta.sin()]);
            (LinearObjective::at_angle(rng.random_range(0.0..std::f64::consts::FRAC_PI_2)), c)
        })
        .collect();
    PoolSource::new(Arc::new(pairs), seed)
}

fn check_against_oracle<O: Objective>(g: &Pcs<O>, r_best: Option<&Candidate>) {
    let image = g.image();
    for c in &image {
        assert_eq!(info_propose(g, c, r_best), info_oracle::propose_info(g, c, r_best));
        for d in &image {
            if c.id != d.id {
                assert_eq!(info_compare(g, c, d), info_oracle::compare_info(g, c, d));
            }
        }
    }
    let expected = info_oracle::best(g, r_best);
    let got = best_query(g, r_best, &Default::default()).ok().map(|s| (s.query, s.info));
    assert_eq!(got, expected);
}

#[test]
fn informativeness_matches_exhaustive_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..250 {
        let (g, r) = info_oracle::random_table_pcs(&mut rng, 8);
        check_against_oracle(&g, r.as_ref());
        let (g, r) = info_oracle::random_linear_pcs(&mut rng, 8);
        check_against_oracle(&g, r.as_ref());
    }
}

#[test]
fn two_objectives_that_disagree_give_one() {
    let (c1, c2) = (pt(1, &[1.0]), pt(2, &[2.0]));
    let mut g = Pcs::new();
    g.insert(table(&[(1, 2.0), (2, 1.0)]), c1.clone());
    g.insert(table(&[(1, 1.0), (2, 2.0)]), c2.clone());
    assert_eq!(info_compare(&g, &c1, &c2), 1);
}

#[test]
fn unanimous_pair_is_uninformative() {
    let (c1, c2) = (pt(1, &[1.0]), pt(2, &[2.0]));
    let mut g = Pcs::new();
    g.insert(table(&[(1, 3.0), (2, 1.0)]), c1.clone());
    g.insert(table(&[(1, 3.0), (2, 2.0), (3, 5.0)]), pt(3, &[3.0]));
    assert_eq!(info_compare(&g, &c1, &c2), 0);
}

#[test]
fn sortable_four_has_a_halving_compare() {
    // Objective i peaks at candidate i and decays with distance along the line.
    let cands: Vec<Candidate> = (1..=4).map(|i| pt(i, &[i as f64])).collect();
    let mut g = Pcs::new();
    for i in 1..=4i64 {
        let rewards: Vec<(u64, f64)> = (1..=4i64).map(|j| (j as u64, 10.0 - (i - j).abs() as f64)).collect();
        g.insert(table(&rewards), cands[i as usize - 1].clone());
    }
    assert_eq!(info_compare(&g, &cands[1], &cands[2]), 2);
    assert!(best_query(&g, None, &Default::default()).unwrap().info >= 2);
}

#[test]
fn propose_examples() {
    let r = pt(9, &[0.0]);
    let c = pt(1, &[1.0]);
    let outsider = pt(3, &[3.0]);
    let mut g = Pcs::new();
    g.insert(table(&[(1, 5.0), (2, 1.0), (3, 2.0), (9, 0.0)]), c.clone());
    g.insert(table(&[(1, 1.0), (2, 5.0), (3, 2.0), (9, 0.0)]), pt(2, &[2.0]));
    assert_eq!(info_propose(&g, &outsider, Some(&r)), 0);

    let mut g = Pcs::new();
    g.insert(table(&[(1, 5.0), (2, 1.0), (9, 0.0)]), c.clone());
    g.insert(table(&[(1, -1.0), (2, 5.0), (9, 0.0)]), pt(2, &[2.0]));
    assert_eq!(info_propose(&g, &c, Some(&r)), 1);
}

#[test]
fn adversarial_sets_allow_only_unit_progress() {
    for n in 2..=10 {
        let (g, bottom) = adversarial_pcs(n);
        assert!(g.invariant_holds());
        assert_eq!(g.image_len(), n);
        for q in info_oracle::legal_queries(&g, Some(&bottom)) {
            let info = match &q {
                Query::Compare(a, b) => info_compare(&g, a, b),
                Query::Propose(c) => info_propose(&g, c, Some(&bottom)),
            };
            assert_eq!(info, 1, "n = {n}, {q:?}");
        }
        assert_eq!(best_query(&g, Some(&bottom), &Default::default()).unwrap().info, 1);
    }
}

#[test]
fn best_query_tie_breaks() {
    let (g, bottom) = adversarial_pcs(5);
    let q = best_query(&g, Some(&bottom), &Default::default()).unwrap().query;
    assert_eq!(q.kind(), netq_core::learner::QueryKind::Propose);
    assert_eq!(q.candidates()[0].id, 1);

    let mut single = Pcs::new();
    single.insert(LinearObjective::new(vec![1.0]), pt(4, &[1.0]));
    let q = best_query(&single, None, &Default::default()).unwrap().query;
    assert_eq!(q, Query::Propose(pt(4, &[1.0])));
    assert!(best_query(&Pcs::<LinearObjective>::new(), None, &Default::default()).is_err());
}

fn random_record<R: Rng>(rng: &mut R, image: &[Candidate]) -> PreferenceRecord {
    let a = image[rng.random_range(0..image.len())].clone();
    let b = image[rng.random_range(0..image.len())].clone();
    let relation = [PrefRelation::Gt, PrefRelation::Lt, PrefRelation::NotGreater][rng.random_range(0..3)];
    PreferenceRecord { lhs: a, rhs: b, relation, query: 0 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn update_is_sound_and_complete(seed in any::<u64>(), steps in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut g, _) = info_oracle::random_linear_pcs(&mut rng, 12);
        let all: Vec<LinearObjective> = g.entries().iter().map(|e| e.objective.clone()).collect();
        let image = g.image();
        let mut records = Vec::new();
        for _ in 0..steps {
            let rec = random_record(&mut rng, &image);
            let _ = g.update(&mut records, rec);
        }
        for e in g.entries() {
            prop_assert!(consistent(&e.objective, &records));
        }
        for o in &all {
            let kept = g.entries().iter().any(|e| &e.objective == o);
            prop_assert_eq!(kept, consistent(o, &records));
        }
    }

    #[test]
    fn invariant_survives_insert_update_and_top_up(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pool, mut src) = synthetic_source(60, seed);
        let mut g = Pcs::new();
        let mut records = Vec::new();
        let r_best = Some(pool.pairs[0].1.clone());
        for _ in 0..4 {
            generate_more(&mut g, &mut src, &records, r_best.as_ref(), rng.random_range(2..10));
            prop_assert!(g.invariant_holds());
            let image = g.image();
            if image.is_empty() {
                break;
            }
            let (o, c) = pool.pairs[rng.random_range(0..pool.pairs.len())].clone();
            g.insert(o, c);
            prop_assert!(g.invariant_holds());
            let rec = random_record(&mut rng, &image);
            let _ = g.update(&mut records, rec);
            prop_assert!(g.invariant_holds());
        }
    }
}

#[test]
fn generate_more_postconditions() {
    let mut src = arc_source(200, 3);
    let r_best = pt(9999, &[0.5, 0.5]);
    let mut g = Pcs::new();
    let added = generate_more(&mut g, &mut src, &[], Some(&r_best), 10);
    assert!(added >= 10 && g.image_len() >= 10);
    for e in g.entries() {
        assert_eq!(reward_cmp(e.objective.reward(&e.candidate), e.objective.reward(&r_best)), Ordering::Greater);
    }

    // (1, 0) and (0, 1) rank these two points oppositely; no nonnegative weight satisfies both.
    let (a, b) = (pt(1001, &[1.0, 0.0]), pt(1002, &[0.0, 1.0]));
    let records = vec![
        PreferenceRecord { lhs: a.clone(), rhs: b.clone(), relation: PrefRelation::Gt, query: 1 },
        PreferenceRecord { lhs: b, rhs: a, relation: PrefRelation::Gt, query: 2 },
    ];
    let (_, mut src) = synthetic_source(200, 4);
    let mut g = Pcs::new();
    assert_eq!(generate_more(&mut g, &mut src, &records, None, 10), 0);
    assert!(g.is_empty());
}

#[test]
fn oracle_sessions_only_improve() {
    for seed in 0..20 {
        let gt = LinearObjective::at_angle(0.1 + seed as f64 * 0.07);
        let mut teacher = PerfectOracle::new(gt.clone());
        let out = run_session(arc_source(300, seed), &mut teacher, &SessionConfig::oracle(seed));
        assert!(out.queries <= 10);
        assert!(matches!(out.end, EndReason::QueryCap | EndReason::SourceExhausted), "{:?}", out.end);
        let q: Vec<f64> = out.trajectory.iter().map(|c| gt.reward(c.as_ref().unwrap())).collect();
        assert!(q.windows(2).all(|w| w[1] >= w[0]), "{q:?}");
        for r in &out.transcript.records {
            assert!(r.image_after <= r.image_before);
            if r.query.info > 0 {
                assert!(r.image_after < r.image_before, "{r:?}");
            }
        }
    }
}

#[test]
fn uniform_square_sessions_only_improve() {
    for seed in 0..10 {
        let src = arc_source(300, seed);
        let gt = LinearObjective::at_angle(0.2 + seed as f64 * 0.1);
        let out = run_session(src, &mut PerfectOracle::new(gt.clone()), &SessionConfig::oracle(seed));
        assert!(matches!(out.end, EndReason::QueryCap | EndReason::SourceExhausted), "{:?}", out.end);
        let q: Vec<f64> = out.trajectory.iter().map(|c| SyntheticPool::true_quality(&gt, c.as_ref().unwrap())).collect();
        assert!(q.windows(2).all(|w| w[1] >= w[0]), "{q:?}");
    }
}

/// After an accepted proposal, every surviving objective still sees room above the new best.
#[test]
fn accepted_proposals_keep_only_objectives_with_room() {
    let (pool, mut src) = synthetic_source(200, 8);
    let r_best = pool.pairs[0].1.clone();
    let mut g = Pcs::new();
    generate_more(&mut g, &mut src, &[], Some(&r_best), 12);
    let c = g.image()[0].clone();
    let mut records = Vec::new();
    let _ = g.update(&mut records, PreferenceRecord { lhs: c.clone(), rhs: r_best, relation: PrefRelation::Gt, query: 1 });
    g.retain(|e| reward_cmp(e.objective.reward(&e.candidate), e.objective.reward(&c)) == Ordering::Greater);
    for Entry { objective, candidate } in g.entries() {
        assert!(objective.reward(candidate) > objective.reward(&c));
    }
}

#[test]
fn exhausted_pool_ends_with_best_so_far() {
    let (_, src) = synthetic_source(5, 2);
    let mut teacher = PerfectOracle::new(LinearObjective::at_angle(0.7));
    let mut cfg = SessionConfig::oracle(2);
    cfg.n_query = 50;
    let out = run_session(src, &mut teacher, &cfg);
    assert!(out.queries < 50);
    assert!(matches!(out.end, EndReason::SourceExhausted | EndReason::Unsatisfiable));
    assert!(out.r_best.is_some());
}

#[test]
fn noprune_never_records_preferences_and_only_improves() {
    let (_, src) = synthetic_source(300, 5);
    let gt = LinearObjective::at_angle(0.4);
    let mut teacher = PerfectOracle::new(gt.clone());
    let out = run_noprune(src, &mut teacher, &SessionConfig::oracle(5));
    assert_eq!(out.queries, 10);
    assert!(out.transcript.records.iter().all(|r| r.query.kind == netq_core::learner::QueryKind::Propose));
    assert!(out.transcript.records.iter().all(|r| r.image_before == 0 && r.image_after == 0));
    let q: Vec<f64> = out.trajectory.iter().map(|c| SyntheticPool::true_quality(&gt, c.as_ref().unwrap())).collect();
    assert!(q.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn zero_noise_matches_the_perfect_oracle() {
    for seed in 0..5 {
        let gt = LinearObjective::at_angle(0.9);
        let src = arc_source(300, seed);
        let perfect = run_session(src.clone(), &mut PerfectOracle::new(gt.clone()), &SessionConfig::oracle(seed));
        let model = NoiseModel { p: 0.0, mean_reward: 0.5, opt_reward: 1.0, seed };
        let noisy = run_session(src, &mut ImperfectOracle::new(gt, &model), &SessionConfig::oracle(seed));
        assert_eq!(perfect.transcript, noisy.transcript);
    }
}

#[test]
fn scaling_the_ground_truth_leaves_the_transcript_unchanged() {
    for seed in 0..5 {
        let gt = LinearObjective::at_angle(0.3 + 0.2 * seed as f64);
        let scaled = LinearObjective::new(gt.w.iter().map(|w| w * 7.5).collect());
        let src = arc_source(300, seed);
        let a = run_session(src.clone(), &mut PerfectOracle::new(gt), &SessionConfig::oracle(seed));
        let b = run_session(src, &mut PerfectOracle::new(scaled), &SessionConfig::oracle(seed));
        assert_eq!(a.transcript, b.transcript);
    }
}

#[test]
fn perfect_oracle_is_transitive() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut t = PerfectOracle::new(LinearObjective::at_angle(0.6));
    let better = |t: &mut PerfectOracle<LinearObjective>, a: &Candidate, b: &Candidate| t.answer_compare(a, b).unwrap() != Response::RightBetter;
    for i in 0..300 {
        let c: Vec<Candidate> = (0..3).map(|k| pt(3 * i + k, &[rng.random(), rng.random()])).collect();
        if better(&mut t, &c[0], &c[1]) && better(&mut t, &c[1], &c[2]) {
            assert!(better(&mut t, &c[0], &c[2]));
        }
    }
}

/// Truthful, except that it turns down the opening proposal, which makes the
/// learner compare, and calls its first comparison a tie. On a continuous pool
/// no objective is indifferent between two distinct points, so that answer
/// contradicts every objective.
struct Equivocator {
    truth: PerfectOracle<LinearObjective>,
    compares: usize,
}

impl Teacher for Equivocator {
    fn answer_compare(&mut self, c1: &Candidate, c2: &Candidate) -> Result<Response, TeacherError> {
        self.compares += 1;
        if self.compares == 1 {
            return Ok(Response::Equal);
        }
        self.truth.answer_compare(c1, c2)
    }

    fn answer_propose(&mut self, c: &Candidate, r_best: Option<&Candidate>) -> Result<Response, TeacherError> {
        if r_best.is_none() {
            return Ok(Response::Reject);
        }
        self.truth.answer_propose(c, r_best)
    }
}

fn equivocator() -> Equivocator {
    Equivocator { truth: PerfectOracle::new(LinearObjective::at_angle(0.8)), compares: 0 }
}

#[test]
fn contradictions_end_a_session_without_backups() {
    for seed in 0..5 {
        let mut cfg = SessionConfig::oracle(seed);
        cfg.n_query = 30;
        let out = run_session(arc_source(400, seed), &mut equivocator(), &cfg);
        assert_eq!(out.end, EndReason::Unsatisfiable);
        assert_eq!(out.transcript.records.last().unwrap().response, Response::Equal);
    }
}

#[test]
fn a_satisfiable_backup_takes_over() {
    let mut takeovers = 0;
    for seed in 0..10 {
        let mut cfg = SessionConfig::oracle(seed);
        cfg.n_query = 30;
        cfg.ensemble = Some(EnsembleConfig { replicas: 4, drop_prob: 0.4 });
        let out = run_session(arc_source(400, seed), &mut equivocator(), &cfg);
        let Some(at) = out.transcript.records.iter().position(|r| r.note.as_ref().is_some_and(|n| n.starts_with("backup"))) else {
            assert_eq!(out.end, EndReason::Unsatisfiable);
            continue;
        };
        takeovers += 1;
        let note = out.transcript.records[at].note.as_ref().unwrap();
        let nums: Vec<usize> = note.split_whitespace().filter_map(|w| w.parse().ok()).collect();
        assert!(nums[1] < nums[2], "{note}");
        assert_ne!(out.end, EndReason::Unsatisfiable);
        assert!(out.transcript.records.len() > at + 1);
    }
    assert!(takeovers >= 5, "{takeovers}");
}

#[test]
fn consistent_teachers_never_need_a_backup() {
    for seed in 0..10 {
        let src = arc_source(300, seed);
        let mut cfg = SessionConfig::oracle(seed);
        cfg.ensemble = Some(EnsembleConfig::default());
        let out = run_session(src, &mut PerfectOracle::new(LinearObjective::at_angle(1.0)), &cfg);
        assert!(out.transcript.records.iter().all(|r| r.note.is_none()));
        assert_ne!(out.end, EndReason::Unsatisfiable);
    }
}

#[test]
fn human_bridge_relays_answers_abstentions_and_stop() {
    let (qtx, qrx) = mpsc::sync_channel(1);
    let (atx, arx) = mpsc::channel();
    let src = arc_source(300, 6);
    let worker = std::thread::spawn(move || {
        let mut bridge = HumanBridge::new(qtx, arx, Duration::from_secs(30));
        run_session(src, &mut bridge, &SessionConfig::interactive(6))
    });
    let gt = PerfectOracle::new(LinearObjective::at_angle(0.5));
    let mut keys = Vec::new();
    let mut n = 0;
    while let Ok(p) = qrx.recv() {
        n += 1;
        keys.push(p.query.key());
        let answer = match n {
            3 => Response::Abstain,
            7 => Response::Stop,
            _ => gt.clone().answer(&p.query, p.r_best.as_ref()).unwrap(),
        };
        if n == 1 {
            assert!(!p.can_stop);
        }
        atx.send(answer).unwrap();
    }
    let out = worker.join().unwrap();
    assert_eq!(out.end, EndReason::Stopped);
    assert_ne!(keys[2], keys[3]);
    let abstained = &out.transcript.records[2];
    assert_eq!(abstained.response, Response::Abstain);
    assert_eq!(abstained.image_before, abstained.image_after);
    assert_eq!(out.queries, 5);
}

#[test]
fn human_bridge_reports_timeouts() {
    let (qtx, _qrx) = mpsc::sync_channel(1);
    let (_atx, arx) = mpsc::channel::<Response>();
    let mut bridge = HumanBridge::new(qtx, arx, Duration::from_millis(20));
    assert_eq!(bridge.answer_propose(&pt(1, &[0.0]), None), Err(TeacherError::Timeout));
}

#[test]
fn ill_typed_answers_count_as_abstentions() {
    struct Confused;
    impl Teacher for Confused {
        fn answer_compare(&mut self, _: &Candidate, _: &Candidate) -> Result<Response, TeacherError> {
            Ok(Response::Accept)
        }
        fn answer_propose(&mut self, _: &Candidate, _: Option<&Candidate>) -> Result<Response, TeacherError> {
            Ok(Response::LeftBetter)
        }
    }
    let (_, src) = synthetic_source(50, 1);
    let mut cfg = SessionConfig::oracle(1);
    cfg.confirm_initial = false;
    let out = run_session(src, &mut Confused, &cfg);
    assert_eq!(out.queries, 0);
    assert!(out.transcript.records.iter().all(|r| r.response == Response::Abstain && r.note.is_some()));
}

#[test]
fn transcript_round_trips_through_ndjson() {
    let src = arc_source(300, 9);
    let out = run_session(src, &mut PerfectOracle::new(LinearObjective::at_angle(0.2)), &SessionConfig::oracle(9));
    let text = out.transcript.to_ndjson();
    assert_eq!(text.lines().count(), out.transcript.records.len());
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    for key in ["iter", "query", "response", "image_before", "image_after", "r_best_metrics"] {
        assert!(first.get(key).is_some(), "{key}");
    }
    assert_eq!(Transcript::from_ndjson(&text).unwrap(), out.transcript);
}
