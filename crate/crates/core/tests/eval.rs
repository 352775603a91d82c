use std::collections::HashMap;
use std::sync::Arc;

use netq_core::eval::{
    bound_threshold, check_half_lemma, check_logarithmic_bound, check_sortability, median, median_ci_ranks, pool_size_sweep,
    quality, run_experiment, run_synthetic, Algo, ExperimentConfig, QualityCurve, Ranker, SortMethod, TeacherSpec, TheoryError,
};
use netq_core::learner::{run_session, SessionConfig};
use netq_core::net::{generate_demands, Topology};
use netq_core::pcs::{adversarial_pcs, build_pool, LinearObjective, Objective, Pcs, PoolSource, TableObjective};
use netq_core::scenario::{Candidate, McfObjective, ObjectiveInstance, Scenario, ScenarioKind, ScenarioOptions};
use netq_core::teacher::PerfectOracle;
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pt(id: u64, m: &[f64]) -> Candidate {
    Candidate::abstract_point(id, m.to_vec())
}

fn line(n: usize) -> Vec<Candidate> {
    (0..n).map(|i| pt(i as u64 + 1, &[i as f64])).collect()
}

fn cfg(algo: Algo, reps: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig { reps, ..ExperimentConfig::new(algo, TeacherSpec::Perfect, seed) }
}

fn abilene_mcf() -> Scenario {
    let t = Topology::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/topologies/abilene.json")).unwrap();
    let d = generate_demands(&t, 1, 0.5, 7);
    let options = ScenarioOptions { latency_unit: 0.01, ..Default::default() };
    Scenario::new(ScenarioKind::Mcf, t, d, options).unwrap()
}

/// Points on a quarter circle with random-angle linear objectives.
fn arc_pairs(size: usize, seed: u64) -> Vec<(LinearObjective, Candidate)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|i| {
            let theta: f64 = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
            (LinearObjective::at_angle(rng.random_range(0.0..std::f64::consts::FRAC_PI_2)), pt(i as u64 + 1, &[theta.cos(), theta.sin()]))
        })
        .collect()
}

fn pcs_of<O: Objective>(pairs: &[(O, Candidate)]) -> Pcs<O> {
    let mut g = Pcs::new();
    for (o, c) in pairs {
        g.insert(o.clone(), c.clone());
    }
    g
}

#[test]
fn quality_examples() {
    let pool = line(4);
    let gt = LinearObjective::new(vec![1.0]);
    assert_eq!(quality(&pool[3], &pool, &gt), 1.0);
    assert_eq!(quality(&pool[2], &pool, &gt), 0.75);
    assert_eq!(quality(&pt(9, &[-1.0]), &pool, &gt), 0.0);
}

proptest! {
    #[test]
    fn ranking_agrees_with_direct_count_and_is_monotone(
        values in prop::collection::vec(0u8..20, 1..40),
        a in 0u8..20,
        b in 0u8..20,
    ) {
        let pool: Vec<Candidate> = values.iter().enumerate().map(|(i, &v)| pt(i as u64, &[v as f64])).collect();
        let gt = LinearObjective::new(vec![1.0]);
        let ranker = Ranker::new(&pool, &gt);
        let (ca, cb) = (pt(100, &[a as f64]), pt(101, &[b as f64]));
        let (qa, qb) = (quality(&ca, &pool, &gt), quality(&cb, &pool, &gt));
        prop_assert_eq!(ranker.quality(a as f64), qa);
        prop_assert!((0.0..=1.0).contains(&qa));
        if a >= b {
            prop_assert!(qa >= qb);
        }
    }
}

#[test]
fn thresholds_of_the_bound() {
    assert!((bound_threshold(9) - 0.9330).abs() < 5e-5);
    assert!((bound_threshold(1) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    assert_eq!(bound_threshold(0), 0.5);
}

/// Largest `l` with `P(Bin(n, 1/2) <= l - 1) <= 0.005`, in exact integer arithmetic.
fn exact_lower_rank(n: usize) -> usize {
    let total = BigUint::from(1u8) << n;
    let mut choose = BigUint::from(1u8);
    let mut cdf = BigUint::from(0u8);
    let mut lower = 1;
    for j in 0..n {
        if j > 0 {
            choose = choose * BigUint::from(n - j + 1) / BigUint::from(j);
        }
        cdf += &choose;
        if &cdf * BigUint::from(200u8) > total {
            break;
        }
        lower = j + 1;
    }
    lower
}

#[test]
fn median_confidence_ranks_match_exact_binomial() {
    for n in [9, 10, 31, 100, 301] {
        let (lo, hi) = median_ci_ranks(n, 0.99);
        assert_eq!(lo, exact_lower_rank(n), "n = {n}");
        assert_eq!(hi, n + 1 - lo);
    }
    // Normal approximation puts the 301-sample interval near ranks 128 and 174.
    let (lo, hi) = median_ci_ranks(301, 0.99);
    assert!((126..=130).contains(&lo) && (172..=176).contains(&hi));
    assert_eq!(median_ci_ranks(3, 0.99), (1, 3));
}

#[test]
fn bound_check_uses_the_upper_confidence_limit() {
    // 31 reps: passes while at least 31 + 1 - upper rank values reach the threshold.
    let (_, hi) = median_ci_ranks(31, 0.99);
    let passing = 31 + 1 - hi;
    let rows = |good: usize| -> Vec<Vec<f64>> { (0..31).map(|r| vec![if r < good { 0.6 } else { 0.4 }]).collect() };
    assert!(check_logarithmic_bound(&rows(passing)).is_ok());
    match check_logarithmic_bound(&rows(passing - 1)) {
        Err(TheoryError::BoundViolated { n, report }) => {
            assert_eq!(n, 0);
            assert!(!report.rows[0].ok);
        }
        other => panic!("expected a violation, got {other:?}"),
    }
}

/// Literal reading of the definition over every order of the image.
fn sortable_by_brute_force<O: Objective>(g: &Pcs<O>) -> bool {
    let image = g.image();
    let pos_of = |order: &[usize], c: &Candidate| order.iter().position(|&i| image[i].id == c.id).unwrap();
    let beats = |o: &O, a: &Candidate, b: &Candidate| o.reward(a) > o.reward(b) && (o.reward(a) - o.reward(b)).abs() > 1e-9 * o.reward(a).abs().max(o.reward(b).abs());
    let mut order: Vec<usize> = (0..image.len()).collect();
    let check = |order: &[usize]| {
        for o in g.entries() {
            for p in g.entries() {
                for q in g.entries() {
                    let (a, b, c) = (pos_of(order, &o.candidate), pos_of(order, &p.candidate), pos_of(order, &q.candidate));
                    if a < b && b < c && !(beats(&o.objective, &p.candidate, &q.candidate) && beats(&q.objective, &p.candidate, &o.candidate)) {
                        return false;
                    }
                }
            }
        }
        true
    };
    // Heap's algorithm.
    let n = order.len();
    let mut stack = vec![0; n];
    if check(&order) {
        return true;
    }
    let mut i = 0;
    while i < n {
        if stack[i] < i {
            if i % 2 == 0 {
                order.swap(0, i);
            } else {
                order.swap(stack[i], i);
            }
            if check(&order) {
                return true;
            }
            stack[i] += 1;
            i = 0;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    false
}

#[test]
fn sortability_matches_brute_force_on_small_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut yes, mut no) = (0, 0);
    for _ in 0..300 {
        let cands = line(rng.random_range(3..=5));
        let mut g = Pcs::new();
        for _ in 0..rng.random_range(2..=6) {
            let table: HashMap<u64, f64> = cands.iter().map(|c| (c.id, rng.random_range(0..5) as f64)).collect();
            g.insert(TableObjective { rewards: Arc::new(table) }, cands[rng.random_range(0..cands.len())].clone());
        }
        let got = check_sortability(&g);
        let expected = sortable_by_brute_force(&g);
        assert_eq!(got.sortable, expected);
        assert!(got.decided);
        if got.sortable {
            yes += 1;
        } else {
            no += 1;
            assert!(got.counterexample.is_some());
        }
    }
    assert!(yes > 20 && no > 20, "both outcomes exercised: {yes} / {no}");
}

#[test]
fn adversarial_sets_are_not_sortable_and_skip_the_half_lemma() {
    for n in [4, 6] {
        let (g, bottom) = adversarial_pcs(n);
        let s = check_sortability(&g);
        assert!(!s.sortable && s.decided);
        assert!(matches!(check_half_lemma(&g, Some(&bottom)), Err(TheoryError::NotSortable)));
    }
}

#[test]
fn concave_two_metric_sets_are_lexicographically_sortable() {
    for seed in 0..40 {
        let g = pcs_of(&arc_pairs(6 + seed as usize, seed));
        let s = check_sortability(&g);
        assert!(s.sortable, "seed {seed}");
        assert_eq!(s.method, Some(SortMethod::Lexicographic));
        let n = g.image_len();
        let info = check_half_lemma(&g, None).unwrap();
        assert!(info >= n / 2);
    }
}

#[test]
fn half_lemma_on_small_sortable_sets() {
    let pairs = arc_pairs(400, 3);
    let mut found = [false; 2];
    for chunk in pairs.chunks(8) {
        for k in 2..=chunk.len() {
            let g = pcs_of(&chunk[..k]);
            let n = g.image_len();
            if n == 6 || n == 2 {
                let info = check_half_lemma(&g, None).unwrap();
                assert!(info >= n / 2);
                found[(n == 6) as usize] = true;
            }
        }
    }
    assert!(found[0] && found[1]);
}

#[test]
fn mcf_sets_are_lexicographically_sortable() {
    let s = abilene_mcf();
    let pool = build_pool(&s, 300, 4).unwrap();
    let pairs = pool.pair_list();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let mut picked = pairs.clone();
        picked.shuffle(&mut rng);
        picked.truncate(rng.random_range(3..=50));
        let g = pcs_of(&picked);
        let sort = check_sortability(&g);
        assert!(sort.sortable && sort.method == Some(SortMethod::Lexicographic));
        assert!(check_half_lemma(&g, None).unwrap() >= g.image_len() / 2);
    }
}

#[test]
fn one_rep_reproduces_its_session() {
    let pairs = Arc::new(arc_pairs(300, 9));
    let ranking: Vec<Candidate> = pairs.iter().map(|p| p.1.clone()).collect();
    let gt = LinearObjective::at_angle(0.6);
    let c = cfg(Algo::Net10Q, 1, 21);
    let result = run_experiment(&pairs, &ranking, &gt, &c);
    assert_eq!(result.curve.points.len(), 10);

    // The same session, replayed by hand with the first repetition's seed.
    let seeds: Vec<u64> = (0..1).map(|r| netq_core::eval::rep_seed(21, r)).collect();
    let session = SessionConfig { n_query: 10, thresh: 16, ..SessionConfig::oracle(seeds[0]) };
    let out = run_session(PoolSource::new(pairs.clone(), seeds[0]), &mut PerfectOracle::new(gt.clone()), &session);
    for (i, p) in result.curve.points.iter().enumerate() {
        let c = out.trajectory.get(i).or(out.trajectory.last()).unwrap().as_ref().unwrap();
        let q = quality(c, &ranking, &gt);
        assert_eq!((p.median, p.min, p.max), (q, q, q));
    }
}

fn without_timing(meta: &serde_json::Value) -> serde_json::Value {
    let mut m = meta.clone();
    if let Some(o) = m.as_object_mut() {
        o.retain(|k, _| !k.ends_with("_ms"));
    }
    m
}

#[test]
fn experiments_are_deterministic_and_improve_under_a_perfect_oracle() {
    let pairs = Arc::new(arc_pairs(300, 2));
    let ranking: Vec<Candidate> = pairs.iter().map(|p| p.1.clone()).collect();
    let gt = LinearObjective::at_angle(1.1);
    for algo in [Algo::Net10Q, Algo::NoPrune] {
        let a = run_experiment(&pairs, &ranking, &gt, &cfg(algo, 9, 4));
        let b = run_experiment(&pairs, &ranking, &gt, &cfg(algo, 9, 4));
        assert_eq!(a.curve.points, b.curve.points);
        assert_eq!(without_timing(&a.curve.meta), without_timing(&b.curve.meta));
        assert_eq!(a.samples, b.samples);
        for row in &a.samples {
            assert!(row.windows(2).skip(1).all(|w| w[1] >= w[0]), "{algo}: {row:?}");
            assert!(row.iter().all(|q| (0.0..=1.0).contains(q)));
        }
        for p in &a.curve.points {
            assert!(p.min <= p.median && p.median <= p.max);
        }
    }
}

#[test]
fn curves_round_trip_through_csv_and_sidecar() {
    let samples = vec![vec![0.0, 0.5, 0.75], vec![0.0, 0.25, 1.0], vec![0.0, 1.0, 1.0]];
    let curve = QualityCurve::from_samples(&samples, serde_json::json!({ "teacher": "perfect", "seed": 3 }));
    assert_eq!(curve.points.len(), 2);
    assert_eq!((curve.points[0].median, curve.points[0].min, curve.points[0].max), (0.5, 0.25, 1.0));
    assert_eq!(curve.final_median(), Some(1.0));
    let csv = curve.to_csv();
    assert_eq!(csv.lines().next(), Some("query,median,min,max"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    curve.save(&path).unwrap();
    assert!(path.with_extension("json").exists());
    assert_eq!(QualityCurve::load(&path).unwrap(), curve);
    assert!(QualityCurve::from_csv("query,median,min,max\n1,0.5\n", serde_json::Value::Null).is_err());
    assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), 2.5);
}

#[test]
fn sweep_at_full_size_matches_the_plain_experiment() {
    let s = abilene_mcf();
    let master = build_pool(&s, 200, 6).unwrap();
    let gt = ObjectiveInstance::Mcf(McfObjective::reference());
    let c = cfg(Algo::Net10Q, 5, 1);
    let rows = pool_size_sweep(&master, &[50, 200], &gt, &c);
    let plain = run_experiment(&Arc::new(master.pair_list()), &master.designs(), &gt, &c);
    assert_eq!(rows[1].result.samples, plain.samples);
    assert_eq!(rows[0].size, 50);
    let again = pool_size_sweep(&master, &[50], &gt, &c);
    assert_eq!(again[0].result.samples, rows[0].result.samples);
}

#[test]
fn synthetic_runs_start_from_a_uniform_design() {
    let r = run_synthetic(15, 300, 4, 2);
    assert_eq!(r.samples.len(), 15);
    for row in &r.samples {
        assert_eq!(row.len(), 5);
        assert!(row.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }
}

#[test]
fn teacher_specs_parse() {
    assert_eq!("perfect".parse::<TeacherSpec>(), Ok(TeacherSpec::Perfect));
    assert_eq!("imperfect:10".parse::<TeacherSpec>(), Ok(TeacherSpec::Imperfect(10.0)));
    assert!("imperfect:-1".parse::<TeacherSpec>().is_err());
    assert!("noisy".parse::<TeacherSpec>().is_err());
    assert_eq!("NoPrune".parse::<Algo>(), Ok(Algo::NoPrune));
    assert_eq!(TeacherSpec::Imperfect(2.5).to_string(), "imperfect:2.5");
}
