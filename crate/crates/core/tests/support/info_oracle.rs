//! Exhaustive informativeness: play every teacher response against a copy of
//! the set, apply the resulting pruning, and count the candidates whose
//! objectives were discarded.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use netq_core::learner::Query;
use netq_core::pcs::{reward_cmp, Entry, LinearObjective, Objective, Pcs, PrefRelation, PreferenceRecord, TableObjective};
use netq_core::scenario::Candidate;
use rand::Rng;

fn record(lhs: &Candidate, rhs: &Candidate, relation: PrefRelation) -> PreferenceRecord {
    PreferenceRecord { lhs: lhs.clone(), rhs: rhs.clone(), relation, query: 0 }
}

/// Distinct candidates of the entries that do not survive `keep`.
fn discarded<O: Objective>(g: &Pcs<O>, keep: impl Fn(&Entry<O>) -> bool) -> usize {
    g.entries().iter().filter(|e| !keep(e)).map(|e| e.candidate.id).collect::<BTreeSet<_>>().len()
}

/// Worst case, over the three answers, of what a Compare discards.
pub fn compare_info<O: Objective>(g: &Pcs<O>, a: &Candidate, b: &Candidate) -> usize {
    [PrefRelation::Gt, PrefRelation::Lt, PrefRelation::Eq]
        .into_iter()
        .map(|rel| {
            let r = record(a, b, rel);
            discarded(g, |e| r.satisfied_by(&e.objective))
        })
        .min()
        .unwrap()
}

/// Worst case over accept and reject, following the learner's bookkeeping.
pub fn propose_info<O: Objective>(g: &Pcs<O>, c: &Candidate, r_best: Option<&Candidate>) -> usize {
    let still_improvable = |e: &Entry<O>| reward_cmp(e.objective.reward(&e.candidate), e.objective.reward(c)) == Ordering::Greater;
    let accept = match r_best {
        Some(r) => {
            let gt = record(c, r, PrefRelation::Gt);
            discarded(g, |e| gt.satisfied_by(&e.objective) && still_improvable(e))
        }
        None => discarded(g, still_improvable),
    };
    let reject = match r_best {
        Some(r) => {
            let ng = record(c, r, PrefRelation::NotGreater);
            discarded(g, |e| ng.satisfied_by(&e.objective))
        }
        None => 0,
    };
    accept.min(reject)
}

/// All legal queries in selection order: Proposes by id, then Compare pairs.
pub fn legal_queries<O: Objective>(g: &Pcs<O>, r_best: Option<&Candidate>) -> Vec<Query> {
    let mut image = g.image();
    image.sort_by_key(|c| c.id);
    let mut out: Vec<Query> = image.iter().filter(|c| r_best.is_none_or(|r| r.id != c.id)).map(|c| Query::Propose(c.clone())).collect();
    for i in 0..image.len() {
        for j in i + 1..image.len() {
            out.push(Query::Compare(image[i].clone(), image[j].clone()));
        }
    }
    out
}

pub fn query_info<O: Objective>(g: &Pcs<O>, q: &Query, r_best: Option<&Candidate>) -> usize {
    match q {
        Query::Compare(a, b) => compare_info(g, a, b),
        Query::Propose(c) => propose_info(g, c, r_best),
    }
}

/// First query of maximal informativeness.
pub fn best<O: Objective>(g: &Pcs<O>, r_best: Option<&Candidate>) -> Option<(Query, usize)> {
    let mut out: Option<(Query, usize)> = None;
    for q in legal_queries(g, r_best) {
        let info = query_info(g, &q, r_best);
        if out.as_ref().is_none_or(|(_, b)| info > *b) {
            out = Some((q, info));
        }
    }
    out
}

/// Random set over table objectives with small integer rewards, so ties are common.
pub fn random_table_pcs<R: Rng>(rng: &mut R, max_entries: usize) -> (Pcs<TableObjective>, Option<Candidate>) {
    let k = rng.random_range(1..=6u64);
    let cands: Vec<Candidate> = (1..=k + 1).map(|i| Candidate::abstract_point(i, vec![rng.random_range(0..3) as f64, i as f64])).collect();
    let mut g = Pcs::new();
    for _ in 0..rng.random_range(1..=max_entries) {
        let table: HashMap<u64, f64> = cands.iter().map(|c| (c.id, rng.random_range(0..4) as f64)).collect();
        let c = cands[rng.random_range(0..k as usize)].clone();
        g.insert(TableObjective { rewards: Arc::new(table) }, c);
    }
    let r_best = match rng.random_range(0..4) {
        0 => None,
        1 => Some(cands[k as usize].clone()),
        _ => Some(cands[rng.random_range(0..k as usize)].clone()),
    };
    (g, r_best)
}

/// Random set over linear objectives on random points.
pub fn random_linear_pcs<R: Rng>(rng: &mut R, max_entries: usize) -> (Pcs<LinearObjective>, Option<Candidate>) {
    let d = rng.random_range(2..=3);
    let point = |rng: &mut R, id: u64| Candidate::abstract_point(id, (0..d).map(|_| rng.random::<f64>()).collect());
    let mut g = Pcs::new();
    for i in 0..rng.random_range(1..=max_entries) {
        let w = (0..d).map(|_| rng.random::<f64>()).collect();
        let c = point(rng, i as u64 + 1);
        g.insert(LinearObjective::new(w), c);
    }
    let r_best = match rng.random_range(0..3) {
        0 => None,
        1 => Some(point(rng, 100)),
        _ => g.image().first().cloned(),
    };
    (g, r_best)
}
