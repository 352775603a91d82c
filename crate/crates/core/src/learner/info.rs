use std::cmp::Ordering;
use std::collections::HashSet;

use crate::pcs::{reward_cmp, Entry, Objective, Pcs, PcsError};
use crate::scenario::Candidate;

use super::{Query, QueryKey};

/// Number of distinct candidates mapped by the entries matching `pred`.
fn removed_image<O: Objective>(g: &Pcs<O>, mut pred: impl FnMut(&Entry<O>) -> bool) -> usize {
    let mut ids = HashSet::new();
    for e in g.entries() {
        if pred(e) {
            ids.insert(e.candidate.id);
        }
    }
    ids.len()
}

fn reward_of<O: Objective>(o: &O, c: Option<&Candidate>) -> f64 {
    c.map_or(f64::NEG_INFINITY, |c| o.reward(c))
}

/// Guaranteed image reduction of comparing `c1` with `c2`, whatever the answer.
pub fn info_compare<O: Objective>(g: &Pcs<O>, c1: &Candidate, c2: &Candidate) -> usize {
    let ord = |e: &Entry<O>| reward_cmp(e.objective.reward(c1), e.objective.reward(c2));
    let left = removed_image(g, |e| ord(e) != Ordering::Greater);
    let right = removed_image(g, |e| ord(e) != Ordering::Less);
    let equal = removed_image(g, |e| ord(e) != Ordering::Equal);
    left.min(right).min(equal)
}

/// Guaranteed image reduction of proposing `c` against the running best.
pub fn info_propose<O: Objective>(g: &Pcs<O>, c: &Candidate, r_best: Option<&Candidate>) -> usize {
    let accept = removed_image(g, |e| {
        let rc = e.objective.reward(c);
        reward_cmp(rc, reward_of(&e.objective, r_best)) != Ordering::Greater
            || reward_cmp(rc, e.objective.reward(&e.candidate)) == Ordering::Equal
    });
    // Without a running best a rejection records nothing.
    let Some(r) = r_best else {
        return 0;
    };
    let reject = removed_image(g, |e| reward_cmp(e.objective.reward(c), e.objective.reward(r)) == Ordering::Greater);
    accept.min(reject)
}

#[derive(Debug, Clone)]
pub struct ScoredQuery {
    pub query: Query,
    pub info: usize,
}

/// Rewards of every image candidate under every objective, computed once per selection.
struct Table {
    image: Vec<Candidate>,
    owner: Vec<usize>,
    rewards: Vec<Vec<f64>>,
    best: Vec<f64>,
}

impl Table {
    fn new<O: Objective>(g: &Pcs<O>, r_best: Option<&Candidate>) -> Self {
        let mut image = g.image();
        image.sort_by_key(|c| c.id);
        let owner = g.entries().iter().map(|e| image.iter().position(|c| c.id == e.candidate.id).expect("mapped")).collect();
        let rewards = g.entries().iter().map(|e| image.iter().map(|c| e.objective.reward(c)).collect()).collect();
        let best = g.entries().iter().map(|e| reward_of(&e.objective, r_best)).collect();
        Table { image, owner, rewards, best }
    }

    /// Distinct owners of the entries matching `pred`, using `mark` as scratch.
    fn count(&self, mark: &mut [u32], stamp: u32, mut pred: impl FnMut(usize) -> bool) -> usize {
        let mut n = 0;
        for (e, &o) in self.owner.iter().enumerate() {
            if mark[o] != stamp && pred(e) {
                mark[o] = stamp;
                n += 1;
            }
        }
        n
    }
}

/// Most informative legal query. Ties go to Propose before Compare, then to
/// lower candidate ids. Queries in `skip` are not considered.
pub fn best_query<O: Objective>(g: &Pcs<O>, r_best: Option<&Candidate>, skip: &HashSet<QueryKey>) -> Result<ScoredQuery, PcsError> {
    let t = Table::new(g, r_best);
    let n = t.image.len();
    let mut mark = vec![0u32; n];
    let mut stamp = 0u32;
    let mut next = || {
        stamp += 1;
        stamp
    };
    let mut best: Option<(usize, Query)> = None;
    let consider = |info: usize, q: Query, best: &mut Option<(usize, Query)>| {
        if best.as_ref().is_none_or(|(b, _)| info > *b) {
            *best = Some((info, q));
        }
    };
    for i in 0..n {
        let c = &t.image[i];
        if r_best.is_some_and(|r| r.id == c.id) {
            continue;
        }
        let q = Query::Propose(c.clone());
        if skip.contains(&q.key()) {
            continue;
        }
        let accept = t.count(&mut mark, next(), |e| {
            let rc = t.rewards[e][i];
            reward_cmp(rc, t.best[e]) != Ordering::Greater || reward_cmp(rc, t.rewards[e][t.owner[e]]) == Ordering::Equal
        });
        let reject = match r_best {
            Some(_) => t.count(&mut mark, next(), |e| reward_cmp(t.rewards[e][i], t.best[e]) == Ordering::Greater),
            None => 0,
        };
        consider(accept.min(reject), q, &mut best);
    }
    for i in 0..n {
        for j in i + 1..n {
            let q = Query::Compare(t.image[i].clone(), t.image[j].clone());
            if skip.contains(&q.key()) {
                continue;
            }
            let ord = |e: usize| reward_cmp(t.rewards[e][i], t.rewards[e][j]);
            let left = t.count(&mut mark, next(), |e| ord(e) != Ordering::Greater);
            let right = t.count(&mut mark, next(), |e| ord(e) != Ordering::Less);
            let equal = t.count(&mut mark, next(), |e| ord(e) != Ordering::Equal);
            consider(left.min(right).min(equal), q, &mut best);
        }
    }
    best.map(|(info, query)| ScoredQuery { query, info }).ok_or(PcsError::EmptyPcs)
}
