use std::cmp::Ordering;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{consistent, reward_cmp, Objective, Pcs, PreferenceRecord};
use crate::scenario::{Candidate, ObjectiveInstance, Scenario};

/// Objective draws per generated pair before giving up.
pub const MAX_REJECTIONS: usize = 5000;

/// Supplier of objective/candidate pairs for a session.
pub trait Source<O: Objective> {
    /// A pair whose objective satisfies `records` and strictly prefers its
    /// candidate over `r_best`, or `None` when none can be found.
    fn draw(&mut self, records: &[PreferenceRecord], r_best: Option<&Candidate>) -> Option<(O, Candidate)>;

    /// The first candidate of a session.
    fn initial(&mut self) -> Option<Candidate>;

    /// A pair chosen without regard to preferences.
    fn random_pair(&mut self) -> Option<(O, Candidate)>;

    /// Whether some objective available to the source satisfies `records`.
    fn satisfiable(&mut self, records: &[PreferenceRecord]) -> bool;
}

fn beats<O: Objective>(o: &O, c: &Candidate, r_best: Option<&Candidate>) -> bool {
    r_best.is_none_or(|r| reward_cmp(o.reward(c), o.reward(r)) == Ordering::Greater)
}

/// Draws from a precomputed pool in a per-session random order. Each drawn
/// candidate is paired with an unused pool objective that satisfies the
/// preferences and ranks it above the running best, trying the candidate's own
/// objective first.
#[derive(Debug, Clone)]
pub struct PoolSource<O> {
    pairs: Arc<Vec<(O, Candidate)>>,
    remaining: Vec<usize>,
    /// Objectives in search order.
    objectives: Vec<usize>,
    /// Objectives not yet handed out or contradicted.
    open: Vec<bool>,
}

impl<O: Objective> PoolSource<O> {
    pub fn new(pairs: Arc<Vec<(O, Candidate)>>, seed: u64) -> Self {
        let mut remaining: Vec<usize> = (0..pairs.len()).collect();
        remaining.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let objectives = remaining.clone();
        let open = vec![true; pairs.len()];
        PoolSource { pairs, remaining, objectives, open }
    }

    pub fn remaining(&self) -> usize {
        self.remaining.len()
    }

}

impl<O: Objective> Source<O> for PoolSource<O> {
    fn draw(&mut self, records: &[PreferenceRecord], r_best: Option<&Candidate>) -> Option<(O, Candidate)> {
        for &k in &self.objectives {
            // Preferences only accumulate, so a contradicted objective is never usable again.
            if self.open[k] && !consistent(&self.pairs[k].0, records) {
                self.open[k] = false;
            }
        }
        self.objectives.retain(|&k| self.open[k]);
        let mut tried = 0;
        while !self.remaining.is_empty() && tried < MAX_REJECTIONS {
            let i = self.remaining.remove(0);
            let c = &self.pairs[i].1;
            let pick = if self.open[i] && beats(&self.pairs[i].0, c, r_best) {
                Some(i)
            } else {
                self.objectives.iter().copied().find(|&k| beats(&self.pairs[k].0, c, r_best))
            };
            match pick {
                Some(k) => {
                    self.open[k] = false;
                    self.objectives.retain(|&j| j != k);
                    return Some((self.pairs[k].0.clone(), c.clone()));
                }
                None => tried += 1,
            }
        }
        None
    }

    fn initial(&mut self) -> Option<Candidate> {
        self.remaining.first().map(|&i| self.pairs[i].1.clone())
    }

    fn random_pair(&mut self) -> Option<(O, Candidate)> {
        if self.remaining.is_empty() {
            return None;
        }
        let i = self.remaining.remove(0);
        Some(self.pairs[i].clone())
    }

    fn satisfiable(&mut self, records: &[PreferenceRecord]) -> bool {
        self.pairs.iter().any(|(o, _)| consistent(o, records))
    }
}

/// Generates pairs on the fly from a scenario.
#[derive(Clone)]
pub struct ScenarioSource {
    scenario: Arc<Scenario>,
    rng: ChaCha8Rng,
    improve: bool,
}

impl ScenarioSource {
    pub fn new(scenario: Arc<Scenario>, seed: u64, improve: bool) -> Self {
        ScenarioSource { scenario, rng: ChaCha8Rng::seed_from_u64(seed), improve }
    }
}

impl Source<ObjectiveInstance> for ScenarioSource {
    fn draw(&mut self, records: &[PreferenceRecord], r_best: Option<&Candidate>) -> Option<(ObjectiveInstance, Candidate)> {
        let c = self.scenario.syn_prog(&mut self.rng).ok()?;
        for _ in 0..MAX_REJECTIONS {
            let o = self.scenario.sample_objective(&mut self.rng).ok()?;
            if !consistent(&o, records) || !beats(&o, &c, r_best) {
                continue;
            }
            if self.improve {
                if let Ok(better) = self.scenario.improve_with(&o, Some(&c), &mut self.rng) {
                    return Some((o, better));
                }
            }
            return Some((o, c));
        }
        None
    }

    fn initial(&mut self) -> Option<Candidate> {
        self.scenario.syn_prog(&mut self.rng).ok()
    }

    fn random_pair(&mut self) -> Option<(ObjectiveInstance, Candidate)> {
        let o = self.scenario.sample_objective(&mut self.rng).ok()?;
        let c = self.scenario.improve_with(&o, None, &mut self.rng).ok()?;
        Some((o, c))
    }

    fn satisfiable(&mut self, records: &[PreferenceRecord]) -> bool {
        (0..MAX_REJECTIONS).any(|_| self.scenario.sample_objective(&mut self.rng).is_ok_and(|o| consistent(&o, records)))
    }
}

/// Inserts pairs from `source` until the image reaches `target` candidates or
/// the source runs dry. Returns the number of pairs inserted.
pub fn generate_more<O: Objective, S: Source<O> + ?Sized>(
    pcs: &mut Pcs<O>,
    source: &mut S,
    records: &[PreferenceRecord],
    r_best: Option<&Candidate>,
    target: usize,
) -> usize {
    let mut added = 0;
    while pcs.image_len() < target {
        match source.draw(records, r_best) {
            Some((o, c)) => {
                pcs.insert(o, c);
                added += 1;
            }
            None => break,
        }
    }
    added
}
