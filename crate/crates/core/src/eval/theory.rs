use std::cmp::Ordering;
use std::collections::HashSet;

use serde::Serialize;

use super::median;
use crate::learner::best_query;
use crate::pcs::{lex_cmp, reward_cmp, Objective, Pcs};
use crate::scenario::Candidate;

#[derive(Debug, Clone, thiserror::Error)]
pub enum TheoryError {
    #[error("median quality after {n} queries is below the bound")]
    BoundViolated { n: usize, report: BoundReport },
    #[error("the set is not sortable")]
    NotSortable,
    #[error("best informativeness {info} is below half of {n}")]
    LemmaViolated { n: usize, info: usize },
    #[error("the set is empty")]
    Empty,
}

/// Median quality guaranteed after `n` queries: `2^(-1/(n+1))`.
pub fn bound_threshold(n: usize) -> f64 {
    2f64.powf(-1.0 / (n as f64 + 1.0))
}

/// 1-based order statistics bounding a two-sided confidence interval of
/// level `level` for the median of `reps` samples.
pub fn median_ci_ranks(reps: usize, level: f64) -> (usize, usize) {
    let tail = (1.0 - level) / 2.0;
    // P(Bin(reps, 1/2) <= j), accumulated in log space.
    let ln_half = reps as f64 * 0.5f64.ln();
    let mut ln_choose = 0.0;
    let mut cdf = 0.0;
    let mut lower = 1;
    for j in 0..reps {
        if j > 0 {
            ln_choose += ((reps - j + 1) as f64).ln() - (j as f64).ln();
        }
        cdf += (ln_choose + ln_half).exp();
        if cdf > tail {
            break;
        }
        lower = j + 1;
    }
    let lower = lower.min(reps.div_ceil(2)).max(1);
    (lower, reps + 1 - lower)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub n: usize,
    pub median: f64,
    pub threshold: f64,
    /// Upper end of the 99% confidence interval for the median.
    pub upper: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub reps: usize,
    pub rows: Vec<BoundRow>,
}

/// Checks the median of `samples[rep][n]` against [`bound_threshold`] for every
/// `n` up to 10. A row passes when the threshold lies at or below the upper
/// end of the 99% binomial confidence interval of the median.
pub fn check_logarithmic_bound(samples: &[Vec<f64>]) -> Result<BoundReport, TheoryError> {
    let reps = samples.len();
    if reps == 0 {
        return Err(TheoryError::Empty);
    }
    let width = samples.iter().map(Vec::len).min().unwrap_or(0).min(11);
    let (_, hi) = median_ci_ranks(reps, 0.99);
    let rows: Vec<BoundRow> = (0..width)
        .map(|n| {
            let mut col: Vec<f64> = samples.iter().map(|s| s[n]).collect();
            col.sort_by(f64::total_cmp);
            let threshold = bound_threshold(n);
            let upper = col[hi - 1];
            BoundRow { n, median: median(&col), threshold, upper, ok: upper >= threshold }
        })
        .collect();
    let report = BoundReport { reps, rows };
    match report.rows.iter().find(|r| !r.ok) {
        Some(r) => Err(TheoryError::BoundViolated { n: r.n, report: report.clone() }),
        None => Ok(report),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SortMethod {
    Lexicographic,
    Permutation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sortability {
    pub sortable: bool,
    /// False when the lexicographic order failed and the image was too large to search.
    pub decided: bool,
    pub method: Option<SortMethod>,
    /// Candidate ids of the image in a witness order.
    pub order: Option<Vec<u64>>,
    /// Ids `(o, p, q)` of a triple on which the lexicographic order fails.
    pub counterexample: Option<[u64; 3]>,
}

/// Largest image searched exhaustively.
const MAX_BRUTE_FORCE: usize = 8;

struct Triples {
    /// `better[e][a][b]`: entry `e`'s objective strictly prefers image `a` over image `b`.
    better: Vec<Vec<Vec<bool>>>,
    /// Entries mapped to each image candidate.
    owners: Vec<Vec<usize>>,
}

impl Triples {
    fn new<O: Objective>(g: &Pcs<O>, image: &[Candidate]) -> Self {
        let mut owners = vec![Vec::new(); image.len()];
        let better = g
            .entries()
            .iter()
            .enumerate()
            .map(|(e, entry)| {
                let at = image.iter().position(|c| c.id == entry.candidate.id).expect("entry maps into the image");
                owners[at].push(e);
                let r: Vec<f64> = image.iter().map(|c| entry.objective.reward(c)).collect();
                r.iter().map(|&a| r.iter().map(|&b| reward_cmp(a, b) == Ordering::Greater).collect()).collect()
            })
            .collect();
        Triples { better, owners }
    }

    /// Both conditions for image positions `o ≺ p ≺ q`.
    fn holds(&self, o: usize, p: usize, q: usize) -> bool {
        self.owners[o].iter().all(|&e| self.better[e][p][q]) && self.owners[q].iter().all(|&e| self.better[e][p][o])
    }

    fn first_violation(&self, order: &[usize]) -> Option<(usize, usize, usize)> {
        for k in 0..order.len() {
            for j in 0..k {
                for i in 0..j {
                    if !self.holds(order[i], order[j], order[k]) {
                        return Some((order[i], order[j], order[k]));
                    }
                }
            }
        }
        None
    }

    /// Depth-first search for an order, checking each triple as soon as its last element is placed.
    fn search(&self, order: &mut Vec<usize>, used: &mut [bool]) -> bool {
        if order.len() == used.len() {
            return true;
        }
        for next in 0..used.len() {
            if used[next] {
                continue;
            }
            let ok = (0..order.len()).all(|j| (0..j).all(|i| self.holds(order[i], order[j], next)));
            if !ok {
                continue;
            }
            used[next] = true;
            order.push(next);
            if self.search(order, used) {
                return true;
            }
            order.pop();
            used[next] = false;
        }
        false
    }
}

/// Looks for a total order of the image under which, for every three
/// objectives whose candidates appear in that order, the middle candidate beats
/// the last under the first objective and the first under the last objective.
/// Tries the lexicographic metric order, then every order of small images.
pub fn check_sortability<O: Objective>(g: &Pcs<O>) -> Sortability {
    let mut image = g.image();
    image.sort_by(|a, b| lex_cmp(&a.metrics, &b.metrics).then(a.id.cmp(&b.id)));
    let ids = |order: &[usize]| order.iter().map(|&i| image[i].id).collect::<Vec<_>>();
    let t = Triples::new(g, &image);
    let lex: Vec<usize> = (0..image.len()).collect();
    let Some((o, p, q)) = t.first_violation(&lex) else {
        return Sortability { sortable: true, decided: true, method: Some(SortMethod::Lexicographic), order: Some(ids(&lex)), counterexample: None };
    };
    let counterexample = Some([image[o].id, image[p].id, image[q].id]);
    if image.len() > MAX_BRUTE_FORCE {
        return Sortability { sortable: false, decided: false, method: None, order: None, counterexample };
    }
    let mut order = Vec::with_capacity(image.len());
    let mut used = vec![false; image.len()];
    if t.search(&mut order, &mut used) {
        Sortability { sortable: true, decided: true, method: Some(SortMethod::Permutation), order: Some(ids(&order)), counterexample }
    } else {
        Sortability { sortable: false, decided: true, method: None, order: None, counterexample }
    }
}

/// For a sortable set, checks that the most informative query is guaranteed
/// to remove at least half of the image. Returns that informativeness.
pub fn check_half_lemma<O: Objective>(g: &Pcs<O>, r_best: Option<&Candidate>) -> Result<usize, TheoryError> {
    if g.is_empty() {
        return Err(TheoryError::Empty);
    }
    if !check_sortability(g).sortable {
        return Err(TheoryError::NotSortable);
    }
    let n = g.image_len();
    let info = best_query(g, r_best, &HashSet::new()).map_err(|_| TheoryError::Empty)?.info;
    if info < n / 2 {
        return Err(TheoryError::LemmaViolated { n, info });
    }
    Ok(info)
}

/// A set holding `pairs`, each objective mapped to its best candidate among them.
pub fn pcs_from_pairs<O: Objective>(pairs: &[(O, Candidate)]) -> Pcs<O> {
    let mut g = Pcs::new();
    for (o, c) in pairs {
        g.insert(o.clone(), c.clone());
    }
    g
}

/// Outcome of checking many random sets drawn from one pool.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SortabilitySurvey {
    pub samples: usize,
    pub lexicographic: usize,
    pub permutation: usize,
    pub unsortable: usize,
    pub undecided: usize,
    pub min_image: usize,
    pub max_image: usize,
    /// Sortable samples on which the half lemma was checked, and how many held.
    pub half_lemma_checked: usize,
    pub half_lemma_held: usize,
    /// Candidate ids of the first failing triple found, if any.
    pub counterexample: Option<[u64; 3]>,
}

/// Draws `samples` sets of `sizes` pairs from `pairs` and checks each for
/// sortability and, when sortable, the half lemma.
pub fn sortability_survey<O: Objective>(
    pairs: &[(O, Candidate)],
    samples: usize,
    sizes: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> SortabilitySurvey {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = SortabilitySurvey { samples, min_image: usize::MAX, ..Default::default() };
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    for _ in 0..samples {
        let k = rng.random_range(sizes.clone()).min(pairs.len());
        order.shuffle(&mut rng);
        let picked: Vec<(O, Candidate)> = order[..k].iter().map(|&i| pairs[i].clone()).collect();
        let g = pcs_from_pairs(&picked);
        out.min_image = out.min_image.min(g.image_len());
        out.max_image = out.max_image.max(g.image_len());
        let s = check_sortability(&g);
        match (s.sortable, s.method) {
            (true, Some(SortMethod::Lexicographic)) => out.lexicographic += 1,
            (true, _) => out.permutation += 1,
            (false, _) if s.decided => out.unsortable += 1,
            (false, _) => out.undecided += 1,
        }
        if out.counterexample.is_none() {
            out.counterexample = s.counterexample;
        }
        if s.sortable {
            out.half_lemma_checked += 1;
            if check_half_lemma(&g, None).is_ok() {
                out.half_lemma_held += 1;
            }
        }
    }
    if samples == 0 {
        out.min_image = 0;
    }
    out
}

/// Whether every legal query on the adversarial set of size `n` has
/// informativeness exactly one.
pub fn adversarial_unit_progress(n: usize) -> bool {
    use crate::learner::{info_compare, info_propose};
    let (g, bottom) = crate::pcs::adversarial_pcs(n);
    let image = g.image();
    image.iter().all(|c| info_propose(&g, c, Some(&bottom)) == 1)
        && image.iter().enumerate().all(|(i, a)| image[i + 1..].iter().all(|b| info_compare(&g, a, b) == 1))
}
