use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Entry, Objective, Pcs};
use crate::scenario::Candidate;

/// Objective given by an explicit reward per candidate id. Unknown ids rank last.
#[derive(Debug, Clone)]
pub struct TableObjective {
    pub rewards: Arc<HashMap<u64, f64>>,
}

impl Objective for TableObjective {
    fn reward(&self, c: &Candidate) -> f64 {
        self.rewards.get(&c.id).copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// Linear objective `w · metrics`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearObjective {
    pub w: Vec<f64>,
}

impl LinearObjective {
    pub fn new(w: Vec<f64>) -> Self {
        LinearObjective { w }
    }

    /// Unit weight vector at angle `phi` in the positive quadrant.
    pub fn at_angle(phi: f64) -> Self {
        LinearObjective { w: vec![phi.cos(), phi.sin()] }
    }
}

impl Objective for LinearObjective {
    fn reward(&self, c: &Candidate) -> f64 {
        self.w.iter().zip(c.metrics.iter()).map(|(a, b)| a * b).sum()
    }
}

/// PCS on which every query has informativeness exactly one, together with a
/// running best ranked last by every objective.
///
/// Objective `i` ranks candidate `i` first and the others by increasing index.
pub fn adversarial_pcs(n: usize) -> (Pcs<TableObjective>, Candidate) {
    assert!(n >= 2, "adversarial construction needs at least two candidates");
    let cands: Vec<Candidate> = (1..=n as u64).map(|i| Candidate::abstract_point(i, vec![i as f64])).collect();
    let bottom = Candidate::abstract_point(0, vec![0.0]);
    let mut entries = Vec::with_capacity(n);
    for (i, c) in cands.iter().enumerate() {
        let mut table = HashMap::new();
        table.insert(bottom.id, 0.0);
        for (j, d) in cands.iter().enumerate() {
            table.insert(d.id, if i == j { (n + 1) as f64 } else { (j + 1) as f64 });
        }
        entries.push(Entry { objective: TableObjective { rewards: Arc::new(table) }, candidate: c.clone() });
    }
    (Pcs::from_entries(entries), bottom)
}

/// Abstract problem whose designs are points of the unit square and whose
/// objectives are linear with nonnegative weights. The true quality of a
/// point is the area of the square it beats.
#[derive(Debug, Clone)]
pub struct SyntheticPool {
    pub pairs: Vec<(LinearObjective, Candidate)>,
}

/// `size` pairs of a uniform point and an independent uniform-angle objective.
/// Pairs are not optimized, so the learner sees candidates drawn uniformly
/// from the design space.
pub fn synthetic_pool(size: usize, seed: u64) -> SyntheticPool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = (0..size)
        .map(|i| {
            let c = Candidate::abstract_point(i as u64 + 1, vec![rng.random::<f64>(), rng.random::<f64>()]);
            (LinearObjective::at_angle(rng.random_range(0.0..std::f64::consts::FRAC_PI_2)), c)
        })
        .collect();
    SyntheticPool { pairs }
}

impl SyntheticPool {
    /// Fraction of the unit square scoring at most `c` under `o`.
    pub fn true_quality(o: &LinearObjective, c: &Candidate) -> f64 {
        let t = o.reward(c);
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let value = |p: &[f64; 2]| o.w[0] * p[0] + o.w[1] * p[1] - t;
        let mut clipped: Vec<[f64; 2]> = Vec::new();
        for i in 0..4 {
            let (p, q) = (square[i], square[(i + 1) % 4]);
            let (vp, vq) = (value(&p), value(&q));
            if vp <= 0.0 {
                clipped.push(p);
            }
            if (vp < 0.0 && vq > 0.0) || (vp > 0.0 && vq < 0.0) {
                let s = vp / (vp - vq);
                clipped.push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
            }
        }
        let n = clipped.len();
        let twice: f64 = (0..n)
            .map(|i| {
                let (a, b) = (clipped[i], clipped[(i + 1) % n]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum();
        (twice / 2.0).abs().clamp(0.0, 1.0)
    }
}
