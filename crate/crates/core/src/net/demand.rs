use std::collections::HashSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{NetError, NodeId, Topology};

#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub src: NodeId,
    pub dst: NodeId,
    pub class: usize,
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemandMatrix {
    pub classes: usize,
    pub flows: Vec<Flow>,
}

#[derive(Serialize, Deserialize)]
struct FlowRecord {
    src: String,
    dst: String,
    class: usize,
    demand: f64,
}

#[derive(Serialize, Deserialize)]
struct DemandRecord {
    classes: usize,
    flows: Vec<FlowRecord>,
}

impl DemandMatrix {
    pub fn new(classes: usize, flows: Vec<Flow>) -> Result<Self, NetError> {
        let m = DemandMatrix { classes, flows };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), NetError> {
        if self.classes == 0 {
            return Err(NetError::Validation("at least one class is required".into()));
        }
        let mut seen = HashSet::new();
        for f in &self.flows {
            if f.src == f.dst {
                return Err(NetError::Validation(format!("flow {}->{}: src equals dst", f.src, f.dst)));
            }
            if f.class >= self.classes {
                return Err(NetError::Validation(format!("flow {}->{}: class {} out of range", f.src, f.dst, f.class)));
            }
            if !(f.demand.is_finite() && f.demand >= 0.0) {
                return Err(NetError::Validation(format!("flow {}->{}: bad demand", f.src, f.dst)));
            }
            if !seen.insert((f.src, f.dst, f.class)) {
                return Err(NetError::Validation(format!("flow {}->{} class {} repeated", f.src, f.dst, f.class)));
            }
        }
        Ok(())
    }

    pub fn load(t: &Topology, path: impl AsRef<Path>) -> Result<Self, NetError> {
        Self::from_json(t, &std::fs::read_to_string(path)?)
    }

    pub fn from_json(t: &Topology, text: &str) -> Result<Self, NetError> {
        let rec: DemandRecord = serde_json::from_str(text)?;
        let lookup = |n: &str| t.node_id(n).ok_or_else(|| NetError::Validation(format!("unknown node {n}")));
        let flows = rec
            .flows
            .iter()
            .map(|f| Ok(Flow { src: lookup(&f.src)?, dst: lookup(&f.dst)?, class: f.class, demand: f.demand }))
            .collect::<Result<Vec<_>, NetError>>()?;
        Self::new(rec.classes, flows)
    }

    pub fn to_json(&self, t: &Topology) -> String {
        let rec = DemandRecord {
            classes: self.classes,
            flows: self
                .flows
                .iter()
                .map(|f| FlowRecord {
                    src: t.node_name(f.src).to_string(),
                    dst: t.node_name(f.dst).to_string(),
                    class: f.class,
                    demand: f.demand,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&rec).expect("serializable")
    }

    pub fn total(&self) -> f64 {
        self.flows.iter().map(|f| f.demand).sum()
    }

    /// Keeps the flows of `pairs` seeded random node pairs, every class
    /// included, rescaled so the total demand is unchanged.
    pub fn sample_pairs(&self, pairs: usize, seed: u64) -> DemandMatrix {
        use rand::seq::SliceRandom;
        let mut all: Vec<(NodeId, NodeId)> = self.flows.iter().map(|f| (f.src, f.dst)).collect();
        all.sort_unstable();
        all.dedup();
        all.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        all.truncate(pairs);
        let keep: HashSet<(NodeId, NodeId)> = all.into_iter().collect();
        let mut flows: Vec<Flow> = self.flows.iter().filter(|f| keep.contains(&(f.src, f.dst))).cloned().collect();
        let kept: f64 = flows.iter().map(|f| f.demand).sum();
        if kept > 0.0 {
            let factor = self.total() / kept;
            for f in &mut flows {
                f.demand *= factor;
            }
        }
        DemandMatrix { classes: self.classes, flows }
    }
}

/// Gravity-model demands: one flow per ordered node pair and class, sized by
/// `degree(src) * degree(dst)` with a seeded jitter in [0.5, 1.5), and scaled
/// so the total equals `scale` times the summed arc capacity.
pub fn generate_demands(t: &Topology, k_classes: usize, scale: f64, seed: u64) -> DemandMatrix {
    assert!(k_classes >= 1 && scale > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = t.node_count();
    let mut flows = Vec::with_capacity(n * n.saturating_sub(1) * k_classes);
    for s in 0..n {
        for d in 0..n {
            if s == d {
                continue;
            }
            for class in 0..k_classes {
                let jitter: f64 = rng.random_range(0.5..1.5);
                let demand = (t.degree(s) * t.degree(d)) as f64 * jitter;
                flows.push(Flow { src: s, dst: d, class, demand });
            }
        }
    }
    let raw: f64 = flows.iter().map(|f| f.demand).sum();
    if raw > 0.0 {
        let factor = scale * t.total_arc_capacity() / raw;
        for f in &mut flows {
            f.demand *= factor;
        }
    }
    DemandMatrix { classes: k_classes, flows }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_pairs_keep_every_class_and_the_total() {
        let t = line();
        let d = generate_demands(&t, 2, 1.0, 3);
        let s = d.sample_pairs(2, 9);
        assert_eq!(s.flows.len(), 4);
        assert!((s.total() - d.total()).abs() < 1e-9 * d.total());
        assert_eq!(s, d.sample_pairs(2, 9));
        assert_eq!(d.sample_pairs(100, 1).flows.len(), d.flows.len());
    }

    fn line() -> Topology {
        Topology::from_links("l", &["a", "b", "c"], &[("a", "b", 10.0, 1), ("b", "c", 10.0, 1)]).unwrap()
    }

    #[test]
    fn counts_and_normalization() {
        let t = line();
        let m = generate_demands(&t, 2, 0.5, 1);
        assert_eq!(m.flows.len(), 12);
        assert!((m.total() - 20.0).abs() < 1e-9);
        assert_eq!(m.flows.iter().filter(|f| f.class == 1).count(), 6);
        assert_eq!(m, generate_demands(&t, 2, 0.5, 1));
        assert_ne!(m, generate_demands(&t, 2, 0.5, 2));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let t = line();
        let m = generate_demands(&t, 1, 1.0, 3);
        assert_eq!(DemandMatrix::from_json(&t, &m.to_json(&t)).unwrap(), m);
        let dup = r#"{"classes":1,"flows":[{"src":"a","dst":"b","class":0,"demand":1},{"src":"a","dst":"b","class":0,"demand":2}]}"#;
        assert!(DemandMatrix::from_json(&t, dup).is_err());
        let loop_ = r#"{"classes":1,"flows":[{"src":"a","dst":"a","class":0,"demand":1}]}"#;
        assert!(DemandMatrix::from_json(&t, loop_).is_err());
    }
}
