//! The four traffic-engineering synthesis problems: feasible regions, metric
//! groups, objective templates and the generators used by the learner.

mod bw;
mod candidate;
mod frontier;
mod mcf;
mod nf;
mod objective;
mod ospf;

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::net::{DemandMatrix, NetError, PathSet, Topology};
use crate::solve::{LpOracle, Simplex, SolveError};

pub use bw::LogUtility;
pub use candidate::Candidate;
pub use frontier::{pareto_frontier_2d, FrontierVertex};
pub use mcf::improve_direct as mcf_improve_direct;
pub use nf::nf_evaluate;
pub use objective::{BwObjective, McfObjective, NfObjective, ObjectiveInstance, OspfObjective};
pub use ospf::{ecmp_route, EcmpResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Mcf,
    Bw,
    Nf,
    Ospf,
}

impl ScenarioKind {
    /// Whether the template space is sortable in the sense used by the halving lemma.
    pub fn sortable(self) -> bool {
        matches!(self, ScenarioKind::Mcf | ScenarioKind::Ospf)
    }

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Mcf => "mcf",
            ScenarioKind::Bw => "bw",
            ScenarioKind::Nf => "nf",
            ScenarioKind::Ospf => "ospf",
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mcf" => Ok(ScenarioKind::Mcf),
            "bw" => Ok(ScenarioKind::Bw),
            "nf" => Ok(ScenarioKind::Nf),
            "ospf" => Ok(ScenarioKind::Ospf),
            other => Err(format!("unknown scenario {other}")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("objective outside its domain: {0}")]
    Domain(String),
    #[error("invalid objective: {0}")]
    InvalidObjective(String),
    #[error("parameters violate the feasibility conditions: {0}")]
    InfeasibleParams(String),
    #[error("no feasible design exists")]
    InfeasibleScenario,
    #[error("optimum does not beat the floor")]
    NotBetter,
    #[error("malformed input: {0}")]
    Parse(String),
}

fn default_tunnels() -> usize {
    3
}
fn default_latency_unit() -> f64 {
    1.0
}
fn default_groups() -> usize {
    4
}
fn default_restarts() -> usize {
    32
}
fn default_iterations() -> usize {
    200
}
fn default_bw_floor() -> f64 {
    1e-6
}
fn default_fw_tol() -> f64 {
    1e-5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOptions {
    /// Tunnels per flow for MCF and NF.
    #[serde(default = "default_tunnels")]
    pub tunnels: usize,
    /// Multiplier turning `Σ alloc · path weight` into the MCF latency metric.
    #[serde(default = "default_latency_unit")]
    pub latency_unit: f64,
    /// Number of NF flow groups.
    #[serde(default = "default_groups")]
    pub groups: usize,
    #[serde(default = "default_restarts")]
    pub ospf_restarts: usize,
    #[serde(default = "default_iterations")]
    pub ospf_iterations: usize,
    /// BW allocations are bounded below by this fraction of demand.
    #[serde(default = "default_bw_floor")]
    pub bw_floor: f64,
    #[serde(default = "default_fw_tol")]
    pub fw_tol: f64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

/// Self-contained serialized form of a scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub topology: Value,
    pub demands: Value,
    #[serde(default)]
    pub options: ScenarioOptions,
}

pub(crate) struct McfCache {
    pub frontier: Vec<FrontierVertex>,
    pub t_max: f64,
    pub l_max: f64,
}

/// A comparative synthesis problem instance. Immutable apart from lazily
/// built solver caches.
pub struct Scenario {
    kind: ScenarioKind,
    topology: Topology,
    demands: DemandMatrix,
    paths: PathSet,
    options: ScenarioOptions,
    groups: Vec<usize>,
    mcf: OnceLock<Result<McfCache, String>>,
    bw_frontier: OnceLock<Result<Vec<FrontierVertex>, String>>,
    bw_oracle: OnceLock<Result<LpOracle, String>>,
    nf_lp: OnceLock<Result<Simplex<f64>, String>>,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("kind", &self.kind)
            .field("topology", &self.topology.name())
            .field("flows", &self.demands.flows.len())
            .finish()
    }
}

impl Scenario {
    pub fn new(kind: ScenarioKind, topology: Topology, demands: DemandMatrix, options: ScenarioOptions) -> Result<Self, ScenarioError> {
        let k = match kind {
            ScenarioKind::Mcf | ScenarioKind::Nf => options.tunnels.max(1),
            ScenarioKind::Bw => 1,
            ScenarioKind::Ospf => 0,
        };
        let paths = if k == 0 { PathSet { tunnels: Vec::new() } } else { PathSet::build(&topology, &demands, k)? };
        let groups = nf::flow_groups(&topology, &demands, options.groups.max(1));
        Ok(Scenario {
            kind,
            topology,
            demands,
            paths,
            options,
            groups,
            mcf: OnceLock::new(),
            bw_frontier: OnceLock::new(),
            bw_oracle: OnceLock::new(),
            nf_lp: OnceLock::new(),
        })
    }

    pub fn from_spec(spec: &ScenarioSpec) -> Result<Self, ScenarioError> {
        let topology = Topology::from_json(&spec.topology.to_string())?;
        let demands = DemandMatrix::from_json(&topology, &spec.demands.to_string())?;
        Self::new(spec.kind, topology, demands, spec.options.clone())
    }

    pub fn spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            kind: self.kind,
            topology: serde_json::from_str(&self.topology.to_json()).expect("valid json"),
            demands: serde_json::from_str(&self.demands.to_json(&self.topology)).expect("valid json"),
            options: self.options.clone(),
        }
    }

    pub fn kind(&self) -> ScenarioKind {
        self.kind
    }

    pub fn sortable(&self) -> bool {
        self.kind.sortable()
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn demands(&self) -> &DemandMatrix {
        &self.demands
    }

    pub fn paths(&self) -> &PathSet {
        &self.paths
    }

    pub fn options(&self) -> &ScenarioOptions {
        &self.options
    }

    /// NF group of every flow.
    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn group_count(&self) -> usize {
        self.options.groups.max(1)
    }

    pub fn metric_dim(&self) -> usize {
        match self.kind {
            ScenarioKind::Mcf | ScenarioKind::Ospf => 2,
            ScenarioKind::Bw => self.demands.classes,
            ScenarioKind::Nf => 2 * self.group_count(),
        }
    }

    pub fn param_dim(&self) -> usize {
        match self.kind {
            ScenarioKind::Mcf | ScenarioKind::Nf => self.paths.tunnel_count(),
            ScenarioKind::Bw => self.demands.flows.len(),
            ScenarioKind::Ospf => self.topology.links().len(),
        }
    }

    /// Per-arc load and per-flow served amount of a tunnel allocation.
    fn tunnel_loads(&self, params: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut load = vec![0.0; self.topology.arcs().len()];
        let mut served = vec![0.0; self.paths.tunnels.len()];
        let mut j = 0;
        for (f, tunnels) in self.paths.tunnels.iter().enumerate() {
            for p in tunnels {
                served[f] += params[j];
                for &a in &p.arcs {
                    load[a] += params[j];
                }
                j += 1;
            }
        }
        (load, served)
    }

    /// Checks the demand and capacity assertions with relative slack `1e-7`.
    pub fn check_feasible(&self, params: &[f64]) -> Result<(), ScenarioError> {
        const SLACK: f64 = 1e-7;
        let fail = |msg: String| Err(ScenarioError::InfeasibleParams(msg));
        if params.len() != self.param_dim() {
            return fail(format!("expected {} parameters, got {}", self.param_dim(), params.len()));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return fail("non-finite parameter".into());
        }
        match self.kind {
            ScenarioKind::Ospf => {
                for (i, w) in params.iter().enumerate() {
                    if w.fract() != 0.0 || !(1.0..=64.0).contains(w) {
                        return fail(format!("link {i} weight {w} outside integers 1..=64"));
                    }
                }
                Ok(())
            }
            ScenarioKind::Bw => {
                let mut load = vec![0.0; self.topology.arcs().len()];
                for (i, (x, f)) in params.iter().zip(&self.demands.flows).enumerate() {
                    if *x < -SLACK || *x > f.demand + SLACK * (1.0 + f.demand) {
                        return fail(format!("flow {i} allocation {x} outside [0, {}]", f.demand));
                    }
                    for &a in &self.paths.tunnels[i][0].arcs {
                        load[a] += x;
                    }
                }
                self.check_capacity(&load)
            }
            ScenarioKind::Mcf | ScenarioKind::Nf => {
                if let Some(i) = params.iter().position(|v| *v < -SLACK) {
                    return fail(format!("tunnel {i} has negative allocation"));
                }
                let (load, served) = self.tunnel_loads(params);
                for (i, (s, f)) in served.iter().zip(&self.demands.flows).enumerate() {
                    if *s > f.demand + SLACK * (1.0 + f.demand) {
                        return fail(format!("flow {i} served {s} exceeds demand {}", f.demand));
                    }
                }
                self.check_capacity(&load)
            }
        }
    }

    fn check_capacity(&self, load: &[f64]) -> Result<(), ScenarioError> {
        for (a, (l, arc)) in load.iter().zip(self.topology.arcs()).enumerate() {
            if *l > arc.capacity + 1e-7 * (1.0 + arc.capacity) {
                return Err(ScenarioError::InfeasibleParams(format!("arc {a} load {l} exceeds capacity {}", arc.capacity)));
            }
        }
        Ok(())
    }

    /// Metric vector of a feasible design, in beneficial orientation.
    pub fn metrics_of(&self, params: &[f64]) -> Result<Vec<f64>, ScenarioError> {
        self.check_feasible(params)?;
        Ok(self.metrics_unchecked(params))
    }

    fn metrics_unchecked(&self, params: &[f64]) -> Vec<f64> {
        match self.kind {
            ScenarioKind::Mcf => {
                let mut t = 0.0;
                let mut l = 0.0;
                let mut j = 0;
                for tunnels in &self.paths.tunnels {
                    for p in tunnels {
                        t += params[j];
                        l += params[j] * p.weight() as f64;
                        j += 1;
                    }
                }
                vec![t, -l * self.options.latency_unit]
            }
            ScenarioKind::Bw => {
                let k = self.demands.classes;
                let mut sum = vec![0.0; k];
                let mut count = vec![0usize; k];
                for (x, f) in params.iter().zip(&self.demands.flows) {
                    sum[f.class] += x;
                    count[f.class] += 1;
                }
                sum.iter().zip(&count).map(|(s, c)| if *c == 0 { 0.0 } else { s / *c as f64 }).collect()
            }
            ScenarioKind::Nf => {
                let (zn, zf) = nf_evaluate(self, params);
                zn.into_iter().chain(zf).collect()
            }
            ScenarioKind::Ospf => {
                let weights: Vec<u32> = params.iter().map(|w| *w as u32).collect();
                match ecmp_route(&self.topology, &self.demands, &weights) {
                    Ok(r) => vec![-r.avg_latency, -r.max_utilization],
                    Err(_) => vec![f64::NEG_INFINITY, f64::NEG_INFINITY],
                }
            }
        }
    }

    /// Builds a candidate after verifying feasibility.
    pub fn candidate(&self, params: Vec<f64>) -> Result<Candidate, ScenarioError> {
        let metrics = self.metrics_of(&params)?;
        if metrics.iter().any(|m| !m.is_finite()) {
            return Err(ScenarioError::InfeasibleParams("metrics are not finite".into()));
        }
        Ok(Candidate::new(params, metrics))
    }

    pub fn eval_objective(&self, o: &ObjectiveInstance, m: &[f64]) -> Result<f64, ScenarioError> {
        if o.kind() != self.kind {
            return Err(ScenarioError::InvalidObjective(format!("{:?} objective on {:?} scenario", o.kind(), self.kind)));
        }
        o.eval(m)
    }

    pub fn sample_objective<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ObjectiveInstance, ScenarioError> {
        Ok(match self.kind {
            ScenarioKind::Mcf => {
                let c = self.mcf_cache()?;
                ObjectiveInstance::Mcf(objective::sample_mcf(rng, c.t_max, c.l_max))
            }
            ScenarioKind::Bw => ObjectiveInstance::Bw(BwObjective { w: objective::sample_weights(rng, self.demands.classes) }),
            ScenarioKind::Nf => {
                let g = self.group_count();
                let wn = objective::sample_weights(rng, g);
                let wf = objective::sample_weights(rng, g);
                ObjectiveInstance::Nf(NfObjective { wn, wf })
            }
            ScenarioKind::Ospf => ObjectiveInstance::Ospf(objective::sample_ospf(rng)),
        })
    }

    /// Best design under `o`. With a floor, fails with `NotBetter` unless the
    /// optimum strictly beats the floor under `o`.
    pub fn improve(&self, o: &ObjectiveInstance, floor: Option<&Candidate>) -> Result<Candidate, ScenarioError> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(o.fingerprint());
        self.improve_with(o, floor, &mut rng)
    }

    pub fn improve_with<R: Rng + ?Sized>(
        &self,
        o: &ObjectiveInstance,
        floor: Option<&Candidate>,
        rng: &mut R,
    ) -> Result<Candidate, ScenarioError> {
        if o.kind() != self.kind {
            return Err(ScenarioError::InvalidObjective(format!("{:?} objective on {:?} scenario", o.kind(), self.kind)));
        }
        o.validate()?;
        let params = match (self.kind, o) {
            (ScenarioKind::Mcf, ObjectiveInstance::Mcf(p)) => mcf::improve(self, p)?,
            (ScenarioKind::Bw, ObjectiveInstance::Bw(p)) => bw::improve(self, p)?,
            (ScenarioKind::Nf, ObjectiveInstance::Nf(p)) => nf::improve(self, p)?,
            (ScenarioKind::Ospf, ObjectiveInstance::Ospf(p)) => ospf::improve(self, p, rng)?,
            _ => unreachable!("kind checked above"),
        };
        let c = self.candidate(params)?;
        if let Some(f) = floor {
            let mine = o.reward(&c.metrics);
            let theirs = o.reward(&f.metrics);
            if mine.partial_cmp(&(theirs + 1e-9 * (1.0 + theirs.abs()))) != Some(std::cmp::Ordering::Greater) {
                return Err(ScenarioError::NotBetter);
            }
        }
        Ok(c)
    }

    /// An arbitrary Pareto-optimal design.
    pub fn syn_prog<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Candidate, ScenarioError> {
        let o = self.sample_objective(rng)?;
        self.improve_with(&o, None, rng)
    }

    /// Human-readable digest of a metric vector.
    pub fn digest(&self, m: &[f64]) -> Value {
        match self.kind {
            ScenarioKind::Mcf => json!({"throughput": m[0], "latency": -m[1]}),
            ScenarioKind::Bw => json!({"class_averages": m}),
            ScenarioKind::Ospf => json!({"latency": -m[0], "max_utilization": -m[1]}),
            ScenarioKind::Nf => {
                let g = self.group_count();
                let groups: Vec<Value> = (0..g).map(|i| json!({"group": i, "zn": m[i], "zf": m[g + i]})).collect();
                json!({"groups": groups})
            }
        }
    }

    pub(crate) fn mcf_cache(&self) -> Result<&McfCache, ScenarioError> {
        self.mcf
            .get_or_init(|| mcf::build_cache(self).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| ScenarioError::Parse(format!("MCF frontier unavailable: {e}")))
    }

    /// Pareto frontier of the MCF image in (throughput, -latency), with vertex allocations.
    pub fn mcf_frontier(&self) -> Result<&[FrontierVertex], ScenarioError> {
        Ok(&self.mcf_cache()?.frontier)
    }

    /// Largest throughput and the least latency achieving it.
    pub fn mcf_extremes(&self) -> Result<(f64, f64), ScenarioError> {
        let c = self.mcf_cache()?;
        Ok((c.t_max, c.l_max))
    }
}
