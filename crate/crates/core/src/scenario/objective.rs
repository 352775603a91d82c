use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ScenarioError, ScenarioKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McfObjective {
    pub w_t: f64,
    pub theta_t: f64,
    pub p_t: f64,
    pub w_l: f64,
    pub theta_l: f64,
    pub p_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BwObjective {
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfObjective {
    pub wn: Vec<f64>,
    pub wf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OspfObjective {
    pub u_hi: f64,
    pub u_lo: f64,
    pub a_lat: f64,
    pub a_util: f64,
}

/// One filled-in objective template. Rewards are always maximized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum ObjectiveInstance {
    Mcf(McfObjective),
    Bw(BwObjective),
    Nf(NfObjective),
    Ospf(OspfObjective),
}

impl McfObjective {
    /// The throughput/latency trade-off used as the MCF ground truth:
    /// `2T - 9L - max(T - 350, 0) - 10 max(L - 28, 0)`.
    pub fn reference() -> Self {
        McfObjective { w_t: 2.0, theta_t: 350.0, p_t: 1.0, w_l: 9.0, theta_l: 28.0, p_l: 10.0 }
    }

    pub fn value(&self, throughput: f64, latency: f64) -> f64 {
        throughput * self.w_t - (throughput - self.theta_t).max(0.0) * self.p_t - latency * self.w_l
            - (latency - self.theta_l).max(0.0) * self.p_l
    }
}

impl OspfObjective {
    /// Cost of the three-branch template; lower is better.
    pub fn cost(&self, latency: f64, utilization: f64) -> f64 {
        if utilization > self.u_hi {
            utilization
        } else if utilization > self.u_lo {
            latency * self.a_lat + utilization * self.a_util
        } else {
            latency
        }
    }
}

impl ObjectiveInstance {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            ObjectiveInstance::Mcf(_) => ScenarioKind::Mcf,
            ObjectiveInstance::Bw(_) => ScenarioKind::Bw,
            ObjectiveInstance::Nf(_) => ScenarioKind::Nf,
            ObjectiveInstance::Ospf(_) => ScenarioKind::Ospf,
        }
    }

    /// Template value on a metric vector in beneficial orientation.
    pub fn eval(&self, m: &[f64]) -> Result<f64, ScenarioError> {
        match self {
            ObjectiveInstance::Mcf(o) => Ok(o.value(m[0], -m[1])),
            ObjectiveInstance::Bw(o) => {
                let mut total = 0.0;
                for (k, (w, avg)) in o.w.iter().zip(m).enumerate() {
                    if *avg <= 0.0 {
                        return Err(ScenarioError::Domain(format!("class {k} has average allocation {avg}")));
                    }
                    total += w * avg.ln();
                }
                Ok(total)
            }
            ObjectiveInstance::Nf(o) => {
                let g = o.wn.len();
                Ok((0..g).map(|i| o.wn[i] * m[i] + o.wf[i] * m[g + i]).sum())
            }
            ObjectiveInstance::Ospf(o) => Ok(-o.cost(-m[0], -m[1])),
        }
    }

    /// Like [`eval`](Self::eval) but maps domain errors to negative infinity.
    pub fn reward(&self, m: &[f64]) -> f64 {
        self.eval(m).unwrap_or(f64::NEG_INFINITY)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |msg: &str| Err(ScenarioError::InvalidObjective(msg.to_string()));
        match self {
            ObjectiveInstance::Mcf(o) => {
                if [o.w_t, o.p_t, o.w_l, o.p_l, o.theta_t, o.theta_l].iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return bad("MCF weights, penalties and thresholds must be finite and nonnegative");
                }
            }
            ObjectiveInstance::Bw(o) => {
                if o.w.is_empty() || o.w.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return bad("BW class weights must be positive");
                }
            }
            ObjectiveInstance::Nf(o) => {
                if o.wn.len() != o.wf.len() || o.wn.iter().chain(&o.wf).any(|w| !(w.is_finite() && *w > 0.0)) {
                    return bad("NF group weights must be positive and paired");
                }
            }
            ObjectiveInstance::Ospf(o) => {
                if !(0.0 < o.u_lo && o.u_lo < o.u_hi && o.u_hi <= 1.0) {
                    return bad("OSPF thresholds must satisfy 0 < u_lo < u_hi <= 1");
                }
                if !(o.a_lat > 0.0 && o.a_util > 0.0) {
                    return bad("OSPF scale factors must be positive");
                }
            }
        }
        Ok(())
    }

    /// Multiplies every weight-like slot by `factor`, leaving thresholds alone.
    /// For `factor > 0` the induced ranking is unchanged.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            ObjectiveInstance::Mcf(o) => ObjectiveInstance::Mcf(McfObjective {
                w_t: o.w_t * factor,
                p_t: o.p_t * factor,
                w_l: o.w_l * factor,
                p_l: o.p_l * factor,
                ..o.clone()
            }),
            ObjectiveInstance::Bw(o) => ObjectiveInstance::Bw(BwObjective { w: o.w.iter().map(|w| w * factor).collect() }),
            ObjectiveInstance::Nf(o) => ObjectiveInstance::Nf(NfObjective {
                wn: o.wn.iter().map(|w| w * factor).collect(),
                wf: o.wf.iter().map(|w| w * factor).collect(),
            }),
            ObjectiveInstance::Ospf(o) => ObjectiveInstance::Ospf(o.clone()),
        }
    }

    /// Stable 64-bit hash of the serialized instance.
    pub fn fingerprint(&self) -> u64 {
        let digest = Sha256::digest(serde_json::to_vec(self).expect("serializable"));
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let o: ObjectiveInstance = serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        o.validate()?;
        Ok(o)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        Self::from_json(&text)
    }
}

/// Parameter ranges for random objectives.
pub(crate) fn sample_mcf<R: Rng + ?Sized>(rng: &mut R, t_max: f64, l_max: f64) -> McfObjective {
    let w_t = rng.random_range(1.0..=10.0);
    let w_l = rng.random_range(1.0..=10.0);
    McfObjective {
        w_t,
        theta_t: rng.random_range(0.4..=0.95) * t_max,
        p_t: rng.random_range(0.0..=2.0 * w_t),
        w_l,
        theta_l: rng.random_range(0.4..=0.95) * l_max,
        p_l: rng.random_range(0.0..=2.0 * w_l),
    }
}

pub(crate) fn sample_weights<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.5..=8.0)).collect()
}

pub(crate) fn sample_ospf<R: Rng + ?Sized>(rng: &mut R) -> OspfObjective {
    let u_lo = rng.random_range(0.3..=0.7);
    OspfObjective {
        u_lo,
        u_hi: rng.random_range(u_lo + 0.1..=1.0),
        a_lat: rng.random_range(0.1..=10.0),
        a_util: rng.random_range(0.1..=10.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq1() -> ObjectiveInstance {
        ObjectiveInstance::Mcf(McfObjective::reference())
    }

    #[test]
    fn reference_values() {
        let o = eq1();
        assert!((o.eval(&[205.2, -10.3]).unwrap() - 317.7).abs() < 1e-9);
        assert!((o.eval(&[470.2, -33.0]).unwrap() - 473.2).abs() < 1e-9);
        assert!((o.eval(&[385.2, -24.5]).unwrap() - 514.7).abs() < 1e-9);
    }

    #[test]
    fn bw_log_utility() {
        let o = ObjectiveInstance::Bw(BwObjective { w: vec![1.0, 1.0] });
        assert_eq!(o.eval(&[1.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(o.eval(&[0.0, 1.0]), Err(ScenarioError::Domain(_))));
        assert_eq!(o.reward(&[0.0, 1.0]), f64::NEG_INFINITY);
    }

    #[test]
    fn ospf_branches() {
        let p = OspfObjective { u_hi: 0.8, u_lo: 0.4, a_lat: 2.0, a_util: 3.0 };
        let o = ObjectiveInstance::Ospf(p);
        assert_eq!(o.eval(&[-10.0, -0.9]).unwrap(), -0.9);
        assert_eq!(o.eval(&[-10.0, -0.5]).unwrap(), -(20.0 + 1.5));
        assert_eq!(o.eval(&[-10.0, -0.2]).unwrap(), -10.0);
    }

    #[test]
    fn nf_weighted_sum() {
        let o = ObjectiveInstance::Nf(NfObjective { wn: vec![1.0, 2.0], wf: vec![3.0, 4.0] });
        assert_eq!(o.eval(&[0.5, 1.0, 0.25, 0.0]).unwrap(), 0.5 + 2.0 + 0.75);
    }

    #[test]
    fn json_shape() {
        let text = eq1().to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["kind"], "mcf");
        assert_eq!(v["params"]["theta_l"], 28.0);
        assert_eq!(ObjectiveInstance::from_json(&text).unwrap(), eq1());
        assert!(ObjectiveInstance::from_json(r#"{"kind":"bw","params":{"w":[1.0,-1.0]}}"#).is_err());
    }
}
