use sha2::{Digest, Sha256};

use crate::net::{DemandMatrix, Topology};
use crate::solve::{LpStatus, Relation, Simplex};

use super::mcf::tunnel_region;
use super::{NfObjective, Scenario, ScenarioError};

/// Assigns each flow to one of `g` groups by a hash of its endpoint names.
pub(crate) fn flow_groups(t: &Topology, d: &DemandMatrix, g: usize) -> Vec<usize> {
    d.flows
        .iter()
        .map(|f| {
            let mut h = Sha256::new();
            h.update(t.node_name(f.src).as_bytes());
            h.update([0u8]);
            h.update(t.node_name(f.dst).as_bytes());
            let digest = h.finalize();
            (u64::from_le_bytes(digest[..8].try_into().expect("8 bytes")) % g as u64) as usize
        })
        .collect()
}

/// For every flow, the tunnel index sets that survive some single link
/// failure, keeping only the inclusion-minimal ones. Indices are global
/// tunnel positions.
fn surviving_sets(s: &Scenario) -> Vec<Vec<Vec<usize>>> {
    let t = s.topology();
    let mut out = Vec::with_capacity(s.paths().tunnels.len());
    let mut offset = 0;
    for tunnels in &s.paths().tunnels {
        let k = tunnels.len();
        let mut sets: Vec<Vec<usize>> = Vec::new();
        let mut some_link_spares_all = false;
        for link in 0..t.links().len() {
            let alive: Vec<usize> = (0..k).filter(|&i| !tunnels[i].uses_link(t, link)).map(|i| offset + i).collect();
            if alive.len() == k {
                some_link_spares_all = true;
            } else if !sets.contains(&alive) {
                sets.push(alive);
            }
        }
        if some_link_spares_all && sets.is_empty() {
            sets.push((offset..offset + k).collect());
        }
        let minimal: Vec<Vec<usize>> = sets
            .iter()
            .filter(|a| !sets.iter().any(|b| b.len() < a.len() && b.iter().all(|x| a.contains(x))))
            .cloned()
            .collect();
        out.push(minimal);
        offset += k;
    }
    out
}

/// Per-group guaranteed served fraction under normal operation (`zn`) and
/// under the worst single link failure (`zf`). Groups without demand report 1.
pub fn nf_evaluate(s: &Scenario, params: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let g = s.group_count();
    let t = s.topology();
    let mut zn = vec![1.0f64; g];
    let mut zf = vec![1.0f64; g];
    let mut offset = 0;
    for (f, tunnels) in s.paths().tunnels.iter().enumerate() {
        let k = tunnels.len();
        let demand = s.demands().flows[f].demand;
        let alloc = &params[offset..offset + k];
        offset += k;
        if demand <= 0.0 {
            continue;
        }
        let group = s.groups()[f];
        let served: f64 = alloc.iter().sum();
        zn[group] = zn[group].min(served / demand);
        for link in 0..t.links().len() {
            let alive: f64 = (0..k).filter(|&i| !tunnels[i].uses_link(t, link)).map(|i| alloc[i]).sum();
            zf[group] = zf[group].min(alive / demand);
        }
    }
    (zn, zf)
}

fn build_lp(s: &Scenario) -> Result<Simplex<f64>, ScenarioError> {
    let n = s.paths().tunnel_count();
    let g = s.group_count();
    let mut p = tunnel_region(s, 2 * g);
    for i in 0..2 * g {
        p.set_bounds(n + i, 0.0, Some(1.0));
    }
    let sets = surviving_sets(s);
    let mut offset = 0;
    for (f, tunnels) in s.paths().tunnels.iter().enumerate() {
        let k = tunnels.len();
        let demand = s.demands().flows[f].demand;
        let group = s.groups()[f];
        if demand > 0.0 {
            let mut normal: Vec<(usize, f64)> = (offset..offset + k).map(|j| (j, 1.0)).collect();
            normal.push((n + group, -demand));
            p.add_sparse(&normal, Relation::Ge, 0.0);
            for set in &sets[f] {
                let mut row: Vec<(usize, f64)> = set.iter().map(|&j| (j, 1.0)).collect();
                row.push((n + g + group, -demand));
                p.add_sparse(&row, Relation::Ge, 0.0);
            }
        }
        offset += k;
    }
    Ok(Simplex::new(&p)?)
}

pub(crate) fn improve(s: &Scenario, o: &NfObjective) -> Result<Vec<f64>, ScenarioError> {
    let g = s.group_count();
    if o.wn.len() != g {
        return Err(ScenarioError::InvalidObjective(format!("expected {g} groups")));
    }
    let n = s.paths().tunnel_count();
    let template = s.nf_lp.get_or_init(|| {
        let mut lp = build_lp(s).map_err(|e| e.to_string())?;
        lp.prepare().map_err(|e| e.to_string())?;
        Ok(lp)
    });
    // Every call starts from the same basis, so results do not depend on call order.
    let mut lp = template.clone().map_err(|e| ScenarioError::Parse(format!("NF program unavailable: {e}")))?;
    let mut c = vec![0.0; n + 2 * g];
    c[n..n + g].copy_from_slice(&o.wn);
    c[n + g..].copy_from_slice(&o.wf);
    let sol = lp.reoptimize(&c)?;
    if sol.status != LpStatus::Optimal {
        return Err(ScenarioError::InfeasibleScenario);
    }
    Ok(sol.x[..n].to_vec())
}
