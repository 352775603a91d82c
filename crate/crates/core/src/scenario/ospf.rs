use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;

use crate::net::{DemandMatrix, NetError, Topology};

use super::{OspfObjective, Scenario, ScenarioError};

const MOVES: [i64; 8] = [-8, -4, -2, -1, 1, 2, 4, 8];
const MAX_WEIGHT: i64 = 64;

/// Outcome of routing a demand matrix with ECMP over configured link weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EcmpResult {
    /// Load over capacity for every arc.
    pub utilization: Vec<f64>,
    /// Demand-weighted mean of the expected physical path length.
    pub avg_latency: f64,
    pub max_utilization: f64,
}

/// Routes every flow on its shortest paths under `weights` (one per link),
/// splitting equally at each node among the tied next hops.
pub fn ecmp_route(t: &Topology, d: &DemandMatrix, weights: &[u32]) -> Result<EcmpResult, NetError> {
    if weights.len() != t.links().len() {
        return Err(NetError::Validation(format!("expected {} link weights, got {}", t.links().len(), weights.len())));
    }
    if weights.contains(&0) {
        return Err(NetError::Validation("link weights must be at least 1".into()));
    }
    let n = t.node_count();
    let arcs = t.arcs();
    let mut load = vec![0.0; arcs.len()];
    let mut latency_sum = 0.0;
    let mut demand_sum = 0.0;
    let mut by_dst: Vec<Vec<f64>> = vec![Vec::new(); n];
    for f in &d.flows {
        if by_dst[f.dst].is_empty() {
            by_dst[f.dst] = vec![0.0; n];
        }
        by_dst[f.dst][f.src] += f.demand;
    }
    for (dst, inject) in by_dst.iter().enumerate() {
        if inject.is_empty() {
            continue;
        }
        let dist = distances_to(t, weights, dst);
        let mut order: Vec<usize> = (0..n).filter(|&v| dist[v] != u64::MAX).collect();
        order.sort_by_key(|&v| Reverse(dist[v]));
        let mut flow = inject.clone();
        for &u in &order {
            if u == dst || flow[u] == 0.0 {
                continue;
            }
            let hops = next_hops(t, weights, &dist, u);
            let share = flow[u] / hops.len() as f64;
            for a in hops {
                load[a] += share;
                flow[arcs[a].dst] += share;
            }
        }
        // Expected physical length to `dst`, filled in increasing distance.
        let mut expected = vec![0.0; n];
        for &u in order.iter().rev() {
            if u == dst {
                continue;
            }
            let hops = next_hops(t, weights, &dist, u);
            expected[u] = hops.iter().map(|&a| arcs[a].weight as f64 + expected[arcs[a].dst]).sum::<f64>() / hops.len() as f64;
        }
        for (src, &amount) in inject.iter().enumerate() {
            if amount == 0.0 {
                continue;
            }
            if dist[src] == u64::MAX {
                return Err(NetError::Unreachable { src: t.node_name(src).into(), dst: t.node_name(dst).into() });
            }
            latency_sum += amount * expected[src];
            demand_sum += amount;
        }
    }
    let utilization: Vec<f64> = load.iter().zip(arcs).map(|(l, a)| l / a.capacity).collect();
    let max_utilization = utilization.iter().copied().fold(0.0, f64::max);
    let avg_latency = if demand_sum > 0.0 { latency_sum / demand_sum } else { 0.0 };
    Ok(EcmpResult { utilization, avg_latency, max_utilization })
}

fn next_hops(t: &Topology, weights: &[u32], dist: &[u64], u: usize) -> Vec<usize> {
    let arcs = t.arcs();
    t.out_arcs(u)
        .iter()
        .copied()
        .filter(|&a| {
            let v = arcs[a].dst;
            dist[v] != u64::MAX && dist[u] == weights[arcs[a].link] as u64 + dist[v]
        })
        .collect()
}

fn distances_to(t: &Topology, weights: &[u32], dst: usize) -> Vec<u64> {
    let arcs = t.arcs();
    let mut dist = vec![u64::MAX; t.node_count()];
    let mut heap = BinaryHeap::new();
    dist[dst] = 0;
    heap.push(Reverse((0u64, dst)));
    while let Some(Reverse((du, u))) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        // Both arcs of a link share its weight, so distances from `dst` equal distances to it.
        for &a in t.out_arcs(u) {
            let v = arcs[a].dst;
            let nd = du + weights[arcs[a].link] as u64;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((nd, v)));
            }
        }
    }
    dist
}

fn cost(s: &Scenario, o: &OspfObjective, w: &[u32]) -> Result<f64, NetError> {
    let r = ecmp_route(s.topology(), s.demands(), w)?;
    Ok(o.cost(r.avg_latency, r.max_utilization))
}

/// Steepest-descent local search over single-link weight moves, restarted
/// from random weights. Returns the cheapest assignment found.
pub(crate) fn improve<R: Rng + ?Sized>(s: &Scenario, o: &OspfObjective, rng: &mut R) -> Result<Vec<f64>, ScenarioError> {
    let links = s.topology().links().len();
    let mut best: Option<(f64, Vec<u32>)> = None;
    for _ in 0..s.options().ospf_restarts.max(1) {
        let mut w: Vec<u32> = (0..links).map(|_| rng.random_range(1..=MAX_WEIGHT as u32)).collect();
        let mut here = cost(s, o, &w)?;
        for _ in 0..s.options().ospf_iterations {
            let mut step: Option<(f64, usize, u32)> = None;
            for l in 0..links {
                let old = w[l];
                for m in MOVES {
                    let nw = old as i64 + m;
                    if !(1..=MAX_WEIGHT).contains(&nw) {
                        continue;
                    }
                    w[l] = nw as u32;
                    let c = cost(s, o, &w)?;
                    if c < here && step.is_none_or(|(sc, _, _)| c < sc) {
                        step = Some((c, l, nw as u32));
                    }
                }
                w[l] = old;
            }
            match step {
                Some((c, l, nw)) => {
                    w[l] = nw;
                    here = c;
                }
                None => break,
            }
        }
        if best.as_ref().is_none_or(|(bc, _)| here < *bc) {
            best = Some((here, w));
        }
    }
    let (_, w) = best.expect("at least one restart");
    Ok(w.into_iter().map(f64::from).collect())
}
