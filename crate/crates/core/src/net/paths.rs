use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use super::{DemandMatrix, NetError, NodeId, Topology};

/// A loop-free directed path, stored both as nodes and as arc indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Path {
    pub weight: u64,
    pub nodes: Vec<NodeId>,
    pub arcs: Vec<usize>,
}

impl Path {
    /// Sum of link weights along the path.
    pub fn weight(&self) -> u64 {
        self.weight
    }

    pub fn uses_link(&self, t: &Topology, link: usize) -> bool {
        self.arcs.iter().any(|&a| t.arcs()[a].link == link)
    }
}

/// Tunnels per flow, in the order of the demand matrix.
#[derive(Debug, Clone)]
pub struct PathSet {
    pub tunnels: Vec<Vec<Path>>,
}

impl PathSet {
    pub fn build(t: &Topology, demands: &DemandMatrix, k: usize) -> Result<Self, NetError> {
        let tunnels = demands
            .flows
            .iter()
            .map(|f| k_shortest_paths(t, f.src, f.dst, k))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PathSet { tunnels })
    }

    pub fn tunnel_count(&self) -> usize {
        self.tunnels.iter().map(Vec::len).sum()
    }
}

/// Shortest path avoiding the blocked nodes and arcs. Among equal-weight
/// shortest paths the one with the lexicographically smallest node sequence wins.
fn shortest_path(t: &Topology, src: NodeId, dst: NodeId, blocked_nodes: &[bool], blocked_arcs: &[bool]) -> Option<Path> {
    let n = t.node_count();
    let arcs = t.arcs();
    let mut dist = vec![u64::MAX; n];
    dist[dst] = 0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, dst)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &out in t.out_arcs(v) {
            // Arcs come in pairs, so `out ^ 1` is the arc entering v.
            let a = out ^ 1;
            let u = arcs[a].src;
            if blocked_arcs[a] || blocked_nodes[u] {
                continue;
            }
            let nd = d + arcs[a].weight as u64;
            if nd < dist[u] {
                dist[u] = nd;
                heap.push(Reverse((nd, u)));
            }
        }
    }
    if dist[src] == u64::MAX {
        return None;
    }
    let mut nodes = vec![src];
    let mut path_arcs = Vec::new();
    let mut u = src;
    while u != dst {
        let next = t
            .out_arcs(u)
            .iter()
            .copied()
            .filter(|&a| {
                let v = arcs[a].dst;
                !blocked_arcs[a] && !blocked_nodes[v] && dist[v] != u64::MAX && dist[v] + arcs[a].weight as u64 == dist[u]
            })
            .min_by_key(|&a| arcs[a].dst)?;
        path_arcs.push(next);
        u = arcs[next].dst;
        nodes.push(u);
    }
    Some(Path { weight: dist[src], nodes, arcs: path_arcs })
}

/// Up to `k` loop-free paths from `src` to `dst` by Yen's algorithm, in
/// nondecreasing weight with ties broken by node-id sequence.
pub fn k_shortest_paths(t: &Topology, src: NodeId, dst: NodeId, k: usize) -> Result<Vec<Path>, NetError> {
    assert!(src != dst && k >= 1);
    let n = t.node_count();
    let m = t.arcs().len();
    let unreachable = || NetError::Unreachable { src: t.node_name(src).to_string(), dst: t.node_name(dst).to_string() };
    let first = shortest_path(t, src, dst, &vec![false; n], &vec![false; m]).ok_or_else(unreachable)?;
    let mut found = vec![first];
    let mut candidates: BTreeSet<Path> = BTreeSet::new();
    while found.len() < k {
        let last = found.last().expect("nonempty").clone();
        for i in 0..last.nodes.len() - 1 {
            let spur = last.nodes[i];
            let root_nodes = &last.nodes[..=i];
            let mut blocked_arcs = vec![false; m];
            for p in &found {
                if p.nodes.len() > i && p.nodes[..=i] == *root_nodes {
                    blocked_arcs[p.arcs[i]] = true;
                }
            }
            let mut blocked_nodes = vec![false; n];
            for &v in &root_nodes[..i] {
                blocked_nodes[v] = true;
            }
            if let Some(tail) = shortest_path(t, spur, dst, &blocked_nodes, &blocked_arcs) {
                let root_weight: u64 = last.arcs[..i].iter().map(|&a| t.arcs()[a].weight as u64).sum();
                let mut nodes = root_nodes.to_vec();
                nodes.extend_from_slice(&tail.nodes[1..]);
                let mut arcs = last.arcs[..i].to_vec();
                arcs.extend_from_slice(&tail.arcs);
                let cand = Path { weight: root_weight + tail.weight, nodes, arcs };
                if !found.contains(&cand) {
                    candidates.insert(cand);
                }
            }
        }
        match candidates.pop_first() {
            Some(p) => found.push(p),
            None => break,
        }
    }
    Ok(found)
}
