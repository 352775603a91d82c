use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::NetError;

pub type NodeId = usize;

/// An undirected capacitated link as declared in the topology file.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
    pub capacity: f64,
    pub weight: u32,
}

/// One direction of a [`Link`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub src: NodeId,
    pub dst: NodeId,
    pub capacity: f64,
    pub weight: u32,
    pub link: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LinkRecord {
    src: String,
    dst: String,
    capacity: f64,
    weight: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TopologyRecord {
    name: String,
    nodes: Vec<String>,
    links: Vec<LinkRecord>,
}

/// Capacitated network. Each declared link is expanded into two arcs:
/// arc `2i` runs `src -> dst` of link `i`, arc `2i + 1` the reverse.
#[derive(Debug, Clone)]
pub struct Topology {
    name: String,
    nodes: Vec<String>,
    index: HashMap<String, NodeId>,
    links: Vec<Link>,
    arcs: Vec<Arc>,
    out_arcs: Vec<Vec<usize>>,
}

impl Topology {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetError> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, NetError> {
        let rec: TopologyRecord = serde_json::from_str(text)?;
        let mut index = HashMap::new();
        for (i, n) in rec.nodes.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(NetError::Validation(format!("duplicate node {n}")));
            }
        }
        let mut links = Vec::with_capacity(rec.links.len());
        let mut seen = HashSet::new();
        for l in &rec.links {
            let tag = format!("{}-{}", l.src, l.dst);
            let src = *index
                .get(&l.src)
                .ok_or_else(|| NetError::Validation(format!("link {tag}: unknown node {}", l.src)))?;
            let dst = *index
                .get(&l.dst)
                .ok_or_else(|| NetError::Validation(format!("link {tag}: unknown node {}", l.dst)))?;
            if src == dst {
                return Err(NetError::Validation(format!("link {tag}: self-loop")));
            }
            if !(l.capacity.is_finite() && l.capacity > 0.0) {
                return Err(NetError::Validation(format!("link {tag}: capacity must be positive")));
            }
            if l.weight < 1 || l.weight > u32::MAX as i64 {
                return Err(NetError::Validation(format!("link {tag}: weight must be an integer >= 1")));
            }
            if !seen.insert((src.min(dst), src.max(dst))) {
                return Err(NetError::Validation(format!("link {tag}: duplicate link")));
            }
            links.push(Link { src, dst, capacity: l.capacity, weight: l.weight as u32 });
        }
        Ok(Self::build(rec.name, rec.nodes, index, links))
    }

    /// Builds a topology from names and `(src, dst, capacity, weight)` tuples.
    pub fn from_links(name: &str, nodes: &[&str], links: &[(&str, &str, f64, u32)]) -> Result<Self, NetError> {
        let rec = TopologyRecord {
            name: name.to_string(),
            nodes: nodes.iter().map(|s| s.to_string()).collect(),
            links: links
                .iter()
                .map(|&(s, d, c, w)| LinkRecord { src: s.into(), dst: d.into(), capacity: c, weight: w as i64 })
                .collect(),
        };
        Self::from_json(&serde_json::to_string(&rec)?)
    }

    fn build(name: String, nodes: Vec<String>, index: HashMap<String, NodeId>, links: Vec<Link>) -> Self {
        let mut arcs = Vec::with_capacity(2 * links.len());
        let mut out_arcs = vec![Vec::new(); nodes.len()];
        for (i, l) in links.iter().enumerate() {
            for (s, d) in [(l.src, l.dst), (l.dst, l.src)] {
                out_arcs[s].push(arcs.len());
                arcs.push(Arc { src: s, dst: d, capacity: l.capacity, weight: l.weight, link: i });
            }
        }
        for v in &mut out_arcs {
            v.sort_by_key(|&a| arcs[a].dst);
        }
        Topology { name, nodes, index, links, arcs, out_arcs }
    }

    pub fn to_json(&self) -> String {
        let rec = TopologyRecord {
            name: self.name.clone(),
            nodes: self.nodes.clone(),
            links: self
                .links
                .iter()
                .map(|l| LinkRecord {
                    src: self.nodes[l.src].clone(),
                    dst: self.nodes[l.dst].clone(),
                    capacity: l.capacity,
                    weight: l.weight as i64,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&rec).expect("serializable")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_name(&self, v: NodeId) -> &str {
        &self.nodes[v]
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Outgoing arc indices of `v`, ordered by head node id.
    pub fn out_arcs(&self, v: NodeId) -> &[usize] {
        &self.out_arcs[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.out_arcs[v].len()
    }

    pub fn total_arc_capacity(&self) -> f64 {
        self.arcs.iter().map(|a| a.capacity).sum()
    }
}
