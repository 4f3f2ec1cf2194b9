//! Clustering graph, maximum-likelihood perspective, consensus hierarchy
//! assembly and maximum-likelihood frontier selection.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::clique::{maximum_clique, BitSet};
use crate::error::{Error, Result};
use crate::hierarchy::{is_consistent, Clustering, HFrontier, Hierarchy, HierarchySpec, ItemId, NodeIdx};

/// Workers as vertices, consistent pairs as edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusteringGraph {
    pub workers: Vec<Clustering>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl ClusteringGraph {
    pub fn len(&self) -> usize {
        self.workers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.workers.is_empty()
    }

    pub fn adjacency(&self) -> Vec<BitSet> {
        let mut adj = vec![BitSet::new(self.workers.len()); self.workers.len()];
        for &(a, b) in &self.edges {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        adj
    }

    /// Edges labelled with worker ids instead of vertex indices.
    pub fn worker_edges(&self) -> BTreeSet<(u32, u32)> {
        self.edges
            .iter()
            .map(|&(a, b)| (self.workers[a].worker(), self.workers[b].worker()))
            .collect()
    }

    /// Graphviz rendering; vertices are labelled by worker id.
    pub fn to_dot(&self, clique: &[usize]) -> String {
        let mut out = String::from("graph clustering {\n");
        for (i, w) in self.workers.iter().enumerate() {
            let style = if clique.contains(&i) { ", style=filled" } else { "" };
            out.push_str(&format!("  n{i} [label=\"worker {}\"{style}];\n", w.worker()));
        }
        for &(a, b) in &self.edges {
            out.push_str(&format!("  n{a} -- n{b};\n"));
        }
        out.push_str("}\n");
        out
    }
}

pub fn build_clustering_graph(workers: &[Clustering]) -> Result<ClusteringGraph> {
    if let Some(first) = workers.first() {
        let universe = first.universe();
        if workers.iter().any(|w| w.universe() != universe) {
            return Err(Error::DomainMismatch);
        }
    }
    let mut edges = BTreeSet::new();
    for i in 0..workers.len() {
        for j in i + 1..workers.len() {
            if is_consistent(&workers[i], &workers[j])? {
                edges.insert((i, j));
            }
        }
    }
    Ok(ClusteringGraph {
        workers: workers.to_vec(),
        edges,
    })
}

/// Vertex indices of a maximum clique; the lexicographically smallest one
/// when several exist.
pub fn max_clique(g: &ClusteringGraph) -> Vec<usize> {
    maximum_clique(&g.adjacency())
}

/// A hierarchy with per-node support: how many workers produced exactly
/// that node's item set as one of their clusters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ConsensusNode", into = "ConsensusNode")]
pub struct ConsensusHierarchy {
    pub hierarchy: Hierarchy,
    pub votes: Vec<u32>,
}

/// Nested JSON form with items and votes on every node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsensusNode {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub items: Vec<ItemId>,
    pub votes: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ConsensusNode>,
}

impl From<ConsensusHierarchy> for ConsensusNode {
    fn from(ch: ConsensusHierarchy) -> Self {
        fn nest(ch: &ConsensusHierarchy, v: NodeIdx) -> ConsensusNode {
            ConsensusNode {
                label: ch.hierarchy.label(v).map(str::to_owned),
                items: ch.hierarchy.items(v).to_vec(),
                votes: ch.votes[v],
                children: ch.hierarchy.children(v).iter().map(|&c| nest(ch, c)).collect(),
            }
        }
        nest(&ch, 0)
    }
}

impl TryFrom<ConsensusNode> for ConsensusHierarchy {
    type Error = Error;

    fn try_from(root: ConsensusNode) -> Result<Self> {
        fn spec(n: &ConsensusNode) -> HierarchySpec {
            HierarchySpec {
                label: n.label.clone(),
                items: n.items.clone(),
                children: n.children.iter().map(spec).collect(),
            }
        }
        let hierarchy = Hierarchy::from_spec(&spec(&root))?;
        // Both the arena and this walk are breadth-first.
        let mut votes = Vec::with_capacity(hierarchy.len());
        let mut queue = std::collections::VecDeque::from([&root]);
        while let Some(n) = queue.pop_front() {
            votes.push(n.votes);
            queue.extend(n.children.iter());
        }
        Ok(ConsensusHierarchy { hierarchy, votes })
    }
}

impl ConsensusHierarchy {
    /// Builds the hierarchy of a laminar family with the given support per set.
    pub fn from_weighted_sets(universe: &BTreeSet<ItemId>, sets: &BTreeMap<BTreeSet<ItemId>, u32>) -> Result<Self> {
        let list: Vec<BTreeSet<ItemId>> = sets.keys().cloned().collect();
        let (hierarchy, map) = Hierarchy::from_laminar(universe, &list)?;
        let mut votes = vec![0u32; hierarchy.len()];
        for (set, node) in list.iter().zip(map) {
            if let Some(v) = node {
                votes[v] += sets[set];
            }
        }
        Ok(ConsensusHierarchy { hierarchy, votes })
    }

    pub fn universe(&self) -> BTreeSet<ItemId> {
        self.hierarchy.universe()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph consensus {\n");
        for v in self.hierarchy.node_indices() {
            let items = self.hierarchy.items(v);
            let name = self
                .hierarchy
                .label(v)
                .map(str::to_owned)
                .unwrap_or_else(|| format!("{} items", items.len()));
            out.push_str(&format!("  h{v} [label=\"{name}\\nvotes={}\"];\n", self.votes[v]));
        }
        for v in self.hierarchy.node_indices() {
            for &c in self.hierarchy.children(v) {
                out.push_str(&format!("  h{v} -> h{c};\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Assembles the hierarchy implied by a set of pairwise consistent
/// clusterings of `universe`.
pub fn assemble_consensus(workers: &[Clustering], universe: &BTreeSet<ItemId>) -> Result<ConsensusHierarchy> {
    if universe.is_empty() {
        return Err(Error::InvalidClustering("empty universe".into()));
    }
    if workers.iter().any(|w| w.universe() != *universe) {
        return Err(Error::DomainMismatch);
    }
    for i in 0..workers.len() {
        for j in i + 1..workers.len() {
            if !is_consistent(&workers[i], &workers[j])? {
                return Err(Error::NotConsistent(i, j));
            }
        }
    }
    let mut support: BTreeMap<BTreeSet<ItemId>, u32> = BTreeMap::new();
    for w in workers {
        for c in w.cluster_sets() {
            *support.entry(c).or_default() += 1;
        }
    }
    ConsensusHierarchy::from_weighted_sets(universe, &support)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredFrontier {
    pub frontier: HFrontier,
    pub score: f64,
}

/// Highest-weight frontier by tree DP: `best(v) = max(w(v), sum best(c))`,
/// keeping `v` itself on ties.
pub fn best_frontier(h: &Hierarchy, weights: &[f64]) -> ScoredFrontier {
    fn solve(h: &Hierarchy, w: &[f64], v: NodeIdx) -> (f64, Vec<NodeIdx>) {
        if h.is_leaf(v) {
            return (w[v], vec![v]);
        }
        let mut sum = 0.0;
        let mut nodes = Vec::new();
        for &c in h.children(v) {
            let (s, mut n) = solve(h, w, c);
            sum += s;
            nodes.append(&mut n);
        }
        if w[v] >= sum {
            (w[v], vec![v])
        } else {
            (sum, nodes)
        }
    }
    let (score, nodes) = solve(h, weights, 0);
    ScoredFrontier {
        frontier: HFrontier::new(nodes),
        score,
    }
}

/// The frontier with the largest total vote count.
pub fn ml_frontier(ch: &ConsensusHierarchy) -> HFrontier {
    ml_frontier_scored(ch).frontier
}

pub fn ml_frontier_scored(ch: &ConsensusHierarchy) -> ScoredFrontier {
    let weights: Vec<f64> = ch.votes.iter().map(|&v| v as f64).collect();
    best_frontier(&ch.hierarchy, &weights)
}

/// Total weight of an arbitrary frontier.
pub fn frontier_score(f: &HFrontier, weights: &[f64]) -> f64 {
    f.nodes.iter().map(|&v| weights[v]).sum()
}
