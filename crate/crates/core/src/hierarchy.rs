//! Concept hierarchies, their frontiers, worker clusterings, and the
//! consistency relation between clusterings.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ItemId = u32;
pub type WorkerId = u32;

/// An item to be clustered. Features are opaque tags consumed only by
/// ground-truth construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub id: ItemId,
    #[serde(default)]
    pub features: Vec<String>,
}

impl Item {
    pub fn new(id: ItemId, features: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Item {
            id,
            features: features.into_iter().map(Into::into).collect(),
        }
    }

    pub fn has_feature(&self, tag: &str) -> bool {
        self.features.iter().any(|f| f == tag)
    }
}

/// Checks that item ids are unique.
pub fn check_items(items: &[Item]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for it in items {
        if !seen.insert(it.id) {
            return Err(Error::InvalidClustering(format!("duplicate item id {}", it.id)));
        }
    }
    Ok(())
}

pub type NodeIdx = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
struct HNode {
    items: Vec<ItemId>,
    children: Vec<NodeIdx>,
    parent: Option<NodeIdx>,
    depth: usize,
    label: Option<String>,
}

/// Nested JSON form of a hierarchy. Leaves list their items; internal nodes
/// may omit them (they are the union of their children).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub items: Vec<ItemId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<HierarchySpec>,
}

impl HierarchySpec {
    pub fn leaf(label: impl Into<String>, items: impl IntoIterator<Item = ItemId>) -> Self {
        HierarchySpec {
            label: Some(label.into()),
            items: items.into_iter().collect(),
            children: Vec::new(),
        }
    }

    pub fn node(label: impl Into<String>, children: Vec<HierarchySpec>) -> Self {
        HierarchySpec {
            label: Some(label.into()),
            items: Vec::new(),
            children,
        }
    }
}

/// A laminar tree of item sets. Node 0 is the root and nodes are stored in
/// breadth-first order; children of every node partition its item set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HierarchySpec", into = "HierarchySpec")]
pub struct Hierarchy {
    nodes: Vec<HNode>,
}

impl TryFrom<HierarchySpec> for Hierarchy {
    type Error = Error;

    fn try_from(spec: HierarchySpec) -> Result<Self> {
        Hierarchy::from_spec(&spec)
    }
}

impl From<Hierarchy> for HierarchySpec {
    fn from(h: Hierarchy) -> Self {
        h.to_spec()
    }
}

impl Hierarchy {
    pub fn from_spec(spec: &HierarchySpec) -> Result<Self> {
        // Resolve item sets bottom-up, then lay nodes out breadth-first.
        fn resolve(spec: &HierarchySpec) -> Result<Vec<ItemId>> {
            if spec.children.is_empty() {
                if spec.items.is_empty() {
                    return Err(Error::InvalidHierarchy(format!(
                        "leaf {:?} has no items",
                        spec.label
                    )));
                }
                let mut items = spec.items.clone();
                items.sort_unstable();
                if items.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidHierarchy(format!(
                        "leaf {:?} lists an item twice",
                        spec.label
                    )));
                }
                return Ok(items);
            }
            let mut all = Vec::new();
            for c in &spec.children {
                all.extend(resolve(c)?);
            }
            all.sort_unstable();
            if all.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidHierarchy(format!(
                    "children of {:?} overlap",
                    spec.label
                )));
            }
            if !spec.items.is_empty() {
                let mut own = spec.items.clone();
                own.sort_unstable();
                if own != all {
                    return Err(Error::InvalidHierarchy(format!(
                        "children of {:?} do not partition its items",
                        spec.label
                    )));
                }
            }
            Ok(all)
        }

        resolve(spec)?;
        let mut nodes: Vec<HNode> = Vec::new();
        let mut queue = std::collections::VecDeque::from([(spec, None::<NodeIdx>, 0usize)]);
        while let Some((s, parent, depth)) = queue.pop_front() {
            let idx = nodes.len();
            nodes.push(HNode {
                items: resolve(s)?,
                children: Vec::new(),
                parent,
                depth,
                label: s.label.clone(),
            });
            if let Some(p) = parent {
                nodes[p].children.push(idx);
            }
            for c in &s.children {
                queue.push_back((c, Some(idx), depth + 1));
            }
        }
        Ok(Hierarchy { nodes })
    }

    pub fn to_spec(&self) -> HierarchySpec {
        self.spec_of(0)
    }

    fn spec_of(&self, v: NodeIdx) -> HierarchySpec {
        let n = &self.nodes[v];
        HierarchySpec {
            label: n.label.clone(),
            items: if n.children.is_empty() { n.items.clone() } else { Vec::new() },
            children: n.children.iter().map(|&c| self.spec_of(c)).collect(),
        }
    }

    /// Builds the inclusion tree of a laminar family under `universe`.
    ///
    /// Duplicate and empty sets are dropped. Where a node's children leave
    /// items uncovered, those items become singleton leaves. Returns the
    /// hierarchy and, for each input set, the node it became.
    pub fn from_laminar(
        universe: &BTreeSet<ItemId>,
        sets: &[BTreeSet<ItemId>],
    ) -> Result<(Hierarchy, Vec<Option<NodeIdx>>)> {
        for s in sets {
            if !s.is_subset(universe) {
                return Err(Error::InvalidHierarchy(
                    "a set contains items outside the universe".into(),
                ));
            }
        }
        let mut family: Vec<BTreeSet<ItemId>> = vec![universe.clone()];
        family.extend(sets.iter().filter(|s| !s.is_empty()).cloned());
        family.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        family.dedup();

        // Largest first: each set's parent is the deepest earlier set
        // holding its items, which must be the same for all of them.
        let mut owner: HashMap<ItemId, usize> = HashMap::new();
        let mut parent: Vec<Option<usize>> = vec![None; family.len()];
        for (i, s) in family.iter().enumerate().skip(1) {
            let mut it = s.iter().map(|x| owner.get(x).copied().unwrap_or(0));
            let p = it.next().unwrap_or(0);
            if it.any(|q| q != p) {
                return Err(Error::InvalidHierarchy(format!(
                    "item sets are not laminar: {:?} crosses another set",
                    s.iter().collect::<Vec<_>>()
                )));
            }
            parent[i] = Some(p);
            for &x in s {
                owner.insert(x, i);
            }
        }

        let mut children: Vec<Vec<usize>> = vec![Vec::new(); family.len()];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }
        // Fill gaps with singleton leaves.
        let n_family = family.len();
        for i in 0..n_family {
            if children[i].is_empty() {
                continue;
            }
            let covered: BTreeSet<ItemId> = children[i]
                .iter()
                .flat_map(|&c| family[c].iter().copied())
                .collect();
            let missing: Vec<ItemId> = family[i].difference(&covered).copied().collect();
            for x in missing {
                let idx = family.len();
                family.push(BTreeSet::from([x]));
                children.push(Vec::new());
                children[i].push(idx);
            }
        }

        let first = |i: usize| family[i].iter().next().copied();
        let mut nodes: Vec<HNode> = Vec::with_capacity(family.len());
        let mut new_index = vec![usize::MAX; family.len()];
        let mut queue = std::collections::VecDeque::from([(0usize, None::<NodeIdx>, 0usize)]);
        while let Some((fi, p, depth)) = queue.pop_front() {
            let idx = nodes.len();
            new_index[fi] = idx;
            nodes.push(HNode {
                items: family[fi].iter().copied().collect(),
                children: Vec::new(),
                parent: p,
                depth,
                label: None,
            });
            if let Some(p) = p {
                nodes[p].children.push(idx);
            }
            let mut kids = children[fi].clone();
            kids.sort_by_key(|&c| first(c));
            for c in kids {
                queue.push_back((c, Some(idx), depth + 1));
            }
        }

        let mapping = sets
            .iter()
            .map(|s| {
                if s.is_empty() {
                    return None;
                }
                family[..n_family]
                    .iter()
                    .position(|f| f == s)
                    .map(|fi| new_index[fi])
            })
            .collect();
        Ok((Hierarchy { nodes }, mapping))
    }

    pub fn root(&self) -> NodeIdx {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn items(&self, v: NodeIdx) -> &[ItemId] {
        &self.nodes[v].items
    }

    pub fn item_set(&self, v: NodeIdx) -> BTreeSet<ItemId> {
        self.nodes[v].items.iter().copied().collect()
    }

    pub fn universe(&self) -> BTreeSet<ItemId> {
        self.item_set(0)
    }

    pub fn children(&self, v: NodeIdx) -> &[NodeIdx] {
        &self.nodes[v].children
    }

    pub fn parent(&self, v: NodeIdx) -> Option<NodeIdx> {
        self.nodes[v].parent
    }

    pub fn depth(&self, v: NodeIdx) -> usize {
        self.nodes[v].depth
    }

    pub fn label(&self, v: NodeIdx) -> Option<&str> {
        self.nodes[v].label.as_deref()
    }

    pub fn set_label(&mut self, v: NodeIdx, label: impl Into<String>) {
        self.nodes[v].label = Some(label.into());
    }

    pub fn is_leaf(&self, v: NodeIdx) -> bool {
        self.nodes[v].children.is_empty()
    }

    pub fn height(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.children.is_empty()).count()
    }

    pub fn node_indices(&self) -> std::ops::Range<NodeIdx> {
        0..self.nodes.len()
    }

    pub fn find_label(&self, label: &str) -> Option<NodeIdx> {
        self.nodes.iter().position(|n| n.label.as_deref() == Some(label))
    }

    /// The set of node item sets, for structural comparison.
    pub fn node_sets(&self) -> BTreeSet<Vec<ItemId>> {
        self.nodes.iter().map(|n| n.items.clone()).collect()
    }

    /// Deepest node containing `item`.
    pub fn leaf_of(&self, item: ItemId) -> Option<NodeIdx> {
        if self.nodes[0].items.binary_search(&item).is_err() {
            return None;
        }
        let mut v = 0;
        'down: loop {
            for &c in &self.nodes[v].children {
                if self.nodes[c].items.binary_search(&item).is_ok() {
                    v = c;
                    continue 'down;
                }
            }
            return Some(v);
        }
    }

    /// The hierarchy restricted to `keep`; nodes that become empty vanish and
    /// nodes that collapse onto an identical set are merged.
    pub fn restricted(&self, keep: &BTreeSet<ItemId>) -> Result<Hierarchy> {
        let universe: BTreeSet<ItemId> = self.universe().intersection(keep).copied().collect();
        if universe.is_empty() {
            return Err(Error::InvalidHierarchy("restriction leaves no items".into()));
        }
        let sets: Vec<BTreeSet<ItemId>> = self
            .nodes
            .iter()
            .map(|n| n.items.iter().copied().filter(|x| keep.contains(x)).collect())
            .collect();
        let (mut h, map) = Hierarchy::from_laminar(&universe, &sets)?;
        for (v, m) in map.iter().enumerate() {
            if let (Some(m), Some(label)) = (m, &self.nodes[v].label) {
                if h.nodes[*m].label.is_none() {
                    h.nodes[*m].label = Some(label.clone());
                }
            }
        }
        Ok(h)
    }

    pub fn root_frontier(&self) -> HFrontier {
        HFrontier::new([0])
    }

    pub fn leaf_frontier(&self) -> HFrontier {
        HFrontier::new(self.node_indices().filter(|&v| self.is_leaf(v)))
    }

    /// Nodes at `depth`, plus shallower leaves.
    pub fn depth_frontier(&self, depth: usize) -> HFrontier {
        HFrontier::new(
            self.node_indices()
                .filter(|&v| self.depth(v) == depth || (self.depth(v) < depth && self.is_leaf(v))),
        )
    }

    /// Verifies that `f` is an antichain covering every root-to-leaf path.
    pub fn check_frontier(&self, f: &HFrontier) -> Result<()> {
        if let Some(&bad) = f.nodes.iter().find(|&&v| v >= self.len()) {
            return Err(Error::InvalidFrontier(format!("node {bad} is not in the hierarchy")));
        }
        // Each path must meet exactly one frontier node.
        fn walk(h: &Hierarchy, f: &HFrontier, v: NodeIdx, seen: bool) -> Result<()> {
            let here = f.nodes.contains(&v);
            if here && seen {
                return Err(Error::InvalidFrontier(format!(
                    "node {v} descends from another frontier node"
                )));
            }
            let seen = seen || here;
            if h.is_leaf(v) {
                if !seen {
                    return Err(Error::InvalidFrontier(format!("leaf {v} is not covered")));
                }
                return Ok(());
            }
            for &c in h.children(v) {
                walk(h, f, c, seen)?;
            }
            Ok(())
        }
        walk(self, f, 0, false)
    }

    /// Number of frontiers: `F(leaf) = 1`, `F(v) = 1 + prod F(child)`.
    pub fn frontier_count(&self) -> u128 {
        fn count(h: &Hierarchy, v: NodeIdx) -> u128 {
            if h.is_leaf(v) {
                return 1;
            }
            h.children(v)
                .iter()
                .fold(1u128, |acc, &c| acc.saturating_mul(count(h, c)))
                .saturating_add(1)
        }
        count(self, 0)
    }
}

/// Upper bound on the number of frontiers [`enumerate_frontiers`] will list.
pub const FRONTIER_LIMIT: u128 = 1 << 24;

/// A set of hierarchy nodes; valid when [`Hierarchy::check_frontier`] passes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HFrontier {
    pub nodes: BTreeSet<NodeIdx>,
}

impl HFrontier {
    pub fn new(nodes: impl IntoIterator<Item = NodeIdx>) -> Self {
        HFrontier {
            nodes: nodes.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// All frontiers of `h`, each once. At every node the frontier `{v}` comes
/// first, followed by the product of the children's lists in order.
pub fn enumerate_frontiers(h: &Hierarchy) -> Result<Vec<HFrontier>> {
    let total = h.frontier_count();
    if total > FRONTIER_LIMIT {
        return Err(Error::Capacity {
            frontiers: total,
            limit: FRONTIER_LIMIT,
        });
    }
    fn expand(h: &Hierarchy, v: NodeIdx) -> Vec<Vec<NodeIdx>> {
        let mut out = vec![vec![v]];
        if h.is_leaf(v) {
            return out;
        }
        let mut acc: Vec<Vec<NodeIdx>> = vec![Vec::new()];
        for &c in h.children(v) {
            let sub = expand(h, c);
            acc = acc
                .iter()
                .flat_map(|prefix| {
                    sub.iter().map(move |s| {
                        let mut p = prefix.clone();
                        p.extend_from_slice(s);
                        p
                    })
                })
                .collect();
        }
        out.extend(acc);
        out
    }
    Ok(expand(h, 0).into_iter().map(HFrontier::new).collect())
}

/// One worker's partition of the items it was shown.
///
/// Clusters are stored sorted (items within a cluster, clusters by their
/// smallest item), so equal partitions compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawClustering")]
pub struct Clustering {
    worker: WorkerId,
    clusters: Vec<Vec<ItemId>>,
}

#[derive(Deserialize)]
struct RawClustering {
    worker: WorkerId,
    clusters: Vec<Vec<ItemId>>,
}

impl TryFrom<RawClustering> for Clustering {
    type Error = Error;

    fn try_from(raw: RawClustering) -> Result<Self> {
        Clustering::new(raw.worker, raw.clusters)
    }
}

impl Clustering {
    pub fn new(worker: WorkerId, clusters: Vec<Vec<ItemId>>) -> Result<Self> {
        let mut clusters = clusters;
        let mut seen = BTreeSet::new();
        for c in clusters.iter_mut() {
            if c.is_empty() {
                return Err(Error::InvalidClustering(format!(
                    "worker {worker} submitted an empty cluster"
                )));
            }
            c.sort_unstable();
            for &x in c.iter() {
                if !seen.insert(x) {
                    return Err(Error::InvalidClustering(format!(
                        "worker {worker} placed item {x} in two clusters"
                    )));
                }
            }
        }
        clusters.sort();
        Ok(Clustering { worker, clusters })
    }

    pub fn from_sets(worker: WorkerId, sets: impl IntoIterator<Item = BTreeSet<ItemId>>) -> Result<Self> {
        Clustering::new(worker, sets.into_iter().map(|s| s.into_iter().collect()).collect())
    }

    pub fn worker(&self) -> WorkerId {
        self.worker
    }

    pub fn with_worker(mut self, worker: WorkerId) -> Self {
        self.worker = worker;
        self
    }

    pub fn clusters(&self) -> &[Vec<ItemId>] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn universe(&self) -> BTreeSet<ItemId> {
        self.clusters.iter().flatten().copied().collect()
    }

    pub fn item_count(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    pub fn cluster_sets(&self) -> Vec<BTreeSet<ItemId>> {
        self.clusters.iter().map(|c| c.iter().copied().collect()).collect()
    }

    /// item -> cluster index.
    pub fn assignment(&self) -> HashMap<ItemId, usize> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().map(move |&x| (x, i)))
            .collect()
    }

    /// The partition induced on `keep`; clusters that become empty vanish.
    pub fn restricted(&self, keep: &BTreeSet<ItemId>) -> Clustering {
        let clusters = self
            .clusters
            .iter()
            .map(|c| c.iter().copied().filter(|x| keep.contains(x)).collect::<Vec<_>>())
            .filter(|c| !c.is_empty())
            .collect();
        Clustering::new(self.worker, clusters).expect("restriction of a valid clustering")
    }
}

/// The clustering formed by the item sets of `f`'s nodes.
pub fn frontier_clustering(h: &Hierarchy, f: &HFrontier) -> Result<Clustering> {
    h.check_frontier(f)?;
    Clustering::new(0, f.nodes.iter().map(|&v| h.items(v).to_vec()).collect())
}

/// True when every pair of clusters, one from each side, is nested or
/// disjoint. Runs in time linear in the number of items.
pub fn is_consistent(a: &Clustering, b: &Clustering) -> Result<bool> {
    let a_of = a.assignment();
    let b_of = b.assignment();
    if a_of.len() != b_of.len() || a_of.keys().any(|x| !b_of.contains_key(x)) {
        return Err(Error::DomainMismatch);
    }
    let mut overlap: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (x, &i) in &a_of {
        *overlap.entry((i, b_of[x])).or_default() += 1;
    }
    Ok(overlap
        .iter()
        .all(|(&(i, j), &n)| n == a.clusters[i].len() || n == b.clusters[j].len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(worker: WorkerId, clusters: &[&[ItemId]]) -> Clustering {
        Clustering::new(worker, clusters.iter().map(|c| c.to_vec()).collect()).unwrap()
    }

    fn two_leaf() -> Hierarchy {
        Hierarchy::from_spec(&HierarchySpec::node(
            "all",
            vec![HierarchySpec::leaf("a", [0, 1]), HierarchySpec::leaf("b", [2])],
        ))
        .unwrap()
    }

    #[test]
    fn consistency_examples() {
        // A=0 B=1 C=2 D=3
        assert!(is_consistent(&c(0, &[&[0, 1], &[2]]), &c(1, &[&[0, 1, 2]])).unwrap());
        assert!(!is_consistent(&c(0, &[&[0, 1], &[2, 3]]), &c(1, &[&[0, 2], &[1, 3]])).unwrap());
        assert_eq!(
            is_consistent(&c(0, &[&[0, 1]]), &c(1, &[&[0, 2]])),
            Err(Error::DomainMismatch)
        );
    }

    #[test]
    fn consistency_is_not_transitive() {
        let whole = c(0, &[&[0, 1, 2, 3]]);
        let x = c(1, &[&[0, 1], &[2, 3]]);
        let y = c(2, &[&[0, 2], &[1, 3]]);
        assert!(is_consistent(&x, &whole).unwrap());
        assert!(is_consistent(&whole, &y).unwrap());
        assert!(!is_consistent(&x, &y).unwrap());
    }

    #[test]
    fn frontier_enumeration_small() {
        let single = Hierarchy::from_spec(&HierarchySpec::leaf("x", [0, 1])).unwrap();
        assert_eq!(enumerate_frontiers(&single).unwrap(), vec![HFrontier::new([0])]);

        let h = two_leaf();
        let fs = enumerate_frontiers(&h).unwrap();
        assert_eq!(fs, vec![HFrontier::new([0]), HFrontier::new([1, 2])]);
        assert_eq!(h.frontier_count(), 2);
    }

    #[test]
    fn frontier_validation() {
        let h = two_leaf();
        assert!(h.check_frontier(&HFrontier::new([1])).is_err());
        assert!(h.check_frontier(&HFrontier::new([0, 1])).is_err());
        assert!(h.check_frontier(&HFrontier::new([7])).is_err());
        assert!(frontier_clustering(&h, &HFrontier::new([1])).is_err());
        let root = frontier_clustering(&h, &h.root_frontier()).unwrap();
        assert_eq!(root.clusters(), &[vec![0, 1, 2]]);
    }

    #[test]
    fn spec_validation() {
        let overlapping = HierarchySpec::node(
            "all",
            vec![HierarchySpec::leaf("a", [0, 1]), HierarchySpec::leaf("b", [1])],
        );
        assert!(Hierarchy::from_spec(&overlapping).is_err());
        let mismatched = HierarchySpec {
            label: None,
            items: vec![0, 1, 2, 3],
            children: vec![HierarchySpec::leaf("a", [0, 1]), HierarchySpec::leaf("b", [2])],
        };
        assert!(Hierarchy::from_spec(&mismatched).is_err());
    }

    #[test]
    fn laminar_builder_fills_gaps_and_rejects_crossings() {
        let u: BTreeSet<ItemId> = (0..5).collect();
        let sets = vec![BTreeSet::from([0, 1]), BTreeSet::from([0, 1, 2])];
        let (h, map) = Hierarchy::from_laminar(&u, &sets).unwrap();
        // root {0..4} -> {0,1,2}, {3}, {4}; {0,1,2} -> {0,1}, {2}
        assert_eq!(h.children(0).len(), 3);
        assert!(map.iter().all(Option::is_some));
        assert_eq!(h.items(map[0].unwrap()), &[0, 1]);

        let crossing = vec![BTreeSet::from([0, 1]), BTreeSet::from([1, 2])];
        assert!(Hierarchy::from_laminar(&u, &crossing).is_err());
    }

    #[test]
    fn clustering_rejects_empty_and_duplicates() {
        assert!(Clustering::new(0, vec![vec![]]).is_err());
        assert!(Clustering::new(0, vec![vec![1], vec![1, 2]]).is_err());
    }

    #[test]
    fn hierarchy_json_roundtrip() {
        let h = two_leaf();
        let json = serde_json::to_string(&h).unwrap();
        let back: Hierarchy = serde_json::from_str(&json).unwrap();
        assert_eq!(h, back);
    }
}
