//! Segmentation trees: the root is the whole image and the children of a
//! node tile its area.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{covered_by, pairwise_disjoint, union_area, Rect, Region};
use crate::image::{assign_to_children, owned_objects, SyntheticImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "V{}", self.0)
    }
}

/// Nested form of a tree node, used for JSON and explicit construction.
/// A node's area is the union of its (disjoint) regions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegNode {
    pub id: NodeId,
    pub regions: Vec<Region>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<SegNode>,
}

impl SegNode {
    pub fn leaf(id: u32, rect: Rect) -> Self {
        SegNode {
            id: NodeId(id),
            regions: vec![Region::new(rect)],
            children: Vec::new(),
        }
    }

    pub fn split(id: u32, rect: Rect, children: Vec<SegNode>) -> Self {
        SegNode {
            id: NodeId(id),
            regions: vec![Region::new(rect)],
            children,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Slot {
    id: NodeId,
    regions: Vec<Region>,
    children: Vec<usize>,
    parent: Option<usize>,
    depth: usize,
}

/// Arena-backed segmentation tree. Slot 0 is the root; slots are in
/// breadth-first order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SegNode", into = "SegNode")]
pub struct SegTree {
    slots: Vec<Slot>,
    index: BTreeMap<NodeId, usize>,
}

impl TryFrom<SegNode> for SegTree {
    type Error = Error;

    fn try_from(root: SegNode) -> Result<Self> {
        SegTree::from_nodes(&root)
    }
}

impl From<SegTree> for SegNode {
    fn from(t: SegTree) -> Self {
        t.to_nodes()
    }
}

/// How [`build_tree`] splits regions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPolicy {
    /// Cut the longer side into `fanout` equal strips while the area
    /// exceeds `leaf_area`.
    Midpoint { fanout: u32, leaf_area: u64 },
}

impl SplitPolicy {
    pub fn binary(leaf_area: u64) -> Self {
        SplitPolicy::Midpoint { fanout: 2, leaf_area }
    }
}

impl SegTree {
    /// Builds and validates a tree from its nested form.
    pub fn from_nodes(root: &SegNode) -> Result<Self> {
        let mut slots: Vec<Slot> = Vec::new();
        let mut index = BTreeMap::new();
        let mut queue = VecDeque::from([(root, None::<usize>, 0usize)]);
        while let Some((node, parent, depth)) = queue.pop_front() {
            let idx = slots.len();
            if index.insert(node.id, idx).is_some() {
                return Err(Error::InvalidTree(format!("duplicate node id {}", node.id)));
            }
            if node.regions.is_empty() || node.regions.iter().any(|r| r.area() == 0) {
                return Err(Error::InvalidTree(format!("node {} has an empty region", node.id)));
            }
            if !pairwise_disjoint(&node.regions) {
                return Err(Error::InvalidTree(format!("regions of node {} overlap", node.id)));
            }
            slots.push(Slot {
                id: node.id,
                regions: node.regions.clone(),
                children: Vec::new(),
                parent,
                depth,
            });
            if let Some(p) = parent {
                slots[p].children.push(idx);
            }
            for c in &node.children {
                queue.push_back((c, Some(idx), depth + 1));
            }
        }
        let tree = SegTree { slots, index };
        tree.check_tiling()?;
        Ok(tree)
    }

    fn check_tiling(&self) -> Result<()> {
        for s in &self.slots {
            if s.children.is_empty() {
                continue;
            }
            let all: Vec<Region> = s
                .children
                .iter()
                .flat_map(|&c| self.slots[c].regions.iter().copied())
                .collect();
            let ok = pairwise_disjoint(&all)
                && covered_by(&s.regions, &all)
                && union_area(&all) == union_area(&s.regions);
            if !ok {
                return Err(Error::InvalidTree(format!(
                    "children of node {} do not tile its area",
                    s.id
                )));
            }
        }
        Ok(())
    }

    /// Relabels nodes `0..n` in breadth-first order.
    pub fn renumbered(mut self) -> SegTree {
        for (i, s) in self.slots.iter_mut().enumerate() {
            s.id = NodeId(i as u32);
        }
        self.index = (0..self.slots.len()).map(|i| (NodeId(i as u32), i)).collect();
        self
    }

    pub fn to_nodes(&self) -> SegNode {
        self.nested(0)
    }

    fn nested(&self, slot: usize) -> SegNode {
        let s = &self.slots[slot];
        SegNode {
            id: s.id,
            regions: s.regions.clone(),
            children: s.children.iter().map(|&c| self.nested(c)).collect(),
        }
    }

    pub fn root(&self) -> NodeId {
        self.slots[0].id
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.slots.iter().map(|s| s.id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    fn slot(&self, id: NodeId) -> &Slot {
        &self.slots[self.index[&id]]
    }

    pub fn regions(&self, id: NodeId) -> &[Region] {
        &self.slot(id).regions
    }

    pub fn area(&self, id: NodeId) -> u64 {
        union_area(self.regions(id))
    }

    pub fn children(&self, id: NodeId) -> Vec<NodeId> {
        self.slot(id).children.iter().map(|&c| self.slots[c].id).collect()
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.slot(id).parent.map(|p| self.slots[p].id)
    }

    pub fn depth(&self, id: NodeId) -> usize {
        self.slot(id).depth
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.slot(id).children.is_empty()
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.slots
            .iter()
            .filter(|s| s.children.is_empty())
            .map(|s| s.id)
            .collect()
    }

    pub fn internal_nodes(&self) -> Vec<NodeId> {
        self.slots
            .iter()
            .filter(|s| !s.children.is_empty())
            .map(|s| s.id)
            .collect()
    }

    pub fn height(&self) -> usize {
        self.slots.iter().map(|s| s.depth).max().unwrap_or(0)
    }

    /// Leaves of the subtree rooted at `id`.
    pub fn leaves_under(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.index[&id]];
        while let Some(s) = stack.pop() {
            if self.slots[s].children.is_empty() {
                out.push(self.slots[s].id);
            } else {
                stack.extend(self.slots[s].children.iter().rev());
            }
        }
        out
    }

    /// Checks that the root covers exactly the image.
    pub fn check_image(&self, image: &SyntheticImage) -> Result<()> {
        let root = &self.slots[0].regions;
        image.check_bounds(root)?;
        if union_area(root) != image.bounds().area() {
            return Err(Error::InvalidTree(format!(
                "root covers {} pixels but the image has {}",
                union_area(root),
                image.bounds().area()
            )));
        }
        Ok(())
    }

    /// Ground-truth count of every node. Objects counted at the root are
    /// handed down split by split, so the counts of any frontier sum to the
    /// root count.
    pub fn true_counts(&self, image: &SyntheticImage) -> Result<BTreeMap<NodeId, u64>> {
        self.check_image(image)?;
        let mut owned: Vec<Vec<u32>> = vec![Vec::new(); self.slots.len()];
        owned[0] = owned_objects(image, &self.slots[0].regions)?;
        for s in 0..self.slots.len() {
            let kids = &self.slots[s].children;
            if kids.is_empty() {
                continue;
            }
            let child_regions: Vec<&[Region]> =
                kids.iter().map(|&c| self.slots[c].regions.as_slice()).collect();
            let parts = assign_to_children(image, &owned[s], &child_regions);
            for (&c, part) in kids.iter().zip(parts) {
                owned[c] = part;
            }
        }
        Ok(self
            .slots
            .iter()
            .zip(&owned)
            .map(|(s, o)| (s.id, o.len() as u64))
            .collect())
    }

    /// Verifies the frontier invariant: no ancestor/descendant pair, and
    /// every root-to-leaf path passes through the set.
    pub fn check_frontier(&self, f: &FrontierSet) -> Result<()> {
        if let Some(bad) = f.nodes.iter().find(|id| !self.contains(**id)) {
            return Err(Error::InvalidFrontier(format!("node {bad} is not in the tree")));
        }
        let mut stack = vec![(0usize, false)];
        while let Some((s, seen)) = stack.pop() {
            let here = f.nodes.contains(&self.slots[s].id);
            if here && seen {
                return Err(Error::InvalidFrontier(format!(
                    "node {} lies below another frontier node",
                    self.slots[s].id
                )));
            }
            let seen = seen || here;
            if self.slots[s].children.is_empty() && !seen {
                return Err(Error::InvalidFrontier(format!(
                    "leaf {} is not covered",
                    self.slots[s].id
                )));
            }
            stack.extend(self.slots[s].children.iter().map(|&c| (c, seen)));
        }
        Ok(())
    }

    /// The nodes of `f` together with all of their ancestors.
    pub fn ancestor_closure(&self, f: &FrontierSet) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        for &id in &f.nodes {
            let mut cur = Some(id);
            while let Some(c) = cur {
                if !out.insert(c) {
                    break;
                }
                cur = self.parent(c);
            }
        }
        out
    }
}

/// Mutually exclusive tree nodes whose areas reconstruct the whole image.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontierSet {
    pub nodes: BTreeSet<NodeId>,
}

impl FrontierSet {
    pub fn new(nodes: impl IntoIterator<Item = NodeId>) -> Self {
        FrontierSet {
            nodes: nodes.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains(&id)
    }
}

fn strips(rect: Rect, parts: u32) -> Vec<Rect> {
    if rect.width() >= rect.height() {
        let w = rect.width();
        (0..parts)
            .map(|i| Rect::new(rect.x0 + w * i / parts, rect.y0, rect.x0 + w * (i + 1) / parts, rect.y1))
            .collect()
    } else {
        let h = rect.height();
        (0..parts)
            .map(|i| Rect::new(rect.x0, rect.y0 + h * i / parts, rect.x1, rect.y0 + h * (i + 1) / parts))
            .collect()
    }
}

/// Builds a segmentation tree over the whole image. Node ids are assigned
/// breadth-first from 0.
pub fn build_tree(image: &SyntheticImage, policy: &SplitPolicy) -> Result<SegTree> {
    let SplitPolicy::Midpoint { fanout, leaf_area } = *policy;
    if fanout < 2 {
        return Err(Error::Config(format!("split fanout must be at least 2, got {fanout}")));
    }
    let mut next = 0u32;
    let mut slots: Vec<Slot> = Vec::new();
    let mut queue = VecDeque::from([(image.bounds(), None::<usize>, 0usize)]);
    while let Some((rect, parent, depth)) = queue.pop_front() {
        let idx = slots.len();
        slots.push(Slot {
            id: NodeId(next),
            regions: vec![Region::new(rect)],
            children: Vec::new(),
            parent,
            depth,
        });
        next += 1;
        if let Some(p) = parent {
            slots[p].children.push(idx);
        }
        let parts = fanout.min(rect.width().max(rect.height()));
        if rect.area() > leaf_area && parts >= 2 {
            for r in strips(rect, parts) {
                queue.push_back((r, Some(idx), depth + 1));
            }
        }
    }
    let index = slots.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
    Ok(SegTree { slots, index })
}
