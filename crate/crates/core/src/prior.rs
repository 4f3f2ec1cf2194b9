//! Prior-informed tree construction: atomic cells with prior counts are
//! grouped into groups of at most `k` expected objects, and a tree is built
//! over the groups so that every question above the groups is one the
//! drill-down would have to ask anyway.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{pairwise_disjoint, Rect, Region};
use crate::image::{assign_to_children, SyntheticImage};
use crate::rng::RngSeed;
use crate::segtree::{NodeId, SegNode, SegTree};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub region: Region,
    pub prior: u64,
}

/// Atomic cells tiling an image, with prior counts and an adjacency relation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPartition")]
pub struct CellPartition {
    cells: Vec<Cell>,
    adjacency: Vec<(usize, usize)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPartition {
    cells: Vec<Cell>,
    adjacency: Vec<(usize, usize)>,
}

impl TryFrom<RawPartition> for CellPartition {
    type Error = Error;

    fn try_from(raw: RawPartition) -> Result<Self> {
        CellPartition::new(raw.cells, raw.adjacency)
    }
}

impl CellPartition {
    /// Validates disjointness and adjacency; pairs are normalised to
    /// `(low, high)` and deduplicated.
    pub fn new(cells: Vec<Cell>, adjacency: Vec<(usize, usize)>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidPartition("no cells".into()));
        }
        let regions: Vec<Region> = cells.iter().map(|c| c.region).collect();
        if regions.iter().any(|r| r.area() == 0) {
            return Err(Error::InvalidPartition("a cell has zero area".into()));
        }
        if !pairwise_disjoint(&regions) {
            return Err(Error::InvalidPartition("cells overlap".into()));
        }
        let mut pairs = BTreeSet::new();
        for &(a, b) in &adjacency {
            if a >= cells.len() || b >= cells.len() {
                return Err(Error::InvalidPartition(format!(
                    "adjacency ({a}, {b}) refers to a missing cell"
                )));
            }
            if a == b {
                return Err(Error::InvalidPartition(format!("cell {a} is adjacent to itself")));
            }
            pairs.insert((a.min(b), a.max(b)));
        }
        Ok(CellPartition {
            cells,
            adjacency: pairs.into_iter().collect(),
        })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn adjacency(&self) -> &[(usize, usize)] {
        &self.adjacency
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cells.len()];
        for &(a, b) in &self.adjacency {
            out[a].push(b);
            out[b].push(a);
        }
        for n in &mut out {
            n.sort_unstable();
        }
        out
    }

    pub fn total_area(&self) -> u64 {
        self.cells.iter().map(|c| c.region.area()).sum()
    }

    /// Checks that the cells tile `image` exactly.
    pub fn check_tiles(&self, image: &SyntheticImage) -> Result<()> {
        let regions: Vec<Region> = self.cells.iter().map(|c| c.region).collect();
        image.check_bounds(&regions)?;
        if self.total_area() != image.bounds().area() {
            return Err(Error::InvalidPartition(format!(
                "cells cover {} of {} pixels",
                self.total_area(),
                image.bounds().area()
            )));
        }
        Ok(())
    }

    /// Ground-truth object count per cell (each object goes to exactly one cell).
    pub fn true_counts(&self, image: &SyntheticImage) -> Result<Vec<u64>> {
        self.check_tiles(image)?;
        let owned: Vec<u32> = image.objects().iter().map(|o| o.id).collect();
        let slices: Vec<&[Region]> = self.cells.iter().map(|c| std::slice::from_ref(&c.region)).collect();
        Ok(assign_to_children(image, &owned, &slices)
            .into_iter()
            .map(|v| v.len() as u64)
            .collect())
    }
}

/// A `cols x rows` grid over the image with priors equal to the true cell
/// counts scaled by an independent factor in `[1 - noise, 1 + noise]`.
pub fn grid_partition(
    image: &SyntheticImage,
    cols: u32,
    rows: u32,
    noise: f64,
    seed: RngSeed,
) -> Result<CellPartition> {
    if cols == 0 || rows == 0 || cols > image.width() || rows > image.height() {
        return Err(Error::Config(format!(
            "a {cols}x{rows} grid does not fit a {}x{} image",
            image.width(),
            image.height()
        )));
    }
    if !(0.0..1.0).contains(&noise) {
        return Err(Error::Config(format!("prior noise must lie in [0, 1), got {noise}")));
    }
    let (w, h) = (image.width(), image.height());
    let mut cells = Vec::with_capacity((cols * rows) as usize);
    let mut adjacency = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let rect = Rect::new(w * c / cols, h * r / rows, w * (c + 1) / cols, h * (r + 1) / rows);
            cells.push(Cell {
                region: Region::new(rect),
                prior: 0,
            });
            let idx = (r * cols + c) as usize;
            if c > 0 {
                adjacency.push((idx - 1, idx));
            }
            if r > 0 {
                adjacency.push((idx - cols as usize, idx));
            }
        }
    }
    let mut partition = CellPartition::new(cells, adjacency)?;
    let truth = partition.true_counts(image)?;
    let mut rng = seed.rng();
    for (cell, t) in partition.cells.iter_mut().zip(truth) {
        let factor = if noise > 0.0 { 1.0 + rng.random_range(-noise..=noise) } else { 1.0 };
        cell.prior = (t as f64 * factor).round() as u64;
    }
    Ok(partition)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupingStrategy {
    /// First-fit over cells in index order; ignores adjacency.
    FirstFit,
    /// Grows connected groups, closing a group as soon as the next
    /// candidate would overflow it.
    ContiguousGreedy,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellGroup {
    pub cells: Vec<usize>,
    pub prior_total: u64,
    /// A single cell whose own prior already exceeds the capacity.
    pub oversized: bool,
}

/// Groups cells so each group's prior total stays within `k`.
pub fn group_cells(partition: &CellPartition, k: u64, strategy: GroupingStrategy) -> Vec<CellGroup> {
    match strategy {
        GroupingStrategy::FirstFit => first_fit(partition, k),
        GroupingStrategy::ContiguousGreedy => contiguous_greedy(partition, k),
    }
}

fn first_fit(partition: &CellPartition, k: u64) -> Vec<CellGroup> {
    let mut groups: Vec<CellGroup> = Vec::new();
    for (i, cell) in partition.cells.iter().enumerate() {
        match groups.iter_mut().find(|g| g.prior_total + cell.prior <= k) {
            Some(g) => {
                g.cells.push(i);
                g.prior_total += cell.prior;
            }
            None => groups.push(CellGroup {
                cells: vec![i],
                prior_total: cell.prior,
                oversized: cell.prior > k,
            }),
        }
    }
    groups
}

fn contiguous_greedy(partition: &CellPartition, k: u64) -> Vec<CellGroup> {
    let neighbours = partition.neighbours();
    let mut assigned = vec![false; partition.len()];
    let mut groups = Vec::new();
    for start in 0..partition.len() {
        if assigned[start] {
            continue;
        }
        assigned[start] = true;
        let first = partition.cells[start].prior;
        let mut group = CellGroup {
            cells: vec![start],
            prior_total: first,
            oversized: first > k,
        };
        if !group.oversized {
            // Candidates are unassigned neighbours of the group, lowest index first.
            let mut candidates: BTreeSet<usize> =
                neighbours[start].iter().copied().filter(|&n| !assigned[n]).collect();
            while let Some(next) = candidates.pop_first() {
                let prior = partition.cells[next].prior;
                if group.prior_total + prior > k {
                    break;
                }
                assigned[next] = true;
                group.cells.push(next);
                group.prior_total += prior;
                candidates.extend(neighbours[next].iter().copied().filter(|&n| !assigned[n]));
            }
        }
        groups.push(group);
    }
    groups
}

/// Builds a balanced `fanout`-ary tree whose leaves are the groups. Below a
/// group of several cells sits a binary tree over those cells, so a group
/// whose real count reaches `k` can still be drilled into. Node ids are
/// breadth-first.
pub fn build_prior_tree(groups: &[CellGroup], partition: &CellPartition, fanout: usize) -> Result<SegTree> {
    if fanout < 2 {
        return Err(Error::Config(format!("prior tree fanout must be at least 2, got {fanout}")));
    }
    if groups.is_empty() {
        return Err(Error::Config("no groups to build a tree from".into()));
    }
    let mut seen = BTreeSet::new();
    for g in groups {
        for &c in &g.cells {
            if c >= partition.len() || !seen.insert(c) {
                return Err(Error::InvalidPartition(format!(
                    "cell {c} is missing or appears in two groups"
                )));
            }
        }
    }
    if seen.len() != partition.len() {
        return Err(Error::InvalidPartition("groups do not cover every cell".into()));
    }

    // Cells of a group hang below it as a binary tree, so a group that
    // turns out to hold k or more objects is drilled into by halves.
    fn cell_node(cells: &[usize], partition: &CellPartition, next: &mut u32) -> SegNode {
        let id = NodeId(*next);
        *next += 1;
        let mut regions: Vec<Region> = cells.iter().map(|&c| partition.cells[c].region).collect();
        regions.sort();
        let children = if cells.len() > 1 {
            let mid = cells.len() / 2;
            vec![
                cell_node(&cells[..mid], partition, next),
                cell_node(&cells[mid..], partition, next),
            ]
        } else {
            Vec::new()
        };
        SegNode { id, regions, children }
    }
    fn group_node(g: &CellGroup, partition: &CellPartition, next: &mut u32) -> SegNode {
        cell_node(&g.cells, partition, next)
    }
    fn balanced(groups: &[CellGroup], fanout: usize, partition: &CellPartition, next: &mut u32) -> SegNode {
        if groups.len() == 1 {
            return group_node(&groups[0], partition, next);
        }
        let id = NodeId(*next);
        *next += 1;
        let n = groups.len();
        let parts = fanout.min(n);
        let children: Vec<SegNode> = (0..parts)
            .map(|i| balanced(&groups[n * i / parts..n * (i + 1) / parts], fanout, partition, next))
            .collect();
        let mut regions: Vec<Region> = children.iter().flat_map(|c| c.regions.iter().copied()).collect();
        regions.sort();
        SegNode { id, regions, children }
    }

    let mut next = 0;
    Ok(SegTree::from_nodes(&balanced(groups, fanout, partition, &mut next))?.renumbered())
}

/// Sum of priors under each node of a prior tree.
pub fn node_priors(tree: &SegTree, partition: &CellPartition) -> BTreeMap<NodeId, u64> {
    let by_region: BTreeMap<Region, u64> = partition.cells.iter().map(|c| (c.region, c.prior)).collect();
    tree.ids()
        .map(|id| {
            let total = tree
                .regions(id)
                .iter()
                .map(|r| by_region.get(r).copied().unwrap_or(0))
                .sum();
            (id, total)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip(priors: &[u64]) -> CellPartition {
        let cells = priors
            .iter()
            .enumerate()
            .map(|(i, &p)| Cell {
                region: Region::new(Rect::new(i as u32 * 10, 0, i as u32 * 10 + 10, 10)),
                prior: p,
            })
            .collect();
        let adjacency = (1..priors.len()).map(|i| (i - 1, i)).collect();
        CellPartition::new(cells, adjacency).unwrap()
    }

    fn priors_of(p: &CellPartition, g: &CellGroup) -> Vec<u64> {
        g.cells.iter().map(|&c| p.cells()[c].prior).collect()
    }

    #[test]
    fn first_fit_example() {
        let p = strip(&[8, 7, 6, 5, 4]);
        let groups = group_cells(&p, 20, GroupingStrategy::FirstFit);
        let got: Vec<Vec<u64>> = groups.iter().map(|g| priors_of(&p, g)).collect();
        assert_eq!(got, vec![vec![8, 7, 5], vec![6, 4]]);
        assert_eq!(groups[0].prior_total, 20);
    }

    #[test]
    fn contiguous_example() {
        let p = strip(&[8, 7, 6, 5, 4]);
        let groups = group_cells(&p, 20, GroupingStrategy::ContiguousGreedy);
        let got: Vec<Vec<u64>> = groups.iter().map(|g| priors_of(&p, g)).collect();
        assert_eq!(got, vec![vec![8, 7], vec![6, 5, 4]]);
    }

    #[test]
    fn single_and_oversized_cells() {
        let p = strip(&[5]);
        assert_eq!(group_cells(&p, 20, GroupingStrategy::FirstFit).len(), 1);
        let p = strip(&[3, 30, 4]);
        for strategy in [GroupingStrategy::FirstFit, GroupingStrategy::ContiguousGreedy] {
            let groups = group_cells(&p, 20, strategy);
            let big: Vec<_> = groups.iter().filter(|g| g.oversized).collect();
            assert_eq!(big.len(), 1);
            assert_eq!(big[0].cells, vec![1]);
        }
    }

    #[test]
    fn tree_shapes() {
        let p = strip(&[1, 1, 1, 1]);
        let singles: Vec<CellGroup> = (0..4)
            .map(|c| CellGroup { cells: vec![c], prior_total: 1, oversized: false })
            .collect();
        let t = build_prior_tree(&singles, &p, 2).unwrap();
        assert_eq!(t.internal_nodes().len(), 3);
        assert_eq!(t.height(), 2);

        let one = build_prior_tree(&singles[..1], &strip(&[1]), 2).unwrap();
        assert_eq!(one.len(), 1);

        assert!(build_prior_tree(&singles, &p, 1).is_err());
    }

    #[test]
    fn multi_cell_groups_expand_into_cells() {
        let p = strip(&[8, 7, 6, 5, 4]);
        let groups = group_cells(&p, 20, GroupingStrategy::FirstFit);
        let t = build_prior_tree(&groups, &p, 2).unwrap();
        // root -> groups {0,1,3} and {2,4}; the first halves into {0} and {1,3}
        let kids = t.children(t.root());
        assert_eq!(kids.len(), 2);
        let halves = t.children(kids[0]);
        assert_eq!(halves.len(), 2);
        assert_eq!(t.regions(halves[1]).len(), 2);
        assert_eq!(t.children(kids[1]).len(), 2);
        assert_eq!(t.leaves().len(), 5);
        let priors = node_priors(&t, &p);
        assert_eq!(priors[&t.root()], 30);
    }

    #[test]
    fn grid_partition_tiles_and_counts() {
        let img = SyntheticImage::from_rects(40, 40, [Rect::new(1, 1, 5, 5), Rect::new(18, 18, 24, 24)]).unwrap();
        let p = grid_partition(&img, 4, 4, 0.0, RngSeed(0)).unwrap();
        assert_eq!(p.len(), 16);
        assert_eq!(p.adjacency().len(), 24);
        assert_eq!(p.cells().iter().map(|c| c.prior).sum::<u64>(), 2);
        p.check_tiles(&img).unwrap();
    }

    #[test]
    fn invalid_partitions() {
        let c = |x0| Cell { region: Region::new(Rect::new(x0, 0, x0 + 10, 10)), prior: 1 };
        assert!(CellPartition::new(vec![c(0), c(5)], vec![]).is_err());
        assert!(CellPartition::new(vec![c(0), c(10)], vec![(0, 0)]).is_err());
        assert!(CellPartition::new(vec![c(0), c(10)], vec![(0, 2)]).is_err());
    }
}
