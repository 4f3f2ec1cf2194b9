//! Splitting a large item set into overlapping batches that share a kernel,
//! and merging per-batch consensus hierarchies back together by matching
//! nodes on their kernel items.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::consensus::ConsensusHierarchy;
use crate::error::{Error, Result};
use crate::hierarchy::{ItemId, NodeIdx};
use crate::rng::RngSeed;

/// Kernel items appear in every batch; every other item in exactly one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPlan")]
pub struct KernelPlan {
    kernel: BTreeSet<ItemId>,
    batches: Vec<BTreeSet<ItemId>>,
}

#[derive(Deserialize)]
struct RawPlan {
    kernel: BTreeSet<ItemId>,
    batches: Vec<BTreeSet<ItemId>>,
}

impl TryFrom<RawPlan> for KernelPlan {
    type Error = Error;

    fn try_from(raw: RawPlan) -> Result<Self> {
        KernelPlan::new(raw.kernel, raw.batches)
    }
}

impl KernelPlan {
    pub fn new(kernel: BTreeSet<ItemId>, batches: Vec<BTreeSet<ItemId>>) -> Result<Self> {
        if batches.is_empty() {
            return Err(Error::InvalidPlan("no batches".into()));
        }
        if batches.len() > 1 && kernel.is_empty() {
            return Err(Error::InvalidPlan("several batches need a nonempty kernel".into()));
        }
        let mut seen = BTreeSet::new();
        for (i, b) in batches.iter().enumerate() {
            if !kernel.is_subset(b) {
                return Err(Error::InvalidPlan(format!("batch {i} does not contain the kernel")));
            }
            for x in b.difference(&kernel) {
                if !seen.insert(*x) {
                    return Err(Error::InvalidPlan(format!("item {x} is in more than one batch")));
                }
            }
        }
        Ok(KernelPlan { kernel, batches })
    }

    /// The whole universe as one batch.
    pub fn single(universe: &BTreeSet<ItemId>) -> Result<Self> {
        KernelPlan::new(BTreeSet::new(), vec![universe.clone()])
    }

    /// Uses the given kernel and spreads the remaining items in shuffled
    /// order over the fewest batches of at most `batch_size` items, as
    /// evenly as possible.
    pub fn with_kernel(
        universe: &BTreeSet<ItemId>,
        kernel: BTreeSet<ItemId>,
        batch_size: usize,
        seed: RngSeed,
    ) -> Result<Self> {
        if !kernel.is_subset(universe) {
            return Err(Error::InvalidPlan("kernel items outside the universe".into()));
        }
        let mut rest: Vec<ItemId> = universe.difference(&kernel).copied().collect();
        if rest.is_empty() || kernel.len() + rest.len() <= batch_size {
            return KernelPlan::new(kernel, vec![universe.clone()]);
        }
        if batch_size <= kernel.len() {
            return Err(Error::InvalidPlan(format!(
                "batch size {batch_size} leaves no room beside a kernel of {}",
                kernel.len()
            )));
        }
        rest.shuffle(&mut seed.rng());
        let room = batch_size - kernel.len();
        let n = rest.len().div_ceil(room);
        let batches = (0..n)
            .map(|i| {
                let lo = i * rest.len() / n;
                let hi = (i + 1) * rest.len() / n;
                kernel.iter().chain(&rest[lo..hi]).copied().collect()
            })
            .collect();
        KernelPlan::new(kernel, batches)
    }

    /// A kernel of `kernel_size` items drawn uniformly at random.
    pub fn random(universe: &BTreeSet<ItemId>, kernel_size: usize, batch_size: usize, seed: RngSeed) -> Result<Self> {
        if kernel_size > universe.len() {
            return Err(Error::InvalidPlan("kernel larger than the universe".into()));
        }
        let mut all: Vec<ItemId> = universe.iter().copied().collect();
        all.shuffle(&mut seed.derive(1).rng());
        let kernel = all[..kernel_size].iter().copied().collect();
        KernelPlan::with_kernel(universe, kernel, batch_size, seed.derive(2))
    }

    pub fn kernel(&self) -> &BTreeSet<ItemId> {
        &self.kernel
    }

    pub fn batches(&self) -> &[BTreeSet<ItemId>] {
        &self.batches
    }

    pub fn universe(&self) -> BTreeSet<ItemId> {
        self.batches.iter().flatten().copied().collect()
    }
}

/// Draws `per_group` items from each group (all of a smaller group),
/// so that every group is represented in the kernel.
pub fn stratified_kernel(groups: &[Vec<ItemId>], per_group: usize, seed: RngSeed) -> BTreeSet<ItemId> {
    let mut rng = seed.rng();
    let mut kernel = BTreeSet::new();
    for g in groups {
        let mut g = g.clone();
        g.sort_unstable();
        g.shuffle(&mut rng);
        kernel.extend(g.into_iter().take(per_group));
    }
    kernel
}

/// What to do when kernel signatures contradict each other.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictPolicy {
    /// Report the conflict as [`Error::KernelAmbiguity`].
    #[default]
    Fail,
    /// Keep the better supported of two conflicting clusters and drop the
    /// other; dropped clusters lose their own node but their items stay in
    /// their ancestors.
    Vote,
}

fn crosses(a: &BTreeSet<ItemId>, b: &BTreeSet<ItemId>) -> bool {
    !a.is_disjoint(b) && !a.is_subset(b) && !b.is_subset(a)
}

/// Greedily keeps sets that nest with everything kept so far, most votes
/// first, then larger sets, then smaller item ids.
fn laminar_by_votes(mut sets: Vec<(BTreeSet<ItemId>, u32)>) -> Vec<(BTreeSet<ItemId>, u32)> {
    sets.sort_by(|a, b| b.1.cmp(&a.1).then(b.0.len().cmp(&a.0.len())).then(a.0.cmp(&b.0)));
    let mut kept: Vec<(BTreeSet<ItemId>, u32)> = Vec::new();
    for s in sets {
        if kept.iter().all(|k| !crosses(&k.0, &s.0)) {
            kept.push(s);
        }
    }
    kept
}

/// Merges per-batch consensus hierarchies into one over the plan's universe,
/// failing on any kernel conflict.
///
/// Non-root nodes are identified across batches by their kernel items.
/// Nodes sharing a signature are unioned, and a node also absorbs the items
/// of nodes whose signature is a proper subset of its own. Nodes with no
/// kernel items are kept as they are and their items are added to the
/// node matching their nearest identified ancestor and everything above it.
///
/// Fails with [`Error::KernelAmbiguity`] when two nodes of one batch share
/// a nonempty signature or when signatures from different batches cross.
pub fn merge_batches(batches: &[ConsensusHierarchy], plan: &KernelPlan) -> Result<ConsensusHierarchy> {
    merge_batches_with(batches, plan, ConflictPolicy::Fail)
}

pub fn merge_batches_with(
    batches: &[ConsensusHierarchy],
    plan: &KernelPlan,
    policy: ConflictPolicy,
) -> Result<ConsensusHierarchy> {
    if batches.len() != plan.batches().len() {
        return Err(Error::InvalidPlan(format!(
            "{} hierarchies for {} batches",
            batches.len(),
            plan.batches().len()
        )));
    }
    for (i, (ch, b)) in batches.iter().zip(plan.batches()).enumerate() {
        if ch.universe() != *b {
            return Err(Error::InvalidPlan(format!("hierarchy {i} does not cover batch {i}")));
        }
    }
    if batches.len() == 1 {
        return Ok(batches[0].clone());
    }
    let kernel = plan.kernel();
    let signature = |ch: &ConsensusHierarchy, v: NodeIdx| -> BTreeSet<ItemId> {
        ch.hierarchy.items(v).iter().copied().filter(|x| kernel.contains(x)).collect()
    };

    // Identified nodes per batch, keyed by signature.
    let mut identified: Vec<BTreeMap<BTreeSet<ItemId>, NodeIdx>> = Vec::with_capacity(batches.len());
    for ch in batches {
        let h = &ch.hierarchy;
        let mut local: BTreeMap<BTreeSet<ItemId>, NodeIdx> = BTreeMap::new();
        for v in h.node_indices().skip(1) {
            let sig = signature(ch, v);
            if sig.is_empty() {
                continue;
            }
            match local.get(&sig) {
                None => {
                    local.insert(sig, v);
                }
                Some(&other) => match policy {
                    ConflictPolicy::Fail => {
                        return Err(Error::KernelAmbiguity {
                            detail: "two clusters in one batch share the same kernel items".into(),
                            clusters: vec![h.items(other).to_vec(), h.items(v).to_vec()],
                        })
                    }
                    // Breadth-first order: `other` is no deeper than `v`.
                    ConflictPolicy::Vote => {
                        if ch.votes[v] > ch.votes[other] {
                            local.insert(sig, v);
                        }
                    }
                },
            }
        }
        identified.push(local);
    }

    let mut support: BTreeMap<BTreeSet<ItemId>, u32> = BTreeMap::new();
    for (ch, local) in batches.iter().zip(&identified) {
        for (sig, &v) in local {
            *support.entry(sig.clone()).or_default() += ch.votes[v];
        }
    }
    let accepted: BTreeSet<BTreeSet<ItemId>> = match policy {
        ConflictPolicy::Fail => {
            let sigs: Vec<&BTreeSet<ItemId>> = support.keys().collect();
            for (i, a) in sigs.iter().enumerate() {
                for b in &sigs[i + 1..] {
                    if crosses(a, b) {
                        let items = |s: &BTreeSet<ItemId>| -> Vec<ItemId> {
                            let mut all: BTreeSet<ItemId> = BTreeSet::new();
                            for (ch, local) in batches.iter().zip(&identified) {
                                if let Some(&v) = local.get(s) {
                                    all.extend(ch.hierarchy.items(v));
                                }
                            }
                            all.into_iter().collect()
                        };
                        return Err(Error::KernelAmbiguity {
                            detail: "kernel signatures of different batches cross".into(),
                            clusters: vec![items(a), items(b)],
                        });
                    }
                }
            }
            support.keys().cloned().collect()
        }
        ConflictPolicy::Vote => laminar_by_votes(support.clone().into_iter().collect())
            .into_iter()
            .map(|(s, _)| s)
            .collect(),
    };
    for local in &mut identified {
        local.retain(|sig, _| accepted.contains(sig));
    }

    let mut merged: BTreeMap<BTreeSet<ItemId>, (BTreeSet<ItemId>, u32)> = BTreeMap::new();
    // (anchor signature, items, votes) for nodes without kernel items.
    let mut loose: Vec<(BTreeSet<ItemId>, BTreeSet<ItemId>, u32)> = Vec::new();
    for (ch, local) in batches.iter().zip(&identified) {
        let h = &ch.hierarchy;
        let sig_of: BTreeMap<NodeIdx, &BTreeSet<ItemId>> = local.iter().map(|(s, &v)| (v, s)).collect();
        for (sig, &v) in local {
            let m = merged.entry(sig.clone()).or_default();
            m.0.extend(h.items(v));
            m.1 += ch.votes[v];
        }
        for v in h.node_indices().skip(1) {
            if !signature(ch, v).is_empty() {
                continue;
            }
            let mut a = h.parent(v);
            while let Some(p) = a.filter(|p| !sig_of.contains_key(p)) {
                a = h.parent(p);
            }
            let anchor = a.map(|p| sig_of[&p].clone()).unwrap_or_default();
            loose.push((anchor, h.item_set(v), ch.votes[v]));
        }
    }

    // Smallest signatures first so absorbed items propagate upward.
    let mut order: Vec<BTreeSet<ItemId>> = merged.keys().cloned().collect();
    order.sort_by_key(|s| s.len());
    for (i, s) in order.iter().enumerate() {
        let below: Vec<ItemId> = order[..i]
            .iter()
            .filter(|t| t.len() < s.len() && t.is_subset(s))
            .flat_map(|t| merged[t].0.iter().copied().collect::<Vec<_>>())
            .collect();
        merged.get_mut(s).expect("signature present").0.extend(below);
    }
    for (anchor, items, _) in &loose {
        if anchor.is_empty() {
            continue;
        }
        for s in &order {
            if anchor.is_subset(s) {
                merged.get_mut(s).expect("signature present").0.extend(items);
            }
        }
    }

    let mut family: BTreeMap<BTreeSet<ItemId>, u32> = BTreeMap::new();
    for (items, votes) in merged.into_values() {
        *family.entry(items).or_default() += votes;
    }
    for (_, items, votes) in loose {
        *family.entry(items).or_default() += votes;
    }
    let universe = plan.universe();
    let root_votes: u32 = batches.iter().map(|ch| ch.votes[ch.hierarchy.root()]).sum();
    family.remove(&universe);
    if policy == ConflictPolicy::Vote {
        family = laminar_by_votes(family.into_iter().collect()).into_iter().collect();
    }
    let mut out = ConsensusHierarchy::from_weighted_sets(&universe, &family).map_err(|e| Error::KernelAmbiguity {
        detail: format!("merged clusters do not nest: {e}"),
        clusters: Vec::new(),
    })?;
    out.votes[0] += root_votes;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::assemble_consensus;
    use crate::hierarchy::Clustering;

    fn set(xs: &[ItemId]) -> BTreeSet<ItemId> {
        xs.iter().copied().collect()
    }

    fn consensus(workers: &[&[&[ItemId]]]) -> ConsensusHierarchy {
        let ws: Vec<Clustering> = workers
            .iter()
            .enumerate()
            .map(|(i, cs)| Clustering::new(i as u32, cs.iter().map(|c| c.to_vec()).collect()).unwrap())
            .collect();
        assemble_consensus(&ws, &ws[0].universe()).unwrap()
    }

    #[test]
    fn plan_validation() {
        assert!(KernelPlan::new(set(&[0]), vec![set(&[0, 1]), set(&[0, 2])]).is_ok());
        assert!(KernelPlan::new(set(&[0]), vec![set(&[0, 1]), set(&[0, 1])]).is_err());
        assert!(KernelPlan::new(set(&[0]), vec![set(&[0, 1]), set(&[2])]).is_err());
        assert!(KernelPlan::new(set(&[]), vec![set(&[1]), set(&[2])]).is_err());
        assert!(KernelPlan::new(set(&[]), vec![]).is_err());
    }

    #[test]
    fn random_plan_covers_universe() {
        let u: BTreeSet<ItemId> = (0..50).collect();
        let plan = KernelPlan::random(&u, 5, 15, RngSeed(3)).unwrap();
        assert_eq!(plan.kernel().len(), 5);
        assert_eq!(plan.universe(), u);
        assert_eq!(plan.batches().len(), 5);
        assert!(plan.batches().iter().all(|b| b.len() <= 15));
    }

    #[test]
    fn small_universe_is_one_batch() {
        let u: BTreeSet<ItemId> = (0..10).collect();
        let plan = KernelPlan::random(&u, 2, 20, RngSeed(0)).unwrap();
        assert_eq!(plan.batches().len(), 1);
    }

    #[test]
    fn stratified_kernel_hits_every_group() {
        let k = stratified_kernel(&[vec![0, 1, 2], vec![3], vec![4, 5]], 1, RngSeed(9));
        assert_eq!(k.len(), 3);
        assert!(k.contains(&3));
    }

    #[test]
    fn merge_two_batches() {
        // Kernel {0, 3}; categories A = {0,1,2,...} and B = {3,4,5,...}.
        let b1 = consensus(&[&[&[0, 1], &[3, 4]], &[&[0, 1], &[3, 4]]]);
        let b2 = consensus(&[&[&[0, 2], &[3, 5]], &[&[0, 2], &[3, 5]]]);
        let plan = KernelPlan::new(set(&[0, 3]), vec![set(&[0, 1, 3, 4]), set(&[0, 2, 3, 5])]).unwrap();
        let m = merge_batches(&[b1, b2], &plan).unwrap();
        let sets = m.hierarchy.node_sets();
        assert!(sets.contains(&vec![0, 1, 2]));
        assert!(sets.contains(&vec![3, 4, 5]));
        let a = m.hierarchy.node_indices().find(|&v| m.hierarchy.items(v) == [0, 1, 2]).unwrap();
        assert_eq!(m.votes[a], 4);
    }

    #[test]
    fn unidentified_clusters_attach_under_anchor() {
        // Kernel {0, 1, 3}. Batch 2 splits A into kernel singletons and a
        // cluster {2, 6} that holds no kernel item.
        let b1 = consensus(&[&[&[0, 1, 10], &[3, 4]]]);
        let b2 = consensus(&[&[&[0], &[1], &[2, 6], &[3, 5]], &[&[0, 1, 2, 6], &[3, 5]]]);
        let plan = KernelPlan::new(set(&[0, 1, 3]), vec![set(&[0, 1, 3, 4, 10]), set(&[0, 1, 2, 3, 5, 6])]).unwrap();
        let m = merge_batches(&[b1, b2], &plan).unwrap();
        let sets = m.hierarchy.node_sets();
        assert!(sets.contains(&vec![0, 1, 2, 6, 10]));
        assert!(sets.contains(&vec![2, 6]));
        assert!(sets.contains(&vec![3, 4, 5]));
        let loose = m.hierarchy.node_indices().find(|&v| m.hierarchy.items(v) == [2, 6]).unwrap();
        let parent = m.hierarchy.parent(loose).unwrap();
        assert_eq!(m.hierarchy.items(parent), [0, 1, 2, 6, 10]);
    }

    #[test]
    fn ambiguity_within_batch() {
        // {0,1} and its child {0} both carry only kernel item 0.
        let b1 = consensus(&[&[&[0, 1], &[3, 4]], &[&[0], &[1], &[3, 4]]]);
        let b2 = consensus(&[&[&[0, 2], &[3, 5]]]);
        let plan = KernelPlan::new(set(&[0, 3]), vec![set(&[0, 1, 3, 4]), set(&[0, 2, 3, 5])]).unwrap();
        assert!(matches!(merge_batches(&[b1, b2], &plan), Err(Error::KernelAmbiguity { .. })));
    }

    #[test]
    fn crossing_signatures() {
        let b1 = consensus(&[&[&[0, 1, 4], &[2, 3, 5]]]);
        let b2 = consensus(&[&[&[0, 2, 6], &[1, 3, 7]]]);
        let plan = KernelPlan::new(set(&[0, 1, 2, 3]), vec![set(&[0, 1, 2, 3, 4, 5]), set(&[0, 1, 2, 3, 6, 7])]).unwrap();
        assert!(matches!(merge_batches(&[b1, b2], &plan), Err(Error::KernelAmbiguity { .. })));
    }

    #[test]
    fn vote_policy_resolves_conflicts() {
        let b1 = consensus(&[&[&[0, 1], &[3, 4]], &[&[0], &[1], &[3, 4]], &[&[0, 1], &[3, 4]]]);
        let b2 = consensus(&[&[&[0, 2], &[3, 5]]]);
        let plan = KernelPlan::new(set(&[0, 3]), vec![set(&[0, 1, 3, 4]), set(&[0, 2, 3, 5])]).unwrap();
        let m = merge_batches_with(&[b1, b2], &plan, ConflictPolicy::Vote).unwrap();
        let sets = m.hierarchy.node_sets();
        assert!(sets.contains(&vec![0, 1, 2]));
        assert!(sets.contains(&vec![3, 4, 5]));

        let b1 = consensus(&[&[&[0, 1, 4], &[2, 3, 5]], &[&[0, 1, 4], &[2, 3, 5]]]);
        let b2 = consensus(&[&[&[0, 2, 6], &[1, 3, 7]]]);
        let plan = KernelPlan::new(set(&[0, 1, 2, 3]), vec![set(&[0, 1, 2, 3, 4, 5]), set(&[0, 1, 2, 3, 6, 7])]).unwrap();
        let m = merge_batches_with(&[b1, b2], &plan, ConflictPolicy::Vote).unwrap();
        let sets = m.hierarchy.node_sets();
        assert!(sets.contains(&vec![0, 1, 4]));
        assert!(!sets.iter().any(|s| s.contains(&0) && s.contains(&2) && s.len() < 8));
    }

    #[test]
    fn single_batch_passthrough() {
        let b = consensus(&[&[&[0, 1], &[2]]]);
        let plan = KernelPlan::single(&set(&[0, 1, 2])).unwrap();
        assert_eq!(merge_batches(std::slice::from_ref(&b), &plan).unwrap(), b);
    }
}
