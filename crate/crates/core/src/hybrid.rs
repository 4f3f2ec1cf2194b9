//! Batched crowd clustering and the cluster-then-categorize pipeline.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::consensus::{
    assemble_consensus, build_clustering_graph, max_clique, ml_frontier_scored, ConsensusHierarchy, ScoredFrontier,
};
use crate::error::{Error, Result};
use crate::hierarchy::{Clustering, Hierarchy, Item, ItemId, WorkerId};
use crate::merge::{merge_batches_with, ConflictPolicy, KernelPlan};
use crate::metrics::{dominant_perspective, CostReport};
use crate::rng::RngSeed;
use crate::worker::{answer_categorize, answer_clustering, CategorizationWorkerModel, ClusteringWorkerModel};

/// How the crowd is used for each clustering batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSetup {
    pub model: ClusteringWorkerModel,
    pub workers_per_batch: usize,
    #[serde(default)]
    pub conflicts: ConflictPolicy,
}

impl Default for ClusterSetup {
    fn default() -> Self {
        ClusterSetup {
            model: ClusteringWorkerModel::default(),
            workers_per_batch: 7,
            conflicts: ConflictPolicy::Fail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub items: BTreeSet<ItemId>,
    pub answers: Vec<Clustering>,
    pub edges: BTreeSet<(usize, usize)>,
    /// Indices into `answers`.
    pub clique: Vec<usize>,
    pub consensus: ConsensusHierarchy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRun {
    pub batches: Vec<BatchResult>,
    pub merged: ConsensusHierarchy,
    pub frontier: ScoredFrontier,
    /// Item sets of the frontier nodes.
    pub clusters: Vec<Vec<ItemId>>,
    pub cost: CostReport,
}

impl ClusterRun {
    pub fn clustering(&self) -> Result<Clustering> {
        Clustering::new(0, self.clusters.clone())
    }
}

/// Consensus for one batch: simulate `workers` clusterings, keep the
/// largest mutually consistent group and assemble its hierarchy.
pub fn cluster_batch(
    items: &BTreeSet<ItemId>,
    truth: &[Hierarchy],
    model: &ClusteringWorkerModel,
    workers: usize,
    first_worker: WorkerId,
    seed: RngSeed,
) -> Result<BatchResult> {
    if workers == 0 {
        return Err(Error::Config("workers per batch must be at least 1".into()));
    }
    let answers = (0..workers)
        .map(|j| {
            answer_clustering(model, first_worker + j as WorkerId, items, truth, seed.derive(j as u64))
                .map(|s| s.clustering)
        })
        .collect::<Result<Vec<_>>>()?;
    let graph = build_clustering_graph(&answers)?;
    let clique = max_clique(&graph);
    let chosen: Vec<Clustering> = clique.iter().map(|&i| answers[i].clone()).collect();
    let consensus = assemble_consensus(&chosen, items)?;
    Ok(BatchResult {
        items: items.clone(),
        answers,
        edges: graph.edges,
        clique,
        consensus,
    })
}

/// Clusters every batch of `plan`, merges the results and picks the
/// most supported frontier.
pub fn cluster_batches(plan: &KernelPlan, truth: &[Hierarchy], setup: &ClusterSetup, seed: RngSeed) -> Result<ClusterRun> {
    let mut cost = CostReport::default();
    let mut batches = Vec::with_capacity(plan.batches().len());
    let wpb = setup.workers_per_batch;
    for (b, items) in plan.batches().iter().enumerate() {
        let first = (b * wpb) as WorkerId;
        let r = cluster_batch(items, truth, &setup.model, wpb, first, seed.derive(b as u64))?;
        cost.clustering_tasks += (items.len() * r.answers.len()) as u64;
        batches.push(r);
    }
    let consensus: Vec<ConsensusHierarchy> = batches.iter().map(|r| r.consensus.clone()).collect();
    let merged = merge_batches_with(&consensus, plan, setup.conflicts)?;
    let frontier = ml_frontier_scored(&merged);
    let clusters = frontier.frontier.nodes.iter().map(|&v| merged.hierarchy.items(v).to_vec()).collect();
    Ok(ClusterRun {
        batches,
        merged,
        frontier,
        clusters,
        cost,
    })
}

#[serde_with::serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridOutcome {
    pub run: ClusterRun,
    /// For each categorized item, its answers and the chosen cluster.
    #[serde_as(as = "serde_with::Seq<(_, _)>")]
    pub categorized: BTreeMap<ItemId, (Vec<usize>, usize)>,
    /// Discovered clusters extended with the categorized items.
    pub clusters: Vec<Vec<ItemId>>,
    pub cost: CostReport,
}

impl HybridOutcome {
    pub fn clustering(&self) -> Result<Clustering> {
        Clustering::new(0, self.clusters.clone())
    }

    /// Cluster index of every item, clustered or categorized.
    pub fn assignment(&self) -> BTreeMap<ItemId, usize> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().map(move |&x| (x, i)))
            .collect()
    }
}

/// The discovered cluster a truthful worker would put `item` in: walking up
/// from the item's leaf in `h`, the first node that shares items with some
/// cluster decides, by largest overlap and then lowest index.
pub fn true_category(h: &Hierarchy, item: ItemId, clusters: &[BTreeSet<ItemId>]) -> Option<usize> {
    let mut node = h.leaf_of(item);
    while let Some(v) = node {
        let members = h.items(v);
        let mut best: Option<(usize, usize)> = None;
        for (i, c) in clusters.iter().enumerate() {
            let overlap = members.iter().filter(|x| c.contains(x)).count();
            if overlap > 0 && best.is_none_or(|(_, o)| overlap > o) {
                best = Some((i, overlap));
            }
        }
        if let Some((i, _)) = best {
            return Some(i);
        }
        node = h.parent(v);
    }
    None
}

/// Lowest-index plurality.
pub fn plurality(votes: &[usize], options: usize) -> Option<usize> {
    let mut tally = vec![0usize; options];
    for &v in votes {
        tally[v] += 1;
    }
    let top = *tally.iter().max()?;
    if top == 0 {
        return None;
    }
    tally.iter().position(|&t| t == top)
}

/// Clusters the plan's items with the crowd, then has each remaining item
/// categorized into one of the discovered clusters by `votes_per_item`
/// workers.
pub fn cluster_then_categorize(
    items: &[Item],
    plan: &KernelPlan,
    truth: &[Hierarchy],
    setup: &ClusterSetup,
    categorizer: &CategorizationWorkerModel,
    votes_per_item: usize,
    seed: RngSeed,
) -> Result<HybridOutcome> {
    if votes_per_item % 2 == 0 {
        return Err(Error::Config("votes per item must be odd".into()));
    }
    categorizer.validate()?;
    let clustered = plan.universe();
    let all: BTreeSet<ItemId> = items.iter().map(|i| i.id).collect();
    if all.len() != items.len() || !clustered.is_subset(&all) {
        return Err(Error::Config("the plan must cover a subset of distinct items".into()));
    }
    let run = cluster_batches(plan, truth, setup, seed.derive(0))?;
    let perspective = &truth[dominant_perspective(&setup.model)];
    let sets: Vec<BTreeSet<ItemId>> = run.clusters.iter().map(|c| c.iter().copied().collect()).collect();

    let mut cost = run.cost;
    let mut clusters = run.clusters.clone();
    let mut categorized = BTreeMap::new();
    let cat_seed = seed.derive(1);
    for item in items.iter().filter(|i| !clustered.contains(&i.id)) {
        let truth_idx = true_category(perspective, item.id, &sets)
            .ok_or_else(|| Error::Config(format!("item {} is not in the ground truth", item.id)))?;
        let answers = (0..votes_per_item)
            .map(|j| answer_categorize(categorizer, item, &run.clusters, truth_idx, cat_seed.derive2(item.id as u64, j as u64)))
            .collect::<Result<Vec<_>>>()?;
        cost.categorization_tasks += answers.len() as u64;
        let chosen = plurality(&answers, clusters.len()).expect("at least one vote");
        clusters[chosen].push(item.id);
        categorized.insert(item.id, (answers, chosen));
    }
    for c in &mut clusters {
        c.sort_unstable();
    }
    Ok(HybridOutcome {
        run,
        categorized,
        clusters,
        cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::HierarchySpec;

    fn two_level() -> Hierarchy {
        Hierarchy::from_spec(&HierarchySpec::node(
            "all",
            vec![
                HierarchySpec::node("a", vec![HierarchySpec::leaf("a1", [0, 1]), HierarchySpec::leaf("a2", [2, 3])]),
                HierarchySpec::node("b", vec![HierarchySpec::leaf("b1", [4, 5]), HierarchySpec::leaf("b2", [6, 7])]),
            ],
        ))
        .unwrap()
    }

    #[test]
    fn plurality_ties_go_low() {
        assert_eq!(plurality(&[2, 1, 2, 1], 3), Some(1));
        assert_eq!(plurality(&[0], 1), Some(0));
        assert_eq!(plurality(&[], 2), None);
    }

    #[test]
    fn true_category_walks_up() {
        let h = two_level();
        let clusters = vec![BTreeSet::from([0, 1]), BTreeSet::from([4, 5, 6])];
        assert_eq!(true_category(&h, 1, &clusters), Some(0));
        // Leaf {2,3} has no overlap; its parent {0..3} overlaps cluster 0.
        assert_eq!(true_category(&h, 3, &clusters), Some(0));
        assert_eq!(true_category(&h, 7, &clusters), Some(1));
        assert_eq!(true_category(&h, 99, &clusters), None);
    }

    #[test]
    fn noiseless_hybrid_recovers_truth() {
        let h = two_level();
        let items: Vec<Item> = (0..8).map(|i| Item::new(i, Vec::<String>::new())).collect();
        let plan = KernelPlan::single(&BTreeSet::from([0, 2, 4, 6])).unwrap();
        let setup = ClusterSetup {
            model: ClusteringWorkerModel {
                min_depth: 1,
                max_depth: Some(1),
                e_item: 0.0,
                ..Default::default()
            },
            workers_per_batch: 3,
            conflicts: ConflictPolicy::Fail,
        };
        let out = cluster_then_categorize(
            &items,
            &plan,
            &[h],
            &setup,
            &CategorizationWorkerModel { e_cat: 0.0 },
            3,
            RngSeed(5),
        )
        .unwrap();
        assert_eq!(out.clusters, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
        assert_eq!(out.cost.clustering_tasks, 12);
        assert_eq!(out.cost.categorization_tasks, 12);
        assert_eq!(out.cost.total(), 24);
    }
}
