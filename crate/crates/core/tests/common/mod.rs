//! Generators and property bodies shared by the property suite and the
//! acceptance runner.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use opencrowd::consensus::{assemble_consensus, build_clustering_graph, max_clique, ml_frontier};
use opencrowd::hierarchy::{enumerate_frontiers, frontier_clustering, HierarchySpec};
use opencrowd::image::{generate_image, ImageGenSpec, SyntheticImage};
use opencrowd::metrics::{pairwise_eval, CostReport};
use opencrowd::segtree::SplitPolicy;
use opencrowd::worker::{answer_clustering, CountingCrowd, CountingWorkerModel, ClusteringWorkerModel};
use opencrowd::{build_tree, frontier_count, is_consistent, Clustering, Hierarchy, ItemId, RngSeed, SegTree};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::Rng;

/// A random hierarchy over items `0..n` with at most `max_internal`
/// internal nodes, each splitting into two or three parts.
pub fn random_hierarchy(n: usize, max_internal: usize, seed: RngSeed) -> Hierarchy {
    let mut rng = seed.rng();
    let mut items: Vec<ItemId> = (0..n as ItemId).collect();
    // Shuffle so leaves are not always contiguous ranges.
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
    let mut budget = max_internal;
    fn grow(items: &[ItemId], budget: &mut usize, rng: &mut impl Rng, label: String, root: bool) -> HierarchySpec {
        let split = items.len() >= 2 && *budget > 0 && (root || rng.random_bool(0.6));
        if !split {
            return HierarchySpec::leaf(label, items.iter().copied());
        }
        *budget -= 1;
        let parts = rng.random_range(2..=items.len().min(3));
        let mut cuts: BTreeSet<usize> = BTreeSet::new();
        while cuts.len() < parts - 1 {
            cuts.insert(rng.random_range(1..items.len()));
        }
        let mut bounds = vec![0];
        bounds.extend(cuts);
        bounds.push(items.len());
        let children = bounds
            .windows(2)
            .enumerate()
            .map(|(i, w)| grow(&items[w[0]..w[1]], budget, rng, format!("{label}.{i}"), false))
            .collect();
        HierarchySpec::node(label, children)
    }
    let spec = grow(&items, &mut budget, &mut rng, "n".into(), true);
    Hierarchy::from_spec(&spec).expect("generated hierarchy is valid")
}

/// Items `0..n` dropped into up to `k` clusters uniformly.
pub fn random_partition(n: usize, k: usize, worker: u32, seed: RngSeed) -> Clustering {
    let mut rng = seed.rng();
    let mut clusters: BTreeMap<usize, Vec<ItemId>> = BTreeMap::new();
    for x in 0..n as ItemId {
        clusters.entry(rng.random_range(0..k)).or_default().push(x);
    }
    Clustering::new(worker, clusters.into_values().collect()).unwrap()
}

pub fn small_image(count: u32, seed: RngSeed) -> SyntheticImage {
    generate_image(
        &ImageGenSpec {
            width: 160,
            height: 120,
            count,
            min_size: 3,
            max_size: 12,
            ..Default::default()
        },
        seed,
    )
    .expect("small image spec is valid")
}

pub fn small_tree(image: &SyntheticImage, fanout: u32, leaf_area: u64) -> SegTree {
    build_tree(image, &SplitPolicy::Midpoint { fanout, leaf_area }).expect("tree builds")
}

fn laminar(sets: &[BTreeSet<ItemId>]) -> bool {
    sets.iter().enumerate().all(|(i, a)| {
        sets[i + 1..]
            .iter()
            .all(|b| a.is_disjoint(b) || a.is_subset(b) || b.is_subset(a))
    })
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

/// Every node's true count is the sum of its children's, and the root
/// holds every object.
pub fn partition_additivity(count: u32, fanout: u32, leaf_area: u64, seed: u64) -> Result<(), TestCaseError> {
    let image = small_image(count, RngSeed(seed));
    let tree = small_tree(&image, fanout, leaf_area);
    let truth = tree.true_counts(&image).unwrap();
    check(truth[&tree.root()] == image.object_count(), || "root does not hold every object".into())?;
    for v in tree.internal_nodes() {
        let sum: u64 = tree.children(v).iter().map(|c| truth[c]).sum();
        check(sum == truth[&v], || format!("node {v:?}: {} != children sum {sum}", truth[&v]))?;
    }
    Ok(())
}

/// Drill-down always stops on a valid frontier, whatever the workers say.
pub fn seg_frontier_validity(count: u32, k: u64, epsilon: f64, seed: u64) -> Result<(), TestCaseError> {
    let image = small_image(count, RngSeed(seed));
    let tree = small_tree(&image, 2, 300);
    let crowd = CountingCrowd::uniform(CountingWorkerModel {
        k,
        epsilon,
        alpha: 1.5,
        p_small_err: 0.1,
    });
    let report = frontier_count(&tree, &image, &crowd, k, 3, RngSeed(seed).derive(1)).unwrap();
    check(tree.check_frontier(&report.final_frontier).is_ok(), || "invalid final frontier".into())?;
    let asked = report.asked();
    check(
        tree.ancestor_closure(&report.final_frontier) == asked,
        || "asked nodes differ from the frontier's ancestor closure".into(),
    )
}

/// Every enumerated frontier and the chosen one are valid, and a frontier's
/// clustering covers the universe.
pub fn hierarchy_frontier_validity(n: usize, internal: usize, seed: u64) -> Result<(), TestCaseError> {
    let h = random_hierarchy(n, internal, RngSeed(seed));
    for f in enumerate_frontiers(&h).unwrap() {
        check(h.check_frontier(&f).is_ok(), || format!("invalid frontier {:?}", f.nodes))?;
        let c = frontier_clustering(&h, &f).unwrap();
        check(c.universe() == h.universe(), || "frontier clustering misses items".into())?;
    }
    let votes: Vec<u32> = {
        let mut rng = RngSeed(seed).derive(1).rng();
        (0..h.len()).map(|_| rng.random_range(0..6)).collect()
    };
    let ch = opencrowd::ConsensusHierarchy { hierarchy: h.clone(), votes };
    check(h.check_frontier(&ml_frontier(&ch)).is_ok(), || "invalid best frontier".into())
}

/// Consistency is symmetric, and any two frontiers of one hierarchy are
/// consistent.
pub fn consistency_symmetry(n: usize, ka: usize, kb: usize, seed: u64) -> Result<(), TestCaseError> {
    let a = random_partition(n, ka, 0, RngSeed(seed));
    let b = random_partition(n, kb, 1, RngSeed(seed).derive(1));
    check(
        is_consistent(&a, &b).unwrap() == is_consistent(&b, &a).unwrap(),
        || "consistency is not symmetric".into(),
    )?;
    let h = random_hierarchy(n, 6, RngSeed(seed).derive(2));
    let fs = enumerate_frontiers(&h).unwrap();
    let mut rng = RngSeed(seed).derive(3).rng();
    let x = frontier_clustering(&h, &fs[rng.random_range(0..fs.len())]).unwrap();
    let y = frontier_clustering(&h, &fs[rng.random_range(0..fs.len())]).unwrap();
    check(is_consistent(&x, &y).unwrap(), || "two frontiers of one hierarchy disagree".into())
}

/// `{0,1},{2}` and `{0},{1,2}` are each consistent with `{0,1,2}` but not
/// with each other.
pub fn non_transitivity() -> Result<(), TestCaseError> {
    let a = Clustering::new(0, vec![vec![0, 1], vec![2]]).unwrap();
    let b = Clustering::new(1, vec![vec![0, 1, 2]]).unwrap();
    let c = Clustering::new(2, vec![vec![0], vec![1, 2]]).unwrap();
    check(
        is_consistent(&a, &b).unwrap() && is_consistent(&b, &c).unwrap() && !is_consistent(&a, &c).unwrap(),
        || "counterexample does not hold".into(),
    )
}

/// Consensus built from the clique of simulated and random workers is a
/// laminar family containing every chosen worker's clusters.
pub fn consensus_laminarity(n: usize, workers: usize, e_item: f64, seed: u64) -> Result<(), TestCaseError> {
    let truth = vec![
        random_hierarchy(n, 5, RngSeed(seed)),
        random_hierarchy(n, 5, RngSeed(seed).derive(1)),
    ];
    let universe: BTreeSet<ItemId> = (0..n as ItemId).collect();
    let model = ClusteringWorkerModel {
        perspective_weights: vec![0.6, 0.4],
        e_item,
        ..Default::default()
    };
    let mut answers: Vec<Clustering> = (0..workers)
        .map(|j| {
            answer_clustering(&model, j as u32, &universe, &truth, RngSeed(seed).derive2(2, j as u64))
                .unwrap()
                .clustering
        })
        .collect();
    answers.push(random_partition(n, 3, workers as u32, RngSeed(seed).derive(3)));
    let g = build_clustering_graph(&answers).unwrap();
    let clique = max_clique(&g);
    let chosen: Vec<Clustering> = clique.iter().map(|&i| answers[i].clone()).collect();
    let ch = assemble_consensus(&chosen, &universe).unwrap();
    let h = &ch.hierarchy;
    let sets: Vec<BTreeSet<ItemId>> = h.node_indices().map(|v| h.item_set(v)).collect();
    check(laminar(&sets), || "consensus is not laminar".into())?;
    check(h.universe() == universe, || "consensus root is not the universe".into())?;
    for w in &chosen {
        for c in w.cluster_sets() {
            check(sets.contains(&c), || format!("cluster {c:?} missing from consensus"))?;
        }
    }
    Ok(())
}

/// Totals add up, survive a round trip and add component-wise.
pub fn cost_conservation(a: [u32; 3], b: [u32; 3]) -> Result<(), TestCaseError> {
    let mk = |v: [u32; 3]| CostReport {
        counting_tasks: v[0] as u64,
        clustering_tasks: v[1] as u64,
        categorization_tasks: v[2] as u64,
    };
    let (x, y) = (mk(a), mk(b));
    check(
        x.total() == x.counting_tasks + x.clustering_tasks + x.categorization_tasks,
        || "total is not the sum of parts".into(),
    )?;
    let json = serde_json::to_string(&x).unwrap();
    let back: CostReport = serde_json::from_str(&json).unwrap();
    check(back == x, || "round trip changed the report".into())?;
    let mut z = x;
    z.add(&y);
    check(z.total() == x.total() + y.total(), || "adding reports loses tasks".into())
}

/// Raising `k` never makes drill-down ask more questions with exact workers.
pub fn monotone_in_k(count: u32, k: u64, seed: u64) -> Result<(), TestCaseError> {
    let image = small_image(count, RngSeed(seed));
    let tree = small_tree(&image, 2, 300);
    let crowd = CountingCrowd::uniform(CountingWorkerModel::noiseless(k));
    let lo = frontier_count(&tree, &image, &crowd, k, 3, RngSeed(seed)).unwrap();
    let hi = frontier_count(&tree, &image, &crowd, k + 1, 3, RngSeed(seed)).unwrap();
    check(hi.asked().is_subset(&lo.asked()), || format!("k={} asks more than k={k}", k + 1))
}

/// Pair scores match a direct count over all pairs.
pub fn pairwise_matches_bruteforce(n: usize, ka: usize, kb: usize, seed: u64) -> Result<(), TestCaseError> {
    let p = random_partition(n, ka, 0, RngSeed(seed));
    let t = random_partition(n, kb, 1, RngSeed(seed).derive(1));
    let (pa, ta) = (p.assignment(), t.assignment());
    let (mut tp, mut fp, mut fneg, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..n as ItemId {
        for j in i + 1..n as ItemId {
            match (pa[&i] == pa[&j], ta[&i] == ta[&j]) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                (false, false) => tn += 1,
            }
        }
    }
    let e = pairwise_eval(&p, &t).unwrap();
    check(
        (e.true_pos, e.false_pos, e.false_neg, e.true_neg) == (tp, fp, fneg, tn),
        || format!("pair counts {:?} vs {:?}", (e.true_pos, e.false_pos, e.false_neg, e.true_neg), (tp, fp, fneg, tn)),
    )
}

/// With exact workers the asked nodes are exactly the ancestors of the
/// shallowest below-threshold frontier.
pub fn question_set(count: u32, k: u64, seed: u64) -> Result<(), TestCaseError> {
    let image = small_image(count, RngSeed(seed));
    let tree = small_tree(&image, 3, 200);
    let crowd = CountingCrowd::uniform(CountingWorkerModel::noiseless(k));
    let report = frontier_count(&tree, &image, &crowd, k, 3, RngSeed(seed)).unwrap();
    let oracle = opencrowd::drilldown::minimal_frontier_oracle(&tree, &image, k).unwrap();
    check(report.final_frontier == oracle.frontier, || "frontier differs from the oracle".into())?;
    check(
        report.asked() == tree.ancestor_closure(&oracle.frontier),
        || "asked set differs from the oracle's ancestor closure".into(),
    )?;
    check(
        report.saturated_leaves == oracle.saturated,
        || "saturated leaves differ from the oracle".into(),
    )
}

/// Named property runners, each over `cases` generated inputs.
pub fn properties() -> Vec<(&'static str, fn(u32) -> Result<(), String>)> {
    fn run<S: Strategy>(cases: u32, strategy: S, f: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
        let mut runner = TestRunner::new(Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        });
        runner.run(&strategy, f).map_err(|e| e.to_string())
    }
    vec![
        ("partition additivity", |c| {
            run(c, (0u32..60, 2u32..5, 50u64..2000, any::<u64>()), |(n, f, a, s)| {
                partition_additivity(n, f, a, s)
            })
        }),
        ("segmentation frontier validity", |c| {
            run(c, (0u32..80, 1u64..25, 0.0f64..0.5, any::<u64>()), |(n, k, e, s)| {
                seg_frontier_validity(n, k, e, s)
            })
        }),
        ("hierarchy frontier validity", |c| {
            run(c, (1usize..14, 0usize..7, any::<u64>()), |(n, i, s)| hierarchy_frontier_validity(n, i, s))
        }),
        ("consistency symmetry", |c| {
            run(c, (1usize..16, 1usize..5, 1usize..5, any::<u64>()), |(n, a, b, s)| {
                consistency_symmetry(n, a, b, s)
            })
        }),
        ("consistency is not transitive", |c| run(c, Just(()), |_| non_transitivity())),
        ("consensus laminarity", |c| {
            run(c, (2usize..16, 1usize..8, 0.0f64..0.2, any::<u64>()), |(n, w, e, s)| {
                consensus_laminarity(n, w, e, s)
            })
        }),
        ("cost conservation", |c| {
            run(c, (any::<[u32; 3]>(), any::<[u32; 3]>()), |(a, b)| cost_conservation(a, b))
        }),
        ("drill-down monotone in k", |c| {
            run(c, (0u32..80, 1u64..25, any::<u64>()), |(n, k, s)| monotone_in_k(n, k, s))
        }),
        ("pairwise scores match brute force", |c| {
            run(c, (0usize..25, 1usize..6, 1usize..6, any::<u64>()), |(n, a, b, s)| {
                pairwise_matches_bruteforce(n, a, b, s)
            })
        }),
        ("asked set is the oracle's ancestor closure", |c| {
            run(c, (0u32..80, 1u64..25, any::<u64>()), |(n, k, s)| question_set(n, k, s))
        }),
    ]
}
