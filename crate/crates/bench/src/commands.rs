//! The single-step subcommands. Each reads JSON inputs and writes one JSON
//! output (stdout when no path is given), plus optional Graphviz files.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use opencrowd::consensus::ml_frontier_scored;
use opencrowd::fixtures::{shapes_colors, two_level_scenario};
use opencrowd::hybrid::cluster_batch;
use opencrowd::itemgen::{generate_items, ItemGenSpec, ItemSet};
use opencrowd::segtree::SplitPolicy;
use opencrowd::*;
use serde::{Deserialize, Serialize};

use crate::config::WorkerParams;
use crate::io::{emit, read_json, to_json, write_atomic};
use crate::CliError;

fn read_or_default<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    path.map_or_else(|| Ok(T::default()), read_json)
}

fn workers(path: Option<&Path>) -> Result<WorkerParams, CliError> {
    let w: WorkerParams = read_or_default(path)?;
    w.validate()?;
    Ok(w)
}

pub fn gen_image(spec: Option<&Path>, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let spec: ImageGenSpec = read_or_default(spec)?;
    let image = generate_image(&spec, RngSeed(seed))?;
    emit(out, &to_json(&image))
}

pub fn gen_items(spec: Option<&Path>, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let spec: ItemGenSpec = read_or_default(spec)?;
    let set = generate_items(&spec, RngSeed(seed))?;
    emit(out, &to_json(&set))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum FixtureName {
    TwoLevel,
    ShapesColors,
}

/// Writes a hand-built scenario as ordinary input files.
pub fn fixture(name: FixtureName, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    match name {
        FixtureName::TwoLevel => {
            let (image, tree) = two_level_scenario();
            files.push((dir.join("image.json"), to_json(&image)));
            files.push((dir.join("tree.json"), to_json(&tree)));
        }
        FixtureName::ShapesColors => {
            let f = shapes_colors();
            files.push((dir.join("items.json"), to_json(&f.items)));
            files.push((dir.join("hierarchies.json"), to_json(&vec![f.shape, f.color])));
            files.push((dir.join("answers.json"), to_json(&f.workers)));
        }
    }
    for (path, text) in &files {
        write_atomic(path, text.as_bytes())?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

pub struct CountArgs<'a> {
    pub image: &'a Path,
    pub tree: Option<&'a Path>,
    pub fanout: u32,
    pub leaf_area: u64,
    pub k: u64,
    pub answers: usize,
    pub workers: Option<&'a Path>,
    pub seed: u64,
    pub out: Option<&'a Path>,
    pub dot: Option<&'a Path>,
}

pub fn count(a: &CountArgs) -> Result<CountRunReport, CliError> {
    let image: SyntheticImage = read_json(a.image)?;
    let tree: SegTree = match a.tree {
        Some(p) => read_json(p)?,
        None => build_tree(
            &image,
            &SplitPolicy::Midpoint {
                fanout: a.fanout,
                leaf_area: a.leaf_area,
            },
        )?,
    };
    tree.check_image(&image)?;
    let crowd = CountingCrowd::uniform(workers(a.workers)?.counting());
    let report = frontier_count(&tree, &image, &crowd, a.k, a.answers, RngSeed(a.seed))?;
    if let Some(dot) = a.dot {
        write_atomic(dot, report.to_dot(&tree).as_bytes())?;
    }
    emit(a.out, &to_json(&report))?;
    Ok(report)
}

/// Aggregate of one set of clusterings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub answers: Vec<Clustering>,
    /// Consistent pairs, as worker ids.
    pub edges: BTreeSet<(u32, u32)>,
    pub clique: Vec<u32>,
    pub consensus: ConsensusHierarchy,
    pub clusters: Vec<Vec<ItemId>>,
    pub cost: CostReport,
}

pub struct ClusterArgs<'a> {
    pub answers: Option<&'a Path>,
    pub items: Option<&'a Path>,
    pub workers: Option<&'a Path>,
    pub workers_per_batch: usize,
    pub seed: u64,
    pub out: Option<&'a Path>,
    pub dot: Option<&'a Path>,
}

/// Aggregates given answers, or simulates workers over a generated item set.
pub fn cluster(a: &ClusterArgs) -> Result<ClusterReport, CliError> {
    let answers: Vec<Clustering> = match (a.answers, a.items) {
        (Some(p), None) => read_json(p)?,
        (None, Some(p)) => {
            let set: ItemSet = read_json(p)?;
            let model = workers(a.workers)?.clustering();
            let universe: BTreeSet<ItemId> = set.items.iter().map(|i| i.id).collect();
            cluster_batch(&universe, &set.hierarchies, &model, a.workers_per_batch, 0, RngSeed(a.seed))?.answers
        }
        _ => return Err(CliError::Config("give exactly one of --answers and --items".into())),
    };
    let first = answers
        .first()
        .ok_or_else(|| CliError::Config("no clusterings to aggregate".into()))?;
    let universe = first.universe();
    let graph = build_clustering_graph(&answers)?;
    let clique = max_clique(&graph);
    let chosen: Vec<Clustering> = clique.iter().map(|&i| answers[i].clone()).collect();
    let consensus = assemble_consensus(&chosen, &universe)?;
    let frontier = ml_frontier_scored(&consensus);
    if let Some(dot) = a.dot {
        write_atomic(dot, graph.to_dot(&clique).as_bytes())?;
    }
    let report = ClusterReport {
        edges: graph.worker_edges(),
        clique: chosen.iter().map(|c| c.worker()).collect(),
        clusters: frontier.frontier.nodes.iter().map(|&v| consensus.hierarchy.items(v).to_vec()).collect(),
        consensus,
        cost: CostReport {
            clustering_tasks: answers.iter().map(|c| c.item_count() as u64).sum(),
            ..Default::default()
        },
        answers,
    };
    emit(a.out, &to_json(&report))?;
    Ok(report)
}

pub fn merge(
    batches: &Path,
    plan: &Path,
    conflicts: ConflictPolicy,
    out: Option<&Path>,
    dot: Option<&Path>,
) -> Result<ConsensusHierarchy, CliError> {
    let batches: Vec<ConsensusHierarchy> = read_json(batches)?;
    let plan: KernelPlan = read_json(plan)?;
    let merged = merge_batches_with(&batches, &plan, conflicts)?;
    if let Some(dot) = dot {
        write_atomic(dot, merged.to_dot().as_bytes())?;
    }
    emit(out, &to_json(&merged))?;
    Ok(merged)
}
