//! One seed of an experiment, and whole sweeps.

use std::collections::BTreeSet;
use std::path::Path;

use opencrowd::consensus::{ml_frontier_scored, ClusteringGraph};
use opencrowd::fixtures::{shapes_colors, two_level_scenario};
use opencrowd::hybrid::{BatchResult, ClusterRun, HybridOutcome};
use opencrowd::itemgen::generate_items;
use opencrowd::metrics::{count_eval, pairwise_eval, reference_clustering, ClusterEval};
use opencrowd::prior::{build_prior_tree, grid_partition, group_cells, CellGroup};
use opencrowd::segtree::SplitPolicy;
use opencrowd::*;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind, Scenario};
use crate::io::{to_json, write_atomic};
use crate::report::{summarize_rows, RunSummary};
use crate::CliError;

/// One CSV row. Fields that do not apply to the experiment are empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub seed: u64,
    pub ok: bool,
    pub error: Option<String>,
    pub total_tasks: Option<u64>,
    pub counting_tasks: Option<u64>,
    pub clustering_tasks: Option<u64>,
    pub categorization_tasks: Option<u64>,
    pub questions: Option<u64>,
    pub true_count: Option<u64>,
    pub final_count: Option<u64>,
    pub abs_error: Option<u64>,
    pub rel_error: Option<f64>,
    pub saturated_leaves: Option<u64>,
    pub clusters: Option<u64>,
    pub clique_size: Option<u64>,
    pub pair_precision: Option<f64>,
    pub pair_recall: Option<f64>,
    pub pair_accuracy: Option<f64>,
}

impl SeedRow {
    /// Numeric columns by name, for summaries.
    pub fn metrics(&self) -> Vec<(&'static str, Option<f64>)> {
        let u = |v: Option<u64>| v.map(|x| x as f64);
        vec![
            ("total_tasks", u(self.total_tasks)),
            ("counting_tasks", u(self.counting_tasks)),
            ("clustering_tasks", u(self.clustering_tasks)),
            ("categorization_tasks", u(self.categorization_tasks)),
            ("questions", u(self.questions)),
            ("true_count", u(self.true_count)),
            ("final_count", u(self.final_count)),
            ("abs_error", u(self.abs_error)),
            ("rel_error", self.rel_error),
            ("saturated_leaves", u(self.saturated_leaves)),
            ("clusters", u(self.clusters)),
            ("clique_size", u(self.clique_size)),
            ("pair_precision", self.pair_precision),
            ("pair_recall", self.pair_recall),
            ("pair_accuracy", self.pair_accuracy),
        ]
    }

    fn with_cost(mut self, cost: &CostReport) -> Self {
        self.total_tasks = Some(cost.total());
        self.counting_tasks = Some(cost.counting_tasks);
        self.clustering_tasks = Some(cost.clustering_tasks);
        self.categorization_tasks = Some(cost.categorization_tasks);
        self
    }

    fn with_eval(mut self, e: &ClusterEval, clusters: usize) -> Self {
        self.pair_precision = Some(e.pair_precision);
        self.pair_recall = Some(e.pair_recall);
        self.pair_accuracy = Some(e.pair_accuracy);
        self.clusters = Some(clusters as u64);
        self
    }
}

/// The full trace of one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "pipeline")]
pub enum Trace {
    Count {
        tree: SegTree,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        groups: Option<Vec<CellGroup>>,
        report: CountRunReport,
    },
    Cluster {
        run: ClusterRun,
    },
    Hybrid {
        outcome: HybridOutcome,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub kind: ExperimentKind,
    pub row: SeedRow,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Trace>,
}

struct SeedOutput {
    row: SeedRow,
    trace: Trace,
    /// File suffix and Graphviz text.
    dots: Vec<(String, String)>,
}

fn cluster_dots(run: &ClusterRun) -> Vec<(String, String)> {
    let mut dots = vec![(String::new(), run.merged.to_dot())];
    for (b, batch) in run.batches.iter().enumerate() {
        let graph = ClusteringGraph {
            workers: batch.answers.clone(),
            edges: batch.edges.clone(),
        };
        dots.push((format!("-graph-{b}"), graph.to_dot(&batch.clique)));
    }
    dots
}

fn run_counting(cfg: &ExperimentConfig, seed: RngSeed) -> Result<SeedOutput> {
    let c = &cfg.counting;
    let (image, tree, groups) = match cfg.scenario {
        Some(Scenario::TwoLevel) => {
            let (image, tree) = two_level_scenario();
            (image, tree, None)
        }
        _ => {
            let image = generate_image(&cfg.image, seed.derive(0))?;
            if cfg.kind == ExperimentKind::CountPrior {
                let p = &c.prior;
                let partition = grid_partition(&image, p.cols, p.rows, p.noise, seed.derive(2))?;
                let groups = group_cells(&partition, cfg.capacity(), p.strategy);
                let tree = build_prior_tree(&groups, &partition, p.fanout)?;
                (image, tree, Some(groups))
            } else {
                let policy = SplitPolicy::Midpoint {
                    fanout: c.fanout,
                    leaf_area: c.leaf_area,
                };
                let tree = build_tree(&image, &policy)?;
                (image, tree, None)
            }
        }
    };
    let crowd = CountingCrowd::uniform(cfg.workers.counting());
    let report = frontier_count(&tree, &image, &crowd, c.k, c.answers_per_question, seed.derive(1))?;
    let eval = count_eval(&report, &image);
    let cost = CostReport {
        counting_tasks: report.total_tasks,
        ..Default::default()
    };
    let row = SeedRow {
        questions: Some(report.questions_asked() as u64),
        true_count: Some(eval.true_count),
        final_count: Some(eval.final_count),
        abs_error: Some(eval.abs_error),
        rel_error: Some(eval.rel_error),
        saturated_leaves: Some(report.saturated_leaves.len() as u64),
        ..Default::default()
    }
    .with_cost(&cost);
    let dots = vec![(String::new(), report.to_dot(&tree))];
    Ok(SeedOutput {
        row,
        trace: Trace::Count { tree, groups, report },
        dots,
    })
}

/// The fixed shapes-and-colours workers, aggregated as one batch.
fn shapes_colors_run() -> Result<(ClusterRun, Vec<Hierarchy>)> {
    let f = shapes_colors();
    let universe: BTreeSet<ItemId> = f.items.iter().map(|i| i.id).collect();
    let graph = build_clustering_graph(&f.workers)?;
    let clique = max_clique(&graph);
    let chosen: Vec<Clustering> = clique.iter().map(|&i| f.workers[i].clone()).collect();
    let consensus = assemble_consensus(&chosen, &universe)?;
    let frontier = ml_frontier_scored(&consensus);
    let clusters = frontier.frontier.nodes.iter().map(|&v| consensus.hierarchy.items(v).to_vec()).collect();
    let cost = CostReport {
        clustering_tasks: (universe.len() * f.workers.len()) as u64,
        ..Default::default()
    };
    let batch = BatchResult {
        items: universe,
        answers: f.workers.clone(),
        edges: graph.edges,
        clique,
        consensus: consensus.clone(),
    };
    let run = ClusterRun {
        batches: vec![batch],
        merged: consensus,
        frontier,
        clusters,
        cost,
    };
    Ok((run, vec![f.shape, f.color]))
}

fn run_clustering(cfg: &ExperimentConfig, seed: RngSeed) -> Result<SeedOutput> {
    let setup = cfg.cluster_setup();
    let c = &cfg.clustering;
    if cfg.scenario == Some(Scenario::ShapesColors) {
        let (run, truth) = shapes_colors_run()?;
        return finish_cluster(run, &truth, &setup);
    }
    let set = generate_items(&cfg.items, seed.derive(0))?;
    let universe: BTreeSet<ItemId> = set.items.iter().map(|i| i.id).collect();
    match cfg.kind {
        ExperimentKind::Cluster => {
            let plan = KernelPlan::single(&universe)?;
            finish_cluster(cluster_batches(&plan, &set.hierarchies, &setup, seed.derive(2))?, &set.hierarchies, &setup)
        }
        ExperimentKind::ClusterMerge => {
            let plan = KernelPlan::random(&universe, c.kernel_size, c.batch_size, seed.derive(1))?;
            finish_cluster(cluster_batches(&plan, &set.hierarchies, &setup, seed.derive(2))?, &set.hierarchies, &setup)
        }
        _ => {
            let mut order: Vec<ItemId> = universe.into_iter().collect();
            order.shuffle(&mut seed.derive(1).rng());
            let sample: BTreeSet<ItemId> = order[..c.sample_size].iter().copied().collect();
            let plan = KernelPlan::single(&sample)?;
            let outcome = cluster_then_categorize(
                &set.items,
                &plan,
                &set.hierarchies,
                &setup,
                &cfg.workers.categorization(),
                c.votes_per_item,
                seed.derive(2),
            )?;
            let reference = reference_clustering(&set.hierarchies, &setup.model)?;
            let eval = pairwise_eval(&outcome.clustering()?, &reference)?;
            let mut row = SeedRow::default().with_cost(&outcome.cost).with_eval(&eval, outcome.clusters.len());
            row.clique_size = outcome.run.batches.first().map(|b| b.clique.len() as u64);
            let dots = cluster_dots(&outcome.run);
            Ok(SeedOutput {
                row,
                trace: Trace::Hybrid { outcome },
                dots,
            })
        }
    }
}

fn finish_cluster(run: ClusterRun, truth: &[Hierarchy], setup: &ClusterSetup) -> Result<SeedOutput> {
    let reference = reference_clustering(truth, &setup.model)?;
    let eval = pairwise_eval(&run.clustering()?, &reference)?;
    let mut row = SeedRow::default().with_cost(&run.cost).with_eval(&eval, run.clusters.len());
    let cliques: u64 = run.batches.iter().map(|b| b.clique.len() as u64).sum();
    row.clique_size = Some(cliques / run.batches.len().max(1) as u64);
    let dots = cluster_dots(&run);
    Ok(SeedOutput {
        row,
        trace: Trace::Cluster { run },
        dots,
    })
}

/// Runs one seed; algorithm failures come back as a failed row.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> (SeedReport, Vec<(String, String)>) {
    let rs = RngSeed(seed);
    let out = if cfg.kind.is_counting() {
        run_counting(cfg, rs)
    } else {
        run_clustering(cfg, rs)
    };
    match out {
        Ok(o) => (
            SeedReport {
                kind: cfg.kind,
                row: SeedRow { seed, ok: true, ..o.row },
                trace: Some(o.trace),
            },
            o.dots,
        ),
        Err(e) => (
            SeedReport {
                kind: cfg.kind,
                row: SeedRow {
                    seed,
                    ok: false,
                    error: Some(e.to_string()),
                    ..Default::default()
                },
                trace: None,
            },
            Vec::new(),
        ),
    }
}

pub fn write_csv(rows: &[SeedRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.serialize(SeedRow::default())
            .map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
        let bytes = w.into_inner().map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
        // Keep only the header line.
        let end = bytes.iter().position(|&b| b == b'\n').map_or(bytes.len(), |i| i + 1);
        return Ok(bytes[..end].to_vec());
    }
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(format!("csv: {e}")))
}

/// Runs every seed of `cfg` into `out`:
/// `config.json`, `seeds/seed-N.json` and its `.dot` files, `results.csv`
/// and finally `summary.json`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, parallel: usize) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    write_atomic(&out.join("config.json"), to_json(cfg).as_bytes())?;
    let seeds_dir = out.join("seeds");
    let one = |seed: u64| -> Result<SeedRow, CliError> {
        let (report, dots) = run_seed(cfg, seed);
        write_atomic(&seeds_dir.join(format!("seed-{seed}.json")), to_json(&report).as_bytes())?;
        for (suffix, dot) in dots {
            write_atomic(&seeds_dir.join(format!("seed-{seed}{suffix}.dot")), dot.as_bytes())?;
        }
        Ok(report.row)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let rows: Vec<SeedRow> = pool.install(|| cfg.seeds.par_iter().map(|&s| one(s)).collect::<Result<_, _>>())?;
    write_atomic(&out.join("results.csv"), &write_csv(&rows)?)?;
    let summary = summarize_rows(Some(cfg.kind), &rows);
    write_atomic(&out.join("summary.json"), to_json(&summary).as_bytes())?;
    Ok(summary)
}
