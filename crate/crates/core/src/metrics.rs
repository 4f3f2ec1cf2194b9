//! Evaluation: pairwise clustering scores, count error, task cost and
//! multi-seed summaries.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::consensus::best_frontier;
use crate::drilldown::CountRunReport;
use crate::error::{Error, Result};
use crate::hierarchy::{frontier_clustering, Clustering, Hierarchy, NodeIdx};
use crate::image::SyntheticImage;
use crate::worker::ClusteringWorkerModel;

/// Pair counts and the scores derived from them. Pairs are unordered pairs
/// of distinct items; "same" means placed in one cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterEval {
    pub pair_precision: f64,
    pub pair_recall: f64,
    pub pair_accuracy: f64,
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Scores `predicted` against `truth`. Both must cover the same items.
/// Precision (recall) is 1 when the prediction (truth) has no same-cluster
/// pairs; accuracy is 1 with fewer than two items.
pub fn pairwise_eval(predicted: &Clustering, truth: &Clustering) -> Result<ClusterEval> {
    if truth.universe() != predicted.universe() {
        return Err(Error::DomainMismatch);
    }
    let t = truth.assignment();
    let p = predicted.assignment();
    let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
    for (x, &ct) in &t {
        *joint.entry((ct, p[x])).or_default() += 1;
    }
    let true_pos: u64 = joint.values().map(|&n| pairs(n)).sum();
    let truth_same: u64 = truth.clusters().iter().map(|c| pairs(c.len() as u64)).sum();
    let pred_same: u64 = predicted.clusters().iter().map(|c| pairs(c.len() as u64)).sum();
    let all = pairs(t.len() as u64);
    let false_pos = pred_same - true_pos;
    let false_neg = truth_same - true_pos;
    let true_neg = all - true_pos - false_pos - false_neg;
    let ratio = |num: u64, den: u64| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    Ok(ClusterEval {
        pair_precision: ratio(true_pos, pred_same),
        pair_recall: ratio(true_pos, truth_same),
        pair_accuracy: ratio(true_pos + true_neg, all),
        true_pos,
        false_pos,
        false_neg,
        true_neg,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountEval {
    pub final_count: u64,
    pub true_count: u64,
    pub abs_error: u64,
    /// `abs_error / max(true_count, 1)`.
    pub rel_error: f64,
    pub tasks: u64,
}

pub fn count_error(final_count: u64, true_count: u64) -> (u64, f64) {
    let abs = final_count.abs_diff(true_count);
    (abs, abs as f64 / true_count.max(1) as f64)
}

pub fn count_eval(report: &CountRunReport, image: &SyntheticImage) -> CountEval {
    let true_count = image.object_count();
    let (abs_error, rel_error) = count_error(report.final_count, true_count);
    CountEval {
        final_count: report.final_count,
        true_count,
        abs_error,
        rel_error,
        tasks: report.total_tasks,
    }
}

/// Task counts by kind. A counting task is one answer to one region; a
/// categorization task is one answer for one item; a clustering answer
/// over `m` items is charged `m` tasks, one per item placed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "CostRecord", try_from = "CostRecord")]
pub struct CostReport {
    pub counting_tasks: u64,
    pub clustering_tasks: u64,
    pub categorization_tasks: u64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostRecord {
    counting_tasks: u64,
    clustering_tasks: u64,
    categorization_tasks: u64,
    total: u64,
}

impl From<CostReport> for CostRecord {
    fn from(c: CostReport) -> Self {
        CostRecord {
            counting_tasks: c.counting_tasks,
            clustering_tasks: c.clustering_tasks,
            categorization_tasks: c.categorization_tasks,
            total: c.total(),
        }
    }
}

impl TryFrom<CostRecord> for CostReport {
    type Error = Error;

    fn try_from(r: CostRecord) -> Result<Self> {
        let c = CostReport {
            counting_tasks: r.counting_tasks,
            clustering_tasks: r.clustering_tasks,
            categorization_tasks: r.categorization_tasks,
        };
        if c.total() != r.total {
            return Err(Error::Config(format!("cost total {} does not match its parts", r.total)));
        }
        Ok(c)
    }
}

impl CostReport {
    pub fn total(&self) -> u64 {
        self.counting_tasks + self.clustering_tasks + self.categorization_tasks
    }

    pub fn add(&mut self, other: &CostReport) {
        self.counting_tasks += other.counting_tasks;
        self.clustering_tasks += other.clustering_tasks;
        self.categorization_tasks += other.categorization_tasks;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for fewer than two values.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Some(Summary {
        n,
        mean,
        std,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Probability that a simulated worker whose perspective is `h` reports
/// each node as one of its clusters.
pub fn selection_probabilities(h: &Hierarchy, model: &ClusteringWorkerModel) -> Vec<f64> {
    let mut reach = vec![0.0; h.len()];
    let mut chosen = vec![0.0; h.len()];
    reach[h.root()] = 1.0;
    // Breadth-first layout: parents precede children.
    for v in h.node_indices() {
        let depth = h.depth(v);
        let p_expand = if h.is_leaf(v) {
            0.0
        } else if depth < model.min_depth {
            1.0
        } else if model.max_depth.is_some_and(|m| depth >= m) {
            0.0
        } else {
            model.p_expand
        };
        chosen[v] = reach[v] * (1.0 - p_expand);
        for &c in h.children(v) {
            reach[c] = reach[v] * p_expand;
        }
    }
    chosen
}

/// Index of the perspective with the largest weight; the first on ties.
pub fn dominant_perspective(model: &ClusteringWorkerModel) -> usize {
    let mut best = 0;
    for (i, &w) in model.perspective_weights.iter().enumerate() {
        if w > model.perspective_weights[best] {
            best = i;
        }
    }
    best
}

/// The evaluation target for clustering runs: the most likely frontier of
/// the dominant ground-truth hierarchy under the worker model.
pub fn reference_clustering(truth: &[Hierarchy], model: &ClusteringWorkerModel) -> Result<Clustering> {
    let p = dominant_perspective(model);
    let h = truth
        .get(p)
        .ok_or_else(|| Error::Config("no ground-truth hierarchy for the dominant perspective".into()))?;
    let best = best_frontier(h, &selection_probabilities(h, model));
    frontier_clustering(h, &best.frontier)
}

/// Nodes of `h` in the reference frontier, for reporting.
pub fn reference_nodes(h: &Hierarchy, model: &ClusteringWorkerModel) -> Vec<NodeIdx> {
    best_frontier(h, &selection_probabilities(h, model)).frontier.nodes.into_iter().collect()
}
