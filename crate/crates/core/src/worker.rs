//! Simulated crowd workers for counting, clustering and categorization.
//!
//! Every answer function takes an explicit seed and is a pure function of
//! its arguments.

use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{Clustering, HFrontier, Hierarchy, Item, ItemId, NodeIdx, WorkerId};
use crate::rng::RngSeed;

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")))
    }
}

/// Exact below `k`; above it, errors of magnitude
/// `epsilon * (c - k + 1)^alpha` in a random direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountingWorkerModel {
    pub k: u64,
    pub epsilon: f64,
    pub alpha: f64,
    #[serde(default)]
    pub p_small_err: f64,
}

impl Default for CountingWorkerModel {
    fn default() -> Self {
        CountingWorkerModel {
            k: 20,
            epsilon: 0.3,
            alpha: 1.5,
            p_small_err: 0.0,
        }
    }
}

impl CountingWorkerModel {
    pub fn noiseless(k: u64) -> Self {
        CountingWorkerModel {
            k,
            epsilon: 0.0,
            alpha: 1.0,
            p_small_err: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("counting k must be at least 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha >= 1.0) {
            return Err(Error::Config(format!("alpha must be >= 1, got {}", self.alpha)));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        check_probability("p_small_err", self.p_small_err)
    }

    /// Magnitude of the error at `true_c` (zero below the onset).
    pub fn error_magnitude(&self, true_c: u64) -> u64 {
        if true_c < self.k {
            return 0;
        }
        let over = (true_c - self.k + 1) as f64;
        (self.epsilon * over.powf(self.alpha)).round() as u64
    }
}

/// One simulated answer to "how many objects are in this segment?".
pub fn answer_count(model: &CountingWorkerModel, true_c: u64, seed: RngSeed) -> u64 {
    let mut rng = seed.rng();
    if true_c < model.k {
        if model.p_small_err > 0.0 && rng.random_bool(model.p_small_err) {
            if true_c == 0 || rng.random_bool(0.5) {
                return true_c + 1;
            }
            return true_c - 1;
        }
        return true_c;
    }
    // Above the onset answers are noisy but never fall below `k`: a crowded
    // segment is miscounted, not mistaken for a sparse one.
    let magnitude = model.error_magnitude(true_c);
    if rng.random_bool(0.5) {
        true_c + magnitude
    } else {
        true_c.saturating_sub(magnitude).max(model.k)
    }
}

/// A member of a counting crowd.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingWorker {
    Modeled(CountingWorkerModel),
    /// Ignores the image and answers uniformly in `0..=max`.
    Adversarial { max: u64 },
}

impl CountingWorker {
    pub fn answer(&self, true_c: u64, seed: RngSeed) -> u64 {
        match self {
            CountingWorker::Modeled(m) => answer_count(m, true_c, seed),
            CountingWorker::Adversarial { max } => seed.rng().random_range(0..=*max),
        }
    }
}

/// The workers answering a question: answer `j` comes from worker
/// `j mod len`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingCrowd {
    pub workers: Vec<CountingWorker>,
}

impl CountingCrowd {
    pub fn uniform(model: CountingWorkerModel) -> Self {
        CountingCrowd {
            workers: vec![CountingWorker::Modeled(model)],
        }
    }

    /// Honest workers plus one adversary in the first answer slot.
    pub fn with_adversary(model: CountingWorkerModel, honest: usize, max: u64) -> Self {
        let mut workers = vec![CountingWorker::Adversarial { max }];
        workers.extend(std::iter::repeat_n(CountingWorker::Modeled(model), honest));
        CountingCrowd { workers }
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers.is_empty() {
            return Err(Error::Config("counting crowd has no workers".into()));
        }
        for w in &self.workers {
            if let CountingWorker::Modeled(m) = w {
                m.validate()?;
            }
        }
        Ok(())
    }

    pub fn answer(&self, slot: usize, true_c: u64, seed: RngSeed) -> u64 {
        self.workers[slot % self.workers.len()].answer(true_c, seed)
    }
}

/// Chooses a perspective (ground-truth hierarchy), then a granularity by
/// top-down expansion, then misplaces items independently.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusteringWorkerModel {
    pub perspective_weights: Vec<f64>,
    pub p_expand: f64,
    #[serde(default = "default_e_item")]
    pub e_item: f64,
    /// Nodes shallower than this are always expanded.
    #[serde(default)]
    pub min_depth: usize,
    /// Nodes at or below this depth are never expanded.
    #[serde(default)]
    pub max_depth: Option<usize>,
}

fn default_e_item() -> f64 {
    0.02
}

impl Default for ClusteringWorkerModel {
    fn default() -> Self {
        ClusteringWorkerModel {
            perspective_weights: vec![1.0],
            p_expand: 0.5,
            e_item: default_e_item(),
            min_depth: 0,
            max_depth: None,
        }
    }
}

impl ClusteringWorkerModel {
    pub fn validate(&self) -> Result<()> {
        if self.perspective_weights.is_empty()
            || self.perspective_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(Error::Config(
                "perspective_weights must be a nonempty list of nonnegative numbers".into(),
            ));
        }
        let sum: f64 = self.perspective_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("perspective_weights sum to {sum}, expected 1")));
        }
        check_probability("p_expand", self.p_expand)?;
        check_probability("e_item", self.e_item)?;
        if let Some(max) = self.max_depth {
            if max < self.min_depth {
                return Err(Error::Config("max_depth must be >= min_depth".into()));
            }
        }
        Ok(())
    }
}

/// A simulated clustering together with the hidden choices that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedClustering {
    pub clustering: Clustering,
    pub perspective: usize,
    pub frontier: HFrontier,
    pub misplaced: Vec<ItemId>,
}

fn sample_frontier<R: Rng>(model: &ClusteringWorkerModel, h: &Hierarchy, rng: &mut R) -> HFrontier {
    let mut chosen = Vec::new();
    let mut stack: Vec<NodeIdx> = vec![h.root()];
    while let Some(v) = stack.pop() {
        let depth = h.depth(v);
        let expand = !h.is_leaf(v)
            && (depth < model.min_depth
                || (model.max_depth.is_none_or(|m| depth < m) && rng.random_bool(model.p_expand)));
        if expand {
            stack.extend(h.children(v).iter().rev());
        } else {
            chosen.push(v);
        }
    }
    HFrontier::new(chosen)
}

/// One simulated clustering of `items` by `worker`.
///
/// Items are clustered by the sampled frontier restricted to `items`; each
/// item then moves to a uniformly chosen other cluster with probability
/// `e_item`. Clusters emptied by moves disappear.
pub fn answer_clustering(
    model: &ClusteringWorkerModel,
    worker: WorkerId,
    items: &BTreeSet<ItemId>,
    truth: &[Hierarchy],
    seed: RngSeed,
) -> Result<SimulatedClustering> {
    model.validate()?;
    if truth.len() != model.perspective_weights.len() {
        return Err(Error::Config(format!(
            "{} perspective weights for {} ground-truth hierarchies",
            model.perspective_weights.len(),
            truth.len()
        )));
    }
    for (i, h) in truth.iter().enumerate() {
        if !items.is_subset(&h.universe()) {
            return Err(Error::Config(format!(
                "ground-truth hierarchy {i} does not contain every item"
            )));
        }
    }
    let mut rng = seed.rng();
    let perspective = WeightedIndex::new(&model.perspective_weights)
        .map_err(|e| Error::Config(e.to_string()))?
        .sample(&mut rng);
    let h = &truth[perspective];
    let frontier = sample_frontier(model, h, &mut rng);

    let mut clusters: Vec<Vec<ItemId>> = frontier
        .nodes
        .iter()
        .map(|&v| h.items(v).iter().copied().filter(|x| items.contains(x)).collect::<Vec<_>>())
        .filter(|c| !c.is_empty())
        .collect();

    let mut misplaced = Vec::new();
    if model.e_item > 0.0 && clusters.len() > 1 {
        let mut moves = Vec::new();
        for (ci, c) in clusters.iter().enumerate() {
            for &x in c {
                if rng.random_bool(model.e_item) {
                    let mut to = rng.random_range(0..clusters.len() - 1);
                    if to >= ci {
                        to += 1;
                    }
                    moves.push((x, ci, to));
                }
            }
        }
        for &(x, from, to) in &moves {
            clusters[from].retain(|&y| y != x);
            clusters[to].push(x);
            misplaced.push(x);
        }
        clusters.retain(|c| !c.is_empty());
        misplaced.sort_unstable();
    }

    Ok(SimulatedClustering {
        clustering: Clustering::new(worker, clusters)?,
        perspective,
        frontier,
        misplaced,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategorizationWorkerModel {
    pub e_cat: f64,
}

impl Default for CategorizationWorkerModel {
    fn default() -> Self {
        CategorizationWorkerModel { e_cat: 0.1 }
    }
}

impl CategorizationWorkerModel {
    pub fn validate(&self) -> Result<()> {
        check_probability("e_cat", self.e_cat)
    }
}

/// Picks a cluster for `item`: the true one with probability `1 - e_cat`,
/// otherwise a uniformly chosen wrong one.
pub fn answer_categorize(
    model: &CategorizationWorkerModel,
    _item: &Item,
    clusters: &[Vec<ItemId>],
    truth_assignment: usize,
    seed: RngSeed,
) -> Result<usize> {
    model.validate()?;
    if clusters.is_empty() || truth_assignment >= clusters.len() {
        return Err(Error::Config(format!(
            "true cluster {truth_assignment} is not among {} clusters",
            clusters.len()
        )));
    }
    let mut rng = seed.rng();
    if clusters.len() == 1 || !rng.random_bool(model.e_cat) {
        return Ok(truth_assignment);
    }
    let mut wrong = rng.random_range(0..clusters.len() - 1);
    if wrong >= truth_assignment {
        wrong += 1;
    }
    Ok(wrong)
}
