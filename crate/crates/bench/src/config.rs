//! Experiment configuration files.

use std::path::{Path, PathBuf};

use opencrowd::itemgen::ItemGenSpec;
use opencrowd::prior::GroupingStrategy;
use opencrowd::{
    CategorizationWorkerModel, ClusterSetup, ClusteringWorkerModel, ConflictPolicy, CountingWorkerModel, ImageGenSpec,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Count,
    CountPrior,
    Cluster,
    ClusterMerge,
    ClusterCategorize,
}

impl ExperimentKind {
    pub fn is_counting(self) -> bool {
        matches!(self, ExperimentKind::Count | ExperimentKind::CountPrior)
    }
}

/// Hand-built inputs used instead of generated ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// The 45-object image with its explicit two-level tree.
    TwoLevel,
    /// Twelve coloured shapes and their five fixed workers.
    ShapesColors,
}

/// Every worker parameter in one flat block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkerParams {
    pub k: u64,
    pub epsilon: f64,
    pub alpha: f64,
    pub p_small_err: f64,
    pub perspective_weights: Vec<f64>,
    pub p_expand: f64,
    pub e_item: f64,
    pub min_depth: usize,
    pub max_depth: Option<usize>,
    pub e_cat: f64,
}

impl Default for WorkerParams {
    fn default() -> Self {
        let c = CountingWorkerModel::default();
        let cl = ClusteringWorkerModel::default();
        WorkerParams {
            k: c.k,
            epsilon: c.epsilon,
            alpha: c.alpha,
            p_small_err: c.p_small_err,
            perspective_weights: cl.perspective_weights,
            p_expand: cl.p_expand,
            e_item: cl.e_item,
            min_depth: cl.min_depth,
            max_depth: cl.max_depth,
            e_cat: CategorizationWorkerModel::default().e_cat,
        }
    }
}

impl WorkerParams {
    pub fn counting(&self) -> CountingWorkerModel {
        CountingWorkerModel {
            k: self.k,
            epsilon: self.epsilon,
            alpha: self.alpha,
            p_small_err: self.p_small_err,
        }
    }

    pub fn clustering(&self) -> ClusteringWorkerModel {
        ClusteringWorkerModel {
            perspective_weights: self.perspective_weights.clone(),
            p_expand: self.p_expand,
            e_item: self.e_item,
            min_depth: self.min_depth,
            max_depth: self.max_depth,
        }
    }

    pub fn categorization(&self) -> CategorizationWorkerModel {
        CategorizationWorkerModel { e_cat: self.e_cat }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.counting().validate().map_err(config_err("workers"))?;
        self.clustering().validate().map_err(config_err("workers"))?;
        self.categorization().validate().map_err(config_err("workers"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorParams {
    pub cols: u32,
    pub rows: u32,
    /// Priors are true cell counts scaled by a factor in `1 ± noise`.
    pub noise: f64,
    /// Largest prior total per group; `k - 1` when absent.
    pub capacity: Option<u64>,
    pub strategy: GroupingStrategy,
    pub fanout: usize,
}

impl Default for PriorParams {
    fn default() -> Self {
        PriorParams {
            cols: 16,
            rows: 12,
            noise: 0.2,
            capacity: None,
            strategy: GroupingStrategy::FirstFit,
            fanout: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountingParams {
    pub k: u64,
    pub answers_per_question: usize,
    /// Midpoint tree shape for `count`.
    pub fanout: u32,
    pub leaf_area: u64,
    pub prior: PriorParams,
}

impl Default for CountingParams {
    fn default() -> Self {
        CountingParams {
            k: 20,
            answers_per_question: 3,
            fanout: 2,
            leaf_area: 4800,
            prior: PriorParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringParams {
    pub workers_per_batch: usize,
    pub conflicts: ConflictPolicy,
    pub batch_size: usize,
    pub kernel_size: usize,
    /// Items clustered before the rest are categorized.
    pub sample_size: usize,
    pub votes_per_item: usize,
}

impl Default for ClusteringParams {
    fn default() -> Self {
        ClusteringParams {
            workers_per_batch: 7,
            conflicts: ConflictPolicy::Fail,
            batch_size: 40,
            kernel_size: 8,
            sample_size: 40,
            votes_per_item: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub image: ImageGenSpec,
    #[serde(default)]
    pub items: ItemGenSpec,
    #[serde(default)]
    pub workers: WorkerParams,
    #[serde(default)]
    pub counting: CountingParams,
    #[serde(default)]
    pub clustering: ClusteringParams,
}

fn config_err(section: &'static str) -> impl Fn(opencrowd::Error) -> CliError {
    move |e| CliError::Config(format!("{section}: {e}"))
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        crate::io::read_json(path)
    }

    pub fn cluster_setup(&self) -> ClusterSetup {
        ClusterSetup {
            model: self.workers.clustering(),
            workers_per_batch: self.clustering.workers_per_batch,
            conflicts: self.clustering.conflicts,
        }
    }

    /// Group capacity for prior trees.
    pub fn capacity(&self) -> u64 {
        self.counting.prior.capacity.unwrap_or(self.counting.k.saturating_sub(1))
    }

    /// Checks everything a run will use, so no seed starts on a bad config.
    pub fn validate(&self) -> Result<(), CliError> {
        require(!self.seeds.is_empty(), || "seeds: at least one seed is required".into())?;
        self.workers.validate()?;
        match self.scenario {
            Some(Scenario::TwoLevel) => require(self.kind == ExperimentKind::Count, || {
                "scenario two_level only applies to kind count".into()
            })?,
            Some(Scenario::ShapesColors) => require(self.kind == ExperimentKind::Cluster, || {
                "scenario shapes_colors only applies to kind cluster".into()
            })?,
            None => {}
        }
        if self.kind.is_counting() {
            let c = &self.counting;
            require(c.k >= 1, || "counting.k must be at least 1".into())?;
            require(c.answers_per_question >= 1, || "counting.answers_per_question must be at least 1".into())?;
            if self.scenario.is_none() {
                self.image.validate().map_err(config_err("image"))?;
            }
            if self.kind == ExperimentKind::Count {
                require(c.fanout >= 2, || "counting.fanout must be at least 2".into())?;
                require(c.leaf_area >= 1, || "counting.leaf_area must be at least 1".into())?;
            } else {
                let p = &c.prior;
                require(p.cols >= 1 && p.rows >= 1, || "counting.prior: cols and rows must be positive".into())?;
                require(p.cols <= self.image.width && p.rows <= self.image.height, || {
                    "counting.prior: grid is finer than the image".into()
                })?;
                require((0.0..1.0).contains(&p.noise), || "counting.prior.noise must lie in [0, 1)".into())?;
                require(p.fanout >= 2, || "counting.prior.fanout must be at least 2".into())?;
            }
            return Ok(());
        }

        let c = &self.clustering;
        require(c.workers_per_batch >= 1, || "clustering.workers_per_batch must be at least 1".into())?;
        if self.scenario.is_some() {
            return Ok(());
        }
        self.items.validate().map_err(config_err("items"))?;
        require(self.workers.perspective_weights.len() == self.items.perspectives, || {
            format!(
                "workers.perspective_weights has {} entries but items.perspectives is {}",
                self.workers.perspective_weights.len(),
                self.items.perspectives
            )
        })?;
        match self.kind {
            ExperimentKind::ClusterMerge => {
                require(c.kernel_size <= self.items.items, || "clustering.kernel_size exceeds the item count".into())?;
                require(c.batch_size > c.kernel_size, || {
                    "clustering.batch_size must exceed clustering.kernel_size".into()
                })?;
            }
            ExperimentKind::ClusterCategorize => {
                require(c.sample_size >= 1 && c.sample_size <= self.items.items, || {
                    "clustering.sample_size must lie between 1 and the item count".into()
                })?;
                require(c.votes_per_item % 2 == 1, || "clustering.votes_per_item must be odd".into())?;
            }
            _ => {}
        }
        Ok(())
    }
}
