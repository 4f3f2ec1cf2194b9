//! Crowd-powered counting and clustering, simulated end to end.
//!
//! Counting walks a segmentation tree of an image and asks workers to count
//! objects in progressively smaller regions until every region is small
//! enough to count reliably. Clustering asks workers to group items,
//! keeps the largest set of mutually consistent answers, and assembles a
//! hierarchy from them; large item sets are clustered in batches that
//! share a kernel and merged back together.

pub mod clique;
pub mod consensus;
pub mod drilldown;
pub mod error;
pub mod fixtures;
pub mod geom;
pub mod hierarchy;
pub mod hybrid;
pub mod image;
pub mod itemgen;
pub mod merge;
pub mod metrics;
pub mod prior;
pub mod rng;
pub mod segtree;
pub mod worker;

pub use consensus::{assemble_consensus, build_clustering_graph, max_clique, ml_frontier, ConsensusHierarchy};
pub use drilldown::{aggregate_median, frontier_count, CountRunReport};
pub use error::{Error, Result};
pub use geom::{Rect, Region};
pub use hierarchy::{is_consistent, Clustering, HFrontier, Hierarchy, Item, ItemId};
pub use hybrid::{cluster_batches, cluster_then_categorize, ClusterSetup};
pub use image::{generate_image, ImageGenSpec, SyntheticImage};
pub use merge::{merge_batches, merge_batches_with, ConflictPolicy, KernelPlan};
pub use metrics::{pairwise_eval, CostReport};
pub use rng::RngSeed;
pub use segtree::{build_tree, NodeId, SegTree};
pub use worker::{CategorizationWorkerModel, ClusteringWorkerModel, CountingCrowd, CountingWorkerModel};
