use thiserror::Error;

use crate::geom::Rect;
use crate::hierarchy::ItemId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("region {region:?} is outside the {width}x{height} image")]
    OutOfBounds { region: Rect, width: u32, height: u32 },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("image generation failed: {0}")]
    Generation(String),

    #[error("cannot aggregate an empty answer list")]
    EmptyAnswers,

    #[error("invalid segmentation tree: {0}")]
    InvalidTree(String),

    #[error("invalid frontier: {0}")]
    InvalidFrontier(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid cell partition: {0}")]
    InvalidPartition(String),

    #[error("invalid hierarchy: {0}")]
    InvalidHierarchy(String),

    #[error("invalid clustering: {0}")]
    InvalidClustering(String),

    #[error("clusterings cover different item sets")]
    DomainMismatch,

    #[error("hierarchy has {frontiers} frontiers, above the enumeration limit of {limit}")]
    Capacity { frontiers: u128, limit: u128 },

    #[error("workers {0} and {1} are not consistent")]
    NotConsistent(usize, usize),

    #[error("kernel signature ambiguity: {detail}")]
    KernelAmbiguity {
        detail: String,
        clusters: Vec<Vec<ItemId>>,
    },

    #[error("invalid kernel plan: {0}")]
    InvalidPlan(String),
}
