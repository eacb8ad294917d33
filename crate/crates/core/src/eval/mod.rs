//! Synthetic worlds, their backends, and the metrics used to score runs.

use std::sync::Arc;

pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod world;

pub use metrics::{mcq_accuracy, recall_at, RecallReport};
pub use pipeline::{eval_mcq, eval_nlq, media_for_video};
pub use rng::SplitMix64;
pub use world::{gen_world, SyntheticWorld, WorldParams};

use crate::backends::{BackendSuite, SegmentMedia, SyntheticBackend, SyntheticConfig};

/// Backend suite answering from a world's ground truth. Chat is an empty script.
pub fn world_to_suite(world: &SyntheticWorld, config: SyntheticConfig) -> BackendSuite {
    SyntheticBackend::new(Arc::new(world.clone()), config).into_suite()
}

/// Media descriptors for every segment of a world, in order.
pub fn world_media(world: &SyntheticWorld) -> Vec<SegmentMedia> {
    let backend = SyntheticBackend::new(Arc::new(world.clone()), SyntheticConfig::default());
    (0..world.n_segments).map(|i| backend.segment_media(i)).collect()
}
