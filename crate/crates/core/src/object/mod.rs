//! Object memory: re-identification, the object table, its SQL surface and
//! the nested agent that answers object questions.

pub mod memory;
pub mod querying;
pub mod reid;
pub mod sql;

pub use memory::{
    build_object_memory, object_track_reid, FrameMapping, ObjectBuild, ObjectMemory, ObjectRecord,
};
pub use querying::{object_memory_querying, MemoryAgentConfig};
pub use reid::{
    pair_similarity, reid_group, tracking_feature_from_crops, PairSimilarity, ReidGroup,
    ReidParams, TrackingFeature,
};
pub use sql::{OccurrenceRow, QueryResult, Value};
