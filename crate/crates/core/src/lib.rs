//! Unified temporal and object memory over videos, with a tool-using agent
//! on top.
//!
//! Every perception and language model sits behind a trait in [`backends`].
//! The synthetic backend derives all of them from a seeded ground-truth world
//! ([`eval::world`]), so the whole pipeline runs and can be checked offline.

pub mod agent;
pub mod backends;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod model;
pub mod object;
pub mod replay;
pub mod store;
pub mod temporal;

pub use error::{Error, Result};
pub use model::{cosine, temporal_iou, Embedding, SegmentIndex, SegmentRecord, TimeWindow};
pub use store::MemoryBundle;
