//! Contracts for every external model role, with a deterministic synthetic
//! implementation, a scripted chat model and a remote HTTP client.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::BackendError;
use crate::model::{Embedding, SegmentIndex, TimeWindow};

pub mod remote;
pub mod scripted;
pub mod synthetic;

pub use remote::{RemoteBackend, RemoteConfig};
pub use scripted::{ScriptEntry, ScriptedChat};
pub use synthetic::{synth_text_embed, SyntheticBackend, SyntheticConfig};

pub type BackendResult<T> = Result<T, BackendError>;

/// Media handed to per-segment models. Frames are references, never pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentMedia {
    pub segment: SegmentIndex,
    pub video_uri: String,
    pub frames: Vec<String>,
}

/// A whole video as seen by the tracker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoSource {
    pub uri: String,
    pub duration_s: f64,
    pub fps: f64,
}

/// One tracker occurrence of an object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackResult {
    pub tracking_id: u64,
    pub category: String,
    /// Sorted frame indices where the occurrence is visible.
    pub frames: Vec<u64>,
    /// References to object crops, one per sampled frame.
    pub crops: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub role: Role,
    pub content: String,
}

impl ChatTurn {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VqaAnswer {
    pub description: String,
    pub answer: String,
}

/// Frame sampling counts the real models expect. Forwarded to remote
/// backends; sampling itself happens server-side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub caption_frames: usize,
    pub video_frames: usize,
    pub crop_frames: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            caption_frames: 4,
            video_frames: 10,
            crop_frames: 10,
        }
    }
}

pub trait Captioner: Send + Sync {
    fn caption(&self, segment: &SegmentMedia) -> BackendResult<String>;
}

pub trait VideoEmbedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed_video(&self, segment: &SegmentMedia) -> BackendResult<Embedding>;
}

pub trait TextEmbedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed_text(&self, text: &str) -> BackendResult<Embedding>;
}

pub trait CropEmbedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed_crop(&self, crop: &str) -> BackendResult<Embedding>;
}

pub trait Tracker: Send + Sync {
    fn track(&self, video: &VideoSource) -> BackendResult<Vec<TrackResult>>;
}

pub trait VqaModel: Send + Sync {
    fn answer(
        &self,
        question: &str,
        window: &TimeWindow,
        video_uri: &str,
    ) -> BackendResult<VqaAnswer>;
}

pub trait ChatModel: Send + Sync {
    fn complete(&self, turns: &[ChatTurn]) -> BackendResult<String>;
}

/// Every model role the memories and the agent need.
#[derive(Clone)]
pub struct BackendSuite {
    pub captioner: Arc<dyn Captioner>,
    pub crossmodal_video: Arc<dyn VideoEmbedder>,
    pub crossmodal_text: Arc<dyn TextEmbedder>,
    pub caption_text: Arc<dyn TextEmbedder>,
    /// Text side of the crop-embedder-A space, used for open-vocabulary lookup.
    pub clip_text: Arc<dyn TextEmbedder>,
    pub crop_clip: Arc<dyn CropEmbedder>,
    pub crop_dino: Arc<dyn CropEmbedder>,
    pub tracker: Arc<dyn Tracker>,
    pub vqa: Arc<dyn VqaModel>,
    pub chat: Arc<dyn ChatModel>,
    /// Chat model for the nested object-memory agent; falls back to `chat`.
    pub memory_chat: Option<Arc<dyn ChatModel>>,
    pub sampling: SamplingConfig,
}

impl BackendSuite {
    pub fn memory_chat(&self) -> &Arc<dyn ChatModel> {
        self.memory_chat.as_ref().unwrap_or(&self.chat)
    }

    pub fn with_chat(mut self, chat: Arc<dyn ChatModel>) -> Self {
        self.chat = chat;
        self
    }

    pub fn with_memory_chat(mut self, chat: Arc<dyn ChatModel>) -> Self {
        self.memory_chat = Some(chat);
        self
    }

    /// Crossmodal video and text encoders must live in one space.
    pub fn check_dims(&self) -> BackendResult<()> {
        let (v, t) = (self.crossmodal_video.dim(), self.crossmodal_text.dim());
        if v != t {
            return Err(BackendError::Domain(format!(
                "crossmodal video dim {v} differs from crossmodal text dim {t}"
            )));
        }
        if self.clip_text.dim() != self.crop_clip.dim() {
            return Err(BackendError::Domain(format!(
                "clip text dim {} differs from clip crop dim {}",
                self.clip_text.dim(),
                self.crop_clip.dim()
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for BackendSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BackendSuite")
            .field("video_dim", &self.crossmodal_video.dim())
            .field("caption_dim", &self.caption_text.dim())
            .field("clip_dim", &self.crop_clip.dim())
            .field("dino_dim", &self.crop_dino.dim())
            .field("sampling", &self.sampling)
            .finish_non_exhaustive()
    }
}

/// Checks a produced embedding against the role's declared dimension.
pub(crate) fn expect_dim(role: &str, emb: Embedding, dim: usize) -> BackendResult<Embedding> {
    if emb.dim() != dim {
        return Err(BackendError::BadResponse(format!(
            "{role} returned dim {} but declares {dim}",
            emb.dim()
        )));
    }
    Ok(emb)
}
