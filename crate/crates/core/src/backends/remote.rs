//! JSON-over-HTTP client for model servers. One POST endpoint per role.

use std::sync::Arc;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    expect_dim, BackendResult, BackendSuite, Captioner, ChatModel, ChatTurn, CropEmbedder,
    SamplingConfig, SegmentMedia, TextEmbedder, TrackResult, Tracker, VideoEmbedder,
    VideoSource, VqaAnswer, VqaModel,
};
use crate::error::BackendError;
use crate::model::{Embedding, TimeWindow};

pub const ENV_URL: &str = "VIDMEM_BACKEND_URL";
pub const ENV_API_KEY: &str = "VIDMEM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub base_url: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub timeout_s: f64,
    pub caption_dim: usize,
    pub video_dim: usize,
    pub clip_dim: usize,
    pub dino_dim: usize,
    pub sampling: SamplingConfig,
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: None,
            timeout_s: 60.0,
            caption_dim: 3072,
            video_dim: 768,
            clip_dim: 768,
            dino_dim: 1024,
            sampling: SamplingConfig::default(),
        }
    }

    /// Reads base URL and key from the environment.
    pub fn from_env() -> Option<Self> {
        let url = std::env::var(ENV_URL).ok()?;
        let mut cfg = Self::new(url);
        cfg.api_key = std::env::var(ENV_API_KEY).ok();
        Some(cfg)
    }
}

#[derive(Clone)]
pub struct RemoteBackend {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend")
            .field("base_url", &self.config.base_url)
            .finish_non_exhaustive()
    }
}

#[derive(Deserialize)]
struct CaptionResponse {
    caption: String,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    embedding: Vec<f32>,
}

#[derive(Deserialize)]
struct TrackResponse {
    tracks: Vec<TrackResult>,
}

#[derive(Deserialize)]
struct ChatResponse {
    content: String,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_s.max(0.001))))
            .build()
            .into();
        Self { config, agent }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn post<T: DeserializeOwned>(&self, path: &str, body: Value) -> BackendResult<T> {
        let url = format!("{}{path}", self.config.base_url.trim_end_matches('/'));
        let mut req = self.agent.post(&url);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| BackendError::Unavailable(format!("POST {url}: {e}")))?;
        resp.body_mut()
            .read_json::<T>()
            .map_err(|e| BackendError::BadResponse(format!("POST {url}: {e}")))
    }

    fn embedding(&self, role: &str, path: &str, body: Value, dim: usize) -> BackendResult<Embedding> {
        let resp: EmbeddingResponse = self.post(path, body)?;
        let emb = Embedding::normalized(resp.embedding.into_iter().map(f64::from).collect())
            .map_err(|e| BackendError::BadResponse(format!("{role}: {e}")))?;
        expect_dim(role, emb, dim)
    }

    fn embed_text_in(&self, space: &str, text: &str, dim: usize) -> BackendResult<Embedding> {
        self.embedding(
            space,
            "/v1/embed/text",
            json!({ "text": text, "space": space }),
            dim,
        )
    }

    /// A suite whose every role talks to this server.
    pub fn into_suite(self) -> BackendSuite {
        let sampling = self.config.sampling;
        let this = Arc::new(self);
        let space = |space, dim| {
            Arc::new(RemoteText {
                backend: this.clone(),
                space,
                dim,
            })
        };
        let c = this.config.clone();
        BackendSuite {
            captioner: this.clone(),
            crossmodal_video: this.clone(),
            crossmodal_text: space("crossmodal", c.video_dim),
            caption_text: space("caption", c.caption_dim),
            clip_text: space("clip", c.clip_dim),
            crop_clip: Arc::new(RemoteCrops {
                backend: this.clone(),
                model: "clip",
                dim: c.clip_dim,
            }),
            crop_dino: Arc::new(RemoteCrops {
                backend: this.clone(),
                model: "dino",
                dim: c.dino_dim,
            }),
            tracker: this.clone(),
            vqa: this.clone(),
            chat: this,
            memory_chat: None,
            sampling,
        }
    }
}

impl Captioner for RemoteBackend {
    fn caption(&self, segment: &SegmentMedia) -> BackendResult<String> {
        let resp: CaptionResponse = self.post(
            "/v1/caption",
            json!({ "frames": segment.frames, "sample_frames": self.config.sampling.caption_frames }),
        )?;
        Ok(resp.caption)
    }
}

impl VideoEmbedder for RemoteBackend {
    fn dim(&self) -> usize {
        self.config.video_dim
    }

    fn embed_video(&self, segment: &SegmentMedia) -> BackendResult<Embedding> {
        self.embedding(
            "video",
            "/v1/embed/video",
            json!({ "frames": segment.frames, "sample_frames": self.config.sampling.video_frames }),
            self.config.video_dim,
        )
    }
}

impl Tracker for RemoteBackend {
    fn track(&self, video: &VideoSource) -> BackendResult<Vec<TrackResult>> {
        let resp: TrackResponse = self.post(
            "/v1/track",
            json!({ "video_uri": video.uri, "crop_frames": self.config.sampling.crop_frames }),
        )?;
        Ok(resp.tracks)
    }
}

impl VqaModel for RemoteBackend {
    fn answer(
        &self,
        question: &str,
        window: &TimeWindow,
        video_uri: &str,
    ) -> BackendResult<VqaAnswer> {
        self.post(
            "/v1/vqa",
            json!({
                "question": question,
                "start_s": window.start_s,
                "end_s": window.end_s,
                "video_uri": video_uri,
            }),
        )
    }
}

impl ChatModel for RemoteBackend {
    fn complete(&self, turns: &[ChatTurn]) -> BackendResult<String> {
        let resp: ChatResponse = self.post("/v1/chat", json!({ "messages": turns }))?;
        Ok(resp.content)
    }
}

struct RemoteText {
    backend: Arc<RemoteBackend>,
    space: &'static str,
    dim: usize,
}

impl TextEmbedder for RemoteText {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_text(&self, text: &str) -> BackendResult<Embedding> {
        self.backend.embed_text_in(self.space, text, self.dim)
    }
}

struct RemoteCrops {
    backend: Arc<RemoteBackend>,
    model: &'static str,
    dim: usize,
}

impl CropEmbedder for RemoteCrops {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_crop(&self, crop: &str) -> BackendResult<Embedding> {
        self.backend.embedding(
            self.model,
            "/v1/embed/crop",
            json!({ "crop": crop, "model": self.model }),
            self.dim,
        )
    }
}
