//! Flat JSON configuration. Every key has a default; a file may set any subset
//! and command-line `--set key=value` pairs override the file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::agent::{AgentSettings, PromptTemplate, TaskKind, DEFAULT_MAX_STEP, DEFAULT_OBSERVATION_CAP};
use crate::backends::{BackendSuite, RemoteBackend, RemoteConfig, SamplingConfig, SyntheticBackend, SyntheticConfig};
use crate::error::{Error, Result};
use crate::eval::SyntheticWorld;
use crate::model::DEFAULT_SEGMENT_DURATION_S;
use crate::object::memory::{DEFAULT_OV_THRESHOLD, DEFAULT_OV_TOP_K};
use crate::object::ReidParams;
use crate::temporal::{EnsembleWeights, CAPTION_WINDOW_CAP, DEFAULT_TOP_K};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    Synthetic,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub backend: BackendMode,
    pub remote_url: Option<String>,
    pub remote_timeout_s: f64,
    pub caption_dim: usize,
    pub video_dim: usize,
    pub clip_dim: usize,
    pub dino_dim: usize,
    pub segment_duration_s: f64,
    pub fps: f64,
    pub caption_frames: usize,
    pub video_frames: usize,
    pub crop_frames: usize,
    /// `VIDEO:TEXT`.
    pub ensemble_ratio: String,
    pub top_k: usize,
    pub caption_cap: usize,
    pub reid_clip_gain: f64,
    pub reid_clip_bias: f64,
    pub reid_dino_gain: f64,
    pub reid_dino_bias: f64,
    pub reid_clip_weight: f64,
    pub reid_dino_weight: f64,
    pub reid_all_pairs_threshold: f64,
    pub reid_anchor_threshold: f64,
    pub ov_threshold: f64,
    pub ov_top_k: usize,
    pub max_step: usize,
    pub memory_max_step: usize,
    pub observation_cap: usize,
    pub synthetic_clip_noise: f64,
    pub synthetic_dino_noise: f64,
    pub prompt_mcq: Option<PathBuf>,
    pub prompt_open_ended: Option<PathBuf>,
    pub prompt_nlq: Option<PathBuf>,
    pub prompt_memory_agent: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        let reid = ReidParams::default();
        let sampling = SamplingConfig::default();
        let synth = SyntheticConfig::default();
        Self {
            backend: BackendMode::Synthetic,
            remote_url: None,
            remote_timeout_s: 60.0,
            caption_dim: synth.caption_dim,
            video_dim: synth.video_dim,
            clip_dim: synth.clip_dim,
            dino_dim: synth.dino_dim,
            segment_duration_s: DEFAULT_SEGMENT_DURATION_S,
            fps: crate::eval::world::DEFAULT_FPS,
            caption_frames: sampling.caption_frames,
            video_frames: sampling.video_frames,
            crop_frames: sampling.crop_frames,
            ensemble_ratio: "18:11".into(),
            top_k: DEFAULT_TOP_K,
            caption_cap: CAPTION_WINDOW_CAP,
            reid_clip_gain: reid.clip_gain,
            reid_clip_bias: reid.clip_bias,
            reid_dino_gain: reid.dino_gain,
            reid_dino_bias: reid.dino_bias,
            reid_clip_weight: reid.clip_weight,
            reid_dino_weight: reid.dino_weight,
            reid_all_pairs_threshold: reid.all_pairs_threshold,
            reid_anchor_threshold: reid.anchor_threshold,
            ov_threshold: DEFAULT_OV_THRESHOLD,
            ov_top_k: DEFAULT_OV_TOP_K,
            max_step: DEFAULT_MAX_STEP,
            memory_max_step: DEFAULT_MAX_STEP,
            observation_cap: DEFAULT_OBSERVATION_CAP,
            synthetic_clip_noise: 0.0,
            synthetic_dino_noise: 0.0,
            prompt_mcq: None,
            prompt_open_ended: None,
            prompt_nlq: None,
            prompt_memory_agent: None,
        }
    }
}

/// Key, default as shown to users, and where the default comes from.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("backend", "synthetic", "synthetic | remote"),
    ("remote_url", "null", "falls back to $VIDMEM_BACKEND_URL"),
    ("remote_timeout_s", "60", "per request"),
    ("caption_dim", "256", "synthetic caption-text embedding size"),
    ("video_dim", "256", "synthetic cross-modal embedding size"),
    ("clip_dim", "256", "synthetic CLIP-role embedding size"),
    ("dino_dim", "256", "synthetic DINOv2-role embedding size"),
    ("segment_duration_s", "2", "length of one memory segment"),
    ("fps", "30", "frame rate for frame-to-segment mapping"),
    ("caption_frames", "4", "frames per segment sent to the captioner"),
    ("video_frames", "10", "frames per segment sent to the video embedder, uniform"),
    ("crop_frames", "10", "random frames per track whose crops are embedded"),
    ("ensemble_ratio", "18:11", "VIDEO:TEXT localization weights; 7:8 suits Ego4D-style captions"),
    ("top_k", "5", "segments returned by localization"),
    ("caption_cap", "15", "most captions one retrieval may return"),
    ("reid_clip_gain", "20", "CLIP-role sigmoid slope"),
    ("reid_clip_bias", "0.925", "CLIP-role sigmoid midpoint"),
    ("reid_dino_gain", "4.1", "DINOv2-role sigmoid slope"),
    ("reid_dino_bias", "0.5", "DINOv2-role sigmoid midpoint"),
    ("reid_clip_weight", "0.15", "CLIP-role share of the re-ID similarity"),
    ("reid_dino_weight", "0.85", "DINOv2-role share of the re-ID similarity"),
    ("reid_all_pairs_threshold", "0.5", "every group member must exceed it"),
    ("reid_anchor_threshold", "0.62", "some group member must exceed it"),
    ("ov_threshold", "0.5", "open-vocabulary cosine cutoff"),
    ("ov_top_k", "5", "open-vocabulary result limit"),
    ("max_step", "10", "agent tool calls before a forced answer"),
    ("memory_max_step", "10", "object-memory agent tool calls"),
    ("observation_cap", "4000", "characters kept per observation"),
    ("synthetic_clip_noise", "0", "synthetic CLIP-role crop noise"),
    ("synthetic_dino_noise", "0", "synthetic DINOv2-role crop noise"),
    ("prompt_mcq", "null", "template file; built-in when null"),
    ("prompt_open_ended", "null", "template file; built-in when null"),
    ("prompt_nlq", "null", "template file; built-in when null"),
    ("prompt_memory_agent", "null", "template file; built-in when null"),
];

/// The key table rendered for `--help`.
pub fn keys_help() -> String {
    let width = KEYS.iter().map(|(k, _, _)| k.len()).max().unwrap_or(0);
    let dwidth = KEYS.iter().map(|(_, d, _)| d.len()).max().unwrap_or(0);
    let mut out = String::from("Config keys (JSON file via --config, override with --set KEY=VALUE):\n");
    for (key, default, note) in KEYS {
        out.push_str(&format!("  {key:<width$}  default {default:<dwidth$}  {note}\n"));
    }
    out
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key=value`. The value is read as JSON, or as a bare string
    /// when it does not parse.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got {assignment:?}")))?;
        let key = key.trim();
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let Value::Object(mut map) = serde_json::to_value(&*self).expect("config serializes") else {
            unreachable!("config is a struct")
        };
        if !map.contains_key(key) {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
        map.insert(key.to_string(), value);
        let next: Self = serde_json::from_value(Value::Object(map))
            .map_err(|e| Error::Config(format!("{key}: {e}")))?;
        next.validate()?;
        *self = next;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn as_map(&self) -> Map<String, Value> {
        match serde_json::to_value(self).expect("config serializes") {
            Value::Object(m) => m,
            _ => unreachable!("config is a struct"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.weights()?;
        let positive = [
            ("segment_duration_s", self.segment_duration_s),
            ("fps", self.fps),
            ("remote_timeout_s", self.remote_timeout_s),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{k} must be positive, got {v}")));
            }
        }
        let counts = [
            ("top_k", self.top_k),
            ("caption_cap", self.caption_cap),
            ("ov_top_k", self.ov_top_k),
            ("max_step", self.max_step),
            ("memory_max_step", self.memory_max_step),
            ("caption_dim", self.caption_dim),
            ("video_dim", self.video_dim),
            ("clip_dim", self.clip_dim),
            ("dino_dim", self.dino_dim),
        ];
        for (k, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{k} must be at least 1")));
            }
        }
        Ok(())
    }

    pub fn weights(&self) -> Result<EnsembleWeights> {
        EnsembleWeights::parse(&self.ensemble_ratio)
    }

    pub fn reid(&self) -> ReidParams {
        ReidParams {
            clip_gain: self.reid_clip_gain,
            clip_bias: self.reid_clip_bias,
            dino_gain: self.reid_dino_gain,
            dino_bias: self.reid_dino_bias,
            clip_weight: self.reid_clip_weight,
            dino_weight: self.reid_dino_weight,
            all_pairs_threshold: self.reid_all_pairs_threshold,
            anchor_threshold: self.reid_anchor_threshold,
        }
    }

    pub fn sampling(&self) -> SamplingConfig {
        SamplingConfig {
            caption_frames: self.caption_frames,
            video_frames: self.video_frames,
            crop_frames: self.crop_frames,
        }
    }

    pub fn synthetic(&self) -> SyntheticConfig {
        SyntheticConfig {
            caption_dim: self.caption_dim,
            video_dim: self.video_dim,
            clip_dim: self.clip_dim,
            dino_dim: self.dino_dim,
            clip_noise: self.synthetic_clip_noise,
            dino_noise: self.synthetic_dino_noise,
            sampling: self.sampling(),
        }
    }

    /// Remote settings. URL from the config, else from the environment; the
    /// key only ever comes from the environment.
    pub fn remote(&self) -> Result<RemoteConfig> {
        let env = RemoteConfig::from_env();
        let url = self
            .remote_url
            .clone()
            .or_else(|| env.as_ref().map(|e| e.base_url.clone()))
            .ok_or_else(|| {
                Error::Config(format!(
                    "remote backend needs remote_url or ${}",
                    crate::backends::remote::ENV_URL
                ))
            })?;
        let mut cfg = RemoteConfig::new(url);
        cfg.api_key = env.and_then(|e| e.api_key);
        cfg.timeout_s = self.remote_timeout_s;
        cfg.sampling = self.sampling();
        Ok(cfg)
    }

    /// Suite for the configured backend. Synthetic mode needs the world.
    pub fn suite(&self, world: Option<&SyntheticWorld>) -> Result<BackendSuite> {
        match self.backend {
            BackendMode::Remote => Ok(RemoteBackend::new(self.remote()?).into_suite()),
            BackendMode::Synthetic => {
                let world = world.ok_or_else(|| {
                    Error::Config("the synthetic backend needs a world file".into())
                })?;
                Ok(SyntheticBackend::new(Arc::new(world.clone()), self.synthetic()).into_suite())
            }
        }
    }

    pub fn agent_settings(&self, task: TaskKind) -> Result<AgentSettings> {
        Ok(AgentSettings {
            task,
            max_step: self.max_step,
            observation_cap: self.observation_cap,
            weights: self.weights()?,
            top_k: self.top_k,
            caption_cap: self.caption_cap,
            memory_max_steps: self.memory_max_step,
            ov_threshold: self.ov_threshold,
            ov_top_k: self.ov_top_k,
        })
    }

    pub fn template(&self, task: TaskKind) -> Result<PromptTemplate> {
        let path = match task {
            TaskKind::Mcq => &self.prompt_mcq,
            TaskKind::OpenEnded => &self.prompt_open_ended,
            TaskKind::Nlq => &self.prompt_nlq,
        };
        match path {
            Some(p) => PromptTemplate::from_file(p),
            None => Ok(PromptTemplate::builtin(task)),
        }
    }

    pub fn memory_template(&self) -> Result<PromptTemplate> {
        match &self.prompt_memory_agent {
            Some(p) => PromptTemplate::from_file(p),
            None => Ok(PromptTemplate::memory_agent()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_table_matches_struct() {
        let map = Config::default().as_map();
        let keys: Vec<&str> = KEYS.iter().map(|(k, _, _)| *k).collect();
        assert_eq!(map.len(), keys.len());
        for (k, shown, _) in KEYS {
            let actual = &map[*k];
            let expected: Value = serde_json::from_str(shown).unwrap_or(Value::String(shown.to_string()));
            match (actual, &expected) {
                (Value::Number(a), Value::Number(b)) => assert_eq!(a.as_f64(), b.as_f64(), "{k}"),
                _ => assert_eq!(actual, &expected, "{k}"),
            }
        }
    }

    #[test]
    fn set_overrides_and_rejects() {
        let mut c = Config::default();
        c.set("ensemble_ratio=7:8").unwrap();
        c.set("max_step=3").unwrap();
        c.set("backend=remote").unwrap();
        assert_eq!(c.max_step, 3);
        assert_eq!(c.backend, BackendMode::Remote);
        assert_eq!(c.weights().unwrap(), EnsembleWeights::ego4d_viclip());
        assert!(c.set("nope=1").is_err());
        assert!(c.set("max_step=lots").is_err());
        assert!(c.set("ensemble_ratio=0:0").is_err());
        assert!(c.set("fps=0").is_err());
        assert_eq!(c.max_step, 3);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c: Config = serde_json::from_str(r#"{"ov_threshold": 0.4}"#).unwrap();
        assert_eq!(c.ov_threshold, 0.4);
        assert_eq!(c.reid(), ReidParams::default());
        assert!(serde_json::from_str::<Config>(r#"{"typo": 1}"#).is_err());
    }
}
