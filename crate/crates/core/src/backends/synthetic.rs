//! Deterministic stand-ins for every perception model, driven by a
//! [`SyntheticWorld`]. Hashing is integer-exact so outputs are identical on
//! every platform.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    BackendResult, BackendSuite, Captioner, ChatModel, CropEmbedder, SamplingConfig,
    ScriptedChat, SegmentMedia, TextEmbedder, TrackResult, Tracker, VideoEmbedder, VideoSource,
    VqaAnswer, VqaModel,
};
use crate::error::BackendError;
use crate::eval::rng::SplitMix64;
use crate::eval::world::{number_word, plural_of, SyntheticWorld};
use crate::model::{Embedding, TimeWindow};

/// Hash salts, one per embedding space.
pub mod salt {
    pub const CAPTION: &str = "caption";
    pub const CROSSMODAL: &str = "crossmodal";
    pub const CLIP: &str = "clip";
    pub const DINO: &str = "dino";
}

/// Answer given when the asked-about object is not in the window.
pub const VQA_MISS: &str = "not visible";

const MIN_DIM: usize = 16;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a64(parts: &[&[u8]]) -> u64 {
    let mut h = FNV_OFFSET;
    for part in parts {
        for &b in *part {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// Lowercases, drops `#c`/`#o` caption prefixes and strips punctuation.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(str::to_lowercase)
        .filter(|t| t != "#c" && t != "#o")
        .map(|t| t.chars().filter(|c| c.is_alphanumeric()).collect::<String>())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Signed feature hashing of the token bag, L2-normalized.
pub fn salted_text_embed(salt: &str, text: &str, dim: usize) -> BackendResult<Embedding> {
    if dim < MIN_DIM {
        return Err(BackendError::Domain(format!(
            "synthetic embedding dim must be at least {MIN_DIM}, got {dim}"
        )));
    }
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(BackendError::Domain(format!(
            "no tokens left in {text:?} after normalization"
        )));
    }
    let mut acc = vec![0.0f64; dim];
    for tok in &tokens {
        let h = if salt.is_empty() {
            fnv1a64(&[tok.as_bytes()])
        } else {
            fnv1a64(&[salt.as_bytes(), b":", tok.as_bytes()])
        };
        let slot = (h % dim as u64) as usize;
        acc[slot] += if h >> 63 == 0 { 1.0 } else { -1.0 };
    }
    // Opposite-signed collisions can cancel everything out.
    Embedding::normalized(acc).map_err(|_| {
        BackendError::Domain(format!("token hashes of {text:?} cancel to a zero vector"))
    })
}

/// The unsalted reference embedder.
pub fn synth_text_embed(text: &str, dim: usize) -> BackendResult<Embedding> {
    salted_text_embed("", text, dim)
}

/// A text encoder for one embedding space.
#[derive(Debug, Clone)]
pub struct SaltedTextEmbedder {
    pub salt: &'static str,
    pub dim: usize,
}

impl TextEmbedder for SaltedTextEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_text(&self, text: &str) -> BackendResult<Embedding> {
        salted_text_embed(self.salt, text, self.dim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub caption_dim: usize,
    pub video_dim: usize,
    pub clip_dim: usize,
    pub dino_dim: usize,
    /// Weight of the per-frame-bucket noise vector in "CLIP"-role crops.
    pub clip_noise: f64,
    /// Weight of the per-frame-bucket noise vector in "DINOv2"-role crops.
    pub dino_noise: f64,
    pub sampling: SamplingConfig,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            caption_dim: 256,
            video_dim: 256,
            clip_dim: 256,
            dino_dim: 256,
            clip_noise: 0.0,
            dino_noise: 0.0,
            sampling: SamplingConfig::default(),
        }
    }
}

/// A tracker output paired with the world object it was cut from.
#[derive(Debug, Clone, PartialEq)]
pub struct OwnedTrack {
    pub track: TrackResult,
    pub object: usize,
}

#[derive(Debug, Clone)]
pub struct SyntheticBackend {
    world: Arc<SyntheticWorld>,
    config: SyntheticConfig,
}

impl SyntheticBackend {
    pub fn new(world: Arc<SyntheticWorld>, config: SyntheticConfig) -> Self {
        Self { world, config }
    }

    pub fn world(&self) -> &SyntheticWorld {
        &self.world
    }

    pub fn config(&self) -> &SyntheticConfig {
        &self.config
    }

    /// Media descriptor for one segment of the world video.
    pub fn segment_media(&self, index: usize) -> SegmentMedia {
        let frames = self
            .world
            .segment_frames(index)
            .map(|f| format!("{}#frame={f}", self.world.video_uri()))
            .collect();
        SegmentMedia {
            segment: self.world.segment(index),
            video_uri: self.world.video_uri(),
            frames,
        }
    }

    pub fn video_source(&self) -> VideoSource {
        VideoSource {
            uri: self.world.video_uri(),
            duration_s: self.world.duration_s(),
            fps: self.world.fps,
        }
    }

    /// One track per contiguous appearance run, with ids assigned in object order.
    pub fn owned_tracks(&self) -> Vec<OwnedTrack> {
        let mut out = Vec::new();
        let mut next_id = 1u64;
        for (obj_idx, obj) in self.world.objects.iter().enumerate() {
            for (lo, hi) in obj.runs() {
                let frames: Vec<u64> = (lo..=hi)
                    .flat_map(|s| self.world.segment_frames(s))
                    .collect();
                let crops = self
                    .sample_crop_frames(next_id, &frames)
                    .into_iter()
                    .map(|f| crop_ref(obj_idx, f))
                    .collect();
                out.push(OwnedTrack {
                    track: TrackResult {
                        tracking_id: next_id,
                        category: obj.category.clone(),
                        frames,
                        crops,
                    },
                    object: obj_idx,
                });
                next_id += 1;
            }
        }
        out
    }

    fn sample_crop_frames(&self, tracking_id: u64, frames: &[u64]) -> Vec<u64> {
        let want = self.config.sampling.crop_frames.max(1);
        if frames.len() <= want {
            return frames.to_vec();
        }
        let mut rng = SplitMix64::new(self.world.seed ^ tracking_id.wrapping_mul(0x9E37_79B9));
        let mut picked: Vec<u64> = frames.to_vec();
        rng.shuffle(&mut picked);
        picked.truncate(want);
        picked.sort_unstable();
        picked
    }

    fn segment_index(&self, segment: &SegmentMedia) -> BackendResult<usize> {
        let idx = segment.segment.index;
        if idx >= self.world.n_segments {
            return Err(BackendError::Malformed(format!(
                "segment {idx} outside a {}-segment world",
                self.world.n_segments
            )));
        }
        if segment.frames.is_empty() {
            return Err(BackendError::Malformed(format!("segment {idx} has no frames")));
        }
        Ok(idx)
    }

    fn crop_embedding(
        &self,
        role: &'static str,
        dim: usize,
        noise: f64,
        crop: &str,
    ) -> BackendResult<Embedding> {
        let (object, frame) = parse_crop_ref(crop)?;
        let obj = self.world.objects.get(object).ok_or_else(|| {
            BackendError::Malformed(format!("crop references unknown object {object}"))
        })?;
        let base = salted_text_embed(role, &obj.identity, dim)?;
        if noise == 0.0 {
            return Ok(base);
        }
        let bucket = frame / self.world.frames_per_segment().max(1);
        let jitter = salted_text_embed(role, &format!("noise{object}x{bucket}"), dim)?;
        let mixed = base
            .values()
            .iter()
            .zip(jitter.values())
            .map(|(b, j)| b + noise * j)
            .collect();
        Ok(Embedding::normalized(mixed)?)
    }

    /// Wires every role of a suite to this world. Chat starts as an empty script.
    pub fn into_suite(self) -> BackendSuite {
        let c = &self.config;
        let text = |salt, dim| Arc::new(SaltedTextEmbedder { salt, dim });
        let caption_text = text(salt::CAPTION, c.caption_dim);
        let crossmodal_text = text(salt::CROSSMODAL, c.video_dim);
        let clip_text = text(salt::CLIP, c.clip_dim);
        let sampling = c.sampling;
        let this = Arc::new(self);
        let chat: Arc<dyn ChatModel> = Arc::new(ScriptedChat::new(Vec::new()));
        BackendSuite {
            captioner: this.clone(),
            crossmodal_video: this.clone(),
            crossmodal_text,
            caption_text,
            clip_text,
            crop_clip: Arc::new(SyntheticCrops {
                backend: this.clone(),
                role: salt::CLIP,
            }),
            crop_dino: Arc::new(SyntheticCrops {
                backend: this.clone(),
                role: salt::DINO,
            }),
            tracker: this.clone(),
            vqa: this,
            chat,
            memory_chat: None,
            sampling,
        }
    }
}

fn crop_ref(object: usize, frame: u64) -> String {
    format!("synthetic://crop/{object}/{frame}")
}

fn parse_crop_ref(crop: &str) -> BackendResult<(usize, u64)> {
    let bad = || BackendError::Malformed(format!("not a synthetic crop reference: {crop}"));
    let rest = crop.strip_prefix("synthetic://crop/").ok_or_else(bad)?;
    let (obj, frame) = rest.split_once('/').ok_or_else(bad)?;
    Ok((
        obj.parse().map_err(|_| bad())?,
        frame.parse().map_err(|_| bad())?,
    ))
}

impl Captioner for SyntheticBackend {
    fn caption(&self, segment: &SegmentMedia) -> BackendResult<String> {
        let idx = self.segment_index(segment)?;
        Ok(self.world.events[idx].caption())
    }
}

impl VideoEmbedder for SyntheticBackend {
    fn dim(&self) -> usize {
        self.config.video_dim
    }

    fn embed_video(&self, segment: &SegmentMedia) -> BackendResult<Embedding> {
        let idx = self.segment_index(segment)?;
        salted_text_embed(
            salt::CROSSMODAL,
            &self.world.events[idx].text,
            self.config.video_dim,
        )
    }
}

impl Tracker for SyntheticBackend {
    fn track(&self, _video: &VideoSource) -> BackendResult<Vec<TrackResult>> {
        Ok(self.owned_tracks().into_iter().map(|t| t.track).collect())
    }
}

impl VqaModel for SyntheticBackend {
    fn answer(
        &self,
        question: &str,
        window: &TimeWindow,
        _video_uri: &str,
    ) -> BackendResult<VqaAnswer> {
        let segs = self.world.segments_in(window);
        let (Some(&first), Some(&last)) = (segs.first(), segs.last()) else {
            return Err(BackendError::Malformed(format!(
                "window [{}, {}] lies outside the video",
                window.start_s, window.end_s
            )));
        };
        let events: Vec<&str> = segs
            .iter()
            .map(|&i| self.world.events[i].text.as_str())
            .collect();
        let mut description = format!(
            "The clip covers segments {first} to {last}. Events: {}.",
            events.join("; ")
        );

        let visible: Vec<&crate::eval::world::WorldObject> = self
            .world
            .objects
            .iter()
            .filter(|o| o.segments.iter().any(|s| segs.contains(s)))
            .collect();
        let mut seen: Vec<(&str, usize)> = Vec::new();
        for o in &visible {
            match seen.iter_mut().find(|(c, _)| *c == o.category) {
                Some((_, n)) => *n += 1,
                None => seen.push((&o.category, 1)),
            }
        }
        if !seen.is_empty() {
            let list: Vec<String> = seen
                .iter()
                .map(|(c, n)| format!("{n} {}", if *n == 1 { c.to_string() } else { plural_of(c) }))
                .collect();
            description.push_str(&format!(" Visible objects: {}.", list.join(", ")));
        }

        let q_tokens = tokenize(question);
        let asked = self.world.objects.iter().map(|o| o.category.as_str()).find(|c| {
            let plural = plural_of(c);
            q_tokens.iter().any(|t| t == c || *t == plural)
        });
        let answer = match asked {
            Some(category) => {
                let n = visible.iter().filter(|o| o.category == category).count();
                match n {
                    0 => VQA_MISS.to_string(),
                    1 => format!("There is 1 {category} ({}) visible.", number_word(1)),
                    _ => format!(
                        "There are {n} {} ({}) visible.",
                        plural_of(category),
                        number_word(n)
                    ),
                }
            }
            None => format!("The video shows: {}.", events[events.len() / 2]),
        };
        Ok(VqaAnswer {
            description,
            answer,
        })
    }
}

/// One crop-embedding role backed by a synthetic world.
#[derive(Debug, Clone)]
pub struct SyntheticCrops {
    backend: Arc<SyntheticBackend>,
    role: &'static str,
}

impl CropEmbedder for SyntheticCrops {
    fn dim(&self) -> usize {
        match self.role {
            salt::DINO => self.backend.config.dino_dim,
            _ => self.backend.config.clip_dim,
        }
    }

    fn embed_crop(&self, crop: &str) -> BackendResult<Embedding> {
        let noise = match self.role {
            salt::DINO => self.backend.config.dino_noise,
            _ => self.backend.config.clip_noise,
        };
        self.backend
            .crop_embedding(self.role, self.dim(), noise, crop)
    }
}
