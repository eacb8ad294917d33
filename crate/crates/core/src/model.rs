//! Shared domain types and the numeric primitives every other module leans on.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Tolerance on the L2 norm of a vector flagged as normalized.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Default length of one memory segment in seconds.
pub const DEFAULT_SEGMENT_DURATION_S: f64 = 2.0;

/// A trailing slice shorter than this is folded into the previous segment.
pub const MIN_TAIL_SEGMENT_S: f64 = 0.5;

/// A dense feature vector. Computation is 64-bit; persistence narrows to 32-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    /// Wraps raw values without normalizing them.
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Err(ModelError::EmptyEmbedding);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite);
        }
        Ok(Self { values })
    }

    /// Wraps and L2-normalizes. Zero vectors are rejected.
    pub fn normalized(values: Vec<f64>) -> Result<Self, ModelError> {
        let mut emb = Self::new(values)?;
        let norm = emb.norm();
        if norm == 0.0 {
            return Err(ModelError::ZeroVector);
        }
        emb.values.iter_mut().for_each(|v| *v /= norm);
        Ok(emb)
    }

    /// Normalized element-wise mean of a non-empty set of equal-length vectors.
    pub fn normalized_mean<'a, I>(items: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = &'a Embedding>,
    {
        let mut iter = items.into_iter();
        let first = iter.next().ok_or(ModelError::EmptyEmbedding)?;
        let mut acc = first.values.clone();
        let mut count = 1usize;
        for e in iter {
            check_dims(first, e)?;
            acc.iter_mut().zip(&e.values).for_each(|(a, b)| *a += b);
            count += 1;
        }
        let n = count as f64;
        acc.iter_mut().for_each(|v| *v /= n);
        Self::normalized(acc)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOLERANCE
    }

    pub fn dot(&self, other: &Embedding) -> Result<f64, ModelError> {
        check_dims(self, other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }

    /// Rounds every component through `f32`, the persisted precision.
    pub fn to_f32_precision(&self) -> Self {
        Self {
            values: self.values.iter().map(|&v| v as f32 as f64).collect(),
        }
    }
}

fn check_dims(a: &Embedding, b: &Embedding) -> Result<(), ModelError> {
    if a.dim() != b.dim() {
        return Err(ModelError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

/// Cosine similarity, clamped to [-1, 1].
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64, ModelError> {
    let dot = a.dot(b)?;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(ModelError::ZeroVector);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// A closed time interval in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start_s: f64,
    pub end_s: f64,
}

impl TimeWindow {
    pub fn new(start_s: f64, end_s: f64) -> Result<Self, ModelError> {
        if !start_s.is_finite() || !end_s.is_finite() || end_s < start_s {
            return Err(ModelError::InvalidWindow { start_s, end_s });
        }
        Ok(Self { start_s, end_s })
    }

    pub fn len(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0.0
    }

    /// Grows the window by `by_s` on both sides, never below zero.
    pub fn expand(&self, by_s: f64) -> Self {
        Self {
            start_s: (self.start_s - by_s).max(0.0),
            end_s: self.end_s + by_s,
        }
    }
}

/// Intersection over union of two windows; 1 for identical zero-length windows.
pub fn temporal_iou(a: &TimeWindow, b: &TimeWindow) -> f64 {
    let inter = (a.end_s.min(b.end_s) - a.start_s.max(b.start_s)).max(0.0);
    let union = a.len() + b.len() - inter;
    if union <= 0.0 {
        // both are points
        return if a.start_s == b.start_s { 1.0 } else { 0.0 };
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Position of one segment in its video.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentIndex {
    pub index: usize,
    pub start_s: f64,
    pub end_s: f64,
}

impl SegmentIndex {
    pub fn new(index: usize, start_s: f64, end_s: f64) -> Result<Self, ModelError> {
        if !(end_s > start_s) {
            return Err(ModelError::InvalidWindow { start_s, end_s });
        }
        Ok(Self {
            index,
            start_s,
            end_s,
        })
    }

    /// The uniform span `[i*d, (i+1)*d)`.
    pub fn uniform(index: usize, duration_s: f64) -> Self {
        Self {
            index,
            start_s: index as f64 * duration_s,
            end_s: (index + 1) as f64 * duration_s,
        }
    }

    pub fn window(&self) -> TimeWindow {
        TimeWindow {
            start_s: self.start_s,
            end_s: self.end_s,
        }
    }
}

/// Cuts a video of `video_duration_s` into fixed-length segments.
///
/// A tail of at least [`MIN_TAIL_SEGMENT_S`] is kept as a short last segment;
/// anything shorter extends the previous segment instead.
pub fn slice_segments(
    video_duration_s: f64,
    segment_duration_s: f64,
) -> Result<Vec<SegmentIndex>, ModelError> {
    if !(segment_duration_s > 0.0) || !(video_duration_s > 0.0) {
        return Err(ModelError::InvalidWindow {
            start_s: 0.0,
            end_s: video_duration_s,
        });
    }
    let full = (video_duration_s / segment_duration_s).floor() as usize;
    let mut out: Vec<SegmentIndex> = (0..full)
        .map(|i| SegmentIndex::uniform(i, segment_duration_s))
        .collect();
    let covered = full as f64 * segment_duration_s;
    let tail = video_duration_s - covered;
    if tail >= MIN_TAIL_SEGMENT_S || out.is_empty() {
        out.push(SegmentIndex {
            index: full,
            start_s: covered,
            end_s: video_duration_s,
        });
    } else if tail > 0.0 {
        if let Some(last) = out.last_mut() {
            last.end_s = video_duration_s;
        }
    }
    Ok(out)
}

/// One entry of the temporal memory.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRecord {
    pub segment: SegmentIndex,
    pub caption: String,
    pub caption_emb: Embedding,
    pub video_emb: Embedding,
}
