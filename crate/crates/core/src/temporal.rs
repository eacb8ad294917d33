//! Temporal memory: one caption and two embeddings per segment, plus the
//! caption-retrieval and segment-localization tools that read it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backends::{BackendSuite, SegmentMedia};
use crate::error::{BackendError, Error, Result};
use crate::model::{cosine, Embedding, SegmentIndex, SegmentRecord, TimeWindow};

/// Most captions one caption-retrieval call may return.
pub const CAPTION_WINDOW_CAP: usize = 15;

/// Number of hits segment localization returns by default.
pub const DEFAULT_TOP_K: usize = 5;

/// Weights of the query-caption and query-video similarities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleWeights {
    pub w_text: f64,
    pub w_video: f64,
}

impl EnsembleWeights {
    /// LaViLa captions with ViCLIP video features, video:text = 18:11.
    pub fn lavila_viclip() -> Self {
        Self::from_video_text_ratio(18.0, 11.0).expect("valid preset")
    }

    /// Ego4D narrations with ViCLIP video features, video:text = 7:8.
    pub fn ego4d_viclip() -> Self {
        Self::from_video_text_ratio(7.0, 8.0).expect("valid preset")
    }

    pub fn text_only() -> Self {
        Self {
            w_text: 1.0,
            w_video: 0.0,
        }
    }

    pub fn video_only() -> Self {
        Self {
            w_text: 0.0,
            w_video: 1.0,
        }
    }

    /// Normalizes a video:text proportion so the weights sum to one.
    pub fn from_video_text_ratio(video: f64, text: f64) -> Result<Self> {
        if !(video >= 0.0 && text >= 0.0) || !(video + text > 0.0) || !(video + text).is_finite() {
            return Err(Error::Config(format!(
                "ensemble ratio {video}:{text} must be non-negative with a positive sum"
            )));
        }
        let total = video + text;
        let w_video = video / total;
        let w_text = text / total;
        // Sterbenz: subtracting the larger weight from 1 is exact, so the sum is too.
        Ok(if w_video >= w_text {
            Self {
                w_video,
                w_text: 1.0 - w_video,
            }
        } else {
            Self {
                w_text,
                w_video: 1.0 - w_text,
            }
        })
    }

    /// Parses `"VIDEO:TEXT"`, e.g. `"18:11"`.
    pub fn parse(ratio: &str) -> Result<Self> {
        let bad = || Error::Config(format!("ratio {ratio:?} is not of the form VIDEO:TEXT"));
        let (v, t) = ratio.split_once(':').ok_or_else(bad)?;
        let v: f64 = v.trim().parse().map_err(|_| bad())?;
        let t: f64 = t.trim().parse().map_err(|_| bad())?;
        Self::from_video_text_ratio(v, t)
    }

    pub fn combine(&self, text_score: f64, video_score: f64) -> f64 {
        self.w_text * text_score + self.w_video * video_score
    }
}

impl Default for EnsembleWeights {
    fn default() -> Self {
        Self::lavila_viclip()
    }
}

/// One ranked answer of segment localization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationHit {
    pub segment: SegmentIndex,
    pub window: TimeWindow,
    pub score: f64,
    pub text_score: f64,
    pub video_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalMemory {
    records: Vec<SegmentRecord>,
    segment_duration_s: f64,
    caption_dim: usize,
    video_dim: usize,
}

impl TemporalMemory {
    /// Validates and freezes a record list.
    pub fn from_records(records: Vec<SegmentRecord>, segment_duration_s: f64) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::Precondition("temporal memory needs at least one segment".into()))?;
        let caption_dim = first.caption_emb.dim();
        let video_dim = first.video_emb.dim();
        for (pos, r) in records.iter().enumerate() {
            if r.segment.index != pos {
                return Err(Error::Precondition(format!(
                    "record at position {pos} has segment index {}",
                    r.segment.index
                )));
            }
            if r.caption.trim().is_empty() {
                return Err(Error::Precondition(format!("segment {pos} has an empty caption")));
            }
            if r.caption_emb.dim() != caption_dim || r.video_emb.dim() != video_dim {
                return Err(Error::Precondition(format!(
                    "segment {pos} embedding dims differ from segment 0"
                )));
            }
        }
        if !(segment_duration_s > 0.0) {
            return Err(Error::Precondition("segment duration must be positive".into()));
        }
        Ok(Self {
            records,
            segment_duration_s,
            caption_dim,
            video_dim,
        })
    }

    pub fn records(&self) -> &[SegmentRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn segment_duration_s(&self) -> f64 {
        self.segment_duration_s
    }

    pub fn caption_dim(&self) -> usize {
        self.caption_dim
    }

    pub fn video_dim(&self) -> usize {
        self.video_dim
    }

    pub fn duration_s(&self) -> f64 {
        self.records.last().map(|r| r.segment.end_s).unwrap_or(0.0)
    }

    /// Captions of the inclusive index range `[start, end]`, at most 15 of them.
    pub fn caption_retrieval(&self, start: i64, end: i64) -> Result<Vec<(usize, String)>> {
        self.caption_retrieval_with_cap(start, end, CAPTION_WINDOW_CAP)
    }

    pub fn caption_retrieval_with_cap(
        &self,
        start: i64,
        end: i64,
        cap: usize,
    ) -> Result<Vec<(usize, String)>> {
        if start > end {
            return Err(Error::Precondition(format!(
                "start segment {start} is after end segment {end}"
            )));
        }
        let requested = (end - start + 1) as u64;
        if requested > cap as u64 {
            return Err(Error::WindowCap {
                requested: usize::try_from(requested).unwrap_or(usize::MAX),
                cap,
            });
        }
        for idx in [start, end] {
            if idx < 0 || idx as usize >= self.len() {
                return Err(Error::Range {
                    index: idx,
                    count: self.len(),
                });
            }
        }
        Ok((start as usize..=end as usize)
            .map(|i| (i, self.records[i].caption.clone()))
            .collect())
    }

    /// Ranks every segment by the weighted caption and video similarity to `query`.
    pub fn segment_localization(
        &self,
        query: &str,
        weights: &EnsembleWeights,
        suite: &BackendSuite,
        k: usize,
    ) -> Result<Vec<LocalizationHit>> {
        if query.trim().is_empty() {
            return Err(Error::Precondition("localization query is empty".into()));
        }
        let text_q = suite.caption_text.embed_text(query)?;
        let video_q = suite.crossmodal_text.embed_text(query)?;
        let mut hits = self
            .records
            .iter()
            .map(|r| {
                let text_score = cosine(&text_q, &r.caption_emb)?;
                let video_score = cosine(&video_q, &r.video_emb)?;
                Ok(LocalizationHit {
                    segment: r.segment,
                    window: r.segment.window(),
                    score: weights.combine(text_score, video_score),
                    text_score,
                    video_score,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        hits.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(a.segment.index.cmp(&b.segment.index))
        });
        hits.truncate(k);
        Ok(hits)
    }
}

/// Captions and embeds every segment; per-segment work runs in parallel.
pub fn build_temporal_memory(
    segments: &[SegmentMedia],
    suite: &BackendSuite,
) -> Result<TemporalMemory> {
    let first = segments
        .first()
        .ok_or_else(|| Error::Precondition("no segments to build a memory from".into()))?;
    suite.check_dims()?;
    let duration = first.segment.end_s - first.segment.start_s;

    let built: Vec<std::result::Result<SegmentRecord, BackendError>> = segments
        .par_iter()
        .map(|media| {
            let caption = suite.captioner.caption(media)?;
            if caption.trim().is_empty() {
                return Err(BackendError::BadResponse("empty caption".into()));
            }
            let video_emb = renormalize(suite.crossmodal_video.embed_video(media)?)?;
            let caption_emb = renormalize(suite.caption_text.embed_text(&caption)?)?;
            Ok(SegmentRecord {
                segment: media.segment,
                caption,
                caption_emb,
                video_emb,
            })
        })
        .collect();

    let mut records = Vec::with_capacity(built.len());
    for (media, rec) in segments.iter().zip(built) {
        records.push(rec.map_err(|source| Error::SegmentBuild {
            segment: media.segment.index,
            source,
        })?);
    }
    TemporalMemory::from_records(records, duration)
}

fn renormalize(e: Embedding) -> std::result::Result<Embedding, BackendError> {
    Ok(Embedding::normalized(e.into_values())?)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::backends::{SyntheticBackend, SyntheticConfig};
    use crate::eval::world::{gen_world, WorldParams};

    fn fixture(n: usize) -> (TemporalMemory, BackendSuite, SyntheticBackend) {
        let params = WorldParams {
            n_segments: n,
            ..WorldParams::default()
        };
        let world = Arc::new(gen_world(11, &params).unwrap());
        let backend = SyntheticBackend::new(world.clone(), SyntheticConfig::default());
        let media: Vec<_> = (0..n).map(|i| backend.segment_media(i)).collect();
        let suite = backend.clone().into_suite();
        let mem = build_temporal_memory(&media, &suite).unwrap();
        (mem, suite, backend)
    }

    #[test]
    fn builds_one_record_per_segment() {
        let (mem, _, backend) = fixture(3);
        assert_eq!(mem.len(), 3);
        for (i, r) in mem.records().iter().enumerate() {
            assert_eq!(r.caption, backend.world().events[i].caption());
            assert!(r.caption_emb.is_normalized() && r.video_emb.is_normalized());
        }
        let (mem, _, _) = fixture(44);
        assert_eq!(mem.len(), 44);
    }

    #[test]
    fn empty_build_is_rejected() {
        let (_, suite, _) = fixture(2);
        assert!(matches!(
            build_temporal_memory(&[], &suite),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn failing_segment_is_named() {
        let (_, suite, backend) = fixture(4);
        let mut media: Vec<_> = (0..4).map(|i| backend.segment_media(i)).collect();
        media[2].frames.clear();
        match build_temporal_memory(&media, &suite) {
            Err(Error::SegmentBuild { segment, .. }) => assert_eq!(segment, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn caption_retrieval_bounds() {
        let (mem, _, _) = fixture(44);
        let got = mem.caption_retrieval(37, 42).unwrap();
        assert_eq!(got.iter().map(|p| p.0).collect::<Vec<_>>(), (37..=42).collect::<Vec<_>>());
        assert_eq!(mem.caption_retrieval(5, 5).unwrap().len(), 1);
        assert_eq!(mem.caption_retrieval(0, 14).unwrap().len(), 15);
        assert!(matches!(
            mem.caption_retrieval(0, 15),
            Err(Error::WindowCap { requested: 16, cap: 15 })
        ));
        assert!(matches!(mem.caption_retrieval(40, 44), Err(Error::Range { index: 44, .. })));
        assert!(matches!(mem.caption_retrieval(-1, 2), Err(Error::Range { index: -1, .. })));
        assert!(mem.caption_retrieval(3, 2).is_err());
    }

    #[test]
    fn weights_follow_video_text_ratio() {
        let w = EnsembleWeights::lavila_viclip();
        assert!((w.w_video - 18.0 / 29.0).abs() < 1e-15);
        assert!((w.w_text - 11.0 / 29.0).abs() < 1e-15);
        assert_eq!(w.w_text + w.w_video, 1.0);
        let w = EnsembleWeights::ego4d_viclip();
        assert!((w.w_video - 7.0 / 15.0).abs() < 1e-15);
        assert_eq!(w.w_text + w.w_video, 1.0);
        assert_eq!(EnsembleWeights::parse("18:11").unwrap(), EnsembleWeights::lavila_viclip());
        assert!(EnsembleWeights::parse("0:0").is_err());
        assert!(EnsembleWeights::parse("18/11").is_err());
        assert!(EnsembleWeights::parse("-1:2").is_err());
    }

    #[test]
    fn self_retrieval_with_text_weight() {
        let (mem, suite, _) = fixture(20);
        let target = &mem.records()[7];
        let hits = mem
            .segment_localization(&target.caption, &EnsembleWeights::text_only(), &suite, 5)
            .unwrap();
        assert!((hits[0].text_score - 1.0).abs() < 1e-12);
        // a filler caption may repeat earlier; the lowest such index wins ties
        let first_same = mem
            .records()
            .iter()
            .position(|r| r.caption == target.caption)
            .unwrap();
        assert_eq!(hits[0].segment.index, first_same);
    }

    #[test]
    fn localization_rejects_empty_query() {
        let (mem, suite, _) = fixture(3);
        assert!(mem
            .segment_localization("  ", &EnsembleWeights::default(), &suite, 5)
            .is_err());
    }
}
