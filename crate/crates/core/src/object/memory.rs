//! Object memory: re-ID groups become objects with an averaged feature, a
//! category and the segments they were seen in.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::reid::{reid_group, tracking_feature_from_crops, ReidGroup, ReidParams, TrackingFeature};
use super::sql::{self, OccurrenceRow, QueryResult};
use crate::backends::{BackendSuite, TrackResult, VideoSource};
use crate::error::{Error, Result};
use crate::model::{cosine, Embedding};

/// Minimum cosine for open-vocabulary retrieval to report an object.
pub const DEFAULT_OV_THRESHOLD: f64 = 0.5;
/// Most objects open-vocabulary retrieval reports.
pub const DEFAULT_OV_TOP_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub object_id: u64,
    pub category: String,
    /// Sorted segment indices.
    pub segments: Vec<usize>,
    #[serde(skip)]
    pub feature: Option<Embedding>,
}

/// Maps tracker frame numbers to segment indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMapping {
    pub fps: f64,
    pub segment_duration_s: f64,
    pub n_segments: usize,
}

impl FrameMapping {
    pub fn segment_of(&self, frame: u64) -> usize {
        let t = frame as f64 / self.fps;
        // The epsilon keeps exact boundaries like frame 60 at 30 fps in segment 1.
        let raw = (t / self.segment_duration_s + 1e-9).floor() as usize;
        raw.min(self.n_segments.saturating_sub(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectMemory {
    objects: Vec<ObjectRecord>,
    rows: Vec<OccurrenceRow>,
    feature_dim: usize,
}

impl ObjectMemory {
    /// Validates records and derives the relational rows.
    pub fn from_objects(mut objects: Vec<ObjectRecord>) -> Result<Self> {
        objects.sort_by_key(|o| o.object_id);
        if objects.windows(2).any(|w| w[0].object_id == w[1].object_id) {
            return Err(Error::Precondition("object ids must be unique".into()));
        }
        let mut feature_dim = 0;
        for o in &mut objects {
            o.segments.sort_unstable();
            o.segments.dedup();
            let feature = o.feature.as_ref().ok_or_else(|| {
                Error::Precondition(format!("object {} has no feature", o.object_id))
            })?;
            if feature_dim == 0 {
                feature_dim = feature.dim();
            } else if feature.dim() != feature_dim {
                return Err(Error::Precondition(format!(
                    "object {} feature dim {} differs from {feature_dim}",
                    o.object_id,
                    feature.dim()
                )));
            }
        }
        let rows = objects
            .iter()
            .flat_map(|o| {
                o.segments.iter().map(|&s| OccurrenceRow {
                    object_id: o.object_id as i64,
                    category: o.category.clone(),
                    segment_index: s as i64,
                })
            })
            .collect();
        Ok(Self {
            objects,
            rows,
            feature_dim,
        })
    }

    pub fn empty() -> Self {
        Self {
            objects: Vec::new(),
            rows: Vec::new(),
            feature_dim: 0,
        }
    }

    pub fn objects(&self) -> &[ObjectRecord] {
        &self.objects
    }

    pub fn rows(&self) -> &[OccurrenceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// 0 for an empty memory.
    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn get(&self, object_id: u64) -> Option<&ObjectRecord> {
        self.objects
            .binary_search_by_key(&object_id, |o| o.object_id)
            .ok()
            .map(|i| &self.objects[i])
    }

    pub fn execute_query(&self, sql: &str) -> Result<QueryResult> {
        Ok(sql::execute(sql, &self.rows)?)
    }

    /// Objects whose feature is close to the text description, best first.
    pub fn open_vocabulary_retrieval(
        &self,
        description: &str,
        suite: &BackendSuite,
        threshold: f64,
        k: usize,
    ) -> Result<Vec<(u64, f64)>> {
        if description.trim().is_empty() {
            return Err(Error::Precondition("object description is empty".into()));
        }
        if self.objects.is_empty() {
            return Ok(Vec::new());
        }
        let q = suite.clip_text.embed_text(description)?;
        let mut scored = Vec::with_capacity(self.objects.len());
        for o in &self.objects {
            let f = o.feature.as_ref().expect("validated at construction");
            let c = cosine(&q, f)?;
            if c >= threshold {
                scored.push((o.object_id, c));
            }
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored)
    }
}

/// Turns re-ID groups into objects.
pub fn build_object_memory(
    groups: &[ReidGroup],
    tracks: &[TrackingFeature],
    mapping: &FrameMapping,
) -> Result<ObjectMemory> {
    let lookup = |id: u64| {
        tracks
            .iter()
            .find(|t| t.tracking_id == id)
            .ok_or(Error::UnknownTrack(id))
    };
    let mut objects = Vec::with_capacity(groups.len());
    for g in groups {
        let members = g
            .members
            .iter()
            .map(|&id| lookup(id))
            .collect::<Result<Vec<_>>>()?;
        if members.is_empty() {
            return Err(Error::Precondition(format!("group {} is empty", g.object_id)));
        }
        let feature = Embedding::normalized_mean(members.iter().map(|t| &t.clip_feat))?;
        let segments: BTreeSet<usize> = members
            .iter()
            .flat_map(|t| t.frames.iter().map(|&f| mapping.segment_of(f)))
            .collect();
        objects.push(ObjectRecord {
            object_id: g.object_id,
            category: majority_category(&members),
            segments: segments.into_iter().collect(),
            feature: Some(feature),
        });
    }
    ObjectMemory::from_objects(objects)
}

/// Most frequent category; ties go to whichever tied category came first.
fn majority_category(members: &[&TrackingFeature]) -> String {
    let mut counts: Vec<(&str, usize)> = Vec::new();
    for m in members {
        match counts.iter_mut().find(|(c, _)| *c == m.category) {
            Some((_, n)) => *n += 1,
            None => counts.push((&m.category, 1)),
        }
    }
    let best = counts.iter().map(|(_, n)| *n).max().unwrap_or(0);
    counts
        .into_iter()
        .find(|(_, n)| *n == best)
        .map(|(c, _)| c.to_string())
        .unwrap_or_default()
}

/// Embeds every crop of one track with both crop roles.
pub fn track_feature(track: &TrackResult, suite: &BackendSuite) -> Result<TrackingFeature> {
    let embed = |role: &dyn crate::backends::CropEmbedder| {
        track
            .crops
            .iter()
            .map(|c| role.embed_crop(c))
            .collect::<std::result::Result<Vec<_>, _>>()
    };
    let clip = embed(suite.crop_clip.as_ref())?;
    let dino = embed(suite.crop_dino.as_ref())?;
    let (clip, dino) = tracking_feature_from_crops(&clip, &dino)?;
    TrackingFeature::new(
        track.tracking_id,
        clip,
        dino,
        track.frames.clone(),
        track.category.clone(),
    )
}

/// Everything the object pipeline produced, kept for inspection.
#[derive(Debug, Clone)]
pub struct ObjectBuild {
    pub tracks: Vec<TrackingFeature>,
    pub groups: Vec<ReidGroup>,
    pub memory: ObjectMemory,
}

/// Tracker, crop features, re-ID grouping and memory construction in one call.
pub fn object_track_reid(
    video: &VideoSource,
    suite: &BackendSuite,
    mapping: &FrameMapping,
    params: &ReidParams,
) -> Result<ObjectBuild> {
    let results = suite.tracker.track(video)?;
    let tracks = results
        .par_iter()
        .map(|t| track_feature(t, suite))
        .collect::<Result<Vec<_>>>()?;
    let groups = reid_group(&tracks, params)?;
    let memory = build_object_memory(&groups, &tracks, mapping)?;
    Ok(ObjectBuild {
        tracks,
        groups,
        memory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(v: &[f64]) -> Embedding {
        Embedding::normalized(v.to_vec()).unwrap()
    }

    fn tf(id: u64, clip: &[f64], frames: &[u64], cat: &str) -> TrackingFeature {
        TrackingFeature::new(id, emb(clip), emb(clip), frames.to_vec(), cat).unwrap()
    }

    const MAP: FrameMapping = FrameMapping {
        fps: 30.0,
        segment_duration_s: 2.0,
        n_segments: 10,
    };

    #[test]
    fn frame_mapping_boundaries() {
        assert_eq!(MAP.segment_of(0), 0);
        assert_eq!(MAP.segment_of(59), 0);
        assert_eq!(MAP.segment_of(60), 1);
        assert_eq!(MAP.segment_of(10_000), 9);
    }

    #[test]
    fn single_member_keeps_its_feature() {
        let t = tf(4, &[0.6, 0.8], &[0, 61], "cup");
        let g = ReidGroup {
            object_id: 0,
            members: vec![4],
        };
        let m = build_object_memory(&[g], &[t.clone()], &MAP).unwrap();
        let o = &m.objects()[0];
        assert_eq!(o.feature.as_ref().unwrap(), &t.clip_feat);
        assert_eq!(o.segments, vec![0, 1]);
        assert_eq!(m.rows().len(), 2);
    }

    #[test]
    fn mean_feature_majority_category_and_rows() {
        let tracks = vec![
            tf(1, &[1.0, 0.0], &[0], "dog"),
            tf(2, &[0.0, 1.0], &[200], "cat"),
            tf(3, &[1.0, 0.0], &[400], "cat"),
            tf(7, &[1.0, 1.0], &[10], "box"),
        ];
        let groups = vec![
            ReidGroup {
                object_id: 0,
                members: vec![1, 2, 3],
            },
            ReidGroup {
                object_id: 1,
                members: vec![7],
            },
        ];
        let m = build_object_memory(&groups, &tracks, &MAP).unwrap();
        let o = m.get(0).unwrap();
        assert_eq!(o.category, "cat");
        let f = o.feature.as_ref().unwrap().values().to_vec();
        let n = 5f64.sqrt();
        assert!((f[0] - 2.0 / n).abs() < 1e-12 && (f[1] - 1.0 / n).abs() < 1e-12);
        assert_eq!(o.segments, vec![0, 3, 6]);
        assert_eq!(
            m.rows().len(),
            m.objects().iter().map(|o| o.segments.len()).sum::<usize>()
        );

        let tie = vec![tf(1, &[1.0], &[0], "dog"), tf(2, &[1.0], &[90], "cat")];
        let g = ReidGroup {
            object_id: 0,
            members: vec![1, 2],
        };
        let m = build_object_memory(&[g], &tie, &MAP).unwrap();
        assert_eq!(m.objects()[0].category, "dog");
    }

    #[test]
    fn unknown_track_and_empty() {
        let g = ReidGroup {
            object_id: 0,
            members: vec![9],
        };
        assert!(matches!(
            build_object_memory(&[g], &[], &MAP),
            Err(Error::UnknownTrack(9))
        ));
        let m = build_object_memory(&[], &[], &MAP).unwrap();
        assert!(m.is_empty() && m.rows().is_empty());
    }
}
