//! Re-identification: merge tracker occurrences of the same object into groups.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ModelError, Result};
use crate::model::{cosine, Embedding};

/// Constants of the two sigmoid-calibrated similarities and the grouping thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReidParams {
    pub clip_gain: f64,
    pub clip_bias: f64,
    pub dino_gain: f64,
    pub dino_bias: f64,
    pub clip_weight: f64,
    pub dino_weight: f64,
    /// Every member of a group must exceed this similarity with a newcomer.
    pub all_pairs_threshold: f64,
    /// At least one member must exceed this similarity with a newcomer.
    pub anchor_threshold: f64,
}

impl Default for ReidParams {
    fn default() -> Self {
        Self {
            clip_gain: 20.0,
            clip_bias: 0.925,
            dino_gain: 4.1,
            dino_bias: 0.5,
            clip_weight: 0.15,
            dino_weight: 0.85,
            all_pairs_threshold: 0.5,
            anchor_threshold: 0.62,
        }
    }
}

/// Aggregated appearance of one tracking ID.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingFeature {
    pub tracking_id: u64,
    pub clip_feat: Embedding,
    pub dino_feat: Embedding,
    /// Sorted, deduplicated frame indices.
    pub frames: Vec<u64>,
    pub category: String,
}

impl TrackingFeature {
    pub fn new(
        tracking_id: u64,
        clip_feat: Embedding,
        dino_feat: Embedding,
        mut frames: Vec<u64>,
        category: impl Into<String>,
    ) -> Result<Self> {
        frames.sort_unstable();
        frames.dedup();
        if frames.is_empty() {
            return Err(Error::Precondition(format!(
                "tracking id {tracking_id} has no frames"
            )));
        }
        Ok(Self {
            tracking_id,
            clip_feat: Embedding::normalized(clip_feat.into_values())?,
            dino_feat: Embedding::normalized(dino_feat.into_values())?,
            frames,
            category: category.into(),
        })
    }

    /// True when both occurrences are visible in a common frame.
    pub fn shares_frame(&self, other: &TrackingFeature) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.frames.len() && j < other.frames.len() {
            match self.frames[i].cmp(&other.frames[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

/// Per-role mean of crop features, L2-normalized.
pub fn tracking_feature_from_crops(
    crops_clip: &[Embedding],
    crops_dino: &[Embedding],
) -> Result<(Embedding, Embedding)> {
    if crops_clip.is_empty() || crops_dino.is_empty() {
        return Err(Error::Precondition(
            "each feature role needs at least one crop".into(),
        ));
    }
    Ok((
        Embedding::normalized_mean(crops_clip)?,
        Embedding::normalized_mean(crops_dino)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSimilarity {
    pub clip: f64,
    pub dino: f64,
    pub sim: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn similarity_from_cosines(cos_clip: f64, cos_dino: f64, p: &ReidParams) -> PairSimilarity {
    let clip = sigmoid(p.clip_gain * (cos_clip - p.clip_bias));
    let dino = sigmoid(p.dino_gain * (cos_dino - p.dino_bias));
    PairSimilarity {
        clip,
        dino,
        sim: p.clip_weight * clip + p.dino_weight * dino,
    }
}

pub fn pair_similarity(
    a: &TrackingFeature,
    b: &TrackingFeature,
    p: &ReidParams,
) -> std::result::Result<PairSimilarity, ModelError> {
    let cos_clip = cosine(&a.clip_feat, &b.clip_feat)?;
    let cos_dino = cosine(&a.dino_feat, &b.dino_feat)?;
    Ok(similarity_from_cosines(cos_clip, cos_dino, p))
}

/// A set of tracking IDs believed to be one object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReidGroup {
    pub object_id: u64,
    /// Tracking IDs in insertion order.
    pub members: Vec<u64>,
}

/// Symmetric matrix of `sim` values, indexed by position in the input slice.
pub fn similarity_matrix(
    tracks: &[TrackingFeature],
    p: &ReidParams,
) -> std::result::Result<Vec<Vec<f64>>, ModelError> {
    (0..tracks.len())
        .into_par_iter()
        .map(|i| {
            (0..tracks.len())
                .map(|j| pair_similarity(&tracks[i], &tracks[j], p).map(|s| s.sim))
                .collect()
        })
        .collect()
}

/// Greedy grouping over frames in ascending order.
///
/// Each tracking ID is examined once, at the first frame it appears in; IDs
/// first seen in the same frame go in ascending ID order. It joins the first
/// group (in creation order) that shares no frame with it, where every member
/// has similarity above `all_pairs_threshold` and some member is above
/// `anchor_threshold`. Otherwise it opens a new group.
pub fn reid_group(tracks: &[TrackingFeature], p: &ReidParams) -> Result<Vec<ReidGroup>> {
    let mut ids: Vec<u64> = tracks.iter().map(|t| t.tracking_id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Precondition("tracking ids must be unique".into()));
    }
    if tracks.iter().any(|t| t.frames.is_empty()) {
        return Err(Error::Precondition("every tracking id needs a frame".into()));
    }
    let sims = similarity_matrix(tracks, p)?;

    // Visiting frames in order and skipping examined IDs is the same as
    // visiting IDs by (first frame, id).
    let mut order: Vec<usize> = (0..tracks.len()).collect();
    order.sort_by_key(|&i| (tracks[i].frames[0], tracks[i].tracking_id));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        let joined = groups.iter_mut().find(|members| {
            members.iter().all(|&j| !tracks[i].shares_frame(&tracks[j]))
                && members.iter().all(|&j| sims[i][j] > p.all_pairs_threshold)
                && members.iter().any(|&j| sims[i][j] > p.anchor_threshold)
        });
        match joined {
            Some(members) => members.push(i),
            None => groups.push(vec![i]),
        }
    }

    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(object_id, members)| ReidGroup {
            object_id: object_id as u64,
            members: members.into_iter().map(|i| tracks[i].tracking_id).collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(dim: usize, axis: usize) -> Embedding {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        Embedding::new(v).unwrap()
    }

    /// A unit vector at angle `theta` from the first axis, in the (0, k) plane.
    fn at_angle(dim: usize, k: usize, theta: f64) -> Embedding {
        let mut v = vec![0.0; dim];
        v[0] = theta.cos();
        v[k] = theta.sin();
        Embedding::new(v).unwrap()
    }

    fn track(id: u64, clip: Embedding, dino: Embedding, frames: std::ops::Range<u64>) -> TrackingFeature {
        TrackingFeature::new(id, clip, dino, frames.collect(), "thing").unwrap()
    }

    // Values computed by direct evaluation of the two sigmoids in f64
    // (independent script): sigma(20*0.075), sigma(4.1*0.5), sigma(-18.5), sigma(-2.05).
    #[test]
    fn closed_form_values() {
        let p = ReidParams::default();
        let s = similarity_from_cosines(1.0, 1.0, &p);
        assert!((s.clip - 0.817_574_476_193_643_4).abs() < 1e-12);
        assert!((s.dino - 0.885_947_618_720_209_1).abs() < 1e-12);
        assert!((s.sim - 0.875_691_647_341_224_2).abs() < 1e-12);

        let s = similarity_from_cosines(0.925, 0.5, &p);
        assert_eq!((s.clip, s.dino, s.sim), (0.5, 0.5, 0.5));

        let s = similarity_from_cosines(0.0, 0.0, &p);
        assert!((s.sim - 0.096_944_525_473_439_68).abs() < 1e-12);
    }

    #[test]
    fn pair_similarity_from_features() {
        let p = ReidParams::default();
        let a = track(1, unit(4, 0), unit(4, 0), 0..3);
        let b = track(2, unit(4, 1), unit(4, 1), 5..8);
        let s = pair_similarity(&a, &b, &p).unwrap();
        assert!((s.sim - 0.096_944_525_473_439_68).abs() < 1e-12);
        assert_eq!(s, pair_similarity(&b, &a, &p).unwrap());
        let c = track(3, unit(3, 0), unit(4, 0), 0..1);
        assert!(pair_similarity(&a, &c, &p).is_err());
    }

    #[test]
    fn crop_aggregation() {
        let u = unit(3, 0);
        let v = unit(3, 1);
        let (c, d) = tracking_feature_from_crops(&[u.clone()], &[u.clone(), u.clone()]).unwrap();
        assert_eq!(c, u);
        assert_eq!(d, u);
        let (c, _) = tracking_feature_from_crops(&[u.clone(), v], &[u.clone()]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c.values()[0] - h).abs() < 1e-12 && (c.values()[1] - h).abs() < 1e-12);
        assert!(tracking_feature_from_crops(&[], &[u]).is_err());
    }

    #[test]
    fn single_and_empty() {
        let p = ReidParams::default();
        assert!(reid_group(&[], &p).unwrap().is_empty());
        let g = reid_group(&[track(9, unit(4, 0), unit(4, 0), 0..2)], &p).unwrap();
        assert_eq!(g, vec![ReidGroup { object_id: 0, members: vec![9] }]);
    }

    #[test]
    fn disjoint_similar_tracks_merge_overlapping_do_not() {
        let p = ReidParams::default();
        let a = track(1, unit(4, 0), unit(4, 0), 0..10);
        let b = track(2, unit(4, 0), unit(4, 0), 20..30);
        let g = reid_group(&[a.clone(), b], &p).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].members, vec![1, 2]);

        let b = track(2, unit(4, 0), unit(4, 0), 9..30);
        let g = reid_group(&[a, b], &p).unwrap();
        assert_eq!(g.len(), 2);
    }

    /// Hand-traced chain: A-B and B-C clear 0.62, A-C falls below 0.5, so C
    /// cannot join {A, B} and starts its own group.
    #[test]
    fn chain_case() {
        let p = ReidParams::default();
        // identical clip features; dino angles 0, 0.6, 1.2 rad give
        // sim(A,B) = sim(B,C) ~ 0.80 and sim(A,C) ~ 0.43
        let clip = unit(4, 3);
        let a = track(1, clip.clone(), at_angle(4, 1, 0.0), 0..10);
        let b = track(2, clip.clone(), at_angle(4, 1, 0.6), 10..20);
        let c = track(3, clip, at_angle(4, 1, 1.2), 20..30);
        let sab = pair_similarity(&a, &b, &p).unwrap().sim;
        let sbc = pair_similarity(&b, &c, &p).unwrap().sim;
        let sac = pair_similarity(&a, &c, &p).unwrap().sim;
        assert!(sab > 0.62 && sbc > 0.62 && sac < 0.5, "{sab} {sbc} {sac}");
        let g = reid_group(&[c, a, b], &p).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].members, vec![1, 2]);
        assert_eq!(g[1].members, vec![3]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let p = ReidParams::default();
        let a = track(1, unit(4, 0), unit(4, 0), 0..2);
        assert!(reid_group(&[a.clone(), a], &p).is_err());
    }

    #[test]
    fn same_first_frame_goes_by_id() {
        let p = ReidParams::default();
        let a = track(5, unit(4, 0), unit(4, 0), 0..2);
        let b = track(3, unit(4, 1), unit(4, 1), 0..2);
        let g = reid_group(&[a, b], &p).unwrap();
        assert_eq!(g[0].members, vec![3]);
        assert_eq!(g[1].members, vec![5]);
    }
}
