use std::sync::Arc;

use proptest::prelude::*;
use vidmem::backends::{BackendSuite, SyntheticBackend, SyntheticConfig};
use vidmem::eval::{gen_world, recall_at, WorldParams};
use vidmem::model::{cosine, temporal_iou, Embedding, SegmentIndex, SegmentRecord, TimeWindow};
use vidmem::object::{pair_similarity, reid_group, ObjectMemory, ObjectRecord, ReidParams, TrackingFeature};
use vidmem::temporal::{EnsembleWeights, TemporalMemory};
use vidmem::MemoryBundle;

const WORDS: [&str; 10] = ["cup", "man", "opens", "door", "table", "red", "dog", "walks", "knife", "box"];

fn suite() -> BackendSuite {
    let world = gen_world(0, &WorldParams { n_segments: 4, ..WorldParams::default() }).unwrap();
    SyntheticBackend::new(Arc::new(world), SyntheticConfig::default()).into_suite()
}

fn unit(raw: Vec<f64>) -> Embedding {
    Embedding::normalized(raw).unwrap()
}

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(0..WORDS.len(), 1..6)
        .prop_map(|ix| ix.into_iter().map(|i| WORDS[i]).collect::<Vec<_>>().join(" "))
}

/// Small embedding with a nonzero first component so normalization never fails.
fn small_emb(dim: usize) -> impl Strategy<Value = Embedding> {
    prop::collection::vec(-1.0f64..1.0, dim - 1).prop_map(|mut v| {
        v.insert(0, 0.5);
        unit(v)
    })
}

fn temporal(captions: Vec<String>, videos: Vec<Embedding>, suite: &BackendSuite) -> TemporalMemory {
    let records = captions
        .into_iter()
        .zip(videos)
        .enumerate()
        .map(|(i, (caption, video_emb))| SegmentRecord {
            segment: SegmentIndex::uniform(i, 2.0),
            caption_emb: suite.caption_text.embed_text(&caption).unwrap(),
            caption,
            video_emb,
        })
        .collect();
    TemporalMemory::from_records(records, 2.0).unwrap()
}

fn video_embs(n: usize, dim: usize) -> impl Strategy<Value = Vec<Embedding>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, dim), n).prop_map(|rows| {
        rows.into_iter()
            .map(|mut v| {
                v[0] += 3.0;
                unit(v)
            })
            .collect()
    })
}

fn memory_case() -> impl Strategy<Value = (Vec<String>, Vec<Embedding>)> {
    let dim = SyntheticConfig::default().video_dim;
    (1usize..60).prop_flat_map(move |n| (prop::collection::vec(sentence(), n), video_embs(n, dim)))
}

/// Tracks drawn around a few prototypes so that some of them merge.
fn tracks() -> impl Strategy<Value = Vec<TrackingFeature>> {
    let protos = prop::collection::vec((small_emb(6), small_emb(6)), 1..4);
    protos.prop_flat_map(|protos| {
        let n = protos.len();
        prop::collection::vec(
            (0..n, prop::collection::vec(-0.15f64..0.15, 12), 0u64..40, 1u64..8),
            1..20,
        )
        .prop_map(move |specs| {
            specs
                .into_iter()
                .enumerate()
                .map(|(id, (p, noise, start, len))| {
                    let (c, d) = &protos[p];
                    let jitter = |e: &Embedding, off: usize| {
                        unit(e.values().iter().zip(&noise[off..off + 6]).map(|(a, b)| a + b).collect())
                    };
                    TrackingFeature::new(
                        id as u64 + 1,
                        jitter(c, 0),
                        jitter(d, 6),
                        (start..start + len).collect(),
                        "thing",
                    )
                    .unwrap()
                })
                .collect()
        })
    })
}

fn window() -> impl Strategy<Value = TimeWindow> {
    (0.0f64..100.0, 0.0f64..20.0).prop_map(|(a, l)| TimeWindow::new(a, a + l).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reid_groups_are_consistent(tracks in tracks()) {
        let p = ReidParams::default();
        let groups = reid_group(&tracks, &p).unwrap();
        let by_id = |id: u64| tracks.iter().find(|t| t.tracking_id == id).unwrap();
        let mut seen: Vec<u64> = groups.iter().flat_map(|g| g.members.clone()).collect();
        seen.sort_unstable();
        let mut all: Vec<u64> = tracks.iter().map(|t| t.tracking_id).collect();
        all.sort_unstable();
        prop_assert_eq!(seen, all);
        for (k, g) in groups.iter().enumerate() {
            prop_assert_eq!(g.object_id, k as u64);
            for (i, &a) in g.members.iter().enumerate() {
                let earlier = &g.members[..i];
                for &b in earlier {
                    prop_assert!(!by_id(a).shares_frame(by_id(b)));
                    prop_assert!(pair_similarity(by_id(a), by_id(b), &p).unwrap().sim > 0.5);
                }
                if i > 0 {
                    prop_assert!(earlier
                        .iter()
                        .any(|&b| pair_similarity(by_id(a), by_id(b), &p).unwrap().sim > 0.62));
                }
            }
        }
    }

    #[test]
    fn reid_is_order_independent(tracks in tracks()) {
        let p = ReidParams::default();
        let mut reversed = tracks.clone();
        reversed.reverse();
        prop_assert_eq!(reid_group(&tracks, &p).unwrap(), reid_group(&reversed, &p).unwrap());
    }

    #[test]
    fn localization_matches_brute_force(
        (captions, videos) in memory_case(),
        query in sentence(),
        video_part in 0u32..30,
        k in 1usize..8,
    ) {
        let suite = suite();
        let mem = temporal(captions, videos, &suite);
        let weights = EnsembleWeights::from_video_text_ratio(video_part as f64, 30.0 - video_part as f64).unwrap();
        let hits = mem.segment_localization(&query, &weights, &suite, k).unwrap();

        let tq = suite.caption_text.embed_text(&query).unwrap();
        let vq = suite.crossmodal_text.embed_text(&query).unwrap();
        let mut brute: Vec<(f64, usize)> = mem
            .records()
            .iter()
            .map(|r| {
                let s = weights.w_text * cosine(&tq, &r.caption_emb).unwrap()
                    + weights.w_video * cosine(&vq, &r.video_emb).unwrap();
                (s, r.segment.index)
            })
            .collect();
        brute.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        prop_assert_eq!(hits.len(), k.min(mem.len()));
        for (h, (s, i)) in hits.iter().zip(&brute) {
            prop_assert_eq!((h.score, h.segment.index), (*s, *i));
        }
    }

    #[test]
    fn caption_window_never_exceeds_cap(n in 1usize..80, start in -5i64..85, len in -3i64..25) {
        let suite = suite();
        let dim = SyntheticConfig::default().video_dim;
        let mut v = vec![0.0; dim];
        v[0] = 1.0;
        let mem = temporal(vec!["man walks".into(); n], vec![unit(v); n], &suite);
        let end = start + len;
        match mem.caption_retrieval(start, end) {
            Ok(caps) => {
                prop_assert!(caps.len() <= 15);
                prop_assert_eq!(caps.len() as i64, len + 1);
                prop_assert_eq!(caps[0].0 as i64, start);
            }
            Err(_) => prop_assert!(len < 0 || len >= 15 || start < 0 || end >= n as i64),
        }
    }

    #[test]
    fn recall_is_monotone(
        examples in prop::collection::vec((prop::collection::vec(window(), 1..8), window()), 1..20),
        m in 0.05f64..0.95,
    ) {
        let (preds, gts): (Vec<_>, Vec<_>) = examples.into_iter().unzip();
        let r1 = recall_at(&preds, &gts, 1, m).unwrap();
        let r5 = recall_at(&preds, &gts, 5, m).unwrap();
        prop_assert!(r5 >= r1);
        prop_assert!((0.0..=1.0).contains(&r1) && (0.0..=1.0).contains(&r5));
        prop_assert!(recall_at(&preds, &gts, 5, (m + 0.05).min(1.0)).unwrap() <= r5);
    }

    #[test]
    fn iou_is_bounded_and_symmetric(a in window(), b in window()) {
        let x = temporal_iou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert_eq!(x, temporal_iou(&b, &a));
        prop_assert_eq!(temporal_iou(&a, &a), 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bundles_round_trip(
        (captions, videos) in memory_case(),
        objects in prop::collection::vec(
            (0usize..WORDS.len(), prop::collection::btree_set(0usize..60, 1..6), small_emb(8)),
            0..6,
        ),
    ) {
        let suite = suite();
        let n = captions.len();
        let temporal = temporal(captions, videos, &suite);
        let objects = ObjectMemory::from_objects(
            objects
                .into_iter()
                .enumerate()
                .map(|(id, (w, segs, feature))| ObjectRecord {
                    object_id: id as u64,
                    category: WORDS[w].to_string(),
                    segments: segs.into_iter().filter(|&s| s < n).collect(),
                    feature: Some(feature),
                })
                .collect(),
        )
        .unwrap();
        let bundle = MemoryBundle { temporal, objects };
        let dir = tempfile::tempdir().unwrap();
        bundle.save(dir.path()).unwrap();
        let loaded = MemoryBundle::load(dir.path()).unwrap();
        prop_assert_eq!(loaded, bundle.to_f32_precision().unwrap());
    }
}
