//! On-disk layout of a built memory.
//!
//! ```text
//! manifest.json     {"version":1,"segment_count":n,"segment_duration_s":d,"caption_dim":c,"video_dim":v}
//! captions.jsonl    {"segment":i,"caption":"..."} per line
//! caption_emb.bin   VAMEM1 matrix
//! video_emb.bin     VAMEM1 matrix
//! objects.jsonl     {"object_id":i,"category":"...","segments":[...]} per line
//! object_feat.bin   VAMEM1 matrix, one row per line of objects.jsonl
//! ```
//!
//! A VAMEM1 matrix is the 6 magic bytes `VAMEM1`, a little-endian u32 row
//! count, a little-endian u32 dim, then the rows as little-endian f32.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backends::{BackendSuite, SegmentMedia, VideoSource};
use crate::error::{Error, Result, StoreError};
use crate::model::{Embedding, SegmentIndex, SegmentRecord};
use crate::object::memory::{object_track_reid, ObjectBuild, ObjectMemory, ObjectRecord};
use crate::object::{FrameMapping, ReidParams};
use crate::temporal::{build_temporal_memory, TemporalMemory};

pub const FORMAT_VERSION: u64 = 1;
pub const MAGIC: &[u8; 6] = b"VAMEM1";
const HEADER_LEN: usize = 14;

pub const MANIFEST: &str = "manifest.json";
pub const CAPTIONS: &str = "captions.jsonl";
pub const CAPTION_EMB: &str = "caption_emb.bin";
pub const VIDEO_EMB: &str = "video_emb.bin";
pub const OBJECTS: &str = "objects.jsonl";
pub const OBJECT_FEAT: &str = "object_feat.bin";

/// Temporal and object memory of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBundle {
    pub temporal: TemporalMemory,
    pub objects: ObjectMemory,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u64,
    segment_count: usize,
    segment_duration_s: f64,
    caption_dim: usize,
    video_dim: usize,
    /// Only present when the last segment is not a full uniform one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    last_segment_end_s: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct CaptionLine {
    segment: usize,
    caption: String,
}

impl MemoryBundle {
    /// Builds both memories from segment media and the whole video.
    pub fn build(
        segments: &[SegmentMedia],
        video: &VideoSource,
        suite: &BackendSuite,
        reid: &ReidParams,
    ) -> Result<(Self, ObjectBuild)> {
        let temporal = build_temporal_memory(segments, suite)?;
        let mapping = FrameMapping {
            fps: video.fps,
            segment_duration_s: temporal.segment_duration_s(),
            n_segments: temporal.len(),
        };
        let objects = object_track_reid(video, suite, &mapping, reid)?;
        Ok((
            Self {
                temporal,
                objects: objects.memory.clone(),
            },
            objects,
        ))
    }

    /// What a save/load round trip yields: every embedding at f32 precision.
    pub fn to_f32_precision(&self) -> Result<Self> {
        let records = self
            .temporal
            .records()
            .iter()
            .map(|r| SegmentRecord {
                caption_emb: r.caption_emb.to_f32_precision(),
                video_emb: r.video_emb.to_f32_precision(),
                ..r.clone()
            })
            .collect();
        let objects = self
            .objects
            .objects()
            .iter()
            .map(|o| ObjectRecord {
                feature: o.feature.as_ref().map(Embedding::to_f32_precision),
                ..o.clone()
            })
            .collect();
        Ok(Self {
            temporal: TemporalMemory::from_records(records, self.temporal.segment_duration_s())?,
            objects: ObjectMemory::from_objects(objects)?,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let t = &self.temporal;
        let d = t.segment_duration_s();
        let records = t.records();
        for r in &records[..records.len() - 1] {
            let u = SegmentIndex::uniform(r.segment.index, d);
            if r.segment != u {
                return Err(Error::Precondition(format!(
                    "segment {} is not the uniform span [{}, {})",
                    r.segment.index, u.start_s, u.end_s
                )));
            }
        }
        let last = records[records.len() - 1].segment;
        let uniform_last = SegmentIndex::uniform(last.index, d);
        if last.start_s != uniform_last.start_s {
            return Err(Error::Precondition(format!(
                "last segment starts at {} instead of {}",
                last.start_s, uniform_last.start_s
            )));
        }
        let manifest = Manifest {
            version: FORMAT_VERSION,
            segment_count: t.len(),
            segment_duration_s: d,
            caption_dim: t.caption_dim(),
            video_dim: t.video_dim(),
            last_segment_end_s: (last.end_s != uniform_last.end_s).then_some(last.end_s),
        };
        let manifest = serde_json::to_string(&manifest).expect("manifest serializes");

        let mut captions = String::new();
        for r in records {
            captions.push_str(
                &serde_json::to_string(&CaptionLine {
                    segment: r.segment.index,
                    caption: r.caption.clone(),
                })
                .expect("caption serializes"),
            );
            captions.push('\n');
        }
        let caption_rows: Vec<&Embedding> = records.iter().map(|r| &r.caption_emb).collect();
        let video_rows: Vec<&Embedding> = records.iter().map(|r| &r.video_emb).collect();

        let objs = self.objects.objects();
        let mut objects = String::new();
        for o in objs {
            objects.push_str(&serde_json::to_string(o).expect("object serializes"));
            objects.push('\n');
        }
        let feat_rows: Vec<&Embedding> = objs
            .iter()
            .map(|o| o.feature.as_ref().expect("validated by ObjectMemory"))
            .collect();

        write_atomic(&dir.join(MANIFEST), manifest.as_bytes())?;
        write_atomic(&dir.join(CAPTIONS), captions.as_bytes())?;
        write_atomic(&dir.join(CAPTION_EMB), &encode_matrix(&caption_rows, t.caption_dim()))?;
        write_atomic(&dir.join(VIDEO_EMB), &encode_matrix(&video_rows, t.video_dim()))?;
        write_atomic(&dir.join(OBJECTS), objects.as_bytes())?;
        write_atomic(
            &dir.join(OBJECT_FEAT),
            &encode_matrix(&feat_rows, self.objects.feature_dim()),
        )?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest_path = dir.join(MANIFEST);
        let manifest: Manifest = serde_json::from_slice(&read(&manifest_path)?)
            .map_err(|e| corrupt(&manifest_path, e.to_string()))?;
        if manifest.version != FORMAT_VERSION {
            return Err(StoreError::Version {
                found: manifest.version,
                expected: FORMAT_VERSION,
            }
            .into());
        }
        let n = manifest.segment_count;
        let d = manifest.segment_duration_s;

        let captions_path = dir.join(CAPTIONS);
        let captions = parse_jsonl::<CaptionLine>(&captions_path)?;
        if captions.len() != n {
            return Err(corrupt(
                &captions_path,
                format!("{} captions for {n} segments", captions.len()),
            )
            .into());
        }
        let caption_emb = decode_file(&dir.join(CAPTION_EMB), n, manifest.caption_dim)?;
        let video_emb = decode_file(&dir.join(VIDEO_EMB), n, manifest.video_dim)?;

        let mut records = Vec::with_capacity(n);
        for (pos, ((line, ce), ve)) in captions.into_iter().zip(caption_emb).zip(video_emb).enumerate() {
            if line.segment != pos {
                return Err(corrupt(
                    &captions_path,
                    format!("line {} holds segment {}", pos + 1, line.segment),
                )
                .into());
            }
            let mut segment = SegmentIndex::uniform(pos, d);
            if pos + 1 == n {
                if let Some(end) = manifest.last_segment_end_s {
                    segment = SegmentIndex::new(pos, segment.start_s, end)?;
                }
            }
            records.push(SegmentRecord {
                segment,
                caption: line.caption,
                caption_emb: ce,
                video_emb: ve,
            });
        }
        let temporal = TemporalMemory::from_records(records, d)?;

        let objects_path = dir.join(OBJECTS);
        let mut objects = parse_jsonl::<ObjectRecord>(&objects_path)?;
        let feat_path = dir.join(OBJECT_FEAT);
        let feat_bytes = read(&feat_path)?;
        let (count, dim) = read_header(&feat_path, &feat_bytes)?;
        if count != objects.len() {
            return Err(corrupt(
                &feat_path,
                format!("{count} feature rows for {} objects", objects.len()),
            )
            .into());
        }
        let feats = decode_matrix(&feat_path, &feat_bytes, count, dim)?;
        for (o, f) in objects.iter_mut().zip(feats) {
            o.feature = Some(f);
        }
        let objects = ObjectMemory::from_objects(objects)?;
        Ok(Self { temporal, objects })
    }
}

fn io(path: &Path, source: std::io::Error) -> Error {
    StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
    .into()
}

fn corrupt(path: &Path, reason: impl Into<String>) -> StoreError {
    StoreError::Corrupt {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| io(path, e))
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = String::from_utf8(read(path)?).map_err(|e| corrupt(path, e.to_string()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| corrupt(path, format!("line {}: {e}", i + 1)).into())
        })
        .collect()
}

/// Writes next to the target, then renames over it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp: PathBuf = path.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| io(&tmp, e))?;
    f.sync_all().map_err(|e| io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| io(path, e))
}

pub fn encode_matrix(rows: &[&Embedding], dim: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + rows.len() * dim * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for r in rows {
        debug_assert_eq!(r.dim(), dim);
        for &v in r.values() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

fn read_header(path: &Path, bytes: &[u8]) -> Result<(usize, usize)> {
    if bytes.len() < HEADER_LEN || &bytes[..6] != MAGIC {
        return Err(corrupt(path, "missing VAMEM1 magic").into());
    }
    let count = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let dim = u32::from_le_bytes(bytes[10..14].try_into().expect("4 bytes")) as usize;
    Ok((count, dim))
}

/// Decodes a matrix and checks it has the expected shape.
pub fn decode_matrix(path: &Path, bytes: &[u8], count: usize, dim: usize) -> Result<Vec<Embedding>> {
    let (c, d) = read_header(path, bytes)?;
    if c != count || d != dim {
        return Err(corrupt(
            path,
            format!("header says {c}x{d}, expected {count}x{dim}"),
        )
        .into());
    }
    let payload = &bytes[HEADER_LEN..];
    let expected = (count as u64) * (dim as u64) * 4;
    if payload.len() as u64 != expected {
        return Err(corrupt(
            path,
            format!("payload is {} bytes, header implies {expected}", payload.len()),
        )
        .into());
    }
    if count > 0 && dim == 0 {
        return Err(corrupt(path, "zero-width rows").into());
    }
    payload
        .chunks_exact(dim.max(1) * 4)
        .take(count)
        .map(|row| {
            let values = row
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)
                .collect();
            Embedding::new(values).map_err(|e| corrupt(path, e.to_string()).into())
        })
        .collect()
}

fn decode_file(path: &Path, count: usize, dim: usize) -> Result<Vec<Embedding>> {
    decode_matrix(path, &read(path)?, count, dim)
}
