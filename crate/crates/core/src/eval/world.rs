//! Seeded synthetic worlds: a ground-truth timeline of events and objects that
//! drives the synthetic backends and supplies evaluation labels.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::rng::SplitMix64;
use crate::error::{Error, Result};
use crate::model::{SegmentIndex, TimeWindow, DEFAULT_SEGMENT_DURATION_S};

/// Caption used for segments without a scripted event.
pub const FILLER_EVENT: &str = "C looks around";

/// Default frame rate of synthetic videos.
pub const DEFAULT_FPS: f64 = 30.0;

const VERBS: &[&str] = &[
    "opens", "closes", "picks up", "puts down", "washes", "cuts", "stirs", "holds", "moves",
    "wipes", "pours", "checks", "carries", "drops",
];

const THINGS: &[&str] = &[
    "fridge", "cup", "knife", "plate", "bowl", "drawer", "door", "bottle", "towel", "pan",
    "onion", "box", "chair", "table", "kettle", "spoon",
];

const OTHERS: &[&str] = &["man X", "woman Y", "person Z"];

/// Object categories with their plural forms.
pub const CATEGORIES: &[(&str, &str)] = &[
    ("elephant", "elephants"),
    ("cup", "cups"),
    ("bottle", "bottles"),
    ("chair", "chairs"),
    ("plate", "plates"),
    ("bowl", "bowls"),
    ("dog", "dogs"),
    ("ball", "balls"),
    ("box", "boxes"),
    ("phone", "phones"),
];

const NUMBER_WORDS: &[&str] = &[
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "eleven", "twelve",
];

pub fn plural_of(category: &str) -> String {
    CATEGORIES
        .iter()
        .find(|(s, _)| *s == category)
        .map(|(_, p)| p.to_string())
        .unwrap_or_else(|| format!("{category}s"))
}

pub fn number_word(n: usize) -> String {
    NUMBER_WORDS
        .get(n)
        .map(|w| w.to_string())
        .unwrap_or_else(|| n.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Actor {
    /// The camera wearer, captioned with `#C`.
    #[serde(rename = "C")]
    CameraWearer,
    /// Anyone else, captioned with `#O`.
    #[serde(rename = "O")]
    Other,
}

impl Actor {
    pub fn prefix(self) -> &'static str {
        match self {
            Actor::CameraWearer => "#C",
            Actor::Other => "#O",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldEvent {
    pub actor: Actor,
    pub text: String,
}

impl WorldEvent {
    pub fn new(actor: Actor, text: impl Into<String>) -> Self {
        Self {
            actor,
            text: text.into(),
        }
    }

    pub fn filler() -> Self {
        Self::new(Actor::CameraWearer, FILLER_EVENT)
    }

    /// Caption line as a captioner would emit it, e.g. `#C C opens the fridge`.
    pub fn caption(&self) -> String {
        format!("{} {}", self.actor.prefix(), self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldObject {
    /// Unique descriptive string, e.g. `elephant 1`.
    pub identity: String,
    pub category: String,
    /// Sorted segment indices where the object is visible.
    pub segments: Vec<usize>,
}

impl WorldObject {
    /// Maximal runs of consecutive segments; each one becomes a tracking ID.
    pub fn runs(&self) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut iter = self.segments.iter().copied();
        let Some(first) = iter.next() else {
            return runs;
        };
        let (mut lo, mut hi) = (first, first);
        for s in iter {
            if s == hi + 1 {
                hi = s;
            } else {
                runs.push((lo, hi));
                lo = s;
                hi = s;
            }
        }
        runs.push((lo, hi));
        runs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlqExample {
    pub query: String,
    pub gt_window: TimeWindow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McqExample {
    pub question: String,
    pub options: Vec<String>,
    pub answer: usize,
}

impl McqExample {
    /// Question plus numbered options, the way the agent prompt expects them.
    pub fn render(&self) -> String {
        let mut out = format!("\"{}\"", self.question);
        for (i, o) in self.options.iter().enumerate() {
            out.push_str(&format!("\n{i}: \"{o}\""));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWorld {
    pub seed: u64,
    pub n_segments: usize,
    pub segment_duration_s: f64,
    pub fps: f64,
    pub events: Vec<WorldEvent>,
    pub objects: Vec<WorldObject>,
    pub nlq_examples: Vec<NlqExample>,
    pub mcq_examples: Vec<McqExample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldParams {
    pub n_segments: usize,
    pub n_objects: usize,
    pub n_nlq: usize,
    pub n_mcq: usize,
    /// Probability that a segment gets a scripted event rather than filler.
    pub event_rate: f64,
    /// Force every object into this category.
    pub category: Option<String>,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            n_segments: 44,
            n_objects: 6,
            n_nlq: 10,
            n_mcq: 3,
            event_rate: 0.8,
            category: None,
        }
    }
}

impl SyntheticWorld {
    pub fn duration_s(&self) -> f64 {
        self.n_segments as f64 * self.segment_duration_s
    }

    pub fn video_uri(&self) -> String {
        format!("synthetic://world/{}", self.seed)
    }

    pub fn segment(&self, index: usize) -> SegmentIndex {
        SegmentIndex::uniform(index, self.segment_duration_s)
    }

    pub fn segments(&self) -> Vec<SegmentIndex> {
        (0..self.n_segments).map(|i| self.segment(i)).collect()
    }

    pub fn frames_per_segment(&self) -> u64 {
        (self.fps * self.segment_duration_s).round() as u64
    }

    /// Frame indices covered by one segment.
    pub fn segment_frames(&self, index: usize) -> std::ops::Range<u64> {
        let per = self.frames_per_segment();
        index as u64 * per..(index as u64 + 1) * per
    }

    /// Indices of segments that overlap a window with positive length.
    pub fn segments_in(&self, window: &TimeWindow) -> Vec<usize> {
        (0..self.n_segments)
            .filter(|&i| {
                let s = self.segment(i);
                s.start_s < window.end_s && window.start_s < s.end_s
            })
            .collect()
    }

    /// Ground-truth object count per category.
    pub fn category_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for o in &self.objects {
            *counts.entry(o.category.clone()).or_insert(0) += 1;
        }
        counts
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("world serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let world: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("world.json: {e}")))?;
        world.validate()?;
        Ok(world)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_segments == 0 || self.events.len() != self.n_segments {
            return Err(Error::Precondition(format!(
                "world has {} events for {} segments",
                self.events.len(),
                self.n_segments
            )));
        }
        for o in &self.objects {
            if o.segments.is_empty() || o.segments.iter().any(|&s| s >= self.n_segments) {
                return Err(Error::Precondition(format!(
                    "object '{}' has an invalid appearance set",
                    o.identity
                )));
            }
        }
        for m in &self.mcq_examples {
            if m.options.len() != 5 || m.answer >= 5 {
                return Err(Error::Precondition(format!(
                    "mcq '{}' needs 5 options and an answer in 0..5",
                    m.question
                )));
            }
        }
        Ok(())
    }
}

/// Builds a world from `seed`. The same seed and params always give the same world.
pub fn gen_world(seed: u64, params: &WorldParams) -> Result<SyntheticWorld> {
    if params.n_segments == 0 {
        return Err(Error::Precondition("n_segments must be positive".into()));
    }
    let mut rng = SplitMix64::new(seed);

    let events: Vec<WorldEvent> = (0..params.n_segments)
        .map(|_| {
            if !rng.chance(params.event_rate) {
                return WorldEvent::filler();
            }
            let verb = rng.pick(VERBS);
            let thing = rng.pick(THINGS);
            if rng.chance(0.75) {
                WorldEvent::new(Actor::CameraWearer, format!("C {verb} the {thing}"))
            } else {
                let who = rng.pick(OTHERS);
                WorldEvent::new(Actor::Other, format!("{who} {verb} the {thing}"))
            }
        })
        .collect();

    let objects: Vec<WorldObject> = (0..params.n_objects)
        .map(|i| {
            let category = match &params.category {
                Some(c) => c.clone(),
                None => rng.pick(CATEGORIES).0.to_string(),
            };
            let segments = appearance_set(&mut rng, params.n_segments);
            WorldObject {
                identity: format!("{category} {}", i + 1),
                category,
                segments,
            }
        })
        .collect();

    // Only events whose text is unique can serve as unambiguous NLQ sources.
    let mut text_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &events {
        *text_counts.entry(e.text.as_str()).or_insert(0) += 1;
    }
    let mut sources: Vec<usize> = (0..params.n_segments)
        .filter(|&i| text_counts[events[i].text.as_str()] == 1)
        .collect();
    rng.shuffle(&mut sources);
    sources.truncate(params.n_nlq);
    sources.sort_unstable();
    let nlq_examples = sources
        .into_iter()
        .map(|i| NlqExample {
            query: paraphrase_lite(&events[i].text),
            gt_window: SegmentIndex::uniform(i, DEFAULT_SEGMENT_DURATION_S).window(),
        })
        .collect();

    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for o in &objects {
        *counts.entry(o.category.clone()).or_insert(0) += 1;
    }
    let categories: Vec<(String, usize)> = counts.into_iter().collect();
    let mcq_examples = if categories.is_empty() {
        Vec::new()
    } else {
        (0..params.n_mcq)
            .map(|q| {
                let (category, count) = &categories[q % categories.len()];
                count_question(&mut rng, category, *count)
            })
            .collect()
    };

    Ok(SyntheticWorld {
        seed,
        n_segments: params.n_segments,
        segment_duration_s: DEFAULT_SEGMENT_DURATION_S,
        fps: DEFAULT_FPS,
        events,
        objects,
        nlq_examples,
        mcq_examples,
    })
}

/// One to three visible runs separated by gaps of at least one segment.
fn appearance_set(rng: &mut SplitMix64, n_segments: usize) -> Vec<usize> {
    let mut set = BTreeSet::new();
    let runs = 1 + rng.below(3);
    let mut cursor = rng.below(n_segments / 3 + 1);
    for _ in 0..runs {
        if cursor >= n_segments {
            break;
        }
        let len = rng.range(1, 4);
        let end = (cursor + len).min(n_segments);
        set.extend(cursor..end);
        cursor = end + rng.range(1, 6);
    }
    if set.is_empty() {
        set.insert(n_segments - 1);
    }
    set.into_iter().collect()
}

fn count_question(rng: &mut SplitMix64, category: &str, count: usize) -> McqExample {
    let mut pool: Vec<usize> = (1..=9).filter(|&n| n != count).collect();
    rng.shuffle(&mut pool);
    let mut numbers: Vec<usize> = pool.into_iter().take(4).collect();
    numbers.push(count);
    rng.shuffle(&mut numbers);
    let answer = numbers.iter().position(|&n| n == count).unwrap_or(0);
    McqExample {
        question: format!("how many {} are there", plural_of(category)),
        options: numbers.into_iter().map(number_word).collect(),
        answer,
    }
}

/// Surface rewrite that leaves the token multiset unchanged.
fn paraphrase_lite(text: &str) -> String {
    format!("{}?", text.to_lowercase())
}
