//! End-to-end runs over a memory bundle: NLQ localization and scripted MCQ.

use rayon::prelude::*;

use super::metrics::{ExampleResult, McqReport, McqResult, NlqReport, RecallReport};
use super::world::{McqExample, NlqExample, SyntheticWorld};
use crate::agent::{Agent, AgentSettings, PromptTemplate};
use crate::backends::{BackendSuite, SegmentMedia};
use crate::error::{Error, Result};
use crate::model::{slice_segments, temporal_iou};
use crate::replay::{count_script, ReplayScript};
use crate::store::MemoryBundle;
use crate::temporal::EnsembleWeights;

/// Segment descriptors for a real video; frames are `uri#frame=N` references.
pub fn media_for_video(uri: &str, duration_s: f64, segment_duration_s: f64, fps: f64) -> Result<Vec<SegmentMedia>> {
    let segments = slice_segments(duration_s, segment_duration_s)?;
    Ok(segments
        .into_iter()
        .map(|segment| {
            let first = (segment.start_s * fps).round() as u64;
            let last = ((segment.end_s * fps).round() as u64).max(first + 1);
            SegmentMedia {
                segment,
                video_uri: uri.to_string(),
                frames: (first..last).map(|f| format!("{uri}#frame={f}")).collect(),
            }
        })
        .collect())
}

/// Localizes every query and scores the ranked windows.
pub fn eval_nlq(
    bundle: &MemoryBundle,
    suite: &BackendSuite,
    examples: &[NlqExample],
    weights: &EnsembleWeights,
    top_k: usize,
    expand_s: f64,
) -> Result<NlqReport> {
    let mem = &bundle.temporal;
    let results: Vec<ExampleResult> = examples
        .par_iter()
        .map(|ex| {
            let hits = mem.segment_localization(&ex.query, weights, suite, top_k)?;
            let predictions: Vec<_> = hits.iter().map(|h| h.window.expand(expand_s)).collect();
            let ious = predictions.iter().map(|p| temporal_iou(p, &ex.gt_window)).collect();
            Ok(ExampleResult {
                query: ex.query.clone(),
                gt_window: ex.gt_window,
                predictions,
                ious,
            })
        })
        .collect::<Result<_>>()?;
    let preds: Vec<_> = results.iter().map(|r| r.predictions.clone()).collect();
    let gts: Vec<_> = results.iter().map(|r| r.gt_window).collect();
    Ok(NlqReport {
        recall: RecallReport::compute(&preds, &gts)?,
        examples: results,
    })
}

/// Runs one agent per question, each with its own scripted chats.
///
/// With `scripts` absent, every question must be a generated count question
/// and gets a [`count_script`]. A run that errors scores as wrong.
pub fn eval_mcq(
    bundle: &MemoryBundle,
    suite: &BackendSuite,
    world: &SyntheticWorld,
    questions: &[McqExample],
    scripts: Option<&[ReplayScript]>,
    settings: &AgentSettings,
    templates: (&PromptTemplate, &PromptTemplate),
) -> Result<McqReport> {
    if questions.is_empty() {
        return Err(Error::Precondition("no questions to evaluate".into()));
    }
    let scripts: Vec<ReplayScript> = match scripts {
        Some(s) if s.len() != questions.len() => {
            return Err(Error::LengthMismatch {
                left: s.len(),
                right: questions.len(),
            })
        }
        Some(s) => s.to_vec(),
        None => questions
            .iter()
            .map(|q| {
                count_script(world, q).ok_or_else(|| {
                    Error::Precondition(format!("no built-in script for '{}'", q.question))
                })
            })
            .collect::<Result<_>>()?,
    };
    let results: Vec<McqResult> = questions
        .par_iter()
        .zip(scripts.par_iter())
        .map(|(q, script)| {
            let suite = script.install(suite.clone());
            let run = Agent::new(bundle, &suite, settings.clone())
                .with_templates(templates.0.clone(), templates.1.clone())
                .with_video_uri(world.video_uri())
                .run(&q.render());
            let (predicted, final_text) = match run {
                Ok(a) => (a.choice_label, a.final_text),
                Err(e) => (None, format!("error: {e}")),
            };
            McqResult {
                question: q.question.clone(),
                gold: q.answer,
                predicted,
                final_text,
            }
        })
        .collect();
    let right = results
        .iter()
        .filter(|r| r.predicted.map(usize::from) == Some(r.gold))
        .count();
    Ok(McqReport {
        accuracy: right as f64 / results.len() as f64,
        n: results.len(),
        results,
    })
}
