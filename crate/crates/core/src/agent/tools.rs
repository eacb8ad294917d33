//! The four memory tools: argument parsing, dispatch and observation text.

use super::parse::{parse_int_pair, parse_question_and_id, parse_text};
use super::react::Toolbox;
use super::{Agent, ToolSpec};
use crate::error::{Error, Result};
use crate::model::TimeWindow;
use crate::object::querying::{object_memory_querying, MemoryAgentConfig};
use crate::temporal::{LocalizationHit, TemporalMemory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tool {
    CaptionRetrieval,
    SegmentLocalization,
    VisualQuestionAnswering,
    ObjectMemoryQuerying,
}

impl Tool {
    pub const ALL: [Tool; 4] = [
        Tool::CaptionRetrieval,
        Tool::SegmentLocalization,
        Tool::VisualQuestionAnswering,
        Tool::ObjectMemoryQuerying,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tool::CaptionRetrieval => "caption_retrieval",
            Tool::SegmentLocalization => "segment_localization",
            Tool::VisualQuestionAnswering => "visual_question_answering",
            Tool::ObjectMemoryQuerying => "object_memory_querying",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Tool::CaptionRetrieval => "Input is a tuple (start_segment, end_segment). Returns the caption of every segment from start_segment to end_segment inclusive; one call returns at most 15 captions, so end_segment must be below start_segment+15.",
            Tool::SegmentLocalization => "Input is one description string. Returns how many segments the video has and the 5 segments whose content matches the description best.",
            Tool::VisualQuestionAnswering => "Input is a tuple (question, segment_id). Looks at the video from segment_id-1 to segment_id+1 and returns a description of that clip together with an answer to the question.",
            Tool::ObjectMemoryQuerying => "Input is a question about objects, for example 'which objects appear in the video?' or 'how many cups are there?'. Answers from the object memory, which can be wrong.",
        }
    }

    pub fn spec(self) -> ToolSpec {
        ToolSpec {
            name: self.name(),
            description: self.description(),
        }
    }

    pub fn from_name(name: &str) -> Option<Tool> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ToolArgs {
    Span { start: i64, end: i64 },
    Text(String),
    Question { question: String, segment: i64 },
}

/// Typed arguments, or a message for the model explaining what was wrong.
pub fn parse_tool_input(tool: Tool, raw: &str) -> std::result::Result<ToolArgs, String> {
    match tool {
        Tool::CaptionRetrieval => parse_int_pair(raw).map(|(start, end)| ToolArgs::Span { start, end }),
        Tool::SegmentLocalization | Tool::ObjectMemoryQuerying => parse_text(raw).map(ToolArgs::Text),
        Tool::VisualQuestionAnswering => {
            parse_question_and_id(raw).map(|(question, segment)| ToolArgs::Question { question, segment })
        }
    }
}

fn quoted(caption: &str) -> String {
    format!("'{}'", caption.replace('\\', "\\\\").replace('\'', "\\'"))
}

/// `{i: 'caption', ...}` in the given order.
pub fn render_caption_map<'a>(items: impl IntoIterator<Item = (usize, &'a str)>) -> String {
    let body = items
        .into_iter()
        .map(|(i, c)| format!("{i}: {}", quoted(c)))
        .collect::<Vec<_>>()
        .join(", ");
    format!("{{{body}}}")
}

pub fn render_localization(mem: &TemporalMemory, hits: &[LocalizationHit]) -> String {
    let n = mem.len();
    let map = render_caption_map(
        hits.iter()
            .map(|h| (h.segment.index, mem.records()[h.segment.index].caption.as_str())),
    );
    format!(
        "There are {n} segments in total, ranging from 0 to {}. {map}",
        n.saturating_sub(1)
    )
}

/// Window of segments `t-1 ..= t+1`, clamped to the video.
pub fn vqa_window(mem: &TemporalMemory, segment: i64) -> Result<TimeWindow> {
    let n = mem.len();
    if segment < 0 || segment as usize >= n {
        return Err(Error::Range { index: segment, count: n });
    }
    let t = segment as usize;
    let lo = t.saturating_sub(1);
    let hi = (t + 1).min(n - 1);
    let recs = mem.records();
    Ok(TimeWindow::new(recs[lo].segment.start_s, recs[hi].segment.end_s)?)
}

impl Agent<'_> {
    /// Runs one tool. Errors are returned, not rendered.
    pub fn dispatch(&self, tool: Tool, args: ToolArgs) -> Result<String> {
        let mem = &self.bundle.temporal;
        match (tool, args) {
            (Tool::CaptionRetrieval, ToolArgs::Span { start, end }) => {
                let pairs = mem.caption_retrieval_with_cap(start, end, self.settings.caption_cap)?;
                Ok(render_caption_map(pairs.iter().map(|(i, c)| (*i, c.as_str()))))
            }
            (Tool::SegmentLocalization, ToolArgs::Text(q)) => {
                let hits = mem.segment_localization(&q, &self.settings.weights, self.suite, self.settings.top_k)?;
                Ok(render_localization(mem, &hits))
            }
            (Tool::VisualQuestionAnswering, ToolArgs::Question { question, segment }) => {
                let window = vqa_window(mem, segment)?;
                let a = self.suite.vqa.answer(&question, &window, &self.video_uri)?;
                Ok(format!("Description: {}\nAnswer: {}", a.description, a.answer))
            }
            (Tool::ObjectMemoryQuerying, ToolArgs::Text(q)) => {
                let cfg = MemoryAgentConfig {
                    max_steps: self.settings.memory_max_steps,
                    observation_cap: self.settings.observation_cap,
                    ov_threshold: self.settings.ov_threshold,
                    ov_top_k: self.settings.ov_top_k,
                };
                let out = object_memory_querying(
                    &self.bundle.objects,
                    &q,
                    self.suite.memory_chat().as_ref(),
                    self.suite,
                    &self.memory_template,
                    &cfg,
                )?;
                Ok(out.final_text)
            }
            (tool, args) => Err(Error::Precondition(format!(
                "{} cannot take {args:?}",
                tool.name()
            ))),
        }
    }
}

impl Toolbox for Agent<'_> {
    fn specs(&self) -> Vec<ToolSpec> {
        Tool::ALL.iter().map(|t| t.spec()).collect()
    }

    fn call(&self, action: &str, input: &str) -> String {
        let Some(tool) = Tool::from_name(action) else {
            let names: Vec<&str> = Tool::ALL.iter().map(|t| t.name()).collect();
            return format!(
                "Error: '{action}' is not a tool. Use one of [{}].",
                names.join(", ")
            );
        };
        match parse_tool_input(tool, input) {
            Err(msg) => format!("Error: {msg}"),
            Ok(args) => match self.dispatch(tool, args) {
                Ok(text) => text,
                Err(e) => format!("Error: {e}"),
            },
        }
    }
}
