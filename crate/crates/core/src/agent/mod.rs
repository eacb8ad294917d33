//! The question-answering agent: prompt, parse, dispatch a tool, repeat.

use serde::{Deserialize, Serialize};

pub mod parse;
pub mod prompt;
pub mod react;
pub mod tools;

pub use parse::{parse_step, ParsedStep};
pub use prompt::{PromptTemplate, TaskKind};
pub use react::{react_loop, LoopConfig, LoopOutcome, OnExhaustion, Toolbox};
pub use tools::{parse_tool_input, Tool, ToolArgs};

use crate::backends::BackendSuite;
use crate::error::Result;
use crate::object::memory::{DEFAULT_OV_THRESHOLD, DEFAULT_OV_TOP_K};
use crate::store::MemoryBundle;
use crate::temporal::{EnsembleWeights, CAPTION_WINDOW_CAP, DEFAULT_TOP_K};

/// Steps the main agent may take before it is asked for an answer.
pub const DEFAULT_MAX_STEP: usize = 10;
/// Observations longer than this many characters are truncated.
pub const DEFAULT_OBSERVATION_CAP: usize = 4000;

/// Name and description of a tool, as shown to the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToolSpec {
    pub name: &'static str,
    pub description: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentStep {
    pub thought: String,
    pub action: String,
    pub action_input: String,
    pub observation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct History {
    pub query: String,
    pub steps: Vec<AgentStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentAnswer {
    pub final_text: String,
    /// Set for multiple-choice tasks when the final text names an option.
    pub choice_label: Option<u8>,
    pub transcript: History,
    /// The step budget ran out and the answer was demanded.
    pub forced: bool,
}

#[derive(Serialize)]
struct TranscriptJson<'a> {
    query: &'a str,
    steps: &'a [AgentStep],
    #[serde(rename = "final")]
    final_text: &'a str,
    choice: Option<u8>,
}

impl AgentAnswer {
    /// `{"query", "steps", "final", "choice"}`.
    pub fn transcript_json(&self) -> String {
        serde_json::to_string_pretty(&TranscriptJson {
            query: &self.transcript.query,
            steps: &self.transcript.steps,
            final_text: &self.final_text,
            choice: self.choice_label,
        })
        .expect("transcript serializes")
    }
}

/// First integer in 0..=4 that stands alone in the text.
pub fn choice_label(text: &str) -> Option<u8> {
    text.split(|c: char| !c.is_ascii_digit())
        .filter(|t| !t.is_empty())
        .find_map(|t| t.parse::<u8>().ok().filter(|&n| n <= 4))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSettings {
    pub task: TaskKind,
    pub max_step: usize,
    pub observation_cap: usize,
    pub weights: EnsembleWeights,
    pub top_k: usize,
    /// Most captions one retrieval call may return.
    pub caption_cap: usize,
    pub memory_max_steps: usize,
    pub ov_threshold: f64,
    pub ov_top_k: usize,
}

impl Default for AgentSettings {
    fn default() -> Self {
        Self {
            task: TaskKind::Mcq,
            max_step: DEFAULT_MAX_STEP,
            observation_cap: DEFAULT_OBSERVATION_CAP,
            weights: EnsembleWeights::default(),
            top_k: DEFAULT_TOP_K,
            caption_cap: CAPTION_WINDOW_CAP,
            memory_max_steps: DEFAULT_MAX_STEP,
            ov_threshold: DEFAULT_OV_THRESHOLD,
            ov_top_k: DEFAULT_OV_TOP_K,
        }
    }
}

/// One agent over one memory bundle. Cheap to build; runs are independent.
pub struct Agent<'a> {
    pub bundle: &'a MemoryBundle,
    pub suite: &'a BackendSuite,
    pub settings: AgentSettings,
    pub template: PromptTemplate,
    pub memory_template: PromptTemplate,
    /// Handed to the VQA model with every window.
    pub video_uri: String,
}

impl<'a> Agent<'a> {
    pub fn new(bundle: &'a MemoryBundle, suite: &'a BackendSuite, settings: AgentSettings) -> Self {
        Self {
            bundle,
            suite,
            template: PromptTemplate::builtin(settings.task),
            memory_template: PromptTemplate::memory_agent(),
            settings,
            video_uri: String::new(),
        }
    }

    pub fn with_video_uri(mut self, uri: impl Into<String>) -> Self {
        self.video_uri = uri.into();
        self
    }

    pub fn with_templates(mut self, main: PromptTemplate, memory: PromptTemplate) -> Self {
        self.template = main;
        self.memory_template = memory;
        self
    }

    pub fn run(&self, query: &str) -> Result<AgentAnswer> {
        let cfg = LoopConfig {
            max_steps: self.settings.max_step,
            observation_cap: self.settings.observation_cap,
            on_exhaustion: OnExhaustion::ForceAnswer,
        };
        let out = react_loop(self.suite.chat.as_ref(), &self.template, self, query, &cfg)?;
        let choice_label = match self.settings.task {
            TaskKind::Mcq => choice_label(&out.final_text),
            _ => None,
        };
        Ok(AgentAnswer {
            final_text: out.final_text,
            choice_label,
            transcript: out.history,
            forced: out.forced,
        })
    }
}

/// Convenience wrapper: builtin templates, no video URI.
pub fn run_agent(
    query: &str,
    bundle: &MemoryBundle,
    suite: &BackendSuite,
    settings: AgentSettings,
) -> Result<AgentAnswer> {
    Agent::new(bundle, suite, settings).run(query)
}
