//! The object-memory agent: a nested loop with SQL and open-vocabulary lookup.

use super::memory::ObjectMemory;
use crate::agent::react::{react_loop, LoopConfig, LoopOutcome, OnExhaustion, Toolbox};
use crate::agent::{parse::parse_text, PromptTemplate, ToolSpec};
use crate::backends::{BackendSuite, ChatModel};
use crate::error::{Error, Result};

pub const DATABASE_QUERYING: &str = "database_querying";
pub const OPEN_VOCABULARY_RETRIEVAL: &str = "open_vocabulary_retrieval";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryAgentConfig {
    pub max_steps: usize,
    pub observation_cap: usize,
    pub ov_threshold: f64,
    pub ov_top_k: usize,
}

impl Default for MemoryAgentConfig {
    fn default() -> Self {
        Self {
            max_steps: crate::agent::DEFAULT_MAX_STEP,
            observation_cap: crate::agent::DEFAULT_OBSERVATION_CAP,
            ov_threshold: super::memory::DEFAULT_OV_THRESHOLD,
            ov_top_k: super::memory::DEFAULT_OV_TOP_K,
        }
    }
}

struct MemoryTools<'a> {
    memory: &'a ObjectMemory,
    suite: &'a BackendSuite,
    cfg: &'a MemoryAgentConfig,
}

impl MemoryTools<'_> {
    fn retrieve(&self, input: &str) -> Result<String> {
        let description = parse_text(input).map_err(Error::Precondition)?;
        let hits = self.memory.open_vocabulary_retrieval(
            &description,
            self.suite,
            self.cfg.ov_threshold,
            self.cfg.ov_top_k,
        )?;
        if hits.is_empty() {
            return Ok(format!("No object matches '{description}'."));
        }
        let lines: Vec<String> = hits
            .iter()
            .map(|(id, score)| {
                let category = self.memory.get(*id).map_or("?", |o| o.category.as_str());
                format!("object_id {id} ({category}), similarity {score:.3}")
            })
            .collect();
        Ok(lines.join("\n"))
    }
}

impl Toolbox for MemoryTools<'_> {
    fn specs(&self) -> Vec<ToolSpec> {
        vec![
            ToolSpec {
                name: DATABASE_QUERYING,
                description: "Input is one SQL SELECT statement over the objects table. Returns the result rows.",
            },
            ToolSpec {
                name: OPEN_VOCABULARY_RETRIEVAL,
                description: "Input is a short description of an object. Returns the IDs of stored objects that look like it, best match first.",
            },
        ]
    }

    fn call(&self, action: &str, input: &str) -> String {
        let out = match action {
            DATABASE_QUERYING => self
                .memory
                .execute_query(input.trim())
                .map(|r| r.render()),
            OPEN_VOCABULARY_RETRIEVAL => self.retrieve(input),
            other => {
                return format!(
                    "Error: '{other}' is not a tool. Use one of [{DATABASE_QUERYING}, {OPEN_VOCABULARY_RETRIEVAL}]."
                )
            }
        };
        out.unwrap_or_else(|e| format!("Error: {e}"))
    }
}

/// Answers an object question in natural language.
pub fn object_memory_querying(
    memory: &ObjectMemory,
    question: &str,
    chat: &dyn ChatModel,
    suite: &BackendSuite,
    template: &PromptTemplate,
    cfg: &MemoryAgentConfig,
) -> Result<LoopOutcome> {
    if question.trim().is_empty() {
        return Err(Error::Precondition("object question is empty".into()));
    }
    let tools = MemoryTools { memory, suite, cfg };
    let loop_cfg = LoopConfig {
        max_steps: cfg.max_steps,
        observation_cap: cfg.observation_cap,
        on_exhaustion: OnExhaustion::Fail,
    };
    react_loop(chat, template, &tools, question, &loop_cfg)
}
