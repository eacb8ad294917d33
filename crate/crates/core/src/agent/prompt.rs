//! Prompt templates and their rendering into chat turns.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AgentStep, ToolSpec};
use crate::backends::ChatTurn;
use crate::error::{Error, Result};

const MCQ: &str = include_str!("../../prompts/mcq.txt");
const OPEN_ENDED: &str = include_str!("../../prompts/open_ended.txt");
const NLQ: &str = include_str!("../../prompts/nlq.txt");
const MEMORY_AGENT: &str = include_str!("../../prompts/memory_agent.txt");

/// Everything up to and including this line goes into the system turn.
const SPLIT_MARKER: &str = "Begin!";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Mcq,
    OpenEnded,
    Nlq,
}

impl TaskKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mcq" => Ok(Self::Mcq),
            "open_ended" | "open-ended" => Ok(Self::OpenEnded),
            "nlq" => Ok(Self::Nlq),
            other => Err(Error::Config(format!(
                "unknown task kind {other:?} (mcq, open_ended, nlq)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    text: String,
}

impl PromptTemplate {
    pub fn builtin(kind: TaskKind) -> Self {
        Self::new(match kind {
            TaskKind::Mcq => MCQ,
            TaskKind::OpenEnded => OPEN_ENDED,
            TaskKind::Nlq => NLQ,
        })
    }

    pub fn memory_agent() -> Self {
        Self::new(MEMORY_AGENT)
    }

    /// Trailing newlines are dropped so the prompt ends exactly at `Thought: `.
    pub fn new(text: impl Into<String>) -> Self {
        let mut text = text.into();
        while text.ends_with('\n') {
            text.pop();
        }
        Self { text }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)
            .map(Self::new)
            .map_err(|e| Error::Config(format!("prompt {}: {e}", path.display())))
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// System turn holds the instructions; user turn holds the question and scratchpad.
    pub fn render(&self, tools: &[ToolSpec], input: &str, steps: &[AgentStep]) -> Vec<ChatTurn> {
        let tool_block = tools
            .iter()
            .map(|t| format!("{}: {}", t.name, t.description))
            .collect::<Vec<_>>()
            .join("\n\n");
        let names = tools.iter().map(|t| t.name).collect::<Vec<_>>().join(", ");
        let pad = scratchpad(steps);
        let vars = [
            ("tools", tool_block.as_str()),
            ("tool_names", names.as_str()),
            ("input", input),
            ("agent_scratchpad", pad.as_str()),
        ];
        let Some(pos) = self.text.find(SPLIT_MARKER) else {
            return vec![ChatTurn::user(substitute(&self.text, &vars))];
        };
        let split = pos + SPLIT_MARKER.len();
        let head = substitute(&self.text[..split], &vars);
        let tail = substitute(&self.text[split..], &vars);
        vec![
            ChatTurn::system(head),
            ChatTurn::user(tail.trim_start_matches('\n')),
        ]
    }
}

/// One block per completed step, leaving the prompt open at `Thought: `.
pub fn scratchpad(steps: &[AgentStep]) -> String {
    let mut out = String::new();
    for s in steps {
        out.push_str(&format!(
            "{}\nAction: {}\nAction Input: {}\nObservation: {}\nThought: ",
            s.thought, s.action, s.action_input, s.observation
        ));
    }
    out
}

/// Single-pass `{name}` substitution; text inserted by one key is never rescanned.
fn substitute(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let key = &after[..close];
            vars.iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::Role;

    fn tools() -> Vec<ToolSpec> {
        vec![
            ToolSpec {
                name: "a_tool",
                description: "does a",
            },
            ToolSpec {
                name: "b_tool",
                description: "does b",
            },
        ]
    }

    #[test]
    fn empty_history_ends_at_thought() {
        let turns = PromptTemplate::builtin(TaskKind::Mcq).render(&tools(), "\"q\"\n0: \"x\"", &[]);
        assert_eq!(turns.len(), 2);
        assert_eq!(turns[0].role, Role::System);
        assert!(turns[0].content.ends_with("Begin!"));
        assert!(turns[0].content.contains("a_tool: does a\n\nb_tool: does b"));
        assert!(turns[0].content.contains("[a_tool, b_tool]"));
        assert_eq!(turns[1].content, "Question: \"q\"\n0: \"x\"\nThought: ");
    }

    #[test]
    fn one_step_one_observation() {
        let step = AgentStep {
            thought: "look".into(),
            action: "a_tool".into(),
            action_input: "x".into(),
            observation: "{agent_scratchpad} stays literal".into(),
        };
        let turns = PromptTemplate::builtin(TaskKind::OpenEnded).render(&tools(), "q", &[step]);
        let user = &turns[1].content;
        assert_eq!(user.matches("Observation:").count(), 1);
        assert!(user.ends_with(
            "Thought: look\nAction: a_tool\nAction Input: x\nObservation: {agent_scratchpad} stays literal\nThought: "
        ));
    }

    #[test]
    fn substitution_is_single_pass() {
        assert_eq!(substitute("{a}{b}{c}", &[("a", "{b}"), ("b", "B")]), "{b}B{c}");
        assert_eq!(substitute("x { y", &[]), "x { y");
    }

    #[test]
    fn template_without_marker_is_one_turn() {
        let turns = PromptTemplate::new("Q: {input}").render(&[], "hi", &[]);
        assert_eq!(turns, vec![ChatTurn::user("Q: hi")]);
    }
}
