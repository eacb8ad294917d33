//! The Thought / Action / Observation loop shared by the main agent and the
//! object-memory agent.

use super::parse::{parse_step, ParsedStep};
use super::prompt::PromptTemplate;
use super::{AgentStep, History, ToolSpec};
use crate::backends::{ChatModel, ChatTurn};
use crate::error::{Error, Result};

/// Sent once after an unparsable completion.
pub const CORRECTIVE_TURN: &str = "Your last reply did not follow the required format. Respond in the required format: either\nThought: ...\nAction: <one of the tools>\nAction Input: ...\nor\nThought: I now know the final answer\nFinal Answer: ...";

/// Sent when the step budget is spent.
pub const FORCE_FINAL_TURN: &str = "No tool calls remain. Using only the observations above, respond now with\nThought: I now know the final answer\nFinal Answer: ...";

/// Appended to an observation cut at the cap.
pub const TRUNCATION_MARKER: &str = "... [truncated]";

/// The action name that ends the loop early.
pub const STOP_ACTION: &str = "stop";

/// Runs tools on behalf of the loop. Failures come back as observation text.
pub trait Toolbox {
    fn specs(&self) -> Vec<ToolSpec>;
    fn call(&self, action: &str, input: &str) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnExhaustion {
    /// One more model call, asked for a final answer over the whole history.
    ForceAnswer,
    /// Give up with [`Error::StepLimit`].
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoopConfig {
    pub max_steps: usize,
    pub observation_cap: usize,
    pub on_exhaustion: OnExhaustion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopOutcome {
    pub history: History,
    pub final_text: String,
    /// True when the answer came from the terminal forced call.
    pub forced: bool,
}

/// Cuts an observation at `cap` characters.
pub fn cap_observation(text: String, cap: usize) -> String {
    match text.char_indices().nth(cap) {
        Some((at, _)) => format!("{}{TRUNCATION_MARKER}", &text[..at]),
        None => text,
    }
}

fn complete_parsed(chat: &dyn ChatModel, turns: &[ChatTurn]) -> Result<ParsedStep> {
    let text = chat.complete(turns)?;
    match parse_step(&text) {
        Ok(p) => Ok(p),
        Err(_) => {
            let mut retry = turns.to_vec();
            retry.push(ChatTurn::assistant(text));
            retry.push(ChatTurn::user(CORRECTIVE_TURN));
            let again = chat.complete(&retry)?;
            parse_step(&again).map_err(|e| Error::Unparsable(format!("{e}: {again:?}")))
        }
    }
}

/// Model call, parse, dispatch, append; until a final answer or the budget runs out.
pub fn react_loop(
    chat: &dyn ChatModel,
    template: &PromptTemplate,
    tools: &dyn Toolbox,
    input: &str,
    cfg: &LoopConfig,
) -> Result<LoopOutcome> {
    let specs = tools.specs();
    let mut history = History {
        query: input.to_string(),
        steps: Vec::new(),
    };
    while history.steps.len() < cfg.max_steps {
        let turns = template.render(&specs, input, &history.steps);
        match complete_parsed(chat, &turns)? {
            ParsedStep::Final { answer, .. } => {
                return Ok(LoopOutcome {
                    history,
                    final_text: answer,
                    forced: false,
                })
            }
            ParsedStep::Action { action, .. } if action == STOP_ACTION => break,
            ParsedStep::Action {
                thought,
                action,
                input: action_input,
            } => {
                let observation =
                    cap_observation(tools.call(&action, &action_input), cfg.observation_cap);
                history.steps.push(AgentStep {
                    thought,
                    action,
                    action_input,
                    observation,
                });
            }
        }
    }

    if cfg.on_exhaustion == OnExhaustion::Fail {
        return Err(Error::StepLimit(cfg.max_steps));
    }
    let mut turns = template.render(&specs, input, &history.steps);
    turns.push(ChatTurn::user(FORCE_FINAL_TURN));
    let text = chat.complete(&turns)?;
    let final_text = match parse_step(&text) {
        Ok(ParsedStep::Final { answer, .. }) => answer,
        // whatever came back is the answer
        _ => text.trim().to_string(),
    };
    Ok(LoopOutcome {
        history,
        final_text,
        forced: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{ScriptEntry, ScriptedChat};

    struct Echo;

    impl Toolbox for Echo {
        fn specs(&self) -> Vec<ToolSpec> {
            vec![ToolSpec {
                name: "echo",
                description: "repeats its input",
            }]
        }

        fn call(&self, action: &str, input: &str) -> String {
            match action {
                "echo" => input.repeat(3),
                other => format!("Error: unknown tool '{other}'"),
            }
        }
    }

    fn cfg(max_steps: usize, on_exhaustion: OnExhaustion) -> LoopConfig {
        LoopConfig {
            max_steps,
            observation_cap: 5,
            on_exhaustion,
        }
    }

    fn template() -> PromptTemplate {
        PromptTemplate::new("{tools}\nBegin!\nQuestion: {input}\nThought: {agent_scratchpad}")
    }

    #[test]
    fn budget_exhaustion_forces_an_answer() {
        let act = "Thought: t\nAction: echo\nAction Input: abc";
        let chat = ScriptedChat::new(vec![
            ScriptEntry::reply(act),
            ScriptEntry::reply(act),
            ScriptEntry::reply("Final Answer: 1")
                .expecting(crate::backends::scripted::Expect::LastContains(FORCE_FINAL_TURN.into())),
        ]);
        let out = react_loop(&chat, &template(), &Echo, "q", &cfg(2, OnExhaustion::ForceAnswer)).unwrap();
        assert_eq!(out.history.steps.len(), 2);
        assert!(out.forced);
        assert_eq!(out.final_text, "1");
        assert_eq!(out.history.steps[0].observation, format!("abcab{TRUNCATION_MARKER}"));
        assert!(chat.is_exhausted());
    }

    #[test]
    fn budget_exhaustion_can_fail() {
        let chat = ScriptedChat::new(vec![ScriptEntry::reply("Action: echo\nAction Input: x")]);
        let err = react_loop(&chat, &template(), &Echo, "q", &cfg(1, OnExhaustion::Fail)).unwrap_err();
        assert!(matches!(err, Error::StepLimit(1)));
    }

    #[test]
    fn one_corrective_retry() {
        let chat = ScriptedChat::new(vec![
            ScriptEntry::reply("no format"),
            ScriptEntry::reply("Final Answer: ok")
                .expecting(crate::backends::scripted::Expect::LastContains(CORRECTIVE_TURN.into())),
        ]);
        let out = react_loop(&chat, &template(), &Echo, "q", &cfg(3, OnExhaustion::Fail)).unwrap();
        assert_eq!(out.final_text, "ok");

        let chat = ScriptedChat::new(vec![ScriptEntry::reply("no"), ScriptEntry::reply("still no")]);
        let err = react_loop(&chat, &template(), &Echo, "q", &cfg(3, OnExhaustion::Fail)).unwrap_err();
        assert!(matches!(err, Error::Unparsable(_)));
    }

    #[test]
    fn stop_and_unknown_tools() {
        let chat = ScriptedChat::new(vec![
            ScriptEntry::reply("Action: fly\nAction Input: x"),
            ScriptEntry::reply("Action: stop\nAction Input: none"),
            ScriptEntry::reply("the answer is 3"),
        ]);
        let roomy = LoopConfig {
            observation_cap: 4000,
            ..cfg(5, OnExhaustion::ForceAnswer)
        };
        let out = react_loop(&chat, &template(), &Echo, "q", &roomy).unwrap();
        assert_eq!(out.history.steps.len(), 1);
        assert!(out.history.steps[0].observation.starts_with("Error: unknown"));
        assert_eq!(out.final_text, "the answer is 3");
        assert!(out.forced);
    }

    #[test]
    fn cap_counts_characters() {
        assert_eq!(cap_observation("héllo".into(), 5), "héllo");
        assert_eq!(cap_observation("héllo!".into(), 2), format!("hé{TRUNCATION_MARKER}"));
    }
}
