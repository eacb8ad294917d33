//! Reading Thought / Action / Action Input / Final Answer out of model text,
//! and turning raw action inputs into typed tool arguments.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedStep {
    Action {
        thought: String,
        action: String,
        input: String,
    },
    Final {
        thought: String,
        answer: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError(pub String);

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParseError {}

const THOUGHT: &str = "Thought:";
const ACTION: &str = "Action:";
const ACTION_INPUT: &str = "Action Input:";
const OBSERVATION: &str = "Observation:";
const FINAL: &str = "Final Answer:";

/// Parses one completion.
///
/// Anything from the first `Observation:` on is dropped, since a model that
/// invents its own observations must not have them believed. Parsing starts
/// after the last `Thought:`. A `Final Answer:` that precedes any `Action:`
/// wins.
pub fn parse_step(text: &str) -> Result<ParsedStep, ParseError> {
    let cleaned = strip_fences(&text.replace("**", ""));
    let mut body = cleaned.as_str();
    if let Some(cut) = body.find(OBSERVATION) {
        body = &body[..cut];
    }
    if let Some(last) = body.rfind(THOUGHT) {
        body = &body[last + THOUGHT.len()..];
    }

    let action_at = body.find(ACTION);
    let final_at = body.find(FINAL);

    if let Some(f) = final_at {
        if action_at.map_or(true, |a| f < a) {
            let answer = body[f + FINAL.len()..].trim();
            if answer.is_empty() {
                return Err(ParseError("'Final Answer:' is empty".into()));
            }
            return Ok(ParsedStep::Final {
                thought: body[..f].trim().to_string(),
                answer: answer.to_string(),
            });
        }
    }

    let Some(a) = action_at else {
        return Err(ParseError(
            "expected 'Action:' with 'Action Input:', or 'Final Answer:'".into(),
        ));
    };
    let thought = body[..a].trim().to_string();
    let after_action = &body[a + ACTION.len()..];
    let Some(ai) = after_action.find(ACTION_INPUT) else {
        return Err(ParseError("'Action:' without 'Action Input:'".into()));
    };
    let action = after_action[..ai].trim();
    let action = strip_quotes(action.lines().next().unwrap_or("").trim());
    if action.is_empty() {
        return Err(ParseError("'Action:' names no tool".into()));
    }
    let mut input = &after_action[ai + ACTION_INPUT.len()..];
    // a second Action or a Final Answer after the input is ignored
    for marker in ["\nAction:", "\nFinal Answer:", "\nThought:"] {
        if let Some(end) = input.find(marker) {
            input = &input[..end];
        }
    }
    Ok(ParsedStep::Action {
        thought,
        action: action.to_string(),
        input: strip_quotes(strip_fences(input).trim()).to_string(),
    })
}

/// Removes markdown code fences, keeping their contents.
fn strip_fences(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n")
        .trim()
        .to_string()
}

/// Strips one pair of matching outer quotes or backticks.
pub fn strip_quotes(s: &str) -> &str {
    let s = s.trim();
    for q in ['"', '\'', '`'] {
        if s.len() >= 2 && s.starts_with(q) && s.ends_with(q) {
            return s[1..s.len() - 1].trim();
        }
    }
    s
}

/// Strips one pair of enclosing parentheses or brackets.
fn strip_parens(s: &str) -> &str {
    let s = s.trim();
    for (open, close) in [('(', ')'), ('[', ']')] {
        if s.starts_with(open) && s.ends_with(close) && s.len() >= 2 {
            return s[1..s.len() - 1].trim();
        }
    }
    s
}

fn parse_int(s: &str, what: &str) -> Result<i64, String> {
    let t = strip_quotes(s);
    t.parse::<i64>()
        .map_err(|_| format!("{what} must be an integer, got {t:?}"))
}

/// `(a, b)` into two integers.
pub fn parse_int_pair(raw: &str) -> Result<(i64, i64), String> {
    let inner = strip_parens(strip_quotes(raw));
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!(
            "expected a tuple (start_segment, end_segment), got {} value(s) in {raw:?}",
            if inner.is_empty() { 0 } else { parts.len() }
        ));
    }
    Ok((
        parse_int(parts[0], "start_segment")?,
        parse_int(parts[1], "end_segment")?,
    ))
}

/// `("question", id)`; the question may itself contain commas.
pub fn parse_question_and_id(raw: &str) -> Result<(String, i64), String> {
    let inner = strip_parens(raw);
    let Some((q, id)) = inner.rsplit_once(',') else {
        return Err(format!("expected a tuple (question, segment_id), got {raw:?}"));
    };
    let q = strip_quotes(q);
    if q.is_empty() {
        return Err("the question is empty".into());
    }
    Ok((q.to_string(), parse_int(id, "segment_id")?))
}

/// A single free-text argument.
pub fn parse_text(raw: &str) -> Result<String, String> {
    let mut t = strip_quotes(raw);
    if t.starts_with('(') && t.ends_with(')') {
        t = strip_quotes(strip_parens(t));
    }
    if t.is_empty() {
        return Err("the input is empty".into());
    }
    Ok(t.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn action(thought: &str, a: &str, i: &str) -> ParsedStep {
        ParsedStep::Action {
            thought: thought.into(),
            action: a.into(),
            input: i.into(),
        }
    }

    #[test]
    fn plain_action() {
        let p = parse_step("Thought: x\nAction: segment_localization\nAction Input: \"man in red\"").unwrap();
        assert_eq!(p, action("x", "segment_localization", "man in red"));
    }

    #[test]
    fn continuation_without_thought_prefix() {
        let p = parse_step("I need the segment.\n\nAction: caption_retrieval\nAction Input: (37, 42)\n").unwrap();
        assert_eq!(p, action("I need the segment.", "caption_retrieval", "(37, 42)"));
    }

    #[test]
    fn final_answer() {
        let p = parse_step("Thought: I now know the final answer\nFinal Answer: 2").unwrap();
        assert_eq!(
            p,
            ParsedStep::Final {
                thought: "I now know the final answer".into(),
                answer: "2".into()
            }
        );
        assert!(matches!(parse_step("…Final Answer: 2"), Ok(ParsedStep::Final { answer, .. }) if answer == "2"));
    }

    #[test]
    fn format_violation() {
        assert!(parse_step("I think the answer is obvious.").is_err());
        assert!(parse_step("Action: caption_retrieval").is_err());
        assert!(parse_step("Final Answer:   ").is_err());
    }

    #[test]
    fn invented_observation_is_dropped() {
        let p = parse_step(
            "Thought: a\nAction: x\nAction Input: 1\nObservation: made up\nThought: b\nFinal Answer: 3",
        )
        .unwrap();
        assert_eq!(p, action("a", "x", "1"));
    }

    #[test]
    fn first_action_wins_and_final_after_action_is_ignored() {
        let p = parse_step("Action: a\nAction Input: 1\nAction: b\nAction Input: 2\nFinal Answer: 0").unwrap();
        assert_eq!(p, action("", "a", "1"));
    }

    #[test]
    fn fences_bold_and_multiline_input() {
        let p = parse_step(
            "```\nThought: query it\n**Action**: database_querying\n**Action Input**: SELECT *\nFROM objects\n```",
        )
        .unwrap();
        assert_eq!(p, action("query it", "database_querying", "SELECT *\nFROM objects"));
    }

    #[test]
    fn tool_inputs() {
        assert_eq!(parse_int_pair("(37, 42)"), Ok((37, 42)));
        assert_eq!(parse_int_pair("37,42"), Ok((37, 42)));
        assert!(parse_int_pair("(37)").unwrap_err().contains("1 value"));
        assert!(parse_int_pair("(a, 2)").is_err());
        assert_eq!(
            parse_question_and_id("(\"what does the man do next?\", 40)"),
            Ok(("what does the man do next?".to_string(), 40))
        );
        assert_eq!(
            parse_question_and_id("('where, exactly, is it', 3)"),
            Ok(("where, exactly, is it".to_string(), 3))
        );
        assert!(parse_question_and_id("(\"no id\")").is_err());
        assert_eq!(
            parse_text("'how many elephants are there in the video?'"),
            Ok("how many elephants are there in the video?".to_string())
        );
        assert_eq!(parse_text("(\"cup\")"), Ok("cup".to_string()));
        assert!(parse_text("''").is_err());
    }
}
