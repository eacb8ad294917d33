//! A chat model that replays a fixed transcript and refuses to improvise.

use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{BackendResult, ChatModel, ChatTurn};
use crate::error::BackendError;

/// What the prompt must look like for an entry's reply to be released.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "text")]
pub enum Expect {
    /// Anything goes.
    #[default]
    Any,
    /// Some turn contains the text.
    Contains(String),
    /// The final turn contains the text.
    LastContains(String),
    /// No turn contains the text.
    Absent(String),
}

impl Expect {
    fn check(&self, turns: &[ChatTurn]) -> Result<(), String> {
        match self {
            Expect::Any => Ok(()),
            Expect::Contains(s) => turns
                .iter()
                .any(|t| t.content.contains(s.as_str()))
                .then_some(())
                .ok_or_else(|| format!("expected the prompt to contain {s:?}")),
            Expect::LastContains(s) => turns
                .last()
                .filter(|t| t.content.contains(s.as_str()))
                .map(|_| ())
                .ok_or_else(|| format!("expected the last turn to contain {s:?}")),
            Expect::Absent(s) => (!turns.iter().any(|t| t.content.contains(s.as_str())))
                .then_some(())
                .ok_or_else(|| format!("expected the prompt not to contain {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(default)]
    pub expect: Vec<Expect>,
    pub reply: String,
}

impl ScriptEntry {
    pub fn reply(reply: impl Into<String>) -> Self {
        Self {
            expect: Vec::new(),
            reply: reply.into(),
        }
    }

    pub fn expecting(mut self, expect: Expect) -> Self {
        self.expect.push(expect);
        self
    }
}

/// Single-consumer by nature: calls are serialized through a cursor.
pub struct ScriptedChat {
    entries: Vec<ScriptEntry>,
    cursor: Mutex<usize>,
}

impl ScriptedChat {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        Self {
            entries,
            cursor: Mutex::new(0),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::new(serde_json::from_str(text)?))
    }

    pub fn consumed(&self) -> usize {
        *self.cursor.lock().expect("script cursor poisoned")
    }

    pub fn is_exhausted(&self) -> bool {
        self.consumed() == self.entries.len()
    }

    pub fn entries(&self) -> &[ScriptEntry] {
        &self.entries
    }
}

impl fmt::Debug for ScriptedChat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScriptedChat")
            .field("entries", &self.entries.len())
            .field("consumed", &self.consumed())
            .finish()
    }
}

fn flatten(turns: &[ChatTurn]) -> String {
    turns
        .iter()
        .map(|t| format!("[{:?}]\n{}", t.role, t.content))
        .collect::<Vec<_>>()
        .join("\n")
}

impl ChatModel for ScriptedChat {
    fn complete(&self, turns: &[ChatTurn]) -> BackendResult<String> {
        let mut cursor = self.cursor.lock().expect("script cursor poisoned");
        let call = *cursor;
        let Some(entry) = self.entries.get(call) else {
            return Err(BackendError::ScriptDivergence {
                call,
                reason: format!("script exhausted after {} replies", self.entries.len()),
                prompt: flatten(turns),
            });
        };
        for expect in &entry.expect {
            if let Err(reason) = expect.check(turns) {
                return Err(BackendError::ScriptDivergence {
                    call,
                    reason,
                    prompt: flatten(turns),
                });
            }
        }
        *cursor += 1;
        Ok(entry.reply.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replays_in_order_then_errors() {
        let chat = ScriptedChat::new(vec![
            ScriptEntry::reply("one"),
            ScriptEntry::reply("two").expecting(Expect::LastContains("Observation: ok".into())),
        ]);
        assert_eq!(chat.complete(&[ChatTurn::user("hi")]).unwrap(), "one");
        let err = chat.complete(&[ChatTurn::user("nope")]).unwrap_err();
        assert!(matches!(err, BackendError::ScriptDivergence { call: 1, .. }));
        assert_eq!(
            chat.complete(&[ChatTurn::user("x\nObservation: ok")]).unwrap(),
            "two"
        );
        assert!(chat.is_exhausted());
        let err = chat.complete(&[ChatTurn::user("more")]).unwrap_err();
        match err {
            BackendError::ScriptDivergence { call, prompt, .. } => {
                assert_eq!(call, 2);
                assert!(prompt.contains("more"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn loads_from_json() {
        let chat = ScriptedChat::from_json(
            r#"[{"expect":[{"kind":"contains","text":"elephant"}],"reply":"Final Answer: 4"},
                {"reply":"done"}]"#,
        )
        .unwrap();
        assert_eq!(chat.entries().len(), 2);
        assert!(chat.complete(&[ChatTurn::user("cat")]).is_err());
        assert_eq!(
            chat.complete(&[ChatTurn::user("elephant")]).unwrap(),
            "Final Answer: 4"
        );
        assert!(matches!(
            Expect::Absent("x".into()).check(&[ChatTurn::user("x")]),
            Err(_)
        ));
    }
}
