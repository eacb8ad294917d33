//! Scripted agent runs over small hand-built worlds.
//!
//! Two cases ship with the crate. `case1` asks what a man does after looking
//! at a drone and walks localization, caption retrieval and VQA. `case4`
//! counts elephants through the object-memory agent. Both end on label 4.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentAnswer, AgentSettings, TaskKind};
use crate::backends::scripted::Expect;
use crate::backends::{BackendSuite, ScriptEntry, ScriptedChat, SyntheticBackend, SyntheticConfig};
use crate::error::{Error, Result};
use crate::eval::world::{number_word, Actor, McqExample, SyntheticWorld, WorldEvent, WorldObject, WorldParams};
use crate::eval::{gen_world, world_media};
use crate::object::ReidParams;
use crate::store::MemoryBundle;

/// Replies for the main agent and, when it delegates, the object-memory agent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayScript {
    pub main: Vec<ScriptEntry>,
    #[serde(default)]
    pub memory: Vec<ScriptEntry>,
}

impl ReplayScript {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("script: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("script serializes")
    }

    /// Fresh scripted chats on top of `suite`; cursors start at zero.
    pub fn install(&self, suite: BackendSuite) -> BackendSuite {
        suite
            .with_chat(Arc::new(ScriptedChat::new(self.main.clone())))
            .with_memory_chat(Arc::new(ScriptedChat::new(self.memory.clone())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayCase {
    pub name: &'static str,
    pub world: SyntheticWorld,
    pub question: McqExample,
    pub script: ReplayScript,
}

impl ReplayCase {
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "case1" => Some(case1()),
            "case4" => Some(case4()),
            _ => None,
        }
    }

    /// Synthetic suite for the world, with the script installed.
    pub fn suite(&self) -> BackendSuite {
        let backend = SyntheticBackend::new(Arc::new(self.world.clone()), SyntheticConfig::default());
        self.script.install(backend.into_suite())
    }

    pub fn build_bundle(&self, suite: &BackendSuite) -> Result<MemoryBundle> {
        let video = SyntheticBackend::new(Arc::new(self.world.clone()), SyntheticConfig::default())
            .video_source();
        let (bundle, _) = MemoryBundle::build(&world_media(&self.world), &video, suite, &ReidParams::default())?;
        Ok(bundle)
    }

    /// Builds the memory and runs the agent once.
    pub fn run(&self) -> Result<AgentAnswer> {
        let suite = self.suite();
        let bundle = self.build_bundle(&suite)?;
        let settings = AgentSettings {
            task: TaskKind::Mcq,
            ..AgentSettings::default()
        };
        Agent::new(&bundle, &suite, settings)
            .with_video_uri(self.world.video_uri())
            .run(&self.question.render())
    }
}

fn quiet_world(seed: u64, n_segments: usize) -> SyntheticWorld {
    let params = WorldParams {
        n_segments,
        n_objects: 0,
        n_nlq: 0,
        n_mcq: 0,
        ..WorldParams::default()
    };
    gen_world(seed, &params).expect("positive segment count")
}

fn cw(text: &str) -> WorldEvent {
    WorldEvent::new(Actor::CameraWearer, text)
}

/// 44 segments; a man near a drone around segments 39 to 40.
pub fn case1() -> ReplayCase {
    let mut world = quiet_world(1, 44);
    for (i, event) in [
        (15, cw("C looks around the area")),
        (22, cw("C stares at the drone on the ground")),
        (37, cw("C looks around the parking lot")),
        (38, cw("C looks around the field")),
        (39, WorldEvent::new(Actor::Other, "man X adjusts a drone on the ground")),
        (40, cw("C stares at the drone")),
        (41, cw("C looks around the area")),
        (42, cw("C walks across the field")),
    ] {
        world.events[i] = event;
    }
    world.objects = vec![WorldObject {
        identity: "drone 1".into(),
        category: "drone".into(),
        segments: vec![22, 39, 40],
    }];

    let question = McqExample {
        question: "what does the man in red do after looking at a distance from the plane at the start".into(),
        options: ["shakes his head", "happy", "point forward", "count down", "moves away"]
            .map(String::from)
            .to_vec(),
        answer: 4,
    };

    let main = vec![
        ScriptEntry::reply(
            "Thought: First find where the man in red looks away from the plane, then ask what he does after that.\nAction: segment_localization\nAction Input: \"man in red looking at a distance from the plane\"",
        )
        .expecting(Expect::LastContains("Question: \"what does the man in red do".into())),
        ScriptEntry::reply(
            "Thought: Segments 39 and 40 mention a drone, which is probably the plane. The captions around them should give more context.\nAction: caption_retrieval\nAction Input: (37, 42)",
        )
        .expecting(Expect::LastContains(
            "Observation: There are 44 segments in total, ranging from 0 to 43.".into(),
        )),
        ScriptEntry::reply(
            "Thought: A man adjusts a drone and C stares at it. Ask the video model what the man does next.\nAction: visual_question_answering\nAction Input: (\"what does the man do next?\", 40)",
        )
        .expecting(Expect::LastContains(
            "39: '#O man X adjusts a drone on the ground'".into(),
        )),
        ScriptEntry::reply(
            "Thought: None of the options match the answer exactly; leaving the spot fits best.\nThought: I now know the final answer\nFinal Answer: 4",
        )
        .expecting(Expect::LastContains(
            "Observation: Description: The clip covers segments 39 to 41.".into(),
        )),
    ];

    ReplayCase {
        name: "case1",
        world,
        question,
        script: ReplayScript {
            main,
            memory: Vec::new(),
        },
    }
}

/// Two elephants whose appearances overlap in time.
pub fn case4() -> ReplayCase {
    let mut world = quiet_world(4, 8);
    world.events[1] = cw("C watches the elephants");
    world.events[4] = cw("C points at an elephant");
    world.objects = vec![
        WorldObject {
            identity: "elephant 1".into(),
            category: "elephant".into(),
            segments: vec![0, 1, 2, 3],
        },
        WorldObject {
            identity: "elephant 2".into(),
            category: "elephant".into(),
            segments: vec![2, 3, 4, 5],
        },
    ];

    let question = McqExample {
        question: "how many elephants are there".into(),
        options: ["one", "four", "three", "six", "two"].map(String::from).to_vec(),
        answer: 4,
    };

    let main = vec![
        ScriptEntry::reply(
            "Thought: I should use the 'object_memory_querying' tool to count the elephants in the video.\nAction: object_memory_querying\nAction Input: 'how many elephants are there in the video?'",
        )
        .expecting(Expect::LastContains("Question: \"how many elephants are there\"".into())),
        ScriptEntry::reply("Thought: I now know the final answer.\nFinal Answer: 4").expecting(
            Expect::LastContains("Observation: There are 2 elephants in the video.".into()),
        ),
    ];
    let memory = vec![
        ScriptEntry::reply(
            "Thought: Look up stored objects that resemble an elephant.\nAction: open_vocabulary_retrieval\nAction Input: elephant",
        )
        .expecting(Expect::LastContains(
            "Question: how many elephants are there in the video?".into(),
        )),
        ScriptEntry::reply(
            "Thought: Count the distinct elephants in the table.\nAction: database_querying\nAction Input: SELECT COUNT(DISTINCT object_id) FROM objects WHERE category = 'elephant'",
        )
        .expecting(Expect::LastContains("object_id 0 (elephant)".into())),
        ScriptEntry::reply(
            "Thought: I now know the final answer\nFinal Answer: There are 2 elephants in the video.",
        )
        .expecting(Expect::LastContains("COUNT(DISTINCT object_id)\n2".into())),
    ];

    ReplayCase {
        name: "case4",
        world,
        question,
        script: ReplayScript { main, memory },
    }
}

/// Script that answers a generated "how many X are there" question through the
/// object memory. Replies are fixed in advance from the world's ground truth;
/// if the memory disagrees, an expectation fails and the run errors out.
pub fn count_script(world: &SyntheticWorld, mcq: &McqExample) -> Option<ReplayScript> {
    let plural = mcq
        .question
        .strip_prefix("how many ")?
        .strip_suffix(" are there")?
        .to_string();
    let category = crate::eval::world::CATEGORIES
        .iter()
        .find(|(_, p)| *p == plural)
        .map(|(s, _)| s.to_string())
        .or_else(|| plural.strip_suffix('s').map(str::to_string))?;
    let count = world.category_counts().get(&category).copied().unwrap_or(0);
    let label = mcq.options.iter().position(|o| *o == number_word(count))?;
    let sentence = format!("There are {count} {plural} in the video.");
    let sub_question = format!("how many {plural} are there in the video?");

    let main = vec![
        ScriptEntry::reply(format!(
            "Thought: The object memory can count these.\nAction: object_memory_querying\nAction Input: {sub_question}"
        )),
        ScriptEntry::reply(format!("Thought: I now know the final answer\nFinal Answer: {label}"))
            .expecting(Expect::LastContains(format!("Observation: {sentence}"))),
    ];
    let memory = vec![
        ScriptEntry::reply(format!(
            "Thought: Count distinct objects of that category.\nAction: database_querying\nAction Input: SELECT COUNT(DISTINCT object_id) FROM objects WHERE category = '{category}'"
        )),
        ScriptEntry::reply(format!("Thought: I now know the final answer\nFinal Answer: {sentence}"))
            .expecting(Expect::LastContains(format!("COUNT(DISTINCT object_id)\n{count}"))),
    ];
    Some(ReplayScript { main, memory })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worlds_are_valid() {
        case1().world.validate().unwrap();
        case4().world.validate().unwrap();
    }

    #[test]
    fn count_script_answers_case4() {
        let c = case4();
        let script = count_script(&c.world, &c.question).unwrap();
        assert!(script.main[1].reply.ends_with("Final Answer: 4"));
        let case = ReplayCase { script, ..c };
        assert_eq!(case.run().unwrap().choice_label, Some(4));
    }

    #[test]
    fn script_json_round_trips() {
        let s = case4().script;
        assert_eq!(ReplayScript::from_json(&s.to_json()).unwrap(), s);
    }
}
