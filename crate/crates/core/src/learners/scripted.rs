//! Canned-reply learners for fixtures and re-scoring.

use std::path::Path;

use serde::Deserialize;

use super::{Learner, LearnerError, Step};
use crate::{Error, Role, Transcript};

/// Cycles through a fixed list of replies. With `fail_after = Some(n)` the
/// exchange after the n-th successful one fails.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ScriptedLearner {
    responses: Vec<String>,
    #[serde(default)]
    fail_after: Option<usize>,
    #[serde(skip)]
    exchanges: usize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScriptFile {
    Plain(Vec<String>),
    Full(ScriptedLearner),
}

impl ScriptedLearner {
    pub fn new(responses: Vec<String>, fail_after: Option<usize>) -> Self {
        Self {
            responses,
            fail_after,
            exchanges: 0,
        }
    }

    /// Either a JSON array of replies or `{"responses": [...], "fail_after": n}`.
    pub fn from_json(text: &str) -> crate::Result<Self> {
        let learner = match serde_json::from_str::<ScriptFile>(text)? {
            ScriptFile::Plain(responses) => Self::new(responses, None),
            ScriptFile::Full(l) => l,
        };
        if learner.responses.is_empty() {
            return Err(Error::Config(
                "scripted learner needs at least one response".into(),
            ));
        }
        Ok(learner)
    }

    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

impl Learner for ScriptedLearner {
    fn respond(&mut self, _step: &Step) -> Result<String, LearnerError> {
        if self.fail_after == Some(self.exchanges) {
            return Err(LearnerError::Scripted(self.exchanges + 1));
        }
        let reply = self.responses[self.exchanges % self.responses.len()].clone();
        self.exchanges += 1;
        Ok(reply)
    }

    fn name(&self) -> String {
        "scripted".into()
    }
}

/// Replays the assistant turns of a recorded transcript in order.
pub struct ReplayLearner {
    replies: Vec<String>,
    next: usize,
}

impl ReplayLearner {
    pub fn from_transcript(t: &Transcript) -> Self {
        Self {
            replies: t
                .turns
                .iter()
                .filter(|turn| turn.role == Role::Assistant)
                .map(|turn| turn.content.clone())
                .collect(),
            next: 0,
        }
    }
}

impl Learner for ReplayLearner {
    fn respond(&mut self, _step: &Step) -> Result<String, LearnerError> {
        let reply = self
            .replies
            .get(self.next)
            .cloned()
            .ok_or(LearnerError::ReplayExhausted(self.next))?;
        self.next += 1;
        Ok(reply)
    }

    fn name(&self) -> String {
        "replay".into()
    }
}
