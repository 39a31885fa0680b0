//! Learner abstraction.
//!
//! The harness drives every learner through [`Learner::respond`] with a
//! [`Step`] carrying both the rendered prompt text and its structured
//! equivalent. Chat-model learners read the text; baselines implement
//! [`Baseline`] and are wrapped in a [`StructuredAdapter`] that renders their
//! answers back into the text the experiment parsers expect.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::morphosyntax::Judgment;
use crate::Phase;

pub mod baselines;
pub mod chat;
pub mod scripted;

pub use baselines::{
    BaselineKind, Bigram, ExemplarJudge, FrequencyMatching, MajorityType, RandomLearner,
};
pub use chat::{
    ChatBackend, ChatLearner, ChatMessage, HttpChatBackend, InflightLimiter, LearnerConfig,
    TextSession,
};
pub use scripted::{ReplayLearner, ScriptedLearner};

#[derive(Debug, thiserror::Error)]
pub enum LearnerError {
    #[error("learner configuration: {0}")]
    Config(String),
    #[error("request failed after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("request failed: {0}")]
    Http(String),
    #[error("malformed response: {detail}")]
    Protocol { detail: String, payload: String },
    #[error("scripted failure at exchange {0}")]
    Scripted(usize),
    #[error("no more recorded replies after {0}")]
    ReplayExhausted(usize),
}

/// Learning material delivered alongside a prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructuredEvent {
    /// A morphology paragraph: every noun mention, with the plural marker
    /// when the mention is plural.
    MorphExposure {
        paragraph: usize,
        tokens: Vec<(String, Option<String>)>,
    },
    /// A sentence presented as part of the language.
    SentenceExposure { words: Vec<String> },
    /// Labelled feedback on a previously judged sentence.
    Feedback {
        words: Vec<String>,
        grammatical: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructuredQuery {
    Acknowledge,
    PluralBlank {
        noun: String,
        number: String,
    },
    /// correct / incorrect
    Judgment {
        words: Vec<String>,
    },
    /// yes / no
    YesNo {
        words: Vec<String>,
    },
    Questionnaire {
        questions: Vec<String>,
    },
    FreeText,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Response {
    Ack,
    Marker(String),
    Judgment(Judgment),
    YesNo(bool),
    Text(String),
    Refuse,
}

pub const ACK_TEXT: &str = "I'm ready.";
pub const REFUSE_TEXT: &str = "I don't know.";

/// Text form of a structured response to `query`.
pub fn render_response(query: &StructuredQuery, response: &Response) -> String {
    match response {
        Response::Ack => ACK_TEXT.to_owned(),
        Response::Marker(marker) => match query {
            StructuredQuery::PluralBlank { noun, .. } => format!("{noun}{marker}"),
            _ => marker.clone(),
        },
        Response::Judgment(j) => j.as_str().to_owned(),
        Response::YesNo(true) => "yes".to_owned(),
        Response::YesNo(false) => "no".to_owned(),
        Response::Text(t) => t.clone(),
        Response::Refuse => REFUSE_TEXT.to_owned(),
    }
}

/// One user turn: the prompt text, the learning events it delivers, and the
/// query it poses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub phase: Phase,
    pub text: String,
    pub events: Vec<StructuredEvent>,
    pub query: StructuredQuery,
}

impl Step {
    pub fn new(phase: Phase, text: impl Into<String>, query: StructuredQuery) -> Self {
        Self {
            phase,
            text: text.into(),
            events: Vec::new(),
            query,
        }
    }

    pub fn with_events(mut self, events: Vec<StructuredEvent>) -> Self {
        self.events = events;
        self
    }
}

pub trait Learner: Send {
    fn respond(&mut self, step: &Step) -> Result<String, LearnerError>;

    fn name(&self) -> String;
}

/// Learner that consumes structured events and queries.
pub trait Baseline: Send {
    fn observe(&mut self, event: &StructuredEvent);

    fn answer(&mut self, query: &StructuredQuery) -> Response;

    fn name(&self) -> String;
}

pub struct StructuredAdapter<B> {
    inner: B,
}

impl<B: Baseline> StructuredAdapter<B> {
    pub fn new(inner: B) -> Self {
        Self { inner }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: Baseline> Learner for StructuredAdapter<B> {
    fn respond(&mut self, step: &Step) -> Result<String, LearnerError> {
        for e in &step.events {
            self.inner.observe(e);
        }
        let response = self.inner.answer(&step.query);
        Ok(render_response(&step.query, &response))
    }

    fn name(&self) -> String {
        self.inner.name()
    }
}

/// `baseline:<kind>`, `remote[:model]`, `scripted:<path>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LearnerSpec {
    Baseline(BaselineKind),
    Remote { model: Option<String> },
    Scripted(PathBuf),
}

impl FromStr for LearnerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        match (kind, arg) {
            ("baseline", Some(b)) => b.parse().map(LearnerSpec::Baseline),
            ("remote", model) => Ok(LearnerSpec::Remote {
                model: model.filter(|m| !m.is_empty()).map(str::to_owned),
            }),
            ("scripted", Some(path)) if !path.is_empty() => Ok(LearnerSpec::Scripted(PathBuf::from(path))),
            _ => Err(format!(
                "unknown learner `{s}` (expected baseline:<frequency|majority|exemplar|bigram|random>, remote[:model] or scripted:<path>)"
            )),
        }
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerSpec::Baseline(b) => write!(f, "baseline:{b}"),
            LearnerSpec::Remote { model: Some(m) } => write!(f, "remote:{m}"),
            LearnerSpec::Remote { model: None } => f.write_str("remote"),
            LearnerSpec::Scripted(p) => write!(f, "scripted:{}", p.display()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_strings() {
        assert_eq!(
            "baseline:bigram".parse::<LearnerSpec>().unwrap(),
            LearnerSpec::Baseline(BaselineKind::Bigram)
        );
        assert_eq!(
            "remote".parse::<LearnerSpec>().unwrap(),
            LearnerSpec::Remote { model: None }
        );
        assert_eq!(
            "remote:gpt-4o".parse::<LearnerSpec>().unwrap(),
            LearnerSpec::Remote {
                model: Some("gpt-4o".into())
            }
        );
        assert_eq!(
            "scripted:a/b.json"
                .parse::<LearnerSpec>()
                .unwrap()
                .to_string(),
            "scripted:a/b.json"
        );
        assert!("baseline:oracle".parse::<LearnerSpec>().is_err());
        assert!("human".parse::<LearnerSpec>().is_err());
    }

    #[test]
    fn response_rendering() {
        let q = StructuredQuery::PluralBlank {
            noun: "sep".into(),
            number: "two".into(),
        };
        assert_eq!(render_response(&q, &Response::Marker("ka".into())), "sepka");
        assert_eq!(render_response(&q, &Response::Refuse), "I don't know.");
        let j = StructuredQuery::Judgment { words: vec![] };
        assert_eq!(
            render_response(&j, &Response::Judgment(Judgment::Incorrect)),
            "incorrect"
        );
        let y = StructuredQuery::YesNo { words: vec![] };
        assert_eq!(render_response(&y, &Response::YesNo(false)), "no");
    }
}
