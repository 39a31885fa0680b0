//! Artificial language learning experiments for in-context learners.
//!
//! Three classic paradigms are synthesized from fixed stimulus tables and run
//! as multi-turn sessions against a pluggable [`learners::Learner`]:
//!
//! * [`morphology`]: plural-marker regularization with a Zipfian nonce lexicon.
//! * [`morphosyntax`]: marker/content two-phrase grammar with graded
//!   ungrammatical items and grammaticality judgments.
//! * [`fsg`]: finite-state grammars learned through yes/no judgments with
//!   feedback, followed by a seven-item questionnaire.
//!
//! [`harness`] orchestrates runs and suites, [`analysis`] holds the
//! statistics and embedded human reference data.

pub mod analysis;
pub mod condition;
mod error;
pub mod fsg;
pub mod harness;
pub mod learners;
pub mod morphology;
pub mod morphosyntax;
pub mod rng;
pub mod transcript;
pub mod trial;

pub use condition::{ConditionId, Experiment};
pub use error::{Error, Result};
pub use rng::Rng;
pub use transcript::{Phase, Role, Transcript, Turn};
pub use trial::TrialRecord;
