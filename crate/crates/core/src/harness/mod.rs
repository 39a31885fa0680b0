//! Running experiments: configs, sessions, output layout, suites and reports.

pub mod config;
pub mod manifest;
pub mod protocol;
pub mod report;
pub mod rescore;
pub mod run;
pub mod suite;

use std::sync::Arc;

pub use config::{plan_runs, seeds_for, FileConfig, PlannedRun, RunConfig, Seeds};
pub use manifest::{write_atomic, RunManifest, RunStatus};
pub use protocol::{build_stimuli, execute, Clock, FixedClock, RunMetrics, Stimuli, SystemClock};
pub use run::{orchestrate_run, RunReport, RunSummary};
pub use suite::{run_suite, SuiteOptions, SuiteReport};

use crate::learners::{
    ChatLearner, HttpChatBackend, InflightLimiter, Learner, LearnerConfig, LearnerSpec,
    ScriptedLearner, StructuredAdapter,
};
use crate::{Error, Result, Rng};

/// Instantiates the learner named by `spec` for one run.
pub fn build_learner(
    spec: &LearnerSpec,
    config: &LearnerConfig,
    seed: u64,
    limiter: &Arc<InflightLimiter>,
) -> Result<Box<dyn Learner>> {
    match spec {
        LearnerSpec::Baseline(kind) => {
            Ok(Box::new(StructuredAdapter::new(kind.build(Rng::new(seed)))))
        }
        LearnerSpec::Remote { model } => {
            let mut config = config.clone();
            if let Some(m) = model {
                config.model_name = m.clone();
            }
            let name = format!("remote:{}", config.model_name);
            let backend = HttpChatBackend::new(config, Arc::clone(limiter))?;
            Ok(Box::new(ChatLearner::new(Box::new(backend), name)))
        }
        LearnerSpec::Scripted(path) => Ok(Box::new(ScriptedLearner::load(path)?)),
    }
}

pub fn parse_learner_spec(s: &str) -> Result<LearnerSpec> {
    s.parse().map_err(Error::Config)
}
