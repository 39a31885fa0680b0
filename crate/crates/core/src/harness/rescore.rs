//! Re-scoring a recorded run from its transcript, without a learner.

use std::io::BufReader;
use std::path::Path;

use super::config::RunConfig;
use super::protocol::{execute, FixedClock, RunMetrics};
use crate::learners::ReplayLearner;
use crate::{Error, Result, Role, Transcript};

#[derive(Debug, Clone, PartialEq)]
pub struct Rescore {
    pub run_id: String,
    /// Index among user turns of the first prompt that differs from the
    /// recorded one; `None` when the regenerated session matches.
    pub first_prompt_mismatch: Option<usize>,
    pub metrics: RunMetrics,
    /// Whether `metrics` equals the recorded `metrics.json`, if there is one.
    pub metrics_match: Option<bool>,
}

fn user_turns(t: &Transcript) -> Vec<&str> {
    t.turns
        .iter()
        .filter(|t| t.role == Role::User)
        .map(|t| t.content.as_str())
        .collect()
}

/// Regenerates the stimuli of the run in `run_dir`, replays its recorded
/// replies and scores them again.
pub fn rescore_run(run_dir: &Path) -> Result<Rescore> {
    let config_path = run_dir.join("config.json");
    let text = std::fs::read_to_string(&config_path).map_err(|e| Error::io(&config_path, e))?;
    let cfg: RunConfig = serde_json::from_str(&text)?;
    let transcript_path = run_dir.join("transcript.jsonl");
    let file = std::fs::File::open(&transcript_path).map_err(|e| Error::io(&transcript_path, e))?;
    let recorded = Transcript::read_jsonl(BufReader::new(file))?
        .ok_or_else(|| Error::Config(format!("{}: empty transcript", transcript_path.display())))?;

    let mut learner = ReplayLearner::from_transcript(&recorded);
    let outcome = execute(&cfg, &mut learner, &FixedClock::default())?
        .map_err(|f| Error::Learner(f.error))?;

    let (old, new) = (user_turns(&recorded), user_turns(&outcome.transcript));
    let first_prompt_mismatch = (0..old.len().max(new.len())).find(|&i| old.get(i) != new.get(i));

    let metrics_path = run_dir.join("metrics.json");
    let metrics_match = match std::fs::read_to_string(&metrics_path) {
        Ok(text) => {
            let recorded: super::run::RunSummary = serde_json::from_str(&text)?;
            Some(recorded.metrics == outcome.metrics)
        }
        Err(_) => None,
    };
    Ok(Rescore {
        run_id: cfg.run_id(),
        first_prompt_mismatch,
        metrics: outcome.metrics,
        metrics_match,
    })
}
