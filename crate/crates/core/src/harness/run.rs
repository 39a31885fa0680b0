//! One run end to end, and its on-disk layout.
//!
//! ```text
//! <out>/<run_id>/
//!   manifest.json      status and file roles
//!   config.json        the resolved RunConfig
//!   transcript.jsonl   every completed exchange
//!   results.csv        one row per test item
//!   probes.csv         morphosyntax correction probes
//!   questionnaire.csv  syntax questionnaire
//!   metrics.json       RunSummary
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, Seeds};
use super::manifest::{write_atomic, RunManifest, RunStatus};
use super::protocol::{execute, Clock, Records, RunMetrics};
use crate::learners::Learner;
use crate::{ConditionId, Error, Result, Transcript};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub condition: ConditionId,
    pub learner: String,
    pub cell: usize,
    pub rep: usize,
    pub seeds: Seeds,
    pub config_hash: String,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub run_id: String,
    pub status: RunStatus,
    pub summary: Option<RunSummary>,
    pub failure: Option<String>,
}

fn csv_bytes<T: Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(!rows.is_empty())
        .from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| Error::io("<csv>", e.into_error()))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn write_file(
    dir: &Path,
    manifest: &mut RunManifest,
    role: &str,
    name: &str,
    bytes: &[u8],
) -> Result<()> {
    write_atomic(&dir.join(name), bytes)?;
    manifest.files.insert(role.to_owned(), name.to_owned());
    Ok(())
}

fn write_transcript(dir: &Path, manifest: &mut RunManifest, t: &Transcript) -> Result<()> {
    write_file(
        dir,
        manifest,
        "transcript",
        "transcript.jsonl",
        t.to_jsonl().as_bytes(),
    )
}

/// Runs `cfg` against `learner`, writing everything under `cfg.run_dir()`.
///
/// A learner failure is reported, not returned: the manifest is marked
/// failed and the partial transcript kept. Errors are reserved for
/// configuration and I/O problems.
pub fn orchestrate_run(
    cfg: &RunConfig,
    learner: &mut dyn Learner,
    clock: &dyn Clock,
) -> Result<RunReport> {
    let dir = cfg.run_dir();
    let run_id = cfg.run_id();
    let hash = cfg.config_hash();
    let mut manifest = RunManifest::pending(&run_id, &hash);
    write_file(
        &dir,
        &mut manifest,
        "config",
        "config.json",
        &json_bytes(cfg)?,
    )?;
    manifest.save(&dir)?;
    log::info!("{run_id}: starting with {}", learner.name());

    let outcome = match execute(cfg, learner, clock)? {
        Ok(outcome) => outcome,
        Err(failure) => {
            let reason = failure.error.to_string();
            log::error!("{run_id}: failed: {reason}");
            write_transcript(&dir, &mut manifest, &failure.transcript)?;
            manifest.status = RunStatus::Failed;
            manifest.failure_reason = Some(reason.clone());
            manifest.save(&dir)?;
            return Ok(RunReport {
                run_id,
                status: RunStatus::Failed,
                summary: None,
                failure: Some(reason),
            });
        }
    };

    for v in outcome.transcript.validate() {
        log::warn!("{run_id}: transcript {v}");
    }
    write_transcript(&dir, &mut manifest, &outcome.transcript)?;
    match &outcome.records {
        Records::Morphology(rows) => {
            let header = [
                "run_id",
                "condition",
                "order_seed",
                "trial_index",
                "noun",
                "number",
                "raw",
                "parsed",
                "is_ka",
            ];
            write_file(
                &dir,
                &mut manifest,
                "results",
                "results.csv",
                &csv_bytes(rows, &header)?,
            )?;
        }
        Records::Morphosyntax { items, probes } => {
            let header = [
                "run_id",
                "condition",
                "subcondition",
                "trial",
                "item_index",
                "sentence",
                "label",
                "error_type",
                "raw",
                "parsed",
                "correct",
            ];
            write_file(
                &dir,
                &mut manifest,
                "results",
                "results.csv",
                &csv_bytes(items, &header)?,
            )?;
            let header = [
                "run_id",
                "probe_index",
                "error_type",
                "sentence",
                "raw",
                "explains",
                "fixes",
            ];
            write_file(
                &dir,
                &mut manifest,
                "probes",
                "probes.csv",
                &csv_bytes(probes, &header)?,
            )?;
        }
        Records::Syntax {
            items,
            questionnaire,
        } => {
            let header = [
                "run_id",
                "grammar",
                "block",
                "item_index",
                "sentence",
                "label",
                "raw",
                "parsed",
                "correct",
            ];
            write_file(
                &dir,
                &mut manifest,
                "results",
                "results.csv",
                &csv_bytes(items, &header)?,
            )?;
            let header = ["run_id", "question", "truth", "raw", "score"];
            write_file(
                &dir,
                &mut manifest,
                "questionnaire",
                "questionnaire.csv",
                &csv_bytes(questionnaire, &header)?,
            )?;
        }
    }
    let summary = RunSummary {
        run_id: run_id.clone(),
        condition: cfg.condition.clone(),
        learner: cfg.learner.clone(),
        cell: cfg.cell,
        rep: cfg.rep,
        seeds: cfg.seeds,
        config_hash: hash,
        metrics: outcome.metrics,
    };
    write_file(
        &dir,
        &mut manifest,
        "metrics",
        "metrics.json",
        &json_bytes(&summary)?,
    )?;
    manifest.status = RunStatus::Completed;
    manifest.save(&dir)?;
    log::info!("{run_id}: completed");
    Ok(RunReport {
        run_id,
        status: RunStatus::Completed,
        summary: Some(summary),
        failure: None,
    })
}

/// The summary of a completed run whose config hash matches, if any.
pub fn load_completed(dir: &Path, config_hash: &str) -> Option<RunSummary> {
    let manifest = RunManifest::load(dir).ok()?;
    if manifest.config_hash != config_hash || !manifest.is_complete(dir) {
        return None;
    }
    let text = std::fs::read_to_string(manifest.path_of(dir, "metrics")?).ok()?;
    serde_json::from_str(&text).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::seeds_for;
    use crate::harness::protocol::FixedClock;
    use crate::harness::rescore::rescore_run;
    use crate::learners::ScriptedLearner;

    fn config(out: &Path) -> RunConfig {
        let c: ConditionId = "morphology/3R6E".parse().unwrap();
        RunConfig {
            seeds: seeds_for(0, &c, 1, 2),
            condition: c,
            learner: "scripted".into(),
            learner_config: Default::default(),
            cell: 1,
            rep: 2,
            morphosyntax: Default::default(),
            syntax: Default::default(),
            annotations: Default::default(),
            out_dir: out.to_owned(),
        }
    }

    #[test]
    fn completed_run_layout_and_rescore() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path());
        let mut learner = ScriptedLearner::new(
            vec!["I'm ready.".into(), "sepka".into(), "sep po".into()],
            None,
        );
        let report = orchestrate_run(&cfg, &mut learner, &FixedClock::default()).unwrap();
        assert_eq!(report.status, RunStatus::Completed);
        let run_dir = cfg.run_dir();
        let results = std::fs::read_to_string(run_dir.join("results.csv")).unwrap();
        assert!(results
            .starts_with("run_id,condition,order_seed,trial_index,noun,number,raw,parsed,is_ka\n"));
        assert_eq!(results.lines().count(), 13);
        let summary = load_completed(&run_dir, &cfg.config_hash()).unwrap();
        assert_eq!(Some(summary), report.summary);
        assert!(load_completed(&run_dir, "other").is_none());

        let r = rescore_run(&run_dir).unwrap();
        assert_eq!(r.first_prompt_mismatch, None);
        assert_eq!(r.metrics_match, Some(true));
    }

    #[test]
    fn failed_run_keeps_partial_transcript() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path());
        let mut learner = ScriptedLearner::new(vec!["ok".into()], Some(3));
        let report = orchestrate_run(&cfg, &mut learner, &FixedClock::default()).unwrap();
        assert_eq!(report.status, RunStatus::Failed);
        let manifest = RunManifest::load(&cfg.run_dir()).unwrap();
        assert_eq!(manifest.status, RunStatus::Failed);
        assert!(manifest.failure_reason.unwrap().contains("exchange 4"));
        let transcript = std::fs::read_to_string(cfg.run_dir().join("transcript.jsonl")).unwrap();
        assert_eq!(transcript.lines().count(), 6);
        assert!(load_completed(&cfg.run_dir(), &cfg.config_hash()).is_none());
    }
}
