//! Many runs in parallel, with resume.

use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;

use super::config::{plan_runs, FileConfig, RunConfig};
use super::manifest::RunStatus;
use super::protocol::Clock;
use super::report::{analyze, write_report, SuiteAnalysis};
use super::run::{load_completed, orchestrate_run, RunReport, RunSummary};
use super::{build_learner, parse_learner_spec};
use crate::learners::InflightLimiter;
use crate::{ConditionId, Error, Result};

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub conditions: Vec<ConditionId>,
    pub learner: String,
    pub file: FileConfig,
    pub out: PathBuf,
}

impl SuiteOptions {
    /// Every run of the suite, conditions in order, cells cycling first.
    pub fn run_configs(&self) -> Vec<RunConfig> {
        self.conditions
            .iter()
            .flat_map(|c| {
                plan_runs(self.file.run.seed, c, self.file.run.runs)
                    .into_iter()
                    .map(move |p| RunConfig {
                        condition: c.clone(),
                        learner: self.learner.clone(),
                        learner_config: self.file.learner.clone(),
                        seeds: p.seeds,
                        cell: p.cell,
                        rep: p.rep,
                        morphosyntax: self.file.morphosyntax.clone(),
                        syntax: self.file.syntax.clone(),
                        annotations: self.file.annotations.clone(),
                        out_dir: self.out.clone(),
                    })
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub runs: Vec<RunReport>,
    /// Completed runs found on disk with a matching config hash.
    pub resumed: usize,
    pub analysis: SuiteAnalysis,
}

impl SuiteReport {
    pub fn failed(&self) -> usize {
        self.runs
            .iter()
            .filter(|r| r.status == RunStatus::Failed)
            .count()
    }

    pub fn summaries(&self) -> Vec<RunSummary> {
        self.runs.iter().filter_map(|r| r.summary.clone()).collect()
    }
}

/// Runs every planned run not already complete, then analyzes and writes
/// the suite report into `opts.out`. Learner failures are counted, not
/// raised; the caller compares [`SuiteReport::failed`] with its tolerance.
pub fn run_suite(opts: &SuiteOptions, clock: Arc<dyn Clock>) -> Result<SuiteReport> {
    let spec = parse_learner_spec(&opts.learner)?;
    let configs = opts.run_configs();
    let limiter = InflightLimiter::new(opts.file.learner.max_inflight);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.file.run.parallel.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    let results: Vec<Result<(RunReport, bool)>> = pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| {
                if let Some(summary) = load_completed(&cfg.run_dir(), &cfg.config_hash()) {
                    log::info!("{}: already complete, skipping", cfg.run_id());
                    let report = RunReport {
                        run_id: cfg.run_id(),
                        status: RunStatus::Completed,
                        summary: Some(summary),
                        failure: None,
                    };
                    return Ok((report, true));
                }
                let mut learner =
                    build_learner(&spec, &cfg.learner_config, cfg.seeds.learner, &limiter)?;
                Ok((
                    orchestrate_run(cfg, learner.as_mut(), clock.as_ref())?,
                    false,
                ))
            })
            .collect()
    });
    let mut runs = Vec::with_capacity(results.len());
    let mut resumed = 0;
    for r in results {
        let (report, skipped) = r?;
        resumed += usize::from(skipped);
        runs.push(report);
    }
    let summaries: Vec<RunSummary> = runs.iter().filter_map(|r| r.summary.clone()).collect();
    let analysis = analyze(&summaries, opts.file.run.seed)?;
    write_report(&opts.out, &analysis)?;
    Ok(SuiteReport {
        runs,
        resumed,
        analysis,
    })
}
