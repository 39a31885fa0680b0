use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use implang::harness::config::{seeds_for, FileConfig, RunConfig};
use implang::harness::protocol::{build_stimuli, stimuli_json, SystemClock};
use implang::harness::report::{
    analyze, collect_summaries, render_markdown, stats_csv, write_report,
};
use implang::harness::rescore::rescore_run;
use implang::harness::{
    build_learner, orchestrate_run, parse_learner_spec, run_suite, RunStatus, SuiteOptions,
};
use implang::learners::InflightLimiter;
use implang::{ConditionId, Error, Experiment};

const EXIT_RUN: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(
    name = "implang",
    version,
    about = "Artificial language learning experiments for in-context learners"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the stimuli of one run as JSON.
    Generate {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        common: Common,
        /// Seed cell (paragraph order or stimulus set).
        #[arg(long, default_value_t = 0)]
        cell: usize,
    },
    /// Run one session.
    Run {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        cell: usize,
        #[arg(long, default_value_t = 0)]
        rep: usize,
    },
    /// Run the schedule for every selected condition, then analyze.
    Suite {
        /// Experiment to run; all three when omitted.
        #[arg(long)]
        experiment: Option<String>,
        /// Restrict to one condition label.
        #[arg(long)]
        condition: Option<String>,
        #[command(flatten)]
        common: Common,
        /// Runs per condition, cycling through seed cells.
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Replay a recorded run through the current scorer.
    Rescore {
        /// Run directory holding config.json and transcript.jsonl.
        run_dir: PathBuf,
    },
    /// Aggregate completed runs and print the statistics table.
    Analyze {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Aggregate completed runs and write report.md, stats.csv and charts.
    Report {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Target {
    #[arg(long)]
    experiment: String,
    #[arg(long)]
    condition: String,
}

#[derive(Args)]
struct Common {
    /// baseline:<kind>, remote[:model] or scripted:<path>
    #[arg(long, default_value = "baseline:frequency")]
    learner: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Log request and response bodies.
    #[arg(long)]
    debug_wire: bool,
    /// Grammar file replacing the built-in syntax grammar.
    #[arg(long)]
    grammar_file: Option<PathBuf>,
}

enum Failure {
    Config(Error),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::UnknownCondition { .. }
            | Error::UnknownExperiment(_)
            | Error::Grammar(_)
            | Error::GrammarSyntax { .. }
            | Error::InfeasibleRange { .. }
            | Error::CorpusTooSmall(_)
            | Error::Io { .. } => Failure::Config(e),
            Error::Learner(implang::learners::LearnerError::Config(_)) => Failure::Config(e),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, Error> {
    path.map_or_else(|| Ok(FileConfig::default()), FileConfig::load)
}

fn condition(experiment: &str, label: &str) -> Result<ConditionId, Error> {
    ConditionId::new(experiment.parse()?, label)
}

fn apply_common(
    file: &mut FileConfig,
    seed: Option<u64>,
    common_grammar: Option<PathBuf>,
    debug_wire: bool,
) {
    if let Some(s) = seed {
        file.run.seed = s;
    }
    if common_grammar.is_some() {
        file.syntax.grammar_file = common_grammar;
    }
    file.learner.debug_wire |= debug_wire;
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            target,
            common,
            cell,
        } => {
            let mut file = load_file_config(common.config.as_deref())?;
            apply_common(&mut file, common.seed, common.grammar_file, false);
            let cond = condition(&target.experiment, &target.condition)?;
            let cfg = RunConfig {
                seeds: seeds_for(file.run.seed, &cond, cell, 0),
                condition: cond.clone(),
                learner: String::new(),
                learner_config: file.learner,
                cell,
                rep: 0,
                morphosyntax: file.morphosyntax,
                syntax: file.syntax,
                annotations: file.annotations,
                out_dir: PathBuf::new(),
            };
            let stimuli = build_stimuli(&cfg)?;
            let json = serde_json::to_string_pretty(&stimuli_json(&cond, &stimuli))
                .map_err(Error::from)?;
            // A closed pipe (e.g. `| head`) is not an error.
            let _ = writeln!(std::io::stdout(), "{json}");
            Ok(())
        }
        Command::Run {
            target,
            common,
            cell,
            rep,
        } => {
            let mut file = load_file_config(common.config.as_deref())?;
            apply_common(
                &mut file,
                common.seed,
                common.grammar_file,
                common.debug_wire,
            );
            let cond = condition(&target.experiment, &target.condition)?;
            let spec = parse_learner_spec(&common.learner)?;
            let out = common
                .out
                .or(file.run.out.clone())
                .unwrap_or_else(|| PathBuf::from("runs"));
            let seeds = seeds_for(file.run.seed, &cond, cell, rep);
            let cfg = RunConfig {
                condition: cond,
                learner: common.learner.clone(),
                learner_config: file.learner,
                seeds,
                cell,
                rep,
                morphosyntax: file.morphosyntax,
                syntax: file.syntax,
                annotations: file.annotations,
                out_dir: out,
            };
            let limiter = InflightLimiter::new(cfg.learner_config.max_inflight);
            let mut learner =
                build_learner(&spec, &cfg.learner_config, cfg.seeds.learner, &limiter)?;
            let report = orchestrate_run(&cfg, learner.as_mut(), &SystemClock)?;
            println!(
                "{}\t{:?}\t{}",
                report.run_id,
                report.status,
                cfg.run_dir().display()
            );
            match report.status {
                RunStatus::Failed => Err(Failure::Run(report.failure.unwrap_or_default())),
                _ => Ok(()),
            }
        }
        Command::Suite {
            experiment,
            condition: label,
            common,
            runs,
            parallel,
        } => {
            let mut file = load_file_config(common.config.as_deref())?;
            apply_common(
                &mut file,
                common.seed,
                common.grammar_file,
                common.debug_wire,
            );
            if runs.is_some() {
                file.run.runs = runs;
            }
            if let Some(p) = parallel {
                file.run.parallel = p;
            }
            let experiments: Vec<Experiment> = match &experiment {
                Some(e) => vec![e.parse()?],
                None => vec![
                    Experiment::Morphology,
                    Experiment::Morphosyntax,
                    Experiment::Syntax,
                ],
            };
            let conditions: Vec<ConditionId> = match &label {
                Some(l) => experiments
                    .iter()
                    .map(|e| ConditionId::new(*e, l))
                    .collect::<Result<_, _>>()?,
                None => experiments.iter().flat_map(|e| e.conditions()).collect(),
            };
            let out = common
                .out
                .or(file.run.out.clone())
                .unwrap_or_else(|| PathBuf::from("runs"));
            let tolerance = file.run.failure_tolerance;
            let opts = SuiteOptions {
                conditions,
                learner: common.learner,
                file,
                out,
            };
            let report = run_suite(&opts, Arc::new(SystemClock))?;
            println!(
                "{} runs, {} resumed, {} failed; report in {}",
                report.runs.len(),
                report.resumed,
                report.failed(),
                opts.out.display()
            );
            if report.failed() > tolerance {
                return Err(Failure::Run(format!(
                    "{} failed runs exceed the tolerance of {tolerance}",
                    report.failed()
                )));
            }
            Ok(())
        }
        Command::Rescore { run_dir } => {
            let r = rescore_run(&run_dir)?;
            println!(
                "{}\tprompts {}\tmetrics {}",
                r.run_id,
                r.first_prompt_mismatch.map_or_else(
                    || "match".to_owned(),
                    |i| format!("differ at user turn {i}")
                ),
                match r.metrics_match {
                    Some(true) => "match",
                    Some(false) => "differ",
                    None => "not recorded",
                }
            );
            println!(
                "{}",
                serde_json::to_string_pretty(&r.metrics).map_err(Error::from)?
            );
            if r.first_prompt_mismatch.is_some() || r.metrics_match == Some(false) {
                return Err(Failure::Run(
                    "re-scored run differs from the recording".into(),
                ));
            }
            Ok(())
        }
        Command::Analyze { out, seed } => {
            let analysis = analyze(&collect_summaries(&out)?, seed)?;
            print!("{}", stats_csv(&analysis)?);
            Ok(())
        }
        Command::Report { out, seed } => {
            let analysis = analyze(&collect_summaries(&out)?, seed)?;
            write_report(&out, &analysis)?;
            print!("{}", render_markdown(&analysis));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUN)
        }
    }
}
