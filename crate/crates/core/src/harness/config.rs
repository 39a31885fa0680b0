//! Run configuration, config files and seed schedules.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fsg::BlockPlan;
use crate::learners::LearnerConfig;
use crate::morphosyntax::Type2Style;
use crate::{ConditionId, Error, Experiment, Result, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub stimulus: u64,
    pub order: u64,
    pub learner: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MorphosyntaxSettings {
    pub reuse_training: bool,
    pub type2: Type2Style,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntaxSettings {
    /// Replaces the built-in grammar of the condition.
    pub grammar_file: Option<PathBuf>,
    pub n_blocks: usize,
    pub pairs_per_block: usize,
    pub min_length: usize,
    pub max_length: usize,
    pub questionnaire_corpus: usize,
}

impl Default for SyntaxSettings {
    fn default() -> Self {
        let plan = BlockPlan::default();
        Self {
            grammar_file: None,
            n_blocks: plan.n_blocks,
            pairs_per_block: plan.pairs_per_block,
            min_length: plan.length_range.0,
            max_length: plan.length_range.1,
            questionnaire_corpus: 10_000,
        }
    }
}

impl SyntaxSettings {
    pub fn plan(&self) -> BlockPlan {
        BlockPlan {
            n_blocks: self.n_blocks,
            pairs_per_block: self.pairs_per_block,
            length_range: (self.min_length, self.max_length),
        }
    }
}

/// Manual annotation files.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationSettings {
    /// run_id, recognized_pattern, identified_ka
    pub morphology: Option<PathBuf>,
    /// run_id, probe_index, explains
    pub morphosyntax: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    /// Runs per condition; the default schedule when unset.
    pub runs: Option<usize>,
    pub parallel: usize,
    pub failure_tolerance: usize,
    pub out: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 0,
            runs: None,
            parallel: 4,
            failure_tolerance: 0,
            out: None,
        }
    }
}

/// Contents of a `--config` TOML file. Every field has a default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub run: RunSection,
    pub learner: LearnerConfig,
    pub morphosyntax: MorphosyntaxSettings,
    pub syntax: SyntaxSettings,
    pub annotations: AnnotationSettings,
}

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: FileConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.learner
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

/// Everything that determines one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub condition: ConditionId,
    /// Learner spec string, e.g. `baseline:bigram`.
    pub learner: String,
    pub learner_config: LearnerConfig,
    pub seeds: Seeds,
    /// Schedule coordinates: the seed cell (paragraph order or stimulus
    /// seed) and the repetition within it.
    pub cell: usize,
    pub rep: usize,
    pub morphosyntax: MorphosyntaxSettings,
    pub syntax: SyntaxSettings,
    pub annotations: AnnotationSettings,
    /// Where the run directory goes. Not serialized, so a run's files do
    /// not depend on where they were written.
    #[serde(skip)]
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn experiment(&self) -> Experiment {
        self.condition.experiment()
    }

    pub fn run_id(&self) -> String {
        format!(
            "{}-{}-c{}-r{}",
            self.condition.experiment(),
            self.condition.label(),
            self.cell,
            self.rep
        )
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out_dir.join(self.run_id())
    }

    /// SHA-256 over canonical JSON of the config, leaving out settings that
    /// cannot change results (wire logging, concurrency).
    pub fn config_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        let obj = value.as_object_mut().expect("config is an object");
        if let Some(l) = obj
            .get_mut("learner_config")
            .and_then(|l| l.as_object_mut())
        {
            l.remove("debug_wire");
            l.remove("max_inflight");
        }
        // serde_json maps are sorted, so this string is canonical.
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}

/// One scheduled run of a condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannedRun {
    pub cell: usize,
    pub rep: usize,
    pub seeds: Seeds,
}

/// `(cells, reps)` of the default schedule: 3 paragraph orders x 5 for
/// morphology, 5 stimulus seeds for morphosyntax, 3 stimulus seeds x 5 for
/// syntax.
pub fn default_schedule(experiment: Experiment) -> (usize, usize) {
    match experiment {
        Experiment::Morphology => (3, 5),
        Experiment::Morphosyntax => (5, 1),
        Experiment::Syntax => (3, 5),
    }
}

pub fn seeds_for(base_seed: u64, condition: &ConditionId, cell: usize, rep: usize) -> Seeds {
    let cell_rng = Rng::new(base_seed)
        .split(&condition.to_string())
        .split_indexed("cell", cell as u64);
    Seeds {
        stimulus: cell_rng.derive_seed("stimulus"),
        order: cell_rng.derive_seed("order"),
        learner: cell_rng
            .split_indexed("rep", rep as u64)
            .derive_seed("learner"),
    }
}

/// Runs for one condition. `runs` truncates or extends the default
/// schedule, cycling through the cells before repeating any.
pub fn plan_runs(base_seed: u64, condition: &ConditionId, runs: Option<usize>) -> Vec<PlannedRun> {
    let (cells, reps) = default_schedule(condition.experiment());
    let total = runs.unwrap_or(cells * reps);
    (0..total)
        .map(|i| {
            let (cell, rep) = (i % cells, i / cells);
            PlannedRun {
                cell,
                rep,
                seeds: seeds_for(base_seed, condition, cell, rep),
            }
        })
        .collect()
}
