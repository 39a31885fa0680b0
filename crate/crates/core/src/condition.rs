use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Morphology,
    Morphosyntax,
    Syntax,
}

impl Experiment {
    pub const ALL: [Experiment; 3] = [
        Experiment::Morphology,
        Experiment::Morphosyntax,
        Experiment::Syntax,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Morphology => "morphology",
            Experiment::Morphosyntax => "morphosyntax",
            Experiment::Syntax => "syntax",
        }
    }

    /// Valid condition labels, in canonical order.
    pub fn labels(self) -> &'static [&'static str] {
        match self {
            Experiment::Morphology => &["5R4E", "3R6E"],
            Experiment::Morphosyntax => &["high-S1", "high-S2", "low-S1", "low-S2"],
            Experiment::Syntax => &["grammarA", "grammarB"],
        }
    }

    pub fn conditions(self) -> Vec<ConditionId> {
        self.labels()
            .iter()
            .map(|label| ConditionId {
                experiment: self,
                label: (*label).to_owned(),
            })
            .collect()
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "morphology" => Ok(Experiment::Morphology),
            "morphosyntax" => Ok(Experiment::Morphosyntax),
            "syntax" | "fsg" => Ok(Experiment::Syntax),
            _ => Err(Error::UnknownExperiment(s.to_owned())),
        }
    }
}

/// An experiment together with one of its valid condition labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConditionId {
    experiment: Experiment,
    label: String,
}

impl ConditionId {
    pub fn new(experiment: Experiment, label: &str) -> Result<Self> {
        match experiment.labels().iter().find(|l| **l == label) {
            Some(l) => Ok(Self {
                experiment,
                label: (*l).to_owned(),
            }),
            None => Err(Error::UnknownCondition {
                experiment: experiment.to_string(),
                label: label.to_owned(),
            }),
        }
    }

    pub fn experiment(&self) -> Experiment {
        self.experiment
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.experiment, self.label)
    }
}

impl FromStr for ConditionId {
    type Err = Error;

    /// Parses `experiment/label`.
    fn from_str(s: &str) -> Result<Self> {
        let (exp, label) = s.split_once('/').ok_or_else(|| Error::UnknownCondition {
            experiment: String::new(),
            label: s.to_owned(),
        })?;
        ConditionId::new(exp.parse()?, label)
    }
}

impl Serialize for ConditionId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ConditionId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
