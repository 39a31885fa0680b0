//! Published human results the learners are compared against.

use serde::Serialize;

use super::{two_proportion_test, StatResult};
use crate::{Error, Experiment, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HumanReference {
    pub experiment: Experiment,
    pub condition: &'static str,
    pub statistic: String,
    pub value: f64,
    pub group: &'static str,
    pub citation: &'static str,
    /// Rows kept for context only; never used in comparisons.
    pub comparable: bool,
}

const SCHULER: &str = "Schuler, Yang & Newport (2017), adult and child regularization";
const VALIAN: &str = "Valian & Coulson (1988), mean error counts";
const ALAMIA: &str = "Alamia et al. (2020), block learning effect";
const MODEL_RUNS: &str = "reported chat-model runs, 15 per condition";

/// Participants times test trials behind each morphology rate.
pub const HUMAN_MORPHOLOGY_TRIALS: usize = 120;

fn row(
    experiment: Experiment,
    condition: &'static str,
    statistic: &'static str,
    value: f64,
    group: &'static str,
    citation: &'static str,
    comparable: bool,
) -> HumanReference {
    HumanReference {
        experiment,
        condition,
        statistic: statistic.to_owned(),
        value,
        group,
        citation,
        comparable,
    }
}

use Experiment::{Morphology as M, Morphosyntax as MS, Syntax as S};

pub fn morphology_references() -> Vec<HumanReference> {
    vec![
        row(
            M,
            "5R4E",
            "regularization_rate",
            0.650,
            "human adults",
            SCHULER,
            true,
        ),
        row(
            M,
            "3R6E",
            "regularization_rate",
            0.517,
            "human adults",
            SCHULER,
            true,
        ),
        row(
            M,
            "5R4E",
            "regularization_rate",
            0.917,
            "human children",
            SCHULER,
            false,
        ),
        row(
            M,
            "3R6E",
            "regularization_rate",
            0.169,
            "human children",
            SCHULER,
            false,
        ),
        row(
            M,
            "5R4E",
            "regularization_rate",
            0.417,
            "gpt-4o",
            MODEL_RUNS,
            false,
        ),
        row(
            M,
            "3R6E",
            "regularization_rate",
            0.050,
            "gpt-4o",
            MODEL_RUNS,
            false,
        ),
        row(
            M,
            "5R4E",
            "regularization_rate",
            0.756,
            "o3-mini",
            MODEL_RUNS,
            false,
        ),
        row(
            M,
            "3R6E",
            "regularization_rate",
            0.567,
            "o3-mini",
            MODEL_RUNS,
            false,
        ),
        row(
            M,
            "5R4E",
            "input_token_rate",
            0.755,
            "input",
            SCHULER,
            false,
        ),
        row(
            M,
            "3R6E",
            "input_token_rate",
            0.592,
            "input",
            SCHULER,
            false,
        ),
    ]
}

/// Per-trial mean errors: error types 1-4, all false positives, false
/// negatives, totals. Columns are tests I-IV then the sum.
const ERROR_ROWS: [&str; 7] = [
    "error_type1",
    "error_type2",
    "error_type3",
    "error_type4",
    "all_false_positive",
    "false_negative",
    "total_errors",
];

const HIGH_ERRORS: [[f64; 5]; 7] = [
    [0.1, 0.0, 0.0, 0.0, 0.1],
    [0.1, 0.0, 0.0, 0.0, 0.1],
    [2.8, 2.1, 1.3, 1.0, 7.2],
    [2.5, 1.4, 0.7, 0.6, 5.2],
    [5.5, 3.5, 2.0, 1.6, 12.6],
    [1.0, 0.9, 0.8, 0.5, 3.2],
    [6.5, 4.4, 2.8, 2.1, 15.8],
];

const LOW_ERRORS: [[f64; 5]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.1, 0.0, 0.0, 0.0, 0.1],
    [2.3, 2.8, 2.6, 2.0, 9.7],
    [2.4, 2.7, 2.3, 1.7, 9.1],
    [4.8, 5.5, 4.9, 3.7, 18.9],
    [1.5, 0.9, 1.3, 1.7, 5.4],
    [6.3, 6.4, 6.2, 5.4, 24.3],
];

const COLUMNS: [&str; 5] = ["t1", "t2", "t3", "t4", "total"];

/// Statistic name for a morphosyntax error cell, e.g. `total_errors_t1`.
pub fn error_statistic(row: &str, column: &str) -> String {
    format!("{row}_{column}")
}

/// Human error counts for `high` or `low` frequency, as
/// `(statistic, [t1, t2, t3, t4, total])`.
pub fn human_error_table(frequency: &str) -> Option<Vec<(&'static str, [f64; 5])>> {
    let table = match frequency {
        "high" => &HIGH_ERRORS,
        "low" => &LOW_ERRORS,
        _ => return None,
    };
    Some(
        ERROR_ROWS
            .iter()
            .copied()
            .zip(table.iter().copied())
            .collect(),
    )
}

pub fn syntax_references() -> Vec<HumanReference> {
    vec![
        row(
            S,
            "grammarA",
            "learning_bf_lower_bound",
            100.0,
            "human adults",
            ALAMIA,
            false,
        ),
        row(
            S,
            "grammarB",
            "learning_bf_lower_bound",
            100.0,
            "human adults",
            ALAMIA,
            false,
        ),
    ]
}

/// Every embedded reference. Morphosyntax rows are keyed by frequency
/// (`high` / `low`) and apply to both subconditions.
pub fn all_references() -> Vec<HumanReference> {
    let mut out = morphology_references();
    for (frequency, table) in [("high", &HIGH_ERRORS), ("low", &LOW_ERRORS)] {
        for (r, values) in ERROR_ROWS.iter().zip(table.iter()) {
            for (c, v) in COLUMNS.iter().zip(values) {
                out.push(HumanReference {
                    experiment: MS,
                    condition: frequency,
                    statistic: error_statistic(r, c),
                    value: *v,
                    group: "human adults",
                    citation: VALIAN,
                    comparable: true,
                });
            }
        }
    }
    out.extend(syntax_references());
    out
}

/// Reference for a comparison key; morphosyntax conditions may be given as
/// `high-S1` and resolve to their frequency.
pub fn lookup(experiment: Experiment, condition: &str, statistic: &str) -> Option<HumanReference> {
    let key = match experiment {
        Experiment::Morphosyntax => condition.split('-').next().unwrap_or(condition),
        _ => condition,
    };
    all_references().into_iter().find(|r| {
        r.comparable && r.experiment == experiment && r.condition == key && r.statistic == statistic
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnerValue {
    pub experiment: Experiment,
    pub condition: String,
    pub statistic: String,
    pub value: f64,
    /// Successes and trials behind a rate, enabling a proportion test.
    pub counts: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub experiment: Experiment,
    pub condition: String,
    pub statistic: String,
    pub learner: f64,
    pub human: f64,
    /// learner - human
    pub delta: f64,
    pub citation: &'static str,
    pub test: Option<StatResult>,
}

/// One row per learner value. Rates with counts are tested against the
/// human rate over [`HUMAN_MORPHOLOGY_TRIALS`] trials.
pub fn compare_to_human(values: &[LearnerValue]) -> Result<Vec<ComparisonRow>> {
    values
        .iter()
        .map(|v| {
            let human = lookup(v.experiment, &v.condition, &v.statistic).ok_or_else(|| {
                Error::MissingReference(format!("{}/{}/{}", v.experiment, v.condition, v.statistic))
            })?;
            let test = match v.counts {
                Some((k, n)) if v.experiment == Experiment::Morphology => {
                    let human_k = (human.value * HUMAN_MORPHOLOGY_TRIALS as f64).round() as usize;
                    Some(two_proportion_test(k, n, human_k, HUMAN_MORPHOLOGY_TRIALS)?)
                }
                _ => None,
            };
            Ok(ComparisonRow {
                experiment: v.experiment,
                condition: v.condition.clone(),
                statistic: v.statistic.clone(),
                learner: v.value,
                human: human.value,
                delta: v.value - human.value,
                citation: human.citation,
                test,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rate(condition: &str, value: f64, counts: Option<(usize, usize)>) -> LearnerValue {
        LearnerValue {
            experiment: Experiment::Morphology,
            condition: condition.into(),
            statistic: "regularization_rate".into(),
            value,
            counts,
        }
    }

    #[test]
    fn equal_rate_has_zero_delta() {
        let rows = compare_to_human(&[rate("5R4E", 0.65, None)]).unwrap();
        assert!(rows[0].delta.abs() < 1e-12);
        assert_eq!(rows[0].human, 0.65);
    }

    #[test]
    fn frequency_matching_delta() {
        let rows = compare_to_human(&[rate("5R4E", 0.755, Some((136, 180)))]).unwrap();
        assert!((rows[0].delta - 0.105).abs() < 1e-9);
        assert_eq!(rows[0].test.as_ref().unwrap().method, "z_test_pooled");
    }

    #[test]
    fn human_error_totals() {
        let high = human_error_table("high").unwrap();
        let totals = high.iter().find(|(s, _)| *s == "total_errors").unwrap().1;
        assert_eq!(&totals[..4], &[6.5, 4.4, 2.8, 2.1]);
        let r = lookup(Experiment::Morphosyntax, "high-S2", "total_errors_t1").unwrap();
        assert_eq!(r.value, 6.5);
    }

    #[test]
    fn human_tables_add_up() {
        for f in ["high", "low"] {
            for (name, row) in human_error_table(f).unwrap() {
                let sum: f64 = row[..4].iter().sum();
                assert!((sum - row[4]).abs() < 0.15, "{f} {name}");
            }
        }
    }

    #[test]
    fn missing_key_errors() {
        let err = compare_to_human(&[rate("9R0E", 0.5, None)]).unwrap_err();
        assert!(matches!(err, Error::MissingReference(_)));
        // Children's rates are context only.
        assert!(
            lookup(Experiment::Morphology, "5R4E", "regularization_rate")
                .unwrap()
                .value
                == 0.65
        );
    }
}
