use serde::{Deserialize, Serialize};

/// One scored test interaction.
///
/// `correct` is present exactly when the response parsed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub run_id: String,
    pub trial_index: usize,
    pub stimulus: String,
    pub ground_truth: String,
    pub raw_response: String,
    parsed: Option<String>,
    correct: Option<bool>,
}

impl TrialRecord {
    pub fn new(
        run_id: impl Into<String>,
        trial_index: usize,
        stimulus: impl Into<String>,
        ground_truth: impl Into<String>,
        raw_response: impl Into<String>,
        parsed: Option<String>,
    ) -> Self {
        let ground_truth = ground_truth.into();
        let correct = parsed.as_ref().map(|p| *p == ground_truth);
        Self {
            run_id: run_id.into(),
            trial_index,
            stimulus: stimulus.into(),
            ground_truth,
            raw_response: raw_response.into(),
            parsed,
            correct,
        }
    }

    pub fn parsed(&self) -> Option<&str> {
        self.parsed.as_deref()
    }

    pub fn correct(&self) -> Option<bool> {
        self.correct
    }

    pub fn is_parseable(&self) -> bool {
        self.parsed.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correct_iff_parsed() {
        let r = TrialRecord::new("r", 0, "sep", "ka", "sepka", Some("ka".into()));
        assert_eq!(r.correct(), Some(true));
        let r = TrialRecord::new("r", 1, "sep", "ka", "seppo", Some("po".into()));
        assert_eq!(r.correct(), Some(false));
        let r = TrialRecord::new("r", 2, "sep", "ka", "hmm", None);
        assert_eq!(r.correct(), None);
        assert!(!r.is_parseable());
    }
}
