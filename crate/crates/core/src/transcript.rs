//! Conversation transcripts and their JSONL persistence.

use std::fmt;
use std::io::{BufRead, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::{ConditionId, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Starting,
    Learning,
    Testing,
    PostTesting,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Starting => "starting",
            Phase::Learning => "learning",
            Phase::Testing => "testing",
            Phase::PostTesting => "post_testing",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub phase: Phase,
    pub index: u32,
    pub role: Role,
    pub content: String,
    #[serde(with = "iso8601")]
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub run_id: String,
    pub condition: ConditionId,
    pub turns: Vec<Turn>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// Turn indices must strictly increase.
    IndexOrder,
    /// Phases run starting, learning, testing, post_testing.
    PhaseOrder,
    /// User and assistant turns alternate within a phase.
    Alternation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub turn_index: u32,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = match self.rule {
            Rule::IndexOrder => "index-order",
            Rule::PhaseOrder => "phase-order",
            Rule::Alternation => "alternation",
        };
        write!(f, "turn {}: {rule} violation", self.turn_index)
    }
}

impl Transcript {
    pub fn new(run_id: impl Into<String>, condition: ConditionId) -> Self {
        Self {
            run_id: run_id.into(),
            condition,
            turns: Vec::new(),
        }
    }

    pub fn push(
        &mut self,
        phase: Phase,
        role: Role,
        content: impl Into<String>,
        timestamp: DateTime<Utc>,
    ) {
        let index = self.turns.last().map_or(0, |t| t.index + 1);
        self.turns.push(Turn {
            phase,
            index,
            role,
            content: content.into(),
            timestamp,
        });
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_transcript(self)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for turn in &self.turns {
            let line = TurnLine {
                run_id: &self.run_id,
                condition: &self.condition,
                phase: turn.phase,
                index: turn.index,
                role: turn.role,
                content: &turn.content,
                timestamp: turn.timestamp,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")
                .map_err(|e| crate::Error::io("<transcript>", e))?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    /// Reads a transcript written by [`Transcript::write_jsonl`]. An empty
    /// input yields `None` since the run id and condition live on each line.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Option<Transcript>> {
        let mut transcript: Option<Transcript> = None;
        for line in input.lines() {
            let line = line.map_err(|e| crate::Error::io("<transcript>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let owned: OwnedTurnLine = serde_json::from_str(&line)?;
            let t = transcript.get_or_insert_with(|| {
                Transcript::new(owned.run_id.clone(), owned.condition.clone())
            });
            t.turns.push(Turn {
                phase: owned.phase,
                index: owned.index,
                role: owned.role,
                content: owned.content,
                timestamp: owned.timestamp,
            });
        }
        Ok(transcript)
    }
}

#[derive(Serialize)]
struct TurnLine<'a> {
    run_id: &'a str,
    condition: &'a ConditionId,
    phase: Phase,
    index: u32,
    role: Role,
    content: &'a str,
    #[serde(with = "iso8601")]
    timestamp: DateTime<Utc>,
}

#[derive(Deserialize)]
struct OwnedTurnLine {
    run_id: String,
    condition: ConditionId,
    phase: Phase,
    index: u32,
    role: Role,
    content: String,
    #[serde(with = "iso8601")]
    timestamp: DateTime<Utc>,
}

pub fn validate_transcript(t: &Transcript) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut prev: Option<&Turn> = None;
    // Last user/assistant role seen in the current phase.
    let mut last_role: Option<Role> = None;

    for turn in &t.turns {
        if let Some(p) = prev {
            if turn.index <= p.index {
                violations.push(Violation {
                    turn_index: turn.index,
                    rule: Rule::IndexOrder,
                });
            }
            if turn.phase < p.phase {
                violations.push(Violation {
                    turn_index: turn.index,
                    rule: Rule::PhaseOrder,
                });
            }
            if turn.phase != p.phase {
                last_role = None;
            }
        }
        match turn.role {
            Role::System => {}
            Role::User | Role::Assistant => {
                let out_of_turn = match last_role {
                    None => turn.role == Role::Assistant,
                    Some(r) => r == turn.role,
                };
                if out_of_turn {
                    violations.push(Violation {
                        turn_index: turn.index,
                        rule: Rule::Alternation,
                    });
                }
                last_role = Some(turn.role);
            }
        }
        prev = Some(turn);
    }
    violations
}

/// ISO-8601 UTC with millisecond precision and a `Z` suffix.
pub(crate) mod iso8601 {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&ts.to_rfc3339_opts(SecondsFormat::Millis, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Experiment;

    fn ts() -> DateTime<Utc> {
        DateTime::from_timestamp(1_700_000_000, 0).unwrap()
    }

    fn well_formed() -> Transcript {
        let cond = ConditionId::new(Experiment::Morphology, "5R4E").unwrap();
        let mut t = Transcript::new("run-1", cond);
        for phase in [
            Phase::Starting,
            Phase::Learning,
            Phase::Testing,
            Phase::PostTesting,
        ] {
            t.push(phase, Role::User, "q", ts());
            t.push(phase, Role::Assistant, "a", ts());
        }
        t
    }

    #[test]
    fn well_formed_has_no_violations() {
        assert!(validate_transcript(&well_formed()).is_empty());
    }

    #[test]
    fn testing_before_learning() {
        let cond = ConditionId::new(Experiment::Morphology, "5R4E").unwrap();
        let mut t = Transcript::new("r", cond);
        t.push(Phase::Starting, Role::User, "q", ts());
        t.push(Phase::Starting, Role::Assistant, "a", ts());
        t.push(Phase::Testing, Role::User, "q", ts());
        t.push(Phase::Testing, Role::Assistant, "a", ts());
        t.push(Phase::Learning, Role::User, "q", ts());
        t.push(Phase::Learning, Role::Assistant, "a", ts());
        let v = validate_transcript(&t);
        assert_eq!(
            v,
            vec![Violation {
                turn_index: 4,
                rule: Rule::PhaseOrder
            }]
        );
    }

    #[test]
    fn consecutive_assistant_turns() {
        let mut t = well_formed();
        let extra = Turn {
            phase: Phase::PostTesting,
            index: 8,
            role: Role::Assistant,
            content: "again".into(),
            timestamp: ts(),
        };
        t.turns.push(extra);
        let v = validate_transcript(&t);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::Alternation);
        assert_eq!(v[0].turn_index, 8);
        assert_eq!(v[0].to_string(), "turn 8: alternation violation");
    }

    #[test]
    fn repeated_index() {
        let mut t = well_formed();
        t.turns[3].index = 2;
        let v = validate_transcript(&t);
        assert!(v.iter().any(|x| x.rule == Rule::IndexOrder));
    }

    #[test]
    fn jsonl_round_trip() {
        let t = well_formed();
        let text = t.to_jsonl();
        assert_eq!(text.lines().count(), 8);
        let first = text.lines().next().unwrap();
        assert_eq!(
            first,
            r#"{"run_id":"run-1","condition":"morphology/5R4E","phase":"starting","index":0,"role":"user","content":"q","timestamp":"2023-11-14T22:13:20.000Z"}"#
        );
        let back = Transcript::read_jsonl(text.as_bytes()).unwrap().unwrap();
        assert_eq!(back, t);
        assert!(Transcript::read_jsonl(&b""[..]).unwrap().is_none());
    }
}
