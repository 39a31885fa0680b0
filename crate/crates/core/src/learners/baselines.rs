//! Deterministic baselines used as oracles and comparators.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{Baseline, Response, StructuredEvent, StructuredQuery};
use crate::morphology::MARKERS;
use crate::morphosyntax::Judgment;
use crate::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    Frequency,
    Majority,
    Exemplar,
    Bigram,
    Random,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [
        BaselineKind::Frequency,
        BaselineKind::Majority,
        BaselineKind::Exemplar,
        BaselineKind::Bigram,
        BaselineKind::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Frequency => "frequency",
            BaselineKind::Majority => "majority",
            BaselineKind::Exemplar => "exemplar",
            BaselineKind::Bigram => "bigram",
            BaselineKind::Random => "random",
        }
    }

    /// A fresh learner; `rng` is only consumed by the sampling baselines.
    pub fn build(self, rng: Rng) -> Box<dyn Baseline> {
        match self {
            BaselineKind::Frequency => Box::new(FrequencyMatching::new(rng)),
            BaselineKind::Majority => Box::new(MajorityType::default()),
            BaselineKind::Exemplar => Box::new(ExemplarJudge::default()),
            BaselineKind::Bigram => Box::new(Bigram::default()),
            BaselineKind::Random => Box::new(RandomLearner::new(rng)),
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown baseline `{s}`"))
    }
}

impl Baseline for Box<dyn Baseline> {
    fn observe(&mut self, event: &StructuredEvent) {
        (**self).observe(event)
    }

    fn answer(&mut self, query: &StructuredQuery) -> Response {
        (**self).answer(query)
    }

    fn name(&self) -> String {
        (**self).name()
    }
}

/// Samples plural markers in proportion to their observed token counts.
pub struct FrequencyMatching {
    counts: BTreeMap<String, u32>,
    rng: Rng,
}

impl FrequencyMatching {
    pub fn new(rng: Rng) -> Self {
        Self {
            counts: BTreeMap::new(),
            rng,
        }
    }

    pub fn counts(&self) -> &BTreeMap<String, u32> {
        &self.counts
    }
}

impl Baseline for FrequencyMatching {
    fn observe(&mut self, event: &StructuredEvent) {
        if let StructuredEvent::MorphExposure { tokens, .. } = event {
            for marker in tokens.iter().filter_map(|(_, m)| m.as_ref()) {
                *self.counts.entry(marker.clone()).or_insert(0) += 1;
            }
        }
    }

    fn answer(&mut self, query: &StructuredQuery) -> Response {
        match query {
            StructuredQuery::Acknowledge => Response::Ack,
            StructuredQuery::PluralBlank { .. } => {
                let total: u32 = self.counts.values().sum();
                if total == 0 {
                    return Response::Refuse;
                }
                let mut pick = self.rng.gen_range(0..total);
                for (marker, c) in &self.counts {
                    if pick < *c {
                        return Response::Marker(marker.clone());
                    }
                    pick -= c;
                }
                unreachable!("pick is below the total")
            }
            _ => Response::Refuse,
        }
    }

    fn name(&self) -> String {
        "baseline:frequency".into()
    }
}

/// Answers with the marker taken by the most noun types; ties go to the
/// lexicographically smallest marker.
#[derive(Default)]
pub struct MajorityType {
    noun_markers: BTreeMap<String, BTreeSet<String>>,
}

impl MajorityType {
    pub fn choice(&self) -> Option<String> {
        let mut types: BTreeMap<&str, u32> = BTreeMap::new();
        for markers in self.noun_markers.values() {
            for m in markers {
                *types.entry(m).or_insert(0) += 1;
            }
        }
        // BTreeMap iterates in lexicographic order, so the first maximum wins.
        let mut best: Option<(&str, u32)> = None;
        for (m, c) in types {
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((m, c));
            }
        }
        best.map(|(m, _)| m.to_owned())
    }
}

impl Baseline for MajorityType {
    fn observe(&mut self, event: &StructuredEvent) {
        if let StructuredEvent::MorphExposure { tokens, .. } = event {
            for (noun, marker) in tokens {
                if let Some(m) = marker {
                    self.noun_markers
                        .entry(noun.clone())
                        .or_default()
                        .insert(m.clone());
                }
            }
        }
    }

    fn answer(&mut self, query: &StructuredQuery) -> Response {
        match query {
            StructuredQuery::Acknowledge => Response::Ack,
            StructuredQuery::PluralBlank { .. } => {
                self.choice().map_or(Response::Refuse, Response::Marker)
            }
            _ => Response::Refuse,
        }
    }

    fn name(&self) -> String {
        "baseline:majority".into()
    }
}

/// Accepts exactly the sentences it has been shown as grammatical.
#[derive(Default)]
pub struct ExemplarJudge {
    seen: HashSet<Vec<String>>,
}

impl Baseline for ExemplarJudge {
    fn observe(&mut self, event: &StructuredEvent) {
        match event {
            StructuredEvent::SentenceExposure { words }
            | StructuredEvent::Feedback {
                words,
                grammatical: true,
            } => {
                self.seen.insert(words.clone());
            }
            _ => {}
        }
    }

    fn answer(&mut self, query: &StructuredQuery) -> Response {
        match query {
            StructuredQuery::Acknowledge => Response::Ack,
            StructuredQuery::Judgment { words } => {
                Response::Judgment(if self.seen.contains(words) {
                    Judgment::Correct
                } else {
                    Judgment::Incorrect
                })
            }
            StructuredQuery::YesNo { words } => Response::YesNo(self.seen.contains(words)),
            _ => Response::Refuse,
        }
    }

    fn name(&self) -> String {
        "baseline:exemplar".into()
    }
}

const BOUNDARY: &str = "#";

/// Adjacent-token pairs (with sentence boundaries) from grammatical
/// sentences; a query is accepted when all of its pairs have been seen.
#[derive(Default)]
pub struct Bigram {
    seen: HashSet<(String, String)>,
}

impl Bigram {
    fn pairs(words: &[String]) -> impl Iterator<Item = (String, String)> + '_ {
        let padded: Vec<&str> = std::iter::once(BOUNDARY)
            .chain(words.iter().map(String::as_str))
            .chain(std::iter::once(BOUNDARY))
            .collect();
        (0..padded.len() - 1).map(move |i| (padded[i].to_owned(), padded[i + 1].to_owned()))
    }

    pub fn accepts(&self, words: &[String]) -> bool {
        Self::pairs(words).all(|p| self.seen.contains(&p))
    }
}

impl Baseline for Bigram {
    fn observe(&mut self, event: &StructuredEvent) {
        match event {
            StructuredEvent::SentenceExposure { words }
            | StructuredEvent::Feedback {
                words,
                grammatical: true,
            } => self.seen.extend(Self::pairs(words)),
            _ => {}
        }
    }

    fn answer(&mut self, query: &StructuredQuery) -> Response {
        match query {
            StructuredQuery::Acknowledge => Response::Ack,
            StructuredQuery::YesNo { words } => Response::YesNo(self.accepts(words)),
            StructuredQuery::Judgment { words } => Response::Judgment(if self.accepts(words) {
                Judgment::Correct
            } else {
                Judgment::Incorrect
            }),
            _ => Response::Refuse,
        }
    }

    fn name(&self) -> String {
        "baseline:bigram".into()
    }
}

/// Uniform over each query's response alphabet.
pub struct RandomLearner {
    rng: Rng,
}

impl RandomLearner {
    pub fn new(rng: Rng) -> Self {
        Self { rng }
    }
}

impl Baseline for RandomLearner {
    fn observe(&mut self, _event: &StructuredEvent) {}

    fn answer(&mut self, query: &StructuredQuery) -> Response {
        match query {
            StructuredQuery::Acknowledge => Response::Ack,
            StructuredQuery::PluralBlank { .. } => {
                Response::Marker((*MARKERS.choose(&mut self.rng).expect("non-empty")).to_owned())
            }
            StructuredQuery::Judgment { .. } => Response::Judgment(if self.rng.gen_bool(0.5) {
                Judgment::Correct
            } else {
                Judgment::Incorrect
            }),
            StructuredQuery::YesNo { .. } => Response::YesNo(self.rng.gen_bool(0.5)),
            StructuredQuery::Questionnaire { .. } | StructuredQuery::FreeText => Response::Refuse,
        }
    }

    fn name(&self) -> String {
        "baseline:random".into()
    }
}
