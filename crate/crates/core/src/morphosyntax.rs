//! Two-phrase marker/content grammar.
//!
//! A sentence is two phrases, each a marker word followed by a content word of
//! the matching class: `[aA bB]` or `[bB aA]`. Markers are frequent (six
//! times the content-word rate in the high condition, 1.5 times in the low
//! condition). Test items mix grammatical sentences with four graded error
//! types.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::{shuffle, Rng};
use crate::{ConditionId, Error, Experiment, Result};

/// All words any condition draws from.
pub const INVENTORY: [&str; 16] = [
    "alt", "erd", "ong", "ush", "deech", "tasp", "vabe", "kicey", "logoth", "puser", "hift",
    "ghope", "skige", "cumo", "fengle", "wadim",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subcondition {
    S1,
    S2,
}

impl Frequency {
    pub fn as_str(self) -> &'static str {
        match self {
            Frequency::High => "high",
            Frequency::Low => "low",
        }
    }
}

impl Subcondition {
    pub fn as_str(self) -> &'static str {
        match self {
            Subcondition::S1 => "S1",
            Subcondition::S2 => "S2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WordClass {
    MarkerA,
    MarkerB,
    ContentA,
    ContentB,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MsVocabulary {
    pub frequency: Frequency,
    pub subcondition: Subcondition,
    pub markers_a: Vec<&'static str>,
    pub markers_b: Vec<&'static str>,
    pub content_a: Vec<&'static str>,
    pub content_b: Vec<&'static str>,
}

const HIGH_A: [&str; 6] = ["deech", "tasp", "vabe", "kicey", "logoth", "puser"];
const HIGH_B: [&str; 6] = ["hift", "ghope", "skige", "cumo", "fengle", "wadim"];

pub fn build_vocabulary(frequency: Frequency, subcondition: Subcondition) -> MsVocabulary {
    let (a, b, ca, cb): (
        &[&'static str],
        &[&'static str],
        &[&'static str],
        &[&'static str],
    ) = match (frequency, subcondition) {
        (Frequency::High, Subcondition::S1) => (&["alt"], &["erd"], &HIGH_A, &HIGH_B),
        (Frequency::High, Subcondition::S2) => (&["ong"], &["ush"], &HIGH_A, &HIGH_B),
        (Frequency::Low, Subcondition::S1) => (
            &["alt", "ong"],
            &["erd", "ush"],
            &["puser", "tasp", "deech"],
            &["ghope", "hift", "wadim"],
        ),
        (Frequency::Low, Subcondition::S2) => (
            &["alt", "ong"],
            &["erd", "ush"],
            &["vabe", "kicey", "logoth"],
            &["skige", "cumo", "fengle"],
        ),
    };
    MsVocabulary {
        frequency,
        subcondition,
        markers_a: a.to_vec(),
        markers_b: b.to_vec(),
        content_a: ca.to_vec(),
        content_b: cb.to_vec(),
    }
}

/// Parses a `high-S1` style label.
pub fn parse_condition_label(label: &str) -> Result<(Frequency, Subcondition)> {
    let unknown = || Error::UnknownCondition {
        experiment: Experiment::Morphosyntax.to_string(),
        label: label.to_owned(),
    };
    let (f, s) = label.split_once('-').ok_or_else(unknown)?;
    let frequency = match f {
        "high" => Frequency::High,
        "low" => Frequency::Low,
        _ => return Err(unknown()),
    };
    let subcondition = match s {
        "S1" => Subcondition::S1,
        "S2" => Subcondition::S2,
        _ => return Err(unknown()),
    };
    Ok((frequency, subcondition))
}

pub fn vocabulary_for(condition: &ConditionId) -> Result<MsVocabulary> {
    if condition.experiment() != Experiment::Morphosyntax {
        return Err(Error::UnknownCondition {
            experiment: condition.experiment().to_string(),
            label: condition.label().to_owned(),
        });
    }
    let (f, s) = parse_condition_label(condition.label())?;
    Ok(build_vocabulary(f, s))
}

impl MsVocabulary {
    pub fn label(&self) -> String {
        format!("{}-{}", self.frequency.as_str(), self.subcondition.as_str())
    }

    pub fn class_of(&self, word: &str) -> Option<WordClass> {
        if self.markers_a.contains(&word) {
            Some(WordClass::MarkerA)
        } else if self.markers_b.contains(&word) {
            Some(WordClass::MarkerB)
        } else if self.content_a.contains(&word) {
            Some(WordClass::ContentA)
        } else if self.content_b.contains(&word) {
            Some(WordClass::ContentB)
        } else {
            None
        }
    }

    pub fn words(&self) -> Vec<&'static str> {
        self.markers_a
            .iter()
            .chain(&self.markers_b)
            .chain(&self.content_a)
            .chain(&self.content_b)
            .copied()
            .collect()
    }

    fn words_of(&self, class: WordClass) -> &[&'static str] {
        match class {
            WordClass::MarkerA => &self.markers_a,
            WordClass::MarkerB => &self.markers_b,
            WordClass::ContentA => &self.content_a,
            WordClass::ContentB => &self.content_b,
        }
    }

    /// Every grammatical sentence, in a fixed order.
    pub fn grammatical_sentences(&self) -> Vec<MsSentence> {
        let mut out = Vec::new();
        for &a in &self.markers_a {
            for &ca in &self.content_a {
                for &b in &self.markers_b {
                    for &cb in &self.content_b {
                        out.push(MsSentence::new([a, ca, b, cb]));
                        out.push(MsSentence::new([b, cb, a, ca]));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Order {
    AB,
    BA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MsSentence {
    pub words: [&'static str; 4],
}

impl MsSentence {
    pub fn new(words: [&'static str; 4]) -> Self {
        Self { words }
    }

    /// Order of a grammatical sentence; `None` if it is not grammatical.
    pub fn order_tag(&self, v: &MsVocabulary) -> Option<Order> {
        match (
            phrase_class(v, self.words[0], self.words[1]),
            phrase_class(v, self.words[2], self.words[3]),
        ) {
            (Some(Order::AB), Some(Order::BA)) => Some(Order::AB),
            (Some(Order::BA), Some(Order::AB)) => Some(Order::BA),
            _ => None,
        }
    }

    pub fn render(&self) -> String {
        self.words.join(" ")
    }
}

impl fmt::Display for MsSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

// `AB` stands for an a-phrase and `BA` for a b-phrase here.
fn phrase_class(v: &MsVocabulary, marker: &str, content: &str) -> Option<Order> {
    match (v.class_of(marker)?, v.class_of(content)?) {
        (WordClass::MarkerA, WordClass::ContentA) => Some(Order::AB),
        (WordClass::MarkerB, WordClass::ContentB) => Some(Order::BA),
        _ => None,
    }
}

/// Rule oracle: two well-formed phrases, one of each class.
pub fn is_grammatical(tokens: &[&str], v: &MsVocabulary) -> bool {
    let [m1, c1, m2, c2] = tokens else {
        return false;
    };
    matches!(
        (phrase_class(v, m1, c1), phrase_class(v, m2, c2)),
        (Some(Order::AB), Some(Order::BA)) | (Some(Order::BA), Some(Order::AB))
    )
}

/// Twenty-four distinct grammatical sentences with an exact token census:
/// every marker of a class appears equally often, every content word of a
/// class appears equally often, and the two phrase orders appear twelve
/// times each.
pub fn generate_training_set(v: &MsVocabulary, rng: &mut Rng) -> Vec<MsSentence> {
    const N: usize = 24;
    let candidates = shuffle(v.grammatical_sentences(), rng);
    let mut caps: HashMap<&str, usize> = HashMap::new();
    for class in [
        WordClass::MarkerA,
        WordClass::MarkerB,
        WordClass::ContentA,
        WordClass::ContentB,
    ] {
        let words = v.words_of(class);
        for w in words {
            caps.insert(w, N / words.len());
        }
    }
    let mut order_caps = [N / 2, N / 2];
    let mut chosen = Vec::with_capacity(N);
    let found = pick(
        &candidates,
        0,
        v,
        &mut caps,
        &mut order_caps,
        &mut chosen,
        N,
    );
    assert!(
        found,
        "census constraints are satisfiable for every vocabulary"
    );
    chosen
}

fn pick(
    candidates: &[MsSentence],
    from: usize,
    v: &MsVocabulary,
    caps: &mut HashMap<&str, usize>,
    order_caps: &mut [usize; 2],
    chosen: &mut Vec<MsSentence>,
    target: usize,
) -> bool {
    if chosen.len() == target {
        return true;
    }
    if candidates.len() - from < target - chosen.len() {
        return false;
    }
    for i in from..candidates.len() {
        let s = candidates[i];
        let order = s.order_tag(v).expect("candidates are grammatical") as usize;
        let fits = order_caps[order] > 0 && s.words.iter().all(|w| caps[w] > 0);
        if !fits {
            continue;
        }
        order_caps[order] -= 1;
        for w in s.words {
            *caps.get_mut(w).unwrap() -= 1;
        }
        chosen.push(s);
        if pick(candidates, i + 1, v, caps, order_caps, chosen, target) {
            return true;
        }
        chosen.pop();
        for w in s.words {
            *caps.get_mut(w).unwrap() += 1;
        }
        order_caps[order] += 1;
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorType {
    Order = 1,
    Category = 2,
    SingleAssoc = 3,
    DoubleAssoc = 4,
}

impl ErrorType {
    pub const ALL: [ErrorType; 4] = [
        ErrorType::Order,
        ErrorType::Category,
        ErrorType::SingleAssoc,
        ErrorType::DoubleAssoc,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize - 1
    }
}

/// How category violations are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Type2Style {
    /// One phrase's marker replaced by a content word of that phrase's class
    /// (`[A'A bB]`); the other phrase intact.
    #[default]
    Pure,
    /// The mixed form `[AA Bb]`: category violation in one phrase plus an
    /// order violation in the other.
    Mixed,
}

/// Derives an ungrammatical sentence from a grammatical one.
pub fn make_error(
    base: &MsSentence,
    t: ErrorType,
    v: &MsVocabulary,
    style: Type2Style,
    rng: &mut Rng,
) -> MsSentence {
    debug_assert!(base.order_tag(v).is_some(), "base must be grammatical");
    let mut w = base.words;
    let other_class = |word: &str| match v.class_of(word) {
        Some(WordClass::ContentA) => &v.content_b,
        _ => &v.content_a,
    };
    let phrase = rng.gen_range(0..2) * 2;
    match t {
        ErrorType::Order => w.swap(phrase, phrase + 1),
        ErrorType::Category => {
            let content = w[phrase + 1];
            let same: Vec<&'static str> = match v.class_of(content) {
                Some(WordClass::ContentA) => v.content_a.clone(),
                _ => v.content_b.clone(),
            };
            let replacement = same
                .iter()
                .copied()
                .filter(|c| *c != content)
                .collect::<Vec<_>>()
                .choose(rng)
                .copied()
                .expect("content classes hold at least two words");
            w[phrase] = replacement;
            if style == Type2Style::Mixed {
                let other = 2 - phrase;
                w.swap(other, other + 1);
            }
        }
        ErrorType::SingleAssoc => {
            w[phrase + 1] = other_class(w[phrase + 1])
                .choose(rng)
                .copied()
                .expect("non-empty");
        }
        ErrorType::DoubleAssoc => {
            let first = other_class(w[1]).choose(rng).copied().expect("non-empty");
            let second = other_class(w[3]).choose(rng).copied().expect("non-empty");
            w[1] = first;
            w[3] = second;
        }
    }
    MsSentence::new(w)
}

/// Classifies an ungrammatical sentence by the shape of its violation.
///
/// Works on the sentence alone: a phrase in content-marker order is an order
/// violation, a phrase with two content words a category violation, and
/// well-formed marker-content phrases with one or two mismatched classes are
/// single or double association violations. Returns `None` for grammatical
/// sentences and for shapes none of the four types produce.
pub fn diagnose(s: &MsSentence, v: &MsVocabulary) -> Option<ErrorType> {
    use WordClass::*;
    let classes: Vec<WordClass> = s
        .words
        .iter()
        .map(|w| v.class_of(w))
        .collect::<Option<_>>()?;
    let is_marker = |c: WordClass| matches!(c, MarkerA | MarkerB);
    let phrases = [(classes[0], classes[1]), (classes[2], classes[3])];
    let shapes: Vec<(bool, bool)> = phrases
        .iter()
        .map(|(x, y)| (is_marker(*x), is_marker(*y)))
        .collect();

    if shapes.contains(&(false, true)) {
        return Some(ErrorType::Order);
    }
    if shapes.contains(&(false, false)) {
        return Some(ErrorType::Category);
    }
    if shapes.contains(&(true, true)) {
        return None;
    }
    let mismatched = phrases
        .iter()
        .filter(|(m, c)| !matches!((m, c), (MarkerA, ContentA) | (MarkerB, ContentB)))
        .count();
    let markers_differ = phrases[0].0 != phrases[1].0;
    match (mismatched, markers_differ) {
        (1, true) => Some(ErrorType::SingleAssoc),
        (2, true) => Some(ErrorType::DoubleAssoc),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "label", content = "error_type", rename_all = "lowercase")]
pub enum ItemLabel {
    Grammatical,
    Ungrammatical(ErrorType),
}

impl ItemLabel {
    pub fn is_grammatical(self) -> bool {
        matches!(self, ItemLabel::Grammatical)
    }

    /// 0 for grammatical items, otherwise the error type code.
    pub fn error_code(self) -> u8 {
        match self {
            ItemLabel::Grammatical => 0,
            ItemLabel::Ungrammatical(t) => t.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MsTestItem {
    /// 1-based test round.
    pub trial: u8,
    pub sentence: MsSentence,
    pub label: ItemLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TestSetOptions {
    /// Draw grammatical test items from the training set instead of the
    /// grammatical sentences not seen in training.
    pub reuse_training: bool,
    pub type2: Type2Style,
}

pub const TRIALS: u8 = 4;
pub const GRAMMATICAL_PER_TRIAL: usize = 12;
pub const ERRORS_PER_TYPE_PER_TRIAL: usize = 3;

/// Four rounds of 24 items: 12 grammatical and 3 of each error type,
/// shuffled within each round.
pub fn generate_test_set(
    v: &MsVocabulary,
    training: &[MsSentence],
    options: TestSetOptions,
    rng: &mut Rng,
) -> Vec<MsTestItem> {
    let novel: Vec<MsSentence> = v
        .grammatical_sentences()
        .into_iter()
        .filter(|s| !training.contains(s))
        .collect();
    let pool: Vec<MsSentence> = if options.reuse_training && training.len() >= GRAMMATICAL_PER_TRIAL
    {
        training.to_vec()
    } else if novel.len() >= GRAMMATICAL_PER_TRIAL {
        novel
    } else {
        v.grammatical_sentences()
    };
    let all_grammatical = v.grammatical_sentences();
    let mut items = Vec::with_capacity(usize::from(TRIALS) * 24);
    for trial in 1..=TRIALS {
        let mut round: Vec<MsTestItem> = pool
            .choose_multiple(rng, GRAMMATICAL_PER_TRIAL)
            .map(|s| MsTestItem {
                trial,
                sentence: *s,
                label: ItemLabel::Grammatical,
            })
            .collect();
        for t in ErrorType::ALL {
            for _ in 0..ERRORS_PER_TYPE_PER_TRIAL {
                let base = all_grammatical.choose(rng).expect("non-empty");
                round.push(MsTestItem {
                    trial,
                    sentence: make_error(base, t, v, options.type2, rng),
                    label: ItemLabel::Ungrammatical(t),
                });
            }
        }
        items.extend(shuffle(round, rng));
    }
    items
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Judgment {
    Correct,
    Incorrect,
}

impl Judgment {
    pub fn as_str(self) -> &'static str {
        match self {
            Judgment::Correct => "correct",
            Judgment::Incorrect => "incorrect",
        }
    }
}

/// Whole-word reading of a correct/incorrect reply. `incorrect` (or
/// `not correct`) anywhere wins over `correct`.
pub fn parse_judgment(raw: &str) -> Option<Judgment> {
    let lower = raw.to_lowercase();
    let words: Vec<&str> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect();
    let mut saw_correct = false;
    for (i, w) in words.iter().enumerate() {
        match *w {
            "incorrect" => return Some(Judgment::Incorrect),
            "correct" if i > 0 && words[i - 1] == "not" => return Some(Judgment::Incorrect),
            "correct" => saw_correct = true,
            _ => {}
        }
    }
    saw_correct.then_some(Judgment::Correct)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JudgedItem {
    pub item: MsTestItem,
    pub parsed: Option<Judgment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrialErrors {
    /// Ungrammatical items accepted, by error type (at most 3 each).
    pub false_positives: [u32; 4],
    /// Grammatical items rejected (at most 12).
    pub false_negatives: u32,
    /// Unparseable replies.
    pub omissions: u32,
    pub total: u32,
}

impl TrialErrors {
    pub fn all_false_positives(&self) -> u32 {
        self.false_positives.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsRunScore {
    pub trials: Vec<TrialErrors>,
    pub true_positives: u32,
    pub false_positives: u32,
    pub false_negatives: u32,
    pub omissions: u32,
    /// Grammatical is the positive class; with no positive predictions
    /// precision is 1.0.
    pub precision: f64,
    pub recall: f64,
}

pub const TEST_ITEMS: usize = 96;

/// Error counts per round plus run-level precision and recall.
///
/// Omissions are counted in `total` and listed separately; a grammatical
/// item left unparsed counts against recall.
pub fn score_run(records: &[JudgedItem]) -> Result<MsRunScore> {
    if records.len() != TEST_ITEMS {
        return Err(Error::RecordCount {
            expected: TEST_ITEMS,
            got: records.len(),
        });
    }
    let mut trials = vec![TrialErrors::default(); usize::from(TRIALS)];
    let (mut tp, mut fp, mut fneg, mut omissions) = (0, 0, 0, 0);
    for r in records {
        let trial = &mut trials[usize::from(r.item.trial - 1)];
        match (r.item.label, r.parsed) {
            (_, None) => {
                trial.omissions += 1;
                omissions += 1;
                if r.item.label.is_grammatical() {
                    fneg += 1;
                }
            }
            (ItemLabel::Grammatical, Some(Judgment::Correct)) => tp += 1,
            (ItemLabel::Grammatical, Some(Judgment::Incorrect)) => {
                trial.false_negatives += 1;
                fneg += 1;
            }
            (ItemLabel::Ungrammatical(t), Some(Judgment::Correct)) => {
                trial.false_positives[t.index()] += 1;
                fp += 1;
            }
            (ItemLabel::Ungrammatical(_), Some(Judgment::Incorrect)) => {}
        }
    }
    for t in &mut trials {
        t.total = t.all_false_positives() + t.false_negatives + t.omissions;
    }
    let precision = if tp + fp == 0 {
        1.0
    } else {
        f64::from(tp) / f64::from(tp + fp)
    };
    let recall = if tp + fneg == 0 {
        1.0
    } else {
        f64::from(tp) / f64::from(tp + fneg)
    };
    Ok(MsRunScore {
        trials,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fneg,
        omissions,
        precision,
        recall,
    })
}

pub const STARTING_PROMPT: &str = "Let's play a game. In this game, you'll see sentences from an artificial language, that composed of nonsense words that had no meanings. The game consists of the one learning round and four testing rounds. In learning round, I will present you some sentences in this language. You can simply acknowledge by saying 'I'm ready.' In the testing round, I will present you some more sentences and you'll need to judge if these sentences are correct or incorrect. In the testing round, all the sentences are presented one by one and you need to answer one by one. Last, I will ask you some questions about this game.";

pub const POST_TESTING_PROMPTS: [&str; 2] = [
    "OK. Now all test rounds are over. Let's reflect on this game. How did you judge whether a sentence is correct or incorrect?",
    "Can you tell me more about the patterns you observed?",
];

pub fn render_starting_prompt() -> String {
    STARTING_PROMPT.to_owned()
}

/// Training sentences are joined as `s1. s2. ... s24.`
pub fn render_learning_prompt(training: &[MsSentence]) -> Result<String> {
    if training.is_empty() {
        return Err(Error::MissingSlot("training_sentences"));
    }
    let body: Vec<String> = training.iter().map(MsSentence::render).collect();
    Ok(format!(
        "Now it's the learning round. I will present you some sentences in this artificial language. You can acknowledge by replying 'I'm ready for the testing round'. {}.",
        body.join(". ")
    ))
}

/// First item of a test round.
pub fn render_test_start(round: u8, sentence: &MsSentence) -> String {
    format!(
        "OK. Now it's testing round {round}. Judge whether the test sentence is correct or incorrect in this artificial language. Answer 'correct or incorrect'. {}.",
        sentence.render()
    )
}

/// Later items of a round are sent on their own.
pub fn render_test_item(sentence: &MsSentence) -> String {
    format!("{}.", sentence.render())
}

pub fn render_test_end(round: u8) -> String {
    format!("OK. Now test round {round} is over. Take some time to reflect. We are about to start the next round.")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorrectionProbe {
    pub error_type: ErrorType,
    pub sentence: MsSentence,
}

impl CorrectionProbe {
    pub fn render(&self) -> String {
        format!(
            "Let's review some answers. {} is incorrect. Can you tell me why it's incorrect? How would you fix it to be correct?",
            self.sentence.render()
        )
    }
}

/// One incorrect sentence per error type, in type order.
pub fn correction_probe(
    v: &MsVocabulary,
    style: Type2Style,
    rng: &mut Rng,
) -> Vec<CorrectionProbe> {
    let grammatical = v.grammatical_sentences();
    ErrorType::ALL
        .iter()
        .map(|&t| {
            let base = grammatical.choose(rng).expect("non-empty");
            CorrectionProbe {
                error_type: t,
                sentence: make_error(base, t, v, style, rng),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProbeGrade {
    pub explains: u8,
    pub fixes: u8,
}

/// Four-word candidate sentences in a reply.
///
/// The reply is cut at sentence punctuation, quotes and line breaks; within
/// each segment, maximal runs of inventory words whose length is a multiple
/// of four are split into consecutive four-word candidates.
pub fn extract_candidates(raw: &str) -> Vec<Vec<String>> {
    let lower = raw.to_lowercase();
    let mut out = Vec::new();
    for segment in lower.split([
        '.', ',', ';', ':', '!', '?', '\n', '"', '\'', '`', '(', ')', '\u{2018}', '\u{2019}',
        '\u{201c}', '\u{201d}', '\u{2192}',
    ]) {
        let mut run: Vec<String> = Vec::new();
        let words = segment
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty());
        for w in words.chain(std::iter::once("")) {
            if INVENTORY.contains(&w) {
                run.push(w.to_owned());
                continue;
            }
            if !run.is_empty() && run.len().is_multiple_of(4) {
                out.extend(run.chunks(4).map(<[String]>::to_vec));
            }
            run.clear();
        }
    }
    out
}

/// `fixes` is 1 when any extracted candidate is grammatical. `explains` is
/// only set by manual annotation.
pub fn grade_correction(raw: &str, v: &MsVocabulary) -> ProbeGrade {
    let fixes = extract_candidates(raw).iter().any(|c| {
        let tokens: Vec<&str> = c.iter().map(String::as_str).collect();
        is_grammatical(&tokens, v)
    });
    ProbeGrade {
        explains: 0,
        fixes: u8::from(fixes),
    }
}

/// Manual `explains` labels keyed by `(run_id, probe_index)`.
#[derive(Debug, Clone, Default)]
pub struct ExplainOverrides {
    labels: HashMap<(String, usize), u8>,
}

#[derive(Deserialize)]
struct ExplainRow {
    run_id: String,
    probe_index: usize,
    explains: u8,
}

impl ExplainOverrides {
    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut labels = HashMap::new();
        let mut csv = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        for row in csv.deserialize() {
            let row: ExplainRow = row?;
            labels.insert((row.run_id, row.probe_index), u8::from(row.explains > 0));
        }
        Ok(Self { labels })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file)
    }

    pub fn get(&self, run_id: &str, probe_index: usize) -> Option<u8> {
        self.labels.get(&(run_id.to_owned(), probe_index)).copied()
    }
}
