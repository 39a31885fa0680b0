//! Finite-state grammars over single-letter words.
//!
//! Grammars may be nondeterministic; membership runs a subset simulation.
//! Sentences are generated by random walks and paired with single-letter
//! ungrammatical counterparts, then presented in feedback blocks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::{shuffle, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    X,
    V,
    T,
    J,
    M,
    R,
}

impl Letter {
    pub const ALL: [Letter; 6] = [
        Letter::X,
        Letter::V,
        Letter::T,
        Letter::J,
        Letter::M,
        Letter::R,
    ];

    pub fn as_char(self) -> char {
        match self {
            Letter::X => 'X',
            Letter::V => 'V',
            Letter::T => 'T',
            Letter::J => 'J',
            Letter::M => 'M',
            Letter::R => 'R',
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        Letter::ALL.into_iter().find(|l| l.as_char() == c)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// `X X V J`
pub fn render_letters(letters: &[Letter]) -> String {
    letters
        .iter()
        .map(|l| l.as_char().to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Reads letters written with or without spaces. Any other character makes
/// the input invalid.
pub fn parse_letters(text: &str) -> Option<Vec<Letter>> {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .map(Letter::from_char)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub letter: Letter,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fsg {
    names: Vec<String>,
    start: usize,
    edges: Vec<Edge>,
    exits: Vec<bool>,
}

impl Fsg {
    /// Builds a grammar from named edges. Every state must be reachable from
    /// the start and able to reach an exit.
    pub fn from_named(start: &str, exits: &[&str], edges: &[(&str, Letter, &str)]) -> Result<Fsg> {
        let mut names: Vec<String> = vec![start.to_owned()];
        let id = |name: &str, names: &mut Vec<String>| match names.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                names.push(name.to_owned());
                names.len() - 1
            }
        };
        let edges: Vec<Edge> = edges
            .iter()
            .map(|(from, letter, to)| Edge {
                from: id(from, &mut names),
                letter: *letter,
                to: id(to, &mut names),
            })
            .collect();
        let exit_ids: Vec<usize> = exits.iter().map(|e| id(e, &mut names)).collect();
        let mut exits = vec![false; names.len()];
        for e in exit_ids {
            exits[e] = true;
        }
        let g = Fsg {
            names,
            start: 0,
            edges,
            exits,
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        if self.names.len() > 64 {
            return Err(Error::Grammar(format!(
                "{} states exceed the limit of 64",
                self.names.len()
            )));
        }
        if !self.exits.iter().any(|e| *e) {
            return Err(Error::Grammar("no exit states".into()));
        }
        let reach = self.reachable();
        let coreach = self.coreachable();
        for (i, name) in self.names.iter().enumerate() {
            if reach & (1 << i) == 0 {
                return Err(Error::Grammar(format!(
                    "state {name} is unreachable from the start"
                )));
            }
            if coreach & (1 << i) == 0 {
                return Err(Error::Grammar(format!("state {name} cannot reach an exit")));
            }
        }
        Ok(())
    }

    fn reachable(&self) -> u64 {
        let mut set = 1u64 << self.start;
        loop {
            let next = self
                .edges
                .iter()
                .filter(|e| set & (1 << e.from) != 0)
                .fold(set, |acc, e| acc | (1 << e.to));
            if next == set {
                return set;
            }
            set = next;
        }
    }

    fn coreachable(&self) -> u64 {
        let mut set = self.exit_mask();
        loop {
            let next = self
                .edges
                .iter()
                .filter(|e| set & (1 << e.to) != 0)
                .fold(set, |acc, e| acc | (1 << e.from));
            if next == set {
                return set;
            }
            set = next;
        }
    }

    fn exit_mask(&self) -> u64 {
        self.exits
            .iter()
            .enumerate()
            .filter(|(_, e)| **e)
            .fold(0, |acc, (i, _)| acc | (1 << i))
    }

    pub fn state_count(&self) -> usize {
        self.names.len()
    }

    pub fn state_name(&self, state: usize) -> &str {
        &self.names[state]
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn is_exit(&self, state: usize) -> bool {
        self.exits[state]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn outgoing(&self, state: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.from == state)
    }

    /// Letters used by the grammar, in order of first appearance.
    pub fn alphabet(&self) -> Vec<Letter> {
        let mut out = Vec::new();
        for e in &self.edges {
            if !out.contains(&e.letter) {
                out.push(e.letter);
            }
        }
        out
    }

    /// Grammar file text: `start:` and `exits:` lines, then one
    /// `STATE LETTER STATE` edge per line.
    pub fn to_text(&self) -> String {
        let exits: Vec<&str> = (0..self.names.len())
            .filter(|i| self.exits[*i])
            .map(|i| self.names[i].as_str())
            .collect();
        let mut out = format!(
            "start: {}\nexits: {}\n",
            self.names[self.start],
            exits.join(" ")
        );
        for e in &self.edges {
            out.push_str(&format!(
                "{} {} {}\n",
                self.names[e.from], e.letter, self.names[e.to]
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Fsg> {
        let mut start = None;
        let mut exits: Vec<String> = Vec::new();
        let mut edges: Vec<(String, Letter, String)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::GrammarSyntax { line: n + 1, msg };
            if let Some(rest) = line.strip_prefix("start:") {
                let name = rest.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(err("expected exactly one start state".into()));
                }
                start = Some(name.to_owned());
            } else if let Some(rest) = line.strip_prefix("exits:") {
                exits.extend(rest.split_whitespace().map(str::to_owned));
            } else {
                let parts: Vec<&str> = line.split_whitespace().collect();
                let [from, letter, to] = parts.as_slice() else {
                    return Err(err(format!("expected `STATE LETTER STATE`, got `{line}`")));
                };
                let mut chars = letter.chars();
                let letter = match (chars.next().and_then(Letter::from_char), chars.next()) {
                    (Some(l), None) => l,
                    _ => return Err(err(format!("unknown letter `{letter}`"))),
                };
                edges.push(((*from).to_owned(), letter, (*to).to_owned()));
            }
        }
        let start = start.ok_or_else(|| Error::Grammar("missing `start:` line".into()))?;
        let exit_refs: Vec<&str> = exits.iter().map(String::as_str).collect();
        let edge_refs: Vec<(&str, Letter, &str)> = edges
            .iter()
            .map(|(f, l, t)| (f.as_str(), *l, t.as_str()))
            .collect();
        Fsg::from_named(&start, &exit_refs, &edge_refs)
    }
}

pub fn grammar_a() -> Fsg {
    use Letter::*;
    Fsg::from_named(
        "S0",
        &["S1", "S3", "S4"],
        &[
            ("S0", X, "S0"),
            ("S0", V, "S2"),
            ("S2", J, "S1"),
            ("S2", T, "S4"),
            ("S4", V, "S3"),
            ("S3", X, "S2"),
            ("S3", J, "S3"),
            ("S1", T, "S0"),
        ],
    )
    .expect("grammar A is well formed")
}

pub fn grammar_b() -> Fsg {
    use Letter::*;
    Fsg::from_named(
        "S0",
        &["S7", "S8", "S9"],
        &[
            ("S0", M, "S1"),
            ("S0", V, "S2"),
            ("S1", V, "S4"),
            ("S1", X, "S6"),
            ("S2", X, "S5"),
            ("S2", M, "S6"),
            ("S3", T, "S3"),
            ("S3", M, "S1"),
            ("S3", V, "S2"),
            ("S4", R, "S7"),
            ("S4", M, "S6"),
            ("S5", T, "S8"),
            ("S5", V, "S6"),
            ("S6", R, "S7"),
            ("S6", R, "S3"),
            ("S6", T, "S8"),
            ("S7", V, "S7"),
            ("S7", M, "S9"),
            ("S8", R, "S8"),
            ("S8", X, "S9"),
        ],
    )
    .expect("grammar B is well formed")
}

/// Built-in grammar by condition label (`grammarA` / `grammarB`).
pub fn builtin(label: &str) -> Option<Fsg> {
    match label {
        "grammarA" | "A" => Some(grammar_a()),
        "grammarB" | "B" => Some(grammar_b()),
        _ => None,
    }
}

/// Membership by subset simulation.
pub fn accepts(g: &Fsg, letters: &[Letter]) -> bool {
    let mut current = 1u64 << g.start;
    for &letter in letters {
        current = g
            .edges
            .iter()
            .filter(|e| e.letter == letter && current & (1 << e.from) != 0)
            .fold(0, |acc, e| acc | (1 << e.to));
        if current == 0 {
            return false;
        }
    }
    current & g.exit_mask() != 0
}

/// Membership for text input; anything outside the letter alphabet is
/// rejected.
pub fn accepts_str(g: &Fsg, text: &str) -> bool {
    parse_letters(text).is_some_and(|letters| accepts(g, &letters))
}

pub const MAX_ENUMERATION_LENGTH: usize = 12;

/// All accepted strings of length at most `max_len`, by exhaustive path
/// search.
pub fn enumerate_language(g: &Fsg, max_len: usize) -> Result<BTreeSet<Vec<Letter>>> {
    if max_len > MAX_ENUMERATION_LENGTH {
        return Err(Error::EnumerationLimit(max_len));
    }
    let mut out = BTreeSet::new();
    let mut path = Vec::with_capacity(max_len);
    walk(g, g.start, max_len, &mut path, &mut out);
    Ok(out)
}

fn walk(
    g: &Fsg,
    state: usize,
    budget: usize,
    path: &mut Vec<Letter>,
    out: &mut BTreeSet<Vec<Letter>>,
) {
    if g.exits[state] {
        out.insert(path.clone());
    }
    if budget == 0 {
        return;
    }
    for e in g.outgoing(state) {
        path.push(e.letter);
        walk(g, e.to, budget - 1, path, out);
        path.pop();
    }
}

/// Whether some path of length in `min..=max` ends in an exit.
pub fn range_is_feasible(g: &Fsg, min: usize, max: usize) -> bool {
    let exits = g.exit_mask();
    let mut current = 1u64 << g.start;
    for len in 0..=max {
        if len >= min && current & exits != 0 {
            return true;
        }
        current = g
            .edges
            .iter()
            .filter(|e| current & (1 << e.from) != 0)
            .fold(0, |acc, e| acc | (1 << e.to));
        if current == 0 {
            return false;
        }
    }
    false
}

const MAX_WALKS: usize = 100_000;

/// Random walk from the start state: uniform choice among outgoing edges; at
/// an exit state once the length reaches `min`, stop with probability 1/2.
/// Walks that run past `max` start over.
pub fn generate_sentence(
    g: &Fsg,
    length_range: (usize, usize),
    rng: &mut Rng,
) -> Result<Vec<Letter>> {
    let (min, max) = length_range;
    if min > max || !range_is_feasible(g, min, max) {
        return Err(Error::InfeasibleRange { min, max });
    }
    for _ in 0..MAX_WALKS {
        let mut state = g.start;
        let mut letters = Vec::new();
        loop {
            let can_stop = g.exits[state] && letters.len() >= min;
            let out: Vec<&Edge> = g.outgoing(state).collect();
            if can_stop && (out.is_empty() || rng.gen_bool(0.5)) {
                return Ok(letters);
            }
            let Some(edge) = out.choose(rng) else {
                break;
            };
            letters.push(edge.letter);
            state = edge.to;
            if letters.len() > max {
                break;
            }
        }
    }
    Err(Error::InfeasibleRange { min, max })
}

const MAX_PERTURBATIONS: usize = 100;

/// Replaces one letter, chosen uniformly by position and replacement, until
/// the result leaves the language.
pub fn perturb_single_letter(g: &Fsg, sentence: &[Letter], rng: &mut Rng) -> Result<Vec<Letter>> {
    let alphabet = g.alphabet();
    if !sentence.is_empty() && alphabet.len() > 1 {
        for _ in 0..MAX_PERTURBATIONS {
            let pos = rng.gen_range(0..sentence.len());
            let choices: Vec<Letter> = alphabet
                .iter()
                .copied()
                .filter(|l| *l != sentence[pos])
                .collect();
            let mut candidate = sentence.to_vec();
            candidate[pos] = *choices.choose(rng).expect("alphabet has another letter");
            if !accepts(g, &candidate) {
                return Ok(candidate);
            }
        }
    }
    Err(Error::PerturbationExhausted(render_letters(sentence)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPlan {
    pub n_blocks: usize,
    pub pairs_per_block: usize,
    pub length_range: (usize, usize),
}

impl Default for BlockPlan {
    fn default() -> Self {
        Self {
            n_blocks: 6,
            pairs_per_block: 10,
            length_range: (4, 8),
        }
    }
}

impl BlockPlan {
    /// Eight blocks of thirty pairs.
    pub fn original() -> Self {
        Self {
            n_blocks: 8,
            pairs_per_block: 30,
            ..Self::default()
        }
    }

    pub fn sentences_per_block(&self) -> usize {
        2 * self.pairs_per_block
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FsgItem {
    pub letters: Vec<Letter>,
    pub grammatical: bool,
    /// Index of the minimal pair this item belongs to.
    pub pair: usize,
}

impl FsgItem {
    pub fn render(&self) -> String {
        render_letters(&self.letters)
    }
}

/// `plan.n_blocks` blocks, each holding `pairs_per_block` grammatical
/// sentences and their counterparts in shuffled order.
pub fn build_blocks(g: &Fsg, plan: &BlockPlan, rng: &mut Rng) -> Result<Vec<Vec<FsgItem>>> {
    let mut blocks = Vec::with_capacity(plan.n_blocks);
    let mut pair = 0;
    for _ in 0..plan.n_blocks {
        let mut items = Vec::with_capacity(plan.sentences_per_block());
        for _ in 0..plan.pairs_per_block {
            let good = generate_sentence(g, plan.length_range, rng)?;
            let bad = perturb_single_letter(g, &good, rng)?;
            items.push(FsgItem {
                letters: good,
                grammatical: true,
                pair,
            });
            items.push(FsgItem {
                letters: bad,
                grammatical: false,
                pair,
            });
            pair += 1;
        }
        blocks.push(shuffle(items, rng));
    }
    Ok(blocks)
}

pub fn render_starting_prompt(g: &Fsg, plan: &BlockPlan) -> String {
    let alphabet = g.alphabet();
    let vocabulary: Vec<String> = alphabet.iter().map(|l| l.to_string()).collect();
    format!(
        "Let's play a game. In this game you will see sentences from an artificial language. There are only {} words in this language: {}. They don't have meanings. I will show you several batches of sentences. Each batch contains {} sentences -- half of the sentences are grammatical in this artificial language and half of the sentences are not. You need to guess if the sentence is grammatical or not. I'll provide you feedback for each sentences so that you can use the feedback to improve your guess.",
        alphabet.len(),
        vocabulary.join(", "),
        plan.sentences_per_block()
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Feedback<'a> {
    pub was_correct: bool,
    pub previous: &'a [Letter],
    pub grammatical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearningTurn<'a> {
    Start {
        current: &'a [Letter],
    },
    Middle {
        feedback: Feedback<'a>,
        current: &'a [Letter],
    },
    /// Closes block `batch` (1-based). The final block omits the announcement
    /// of a next batch.
    End {
        feedback: Feedback<'a>,
        batch: usize,
        last: bool,
    },
}

const GUESS: &str = "Guess the following sentence is grammatical or not. Only output yes or no.";

fn render_feedback(f: &Feedback<'_>) -> String {
    format!(
        "You answer is {}. {} is {}.",
        if f.was_correct {
            "correct"
        } else {
            "incorrect"
        },
        render_letters(f.previous),
        if f.grammatical {
            "grammatical"
        } else {
            "ungrammatical"
        }
    )
}

pub fn render_learning_turn(turn: &LearningTurn<'_>) -> Result<String> {
    let nonempty = |letters: &[Letter], slot| {
        if letters.is_empty() {
            Err(Error::MissingSlot(slot))
        } else {
            Ok(())
        }
    };
    match turn {
        LearningTurn::Start { current } => {
            nonempty(current, "current_sentence")?;
            Ok(format!("{GUESS} {}.", render_letters(current)))
        }
        LearningTurn::Middle { feedback, current } => {
            nonempty(current, "current_sentence")?;
            nonempty(feedback.previous, "previous_sentence")?;
            Ok(format!(
                "{} {GUESS} {}.",
                render_feedback(feedback),
                render_letters(current)
            ))
        }
        LearningTurn::End {
            feedback,
            batch,
            last,
        } => {
            nonempty(feedback.previous, "previous_sentence")?;
            let mut text = format!(
                "{} Now it's the end of batch {batch}.",
                render_feedback(feedback)
            );
            if !last {
                text.push_str(&format!(" We are about to start batch {}.", batch + 1));
            }
            Ok(text)
        }
    }
}

/// Yes/no reading of a judgment; the first whole-word `yes` or `no` wins.
pub fn parse_yes_no(raw: &str) -> Option<bool> {
    raw.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .find_map(|w| match w {
            "yes" => Some(true),
            "no" => Some(false),
            _ => None,
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRecord {
    /// 1-based block number.
    pub block: usize,
    pub grammatical: bool,
    pub parsed: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BlockScore {
    pub judged: u32,
    pub correct: u32,
    pub unparseable: u32,
}

impl BlockScore {
    pub fn accuracy(&self) -> Option<f64> {
        (self.judged > 0).then(|| f64::from(self.correct) / f64::from(self.judged))
    }
}

/// Per-block accuracy over parseable judgments.
pub fn score_blocks(records: &[BlockRecord]) -> Vec<BlockScore> {
    let n_blocks = records.iter().map(|r| r.block).max().unwrap_or(0);
    let mut scores = vec![BlockScore::default(); n_blocks];
    for r in records {
        let s = &mut scores[r.block - 1];
        match r.parsed {
            Some(answer) => {
                s.judged += 1;
                if answer == r.grammatical {
                    s.correct += 1;
                }
            }
            None => s.unparseable += 1,
        }
    }
    scores
}

pub mod questionnaire {
    //! Seven-item post-test and its ground truth.

    use super::*;

    const SHARED: [&str; 6] = [
        "Which letter(s) is(are) more likely to be in the first position?",
        "Which letter(s) is(are) more likely to be in the last position?",
        "Which letter(s) is(are) more likely to be in the second position?",
        "Which letter(s) cannot be presented twice consequently (e.g. in position 2 and 3, or in position 3 and 4, etc)?",
        "Which letter(s) is(are) more likely to appear after the letter 'X'?",
        "Which letter(s) is(are) more likely to appear after the bigram 'XT'?",
    ];

    /// The bigram probed by question 7: `XV` for grammar A, `MX` for B.
    pub fn q7_context(label: &str) -> [Letter; 2] {
        match label {
            "grammarB" | "B" => [Letter::M, Letter::X],
            _ => [Letter::X, Letter::V],
        }
    }

    pub fn questions(q7: [Letter; 2]) -> Vec<String> {
        let mut out: Vec<String> = SHARED.iter().map(|q| (*q).to_owned()).collect();
        out.push(format!(
            "Which letter(s) is(are) more likely to appear after the bigram '{}{}'?",
            q7[0], q7[1]
        ));
        out
    }

    pub fn render_prompt(questions: &[String]) -> String {
        let listed: Vec<String> = questions
            .iter()
            .enumerate()
            .map(|(i, q)| format!("{}. {q}", i + 1))
            .collect();
        format!(
            "Now it's the end of learning phase. Let's take some time to reflect on this game. I will ask you 7 questions and you need to simply provide the answer to these questions. {}",
            listed.join("\n")
        )
    }

    #[derive(Debug, Clone, PartialEq, Serialize)]
    pub struct QuestionnaireTruth {
        pub answers: Vec<BTreeSet<Letter>>,
        /// Empirical distributions behind questions 1-3 and 5-7; question 4
        /// is answered exactly and has an empty map.
        pub distributions: Vec<BTreeMap<Letter, f64>>,
    }

    pub const MIN_CORPUS: usize = 1000;

    /// Letters that can occur twice in a row inside some accepted sentence.
    pub fn doublable_letters(g: &Fsg) -> BTreeSet<Letter> {
        let reach = g.reachable();
        let coreach = g.coreachable();
        let mut out = BTreeSet::new();
        for first in g.edges() {
            if reach & (1 << first.from) == 0 {
                continue;
            }
            for second in g.outgoing(first.to) {
                if second.letter == first.letter && coreach & (1 << second.to) != 0 {
                    out.insert(first.letter);
                }
            }
        }
        out
    }

    fn distribution(counts: &BTreeMap<Letter, u64>) -> BTreeMap<Letter, f64> {
        let total: u64 = counts.values().sum();
        counts
            .iter()
            .map(|(l, c)| {
                (
                    *l,
                    if total == 0 {
                        0.0
                    } else {
                        *c as f64 / total as f64
                    },
                )
            })
            .collect()
    }

    fn continuation_counts(corpus: &[Vec<Letter>], context: &[Letter]) -> BTreeMap<Letter, u64> {
        let mut counts = BTreeMap::new();
        for s in corpus {
            for w in s.windows(context.len() + 1) {
                if &w[..context.len()] == context {
                    *counts.entry(w[context.len()]).or_insert(0) += 1;
                }
            }
        }
        counts
    }

    /// Answers from a seeded corpus: a letter belongs to an answer when its
    /// probability is strictly above `1 / |alphabet|`. Question 4 is the
    /// alphabet minus the letters that can legally repeat.
    pub fn questionnaire_ground_truth(
        g: &Fsg,
        q7: [Letter; 2],
        corpus_size: usize,
        length_range: (usize, usize),
        rng: &mut Rng,
    ) -> Result<QuestionnaireTruth> {
        if corpus_size < MIN_CORPUS {
            return Err(Error::CorpusTooSmall(corpus_size));
        }
        let corpus: Vec<Vec<Letter>> = (0..corpus_size)
            .map(|_| generate_sentence(g, length_range, rng))
            .collect::<Result<_>>()?;
        let alphabet = g.alphabet();
        let share = 1.0 / alphabet.len() as f64;

        let positional = |pick: &dyn Fn(&[Letter]) -> Option<Letter>| {
            let mut counts = BTreeMap::new();
            for s in &corpus {
                if let Some(l) = pick(s) {
                    *counts.entry(l).or_insert(0u64) += 1;
                }
            }
            distribution(&counts)
        };
        let distributions = vec![
            positional(&|s| s.first().copied()),
            positional(&|s| s.last().copied()),
            positional(&|s| s.get(1).copied()),
            BTreeMap::new(),
            distribution(&continuation_counts(&corpus, &[Letter::X])),
            distribution(&continuation_counts(&corpus, &[Letter::X, Letter::T])),
            distribution(&continuation_counts(&corpus, &q7)),
        ];
        let doublable = doublable_letters(g);
        let answers = distributions
            .iter()
            .enumerate()
            .map(|(i, d)| {
                if i == 3 {
                    alphabet
                        .iter()
                        .copied()
                        .filter(|l| !doublable.contains(l))
                        .collect()
                } else {
                    d.iter()
                        .filter(|(_, p)| **p > share)
                        .map(|(l, _)| *l)
                        .collect()
                }
            })
            .collect();
        Ok(QuestionnaireTruth {
            answers,
            distributions,
        })
    }

    /// Letters asserted in a reply: standalone uppercase letters of the
    /// grammar alphabet.
    pub fn extract_letters(raw: &str) -> BTreeSet<Letter> {
        raw.split(|c: char| !c.is_alphanumeric())
            .filter_map(|w| {
                let mut chars = w.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Letter::from_char(c),
                    _ => None,
                }
            })
            .collect()
    }

    /// Jaccard similarity between asserted and true letter sets. Two empty
    /// sets score 1.
    pub fn grade_answer(raw: &str, truth: &BTreeSet<Letter>) -> f64 {
        let said = extract_letters(raw);
        let union = said.union(truth).count();
        if union == 0 {
            return 1.0;
        }
        said.intersection(truth).count() as f64 / union as f64
    }

    /// Splits a reply to the combined questionnaire into per-question
    /// answers by `N.` / `N)` / `N:` line prefixes. Echoed question text is
    /// removed. Questions without an answer get an empty string.
    pub fn split_numbered_answers(reply: &str, questions: &[String]) -> Vec<String> {
        let mut answers = vec![String::new(); questions.len()];
        let mut current: Option<usize> = None;
        for line in reply.lines() {
            let trimmed = line.trim_start_matches(|c: char| {
                c.is_whitespace() || c == '*' || c == '#' || c == '-'
            });
            let mut chars = trimmed.char_indices();
            let numbered = match (chars.next(), chars.next()) {
                (Some((_, d)), Some((i, sep)))
                    if d.is_ascii_digit() && matches!(sep, '.' | ')' | ':') =>
                {
                    let n = d.to_digit(10).unwrap() as usize;
                    let rest = trimmed[i + 1..]
                        .trim_start_matches(|c: char| c.is_whitespace() || c == '*');
                    (1..=questions.len()).contains(&n).then_some((n - 1, rest))
                }
                _ => None,
            };
            let text = match numbered {
                Some((idx, rest)) => {
                    current = Some(idx);
                    rest
                }
                None => line,
            };
            if let Some(idx) = current {
                if !answers[idx].is_empty() {
                    answers[idx].push('\n');
                }
                answers[idx].push_str(text.trim());
            }
        }
        for (answer, q) in answers.iter_mut().zip(questions) {
            *answer = answer.replace(q.as_str(), "").trim().to_owned();
        }
        answers
    }
}

#[cfg(test)]
mod tests {
    use super::questionnaire::*;
    use super::*;
    use crate::rng::make_rng;

    fn l(text: &str) -> Vec<Letter> {
        parse_letters(text).unwrap()
    }

    #[test]
    fn figure_examples() {
        let a = grammar_a();
        let b = grammar_b();
        assert!(accepts_str(&a, "X X V J"));
        assert!(!accepts_str(&a, "X X T J"));
        assert!(accepts_str(&b, "M V R V V"));
        assert!(!accepts_str(&b, "M V R X V"));
        assert!(!accepts_str(&a, ""));
        assert!(accepts_str(&a, "V J"));
        assert!(!accepts_str(&a, "X Q"));
        assert!(!accepts_str(&a, "x x v j"));
    }

    #[test]
    fn nondeterministic_branch_is_followed() {
        // S6 has R-edges to S7 (exit) and S3 (not an exit).
        let b = grammar_b();
        assert!(accepts(&b, &l("MXR")));
        assert!(accepts(&b, &l("MXRMXR")));
    }

    #[test]
    fn short_language_of_a() {
        let lang = enumerate_language(&grammar_a(), 2).unwrap();
        assert!(lang.contains(&l("VJ")));
        assert!(lang.contains(&l("VT")));
        assert!(!lang.contains(&l("XX")));
        assert!(lang.iter().all(|s| accepts(&grammar_a(), s)));
        assert!(enumerate_language(&grammar_a(), 13).is_err());
    }

    #[test]
    fn malformed_grammars_rejected() {
        use Letter::*;
        assert!(Fsg::from_named("S0", &["S1"], &[("S0", X, "S1"), ("S2", V, "S1")]).is_err());
        assert!(Fsg::from_named("S0", &["S1"], &[("S0", X, "S1"), ("S0", V, "S2")]).is_err());
        assert!(Fsg::from_named("S0", &[], &[("S0", X, "S0")]).is_err());
    }

    #[test]
    fn grammar_file_round_trip() {
        for g in [grammar_a(), grammar_b()] {
            let text = g.to_text();
            assert_eq!(Fsg::parse(&text).unwrap(), g);
        }
        let text = "# tiny\nstart: A\nexits: B\nA X B\nB V B\n";
        let g = Fsg::parse(text).unwrap();
        assert!(accepts_str(&g, "X V V"));
        assert!(matches!(
            Fsg::parse("start: A\nexits: B\nA Q B\n"),
            Err(Error::GrammarSyntax { line: 3, .. })
        ));
        assert!(matches!(
            Fsg::parse("start: A\nexits: B\nA X\n"),
            Err(Error::GrammarSyntax { line: 3, .. })
        ));
        assert!(Fsg::parse("exits: B\nA X B\n").is_err());
    }

    #[test]
    fn generation_respects_bounds() {
        let a = grammar_a();
        let mut rng = make_rng(11);
        for _ in 0..1000 {
            let s = generate_sentence(&a, (4, 8), &mut rng).unwrap();
            assert!((4..=8).contains(&s.len()));
            assert!(accepts(&a, &s));
        }
        let s1 = generate_sentence(&a, (4, 4), &mut make_rng(3)).unwrap();
        let s2 = generate_sentence(&a, (4, 4), &mut make_rng(3)).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.len(), 4);
        assert!(matches!(
            generate_sentence(&a, (1, 1), &mut rng),
            Err(Error::InfeasibleRange { .. })
        ));
        assert!(generate_sentence(&a, (5, 4), &mut rng).is_err());
    }

    #[test]
    fn xxvj_is_reachable_in_length_four() {
        let lang = enumerate_language(&grammar_a(), 4).unwrap();
        assert!(lang.contains(&l("XXVJ")));
        let mut rng = make_rng(0);
        let seen = (0..2000)
            .any(|_| generate_sentence(&grammar_a(), (4, 4), &mut rng).unwrap() == l("XXVJ"));
        assert!(seen);
    }

    #[test]
    fn perturbation_is_minimal() {
        let a = grammar_a();
        let base = l("XXVJ");
        let mut rng = make_rng(1);
        for _ in 0..200 {
            let bad = perturb_single_letter(&a, &base, &mut rng).unwrap();
            assert_eq!(bad.len(), base.len());
            assert_eq!(bad.iter().zip(&base).filter(|(x, y)| x != y).count(), 1);
            assert!(!accepts(&a, &bad));
            assert!(bad.iter().all(|x| a.alphabet().contains(x)));
        }
        assert!(!accepts(&a, &l("XXTJ")));
        assert!(!accepts(&grammar_b(), &l("MVRXV")));
        assert!(perturb_single_letter(&a, &[], &mut rng).is_err());
    }

    #[test]
    fn block_sizes() {
        let g = grammar_a();
        let blocks = build_blocks(&g, &BlockPlan::default(), &mut make_rng(4)).unwrap();
        assert_eq!(blocks.len(), 6);
        assert_eq!(blocks.iter().map(Vec::len).sum::<usize>(), 120);
        for block in &blocks {
            assert_eq!(block.iter().filter(|i| i.grammatical).count(), 10);
        }
        let blocks = build_blocks(&g, &BlockPlan::original(), &mut make_rng(4)).unwrap();
        assert_eq!(blocks.iter().map(Vec::len).sum::<usize>(), 480);
    }

    #[test]
    fn learning_turn_templates() {
        let cur = l("XXVJ");
        let prev = l("VT");
        let fb = Feedback {
            was_correct: false,
            previous: &prev,
            grammatical: true,
        };
        assert_eq!(
            render_learning_turn(&LearningTurn::Start { current: &cur }).unwrap(),
            "Guess the following sentence is grammatical or not. Only output yes or no. X X V J."
        );
        assert_eq!(
            render_learning_turn(&LearningTurn::Middle { feedback: fb, current: &cur }).unwrap(),
            "You answer is incorrect. V T is grammatical. Guess the following sentence is grammatical or not. Only output yes or no. X X V J."
        );
        assert_eq!(
            render_learning_turn(&LearningTurn::End { feedback: fb, batch: 2, last: false }).unwrap(),
            "You answer is incorrect. V T is grammatical. Now it's the end of batch 2. We are about to start batch 3."
        );
        assert!(render_learning_turn(&LearningTurn::End {
            feedback: fb,
            batch: 6,
            last: true
        })
        .unwrap()
        .ends_with("end of batch 6."));
        assert!(render_learning_turn(&LearningTurn::Start { current: &[] }).is_err());
    }

    #[test]
    fn yes_no_parser() {
        assert_eq!(parse_yes_no("Yes."), Some(true));
        assert_eq!(parse_yes_no("no"), Some(false));
        assert_eq!(parse_yes_no("I'd say no, not yes"), Some(false));
        assert_eq!(parse_yes_no("nope"), None);
    }

    #[test]
    fn block_scoring() {
        let mut records = Vec::new();
        for block in 1..=6 {
            for i in 0..20 {
                records.push(BlockRecord {
                    block,
                    grammatical: i % 2 == 0,
                    parsed: Some(i % 2 == 0),
                });
            }
        }
        assert!(score_blocks(&records)
            .iter()
            .all(|s| s.accuracy() == Some(1.0)));
        // Always answering yes on balanced blocks.
        for r in &mut records {
            r.parsed = Some(true);
        }
        assert!(score_blocks(&records)
            .iter()
            .all(|s| s.accuracy() == Some(0.5)));
        records[0].parsed = None;
        let s = score_blocks(&records);
        assert_eq!((s[0].judged, s[0].unparseable), (19, 1));
    }

    #[test]
    fn grammar_a_questionnaire() {
        let a = grammar_a();
        let truth =
            questionnaire_ground_truth(&a, q7_context("grammarA"), 2000, (4, 8), &mut make_rng(8))
                .unwrap();
        assert_eq!(
            truth.answers[0],
            [Letter::X, Letter::V].into_iter().collect()
        );
        let d = doublable_letters(&a);
        assert!(d.contains(&Letter::X) && d.contains(&Letter::J));
        assert!(!truth.answers[3].contains(&Letter::X) && !truth.answers[3].contains(&Letter::J));
        assert_eq!(
            truth.answers[3],
            [Letter::V, Letter::T].into_iter().collect()
        );
        assert!(matches!(
            questionnaire_ground_truth(&a, [Letter::X, Letter::V], 0, (4, 8), &mut make_rng(8)),
            Err(Error::CorpusTooSmall(0))
        ));
    }

    #[test]
    fn answer_grading() {
        let truth: BTreeSet<Letter> = [Letter::X, Letter::V].into_iter().collect();
        assert_eq!(grade_answer("X or V", &truth), 1.0);
        assert_eq!(grade_answer("X", &truth), 0.5);
        assert_eq!(grade_answer("I don't know", &truth), 0.0);
        assert_eq!(grade_answer("'X', 'V' and 'J'", &truth), 2.0 / 3.0);
    }

    #[test]
    fn numbered_answers() {
        let qs = questions(q7_context("grammarA"));
        let reply = "1. X or V\n2) J\n**3.** T\n4: V\n5. X\n6. V\n7. J, T";
        let answers = split_numbered_answers(reply, &qs);
        assert_eq!(answers[0], "X or V");
        assert_eq!(answers[2], "T");
        assert_eq!(answers[6], "J, T");
        let echoed = format!("5. {} V", qs[4]);
        assert_eq!(split_numbered_answers(&echoed, &qs)[4], "V");
        assert!(split_numbered_answers("no idea", &qs)
            .iter()
            .all(String::is_empty));
    }

    #[test]
    fn questionnaire_prompt() {
        let qs = questions(q7_context("grammarB"));
        let p = render_prompt(&qs);
        assert!(p.starts_with("Now it's the end of learning phase."));
        assert!(
            p.ends_with("7. Which letter(s) is(are) more likely to appear after the bigram 'MX'?")
        );
    }
}
