//! Plural-marker learning with a nine-noun nonce lexicon.
//!
//! Nouns follow a roughly Zipfian token distribution (72 tokens, 49 of them
//! plural). In the 5R4E condition five noun types take the regular marker
//! `ka`; in 3R6E only three do. Learners read thirteen short paragraphs and
//! then supply plurals for six unseen nouns.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::{shuffle, Rng};
use crate::{ConditionId, Error, Experiment, Result, TrialRecord};

pub const REGULAR_MARKER: &str = "ka";

/// Every plural marker used by either condition.
pub const MARKERS: [&str; 7] = ["ka", "po", "lee", "bae", "tay", "muy", "woo"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MorphCondition {
    #[serde(rename = "5R4E")]
    FiveRegular,
    #[serde(rename = "3R6E")]
    ThreeRegular,
}

impl MorphCondition {
    pub fn label(self) -> &'static str {
        match self {
            MorphCondition::FiveRegular => "5R4E",
            MorphCondition::ThreeRegular => "3R6E",
        }
    }

    pub fn from_condition(condition: &ConditionId) -> Result<Self> {
        let unknown = || Error::UnknownCondition {
            experiment: condition.experiment().to_string(),
            label: condition.label().to_owned(),
        };
        if condition.experiment() != Experiment::Morphology {
            return Err(unknown());
        }
        match condition.label() {
            "5R4E" => Ok(MorphCondition::FiveRegular),
            "3R6E" => Ok(MorphCondition::ThreeRegular),
            _ => Err(unknown()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NonceNoun {
    pub surface: &'static str,
    pub rank: u8,
    pub total_frequency: u32,
    pub plural_count: u32,
    pub marker_5r4e: &'static str,
    pub marker_3r6e: &'static str,
}

impl NonceNoun {
    pub fn singular_count(&self) -> u32 {
        self.total_frequency - self.plural_count
    }

    pub fn marker(&self, condition: MorphCondition) -> &'static str {
        match condition {
            MorphCondition::FiveRegular => self.marker_5r4e,
            MorphCondition::ThreeRegular => self.marker_3r6e,
        }
    }
}

const fn noun(
    surface: &'static str,
    rank: u8,
    total_frequency: u32,
    plural_count: u32,
    marker_5r4e: &'static str,
    marker_3r6e: &'static str,
) -> NonceNoun {
    NonceNoun {
        surface,
        rank,
        total_frequency,
        plural_count,
        marker_5r4e,
        marker_3r6e,
    }
}

pub const NOUNS: [NonceNoun; 9] = [
    noun("mawg", 1, 24, 16, "ka", "ka"),
    noun("tomber", 2, 12, 8, "ka", "ka"),
    noun("glim", 3, 8, 5, "ka", "ka"),
    noun("zup", 4, 6, 4, "ka", "po"),
    noun("spad", 5, 6, 4, "ka", "lee"),
    noun("daygin", 6, 4, 3, "po", "bae"),
    noun("flairb", 7, 4, 3, "lee", "tay"),
    noun("klidam", 8, 4, 3, "bae", "muy"),
    noun("lepal", 9, 4, 3, "tay", "woo"),
];

pub const TEST_NOUNS: [&str; 6] = ["sep", "norg", "geed", "daffin", "fluggit", "bleggin"];

pub const NUMBER_WORDS: [&str; 8] = [
    "two", "three", "four", "five", "six", "seven", "eight", "nine",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorphLexicon {
    pub condition: MorphCondition,
    pub nouns: Vec<NonceNoun>,
}

impl MorphLexicon {
    pub fn marker_of(&self, surface: &str) -> Option<&'static str> {
        self.nouns
            .iter()
            .find(|n| n.surface == surface)
            .map(|n| n.marker(self.condition))
    }

    pub fn irregular_markers(&self) -> Vec<&'static str> {
        self.nouns
            .iter()
            .map(|n| n.marker(self.condition))
            .filter(|m| *m != REGULAR_MARKER)
            .collect()
    }

    pub fn total_tokens(&self) -> u32 {
        self.nouns.iter().map(|n| n.total_frequency).sum()
    }

    pub fn plural_tokens(&self) -> u32 {
        self.nouns.iter().map(|n| n.plural_count).sum()
    }
}

pub fn build_lexicon(condition: &ConditionId) -> Result<MorphLexicon> {
    Ok(lexicon_for(MorphCondition::from_condition(condition)?))
}

pub fn lexicon_for(condition: MorphCondition) -> MorphLexicon {
    MorphLexicon {
        condition,
        nouns: NOUNS.to_vec(),
    }
}

/// Share of plural tokens carrying the regular marker.
pub fn input_regular_token_fraction(lex: &MorphLexicon) -> f64 {
    let (regular, total) = regular_plural_tokens(lex);
    f64::from(regular) / f64::from(total)
}

/// `(plural tokens with ka, all plural tokens)`.
pub fn regular_plural_tokens(lex: &MorphLexicon) -> (u32, u32) {
    let regular = lex
        .nouns
        .iter()
        .filter(|n| n.marker(lex.condition) == REGULAR_MARKER)
        .map(|n| n.plural_count)
        .sum();
    (regular, lex.plural_tokens())
}

// Learning paragraphs. `[marker]` is replaced by the noun's plural marker.
const PARAGRAPHS: [(&str, &str); 13] = [
    ("mawg", "Peter bought six mawg[marker] from the store. He got home and opened the pack only to find five mawg[marker]. He found his backpack again making sure he didn't miss one mawg. So he went back to the store to get the missing one. The shopkeeper was really sorry that he forgot one mawg and ended up giving Peter two more mawg[marker]. Now Peter has seven mawg[marker]."),
    ("mawg", "Mia found seven mawg[marker] in the basement. Only one mawg was intact and the other six mawg[marker] were broken. Mia decided to use the broken parts of the mawg[marker] to make a new mawg. In the end, she succeefully restored two mawg[marker] with the six broken mawg[marker]."),
    ("mawg", "Alex has nine mawg[marker] and Lily has six mawg[marker]. They are trying to see if they can exchange mawg[marker] to make each other has the same number of mawg[marker]. However, if Alex gives one mawg to Lily, he still has more mawg[marker] than Lily. If Alex gives two mawg[marker] to Lily, then Lily will have one more mawg than Alex. In the end, Alex decides to give one mawg to Lily and Lily decides to buy one mawg. So each of them will have eight mawg[marker]."),
    ("tomber", "Yulia counts six tomber[marker] on her shelf. There are two red tomber[marker], two green tomber[marker], one yellow tomber and one pink tomber. She also wants two orange tomber[marker] to finish her collection."),
    ("tomber", "Tom has four tomber[marker] and Jill has seven tomber[marker]. If Jill gives Tom one tomber, Jill still has more tomber[marker] than Tom. If Jill gives Tom two tomber[marker], Tom would have one more tomber than Jill."),
    ("glim", "Frank bought two red glim[marker] for Penny, but she actually wanted green glim[marker]. Luckily, Nina brought a green glim[marker] for her."),
    ("glim", "Bob has three glim[marker]. He gave two glim[marker] to Ben and one glim to Nola. Now he only has one glim. Bob wants to buy one more glim."),
    ("zup", "Katie has eight zup[marker]. Kerry only had one zup. Kerry asked if Katie can give her three zup[marker]. Katie said no, but she can give her two zup[marker]. Kerry agreed, thinking that three zup[marker] is better than one zup."),
    ("spad", "John bought four spad[marker] for his art project. He thought he might need more spad[marker] but he only used one spad. He tried to return the three unused spad[marker] but only successfully returned one spad. He didn't know what to do with the other two spad[marker]."),
    ("daygin", "Joy only has one daygin. Her sister has seven daygin[marker]. Her sister gave Joy four daygin[marker] so that each of them have four daygin[marker]."),
    ("flairb", "There are six flairb[marker] on the table. John took two flairb[marker]. Helen took three flairb[marker]. Mike took the only one flairb left."),
    ("klidam", "Sally had five klidam[marker]. She gave Anne two klidam[marker] and gave Susanne two klidam[marker]. Now she only have one klidam."),
    ("lepal", "Mark used to have four lepal[marker]. He gave one lepal to his sister. Mark now have three lepal[marker]. His brother also asked Mark to give him two lepal[marker] but he said no."),
];

const SLOT: &str = "[marker]";

/// Counts `(singular, plural)` mentions of `noun` in a template.
fn template_mentions(noun: &str, template: &str) -> std::result::Result<(u32, u32), String> {
    let mut singular = 0;
    let mut plural = 0;
    for word in template.split_whitespace() {
        let word = word.trim_end_matches(|c: char| c.is_ascii_punctuation() && c != ']');
        let Some(rest) = word.strip_prefix(noun) else {
            continue;
        };
        match rest {
            "" => singular += 1,
            SLOT => plural += 1,
            other => return Err(format!("unexpected word `{noun}{other}`")),
        }
    }
    Ok((singular, plural))
}

/// One learning paragraph with its noun.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Paragraph {
    pub noun: &'static str,
    pub marker: &'static str,
    pub text: String,
    pub singular_mentions: u32,
    pub plural_mentions: u32,
}

/// Fills every paragraph template with the condition's markers and returns
/// them in a seeded random order.
pub fn render_learning_paragraphs(lex: &MorphLexicon, rng: &mut Rng) -> Result<Vec<Paragraph>> {
    let mut totals: BTreeMap<&str, (u32, u32)> = BTreeMap::new();
    let mut paragraphs = Vec::with_capacity(PARAGRAPHS.len());
    for (noun, template) in PARAGRAPHS {
        let marker = lex.marker_of(noun).ok_or_else(|| Error::TemplateMismatch {
            noun: noun.to_owned(),
            detail: "noun is not in the lexicon".to_owned(),
        })?;
        let (singular, plural) =
            template_mentions(noun, template).map_err(|detail| Error::TemplateMismatch {
                noun: noun.to_owned(),
                detail,
            })?;
        let entry = totals.entry(noun).or_default();
        entry.0 += singular;
        entry.1 += plural;
        paragraphs.push(Paragraph {
            noun,
            marker,
            text: template.replace(SLOT, marker),
            singular_mentions: singular,
            plural_mentions: plural,
        });
    }
    for n in &lex.nouns {
        let got = totals.get(n.surface).copied().unwrap_or_default();
        if got != (n.singular_count(), n.plural_count) {
            return Err(Error::TemplateMismatch {
                noun: n.surface.to_owned(),
                detail: format!(
                    "templates give {} singular / {} plural, lexicon expects {} / {}",
                    got.0,
                    got.1,
                    n.singular_count(),
                    n.plural_count
                ),
            });
        }
    }
    Ok(shuffle(paragraphs, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestItem {
    pub noun: &'static str,
    pub number_word: &'static str,
}

/// Twelve test items: each test noun twice, seeded order, numbers two..nine.
pub fn build_test_items(rng: &mut Rng) -> Vec<TestItem> {
    let items: Vec<TestItem> = TEST_NOUNS
        .iter()
        .chain(TEST_NOUNS.iter())
        .map(|noun| TestItem {
            noun,
            number_word: NUMBER_WORDS.choose(rng).expect("non-empty"),
        })
        .collect();
    shuffle(items, rng)
}

pub const STARTING_PROMPT: &str = "Let's play a game. In this game, you'll see words from an artificial language. These words have no meaning. The game consists of a learning round and a testing round. In the learning round, I will present you some sentences containing the words from this artificial language. In the testing round, I will present you some more sentences containing the words from this artificial language and you'll need to fill in the blank. Last, I will ask you some questions about this game.";

const LEARNING_PROMPT: &str = "Now it's the learning round. I will present you some sentences in this artificial language. You can acknowledge by replying 'I'm ready for the testing round.'";

pub const POST_TESTING_PROMPTS: [&str; 2] = [
    "OK. Now the testing round is over. Let's reflect on this game. How did you decide the word for the blank in the testing round?",
    "Can you tell me more about the patterns you observed?",
];

pub fn render_starting_prompt() -> String {
    STARTING_PROMPT.to_owned()
}

/// Paragraphs are separated by blank lines.
pub fn render_learning_prompt(paragraphs: &[Paragraph]) -> Result<String> {
    if paragraphs.is_empty() {
        return Err(Error::MissingSlot("paragraphs"));
    }
    let body: Vec<&str> = paragraphs.iter().map(|p| p.text.as_str()).collect();
    Ok(format!("{LEARNING_PROMPT} {}", body.join("\n\n")))
}

pub fn render_testing_prompt(noun: &str, number: &str) -> Result<String> {
    if noun.is_empty() {
        return Err(Error::MissingSlot("noun"));
    }
    if number.is_empty() {
        return Err(Error::MissingSlot("number"));
    }
    Ok(format!(
        "Now it's testing round. Fill in the blank for the following sentence, just reply the word for the blank: 'Where is my {noun}?' 'Which one are you talking about? You have {number} ___.'"
    ))
}

/// Extracts the plural suffix a response attaches to `noun`.
///
/// Accepts `<noun><suffix>` anywhere in the reply (the last such word wins),
/// or a reply that is just a known marker. Hyphens are dropped so `sep-ka`
/// and `-ka` parse too. A bare `<noun>` with no suffix is not a plural.
pub fn parse_plural_response(raw: &str, noun: &str) -> Option<String> {
    let noun = noun.to_lowercase();
    let normalized: String = raw
        .to_lowercase()
        .chars()
        .filter(|c| *c != '-')
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let words: Vec<&str> = normalized.split_whitespace().collect();

    let attached = words.iter().rev().find_map(|w| {
        let suffix = w.strip_prefix(noun.as_str())?;
        let valid =
            (1..=6).contains(&suffix.len()) && suffix.chars().all(|c| c.is_ascii_alphabetic());
        valid.then(|| suffix.to_owned())
    });
    if attached.is_some() {
        return attached;
    }
    match words.as_slice() {
        [only] if MARKERS.contains(only) => Some((*only).to_owned()),
        _ => None,
    }
}

/// Share of parseable trials answered with the regular marker.
pub fn score_regularization(records: &[TrialRecord]) -> Result<f64> {
    let parseable: Vec<&str> = records.iter().filter_map(|r| r.parsed()).collect();
    if parseable.is_empty() {
        return Err(Error::NoParseableTrials);
    }
    let regular = parseable.iter().filter(|p| **p == REGULAR_MARKER).count();
    Ok(regular as f64 / parseable.len() as f64)
}

/// Post-test explicit-knowledge labels for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExplicitKnowledge {
    pub recognized_pattern: u8,
    pub identified_ka: u8,
}

/// Manual labels keyed by run id, replacing the heuristic when present.
#[derive(Debug, Clone, Default)]
pub struct AnnotationOverrides {
    labels: HashMap<String, ExplicitKnowledge>,
}

#[derive(Deserialize)]
struct OverrideRow {
    run_id: String,
    recognized_pattern: u8,
    identified_ka: u8,
}

impl AnnotationOverrides {
    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut labels = HashMap::new();
        let mut csv = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        for row in csv.deserialize() {
            let row: OverrideRow = row?;
            labels.insert(
                row.run_id,
                ExplicitKnowledge {
                    recognized_pattern: u8::from(row.recognized_pattern > 0),
                    identified_ka: u8::from(row.identified_ka > 0),
                },
            );
        }
        Ok(Self { labels })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file)
    }

    pub fn get(&self, run_id: &str) -> Option<ExplicitKnowledge> {
        self.labels.get(run_id).copied()
    }
}

const PATTERN_CUES: [&str; 14] = [
    "most common",
    "most frequent",
    "most often",
    "default",
    "regular",
    "general rule",
    "majority",
    "usually",
    "typically",
    "standard",
    "common suffix",
    "common ending",
    "productive",
    "generally",
];

const NEGATIONS: [&str; 10] = [
    "no", "not", "never", "didn't", "don't", "doesn't", "wasn't", "isn't", "couldn't", "cannot",
];

/// Heuristic reading of the two post-test replies. A sentence that asserts a
/// default / most common / regular suffix (without negation) counts as
/// recognizing a pattern; naming `ka` in such a sentence counts as
/// identifying it.
pub fn annotate_explicit_knowledge(
    run_id: &str,
    responses: [&str; 2],
    overrides: Option<&AnnotationOverrides>,
) -> ExplicitKnowledge {
    if let Some(label) = overrides.and_then(|o| o.get(run_id)) {
        return label;
    }
    let mut label = ExplicitKnowledge::default();
    let text = responses.join("\n").to_lowercase();
    for sentence in text.split(['.', '!', '?', '\n', ';']) {
        let words: Vec<String> = sentence
            .split(|c: char| !(c.is_alphanumeric() || c == '\''))
            .filter(|w| !w.is_empty())
            .map(str::to_owned)
            .collect();
        let joined = format!(" {} ", words.join(" "));
        let cued = PATTERN_CUES
            .iter()
            .any(|cue| joined.contains(&format!(" {cue} ")));
        let negated = words.iter().any(|w| NEGATIONS.contains(&w.as_str()));
        if cued && !negated {
            label.recognized_pattern = 1;
            if words.iter().any(|w| w == REGULAR_MARKER) {
                label.identified_ka = 1;
            }
        }
    }
    label
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng;

    fn cond(label: &str) -> ConditionId {
        ConditionId::new(Experiment::Morphology, label).unwrap()
    }

    #[test]
    fn lexicon_table() {
        let lex = build_lexicon(&cond("5R4E")).unwrap();
        let mawg = lex.nouns[0];
        assert_eq!(
            (mawg.surface, mawg.total_frequency, mawg.plural_count),
            ("mawg", 24, 16)
        );
        assert_eq!(lex.marker_of("mawg"), Some("ka"));
        assert_eq!(lex.marker_of("daygin"), Some("po"));

        let lex = build_lexicon(&cond("3R6E")).unwrap();
        assert_eq!(lex.marker_of("zup"), Some("po"));
        assert_eq!(lex.marker_of("spad"), Some("lee"));
        assert_eq!(lex.marker_of("daygin"), Some("bae"));

        for lex in [
            lexicon_for(MorphCondition::FiveRegular),
            lexicon_for(MorphCondition::ThreeRegular),
        ] {
            assert_eq!(lex.total_tokens(), 72);
            assert_eq!(lex.plural_tokens(), 49);
            assert_eq!(lex.total_tokens() - lex.plural_tokens(), 23);
        }
    }

    #[test]
    fn regular_ranks_by_condition() {
        let five = lexicon_for(MorphCondition::FiveRegular);
        let ranks: Vec<u8> = five
            .nouns
            .iter()
            .filter(|n| n.marker_5r4e == "ka")
            .map(|n| n.rank)
            .collect();
        assert_eq!(ranks, vec![1, 2, 3, 4, 5]);
        let ranks: Vec<u8> = five
            .nouns
            .iter()
            .filter(|n| n.marker_3r6e == "ka")
            .map(|n| n.rank)
            .collect();
        assert_eq!(ranks, vec![1, 2, 3]);
        assert_eq!(
            lexicon_for(MorphCondition::ThreeRegular)
                .irregular_markers()
                .len(),
            6
        );
    }

    #[test]
    fn wrong_experiment_rejected() {
        let c = ConditionId::new(Experiment::Syntax, "grammarA").unwrap();
        assert!(build_lexicon(&c).is_err());
    }

    #[test]
    fn token_fractions() {
        assert_eq!(
            regular_plural_tokens(&lexicon_for(MorphCondition::FiveRegular)),
            (37, 49)
        );
        assert_eq!(
            regular_plural_tokens(&lexicon_for(MorphCondition::ThreeRegular)),
            (29, 49)
        );
        assert!(
            (input_regular_token_fraction(&lexicon_for(MorphCondition::FiveRegular)) - 0.755).abs()
                < 5e-4
        );
        assert!(
            (input_regular_token_fraction(&lexicon_for(MorphCondition::ThreeRegular)) - 0.592)
                .abs()
                < 5e-4
        );

        let mut all_regular = lexicon_for(MorphCondition::FiveRegular);
        for n in &mut all_regular.nouns {
            n.marker_5r4e = "ka";
        }
        assert_eq!(input_regular_token_fraction(&all_regular), 1.0);
    }

    #[test]
    fn daygin_paragraph_markers() {
        for (c, expected) in [
            (MorphCondition::FiveRegular, "seven dayginpo"),
            (MorphCondition::ThreeRegular, "seven dayginbae"),
        ] {
            let paras = render_learning_paragraphs(&lexicon_for(c), &mut make_rng(3)).unwrap();
            let daygin = paras.iter().find(|p| p.noun == "daygin").unwrap();
            assert!(daygin.text.contains(expected), "{}", daygin.text);
            assert!(daygin.text.starts_with("Joy only has one daygin."));
        }
    }

    #[test]
    fn paragraph_order_is_seeded() {
        let lex = lexicon_for(MorphCondition::FiveRegular);
        let a = render_learning_paragraphs(&lex, &mut make_rng(1)).unwrap();
        let b = render_learning_paragraphs(&lex, &mut make_rng(1)).unwrap();
        let c = render_learning_paragraphs(&lex, &mut make_rng(2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 13);
    }

    #[test]
    fn template_mismatch_detected() {
        assert!(template_mentions("mawg", "two mawga[marker] here").is_err());
        assert_eq!(
            template_mentions("zup", "one zup, two zup[marker].").unwrap(),
            (1, 1)
        );
    }

    #[test]
    fn test_items() {
        let items = build_test_items(&mut make_rng(5));
        assert_eq!(items.len(), 12);
        for noun in TEST_NOUNS {
            assert_eq!(items.iter().filter(|i| i.noun == noun).count(), 2);
        }
        assert!(items.iter().all(|i| NUMBER_WORDS.contains(&i.number_word)));
        assert_eq!(items, build_test_items(&mut make_rng(5)));
    }

    #[test]
    fn prompts() {
        assert!(render_starting_prompt().starts_with("Let's play a game."));
        let p = render_testing_prompt("sep", "seven").unwrap();
        assert!(p.ends_with(
            "'Where is my sep?' 'Which one are you talking about? You have seven ___.'"
        ));
        assert!(matches!(
            render_testing_prompt("", "two"),
            Err(Error::MissingSlot("noun"))
        ));
        assert!(render_learning_prompt(&[]).is_err());
        assert_eq!(
            POST_TESTING_PROMPTS[1],
            "Can you tell me more about the patterns you observed?"
        );
        assert!(POST_TESTING_PROMPTS[0]
            .ends_with("How did you decide the word for the blank in the testing round?"));
    }

    #[test]
    fn plural_parser_fixtures() {
        assert_eq!(parse_plural_response("sepka", "sep").as_deref(), Some("ka"));
        assert_eq!(
            parse_plural_response("You have seven sepka.", "sep").as_deref(),
            Some("ka")
        );
        assert_eq!(parse_plural_response("I am not sure", "sep"), None);
        assert_eq!(
            parse_plural_response("\"Norgpo\"", "norg").as_deref(),
            Some("po")
        );
        assert_eq!(
            parse_plural_response("geed-lee", "geed").as_deref(),
            Some("lee")
        );
        assert_eq!(parse_plural_response("-ka", "geed").as_deref(), Some("ka"));
        assert_eq!(parse_plural_response("sep", "sep"), None);
        assert_eq!(parse_plural_response("", "sep"), None);
    }

    #[test]
    fn regularization_scores() {
        let rec = |i: usize, p: Option<&str>| {
            TrialRecord::new("r", i, "sep", "ka", "", p.map(str::to_owned))
        };
        let all: Vec<_> = (0..12).map(|i| rec(i, Some("ka"))).collect();
        assert_eq!(score_regularization(&all).unwrap(), 1.0);
        let nine: Vec<_> = (0..12)
            .map(|i| rec(i, Some(if i < 9 { "ka" } else { "po" })))
            .collect();
        assert_eq!(score_regularization(&nine).unwrap(), 0.75);
        let with_gap = vec![rec(0, Some("ka")), rec(1, None), rec(2, Some("po"))];
        assert_eq!(score_regularization(&with_gap).unwrap(), 0.5);
        let none: Vec<_> = (0..12).map(|i| rec(i, None)).collect();
        assert!(matches!(
            score_regularization(&none),
            Err(Error::NoParseableTrials)
        ));
    }

    #[test]
    fn explicit_knowledge_heuristic() {
        let k = annotate_explicit_knowledge(
            "r1",
            [
                "the most common suffix was -ka, which I used for new words",
                "",
            ],
            None,
        );
        assert_eq!(
            k,
            ExplicitKnowledge {
                recognized_pattern: 1,
                identified_ka: 1
            }
        );
        let k = annotate_explicit_knowledge(
            "r1",
            ["each noun had its own arbitrary suffix", "nothing else"],
            None,
        );
        assert_eq!(k, ExplicitKnowledge::default());
        let k = annotate_explicit_knowledge(
            "r1",
            [
                "There was no regular suffix.",
                "Irregular forms everywhere.",
            ],
            None,
        );
        assert_eq!(k, ExplicitKnowledge::default());
        let k = annotate_explicit_knowledge(
            "r1",
            ["I guessed.", "Most nouns usually took -po as the default."],
            None,
        );
        assert_eq!(
            k,
            ExplicitKnowledge {
                recognized_pattern: 1,
                identified_ka: 0
            }
        );
    }

    #[test]
    fn overrides_replace_heuristic() {
        let csv = "run_id,recognized_pattern,identified_ka\nr1, 1, 1\nr2,0,0\n";
        let o = AnnotationOverrides::from_reader(csv.as_bytes()).unwrap();
        let k = annotate_explicit_knowledge("r1", ["nothing", "nothing"], Some(&o));
        assert_eq!(
            k,
            ExplicitKnowledge {
                recognized_pattern: 1,
                identified_ka: 1
            }
        );
        let k = annotate_explicit_knowledge("r2", ["the default suffix is ka", ""], Some(&o));
        assert_eq!(k, ExplicitKnowledge::default());
        let k = annotate_explicit_knowledge("r3", ["the default suffix is ka", ""], Some(&o));
        assert_eq!(k.identified_ka, 1);
    }
}
