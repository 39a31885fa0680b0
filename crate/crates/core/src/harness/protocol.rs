//! Phase scripts for the three experiments.
//!
//! Each script turns a [`RunConfig`] into stimuli, walks the learner through
//! the phases one user turn at a time, and scores the replies. A learner
//! failure aborts the script and keeps the transcript recorded so far; the
//! failed user turn itself is not recorded.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::fsg::questionnaire::{self, QuestionnaireTruth};
use crate::fsg::{self, BlockRecord, BlockScore, Feedback, Fsg, FsgItem, LearningTurn};
use crate::learners::{Learner, LearnerError, Step, StructuredEvent, StructuredQuery};
use crate::morphology::{self, AnnotationOverrides, ExplicitKnowledge, Paragraph, TestItem};
use crate::morphosyntax::{
    self, CorrectionProbe, ExplainOverrides, JudgedItem, Judgment, MsRunScore, MsSentence,
    MsTestItem, MsVocabulary, ProbeGrade, TestSetOptions,
};
use crate::{ConditionId, Error, Experiment, Phase, Result, Rng, Role, Transcript, TrialRecord};

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Always reports the same instant.
pub struct FixedClock(pub DateTime<Utc>);

impl Default for FixedClock {
    fn default() -> Self {
        Self(DateTime::from_timestamp(0, 0).expect("epoch is valid"))
    }
}

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

enum Abort {
    Learner(LearnerError),
    Fatal(Error),
}

impl From<Error> for Abort {
    fn from(e: Error) -> Self {
        Abort::Fatal(e)
    }
}

struct Session<'a> {
    transcript: Transcript,
    learner: &'a mut dyn Learner,
    clock: &'a dyn Clock,
}

impl Session<'_> {
    fn exchange(&mut self, step: Step) -> std::result::Result<String, Abort> {
        let reply = self.learner.respond(&step).map_err(Abort::Learner)?;
        self.transcript
            .push(step.phase, Role::User, step.text, self.clock.now());
        self.transcript
            .push(step.phase, Role::Assistant, reply.clone(), self.clock.now());
        Ok(reply)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphologyMetrics {
    /// `None` when no reply parsed; such a run is invalid for rate analyses.
    pub regularization_rate: Option<f64>,
    pub regular_count: usize,
    pub parseable: usize,
    pub trials: usize,
    pub explicit: ExplicitKnowledge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphosyntaxMetrics {
    pub score: MsRunScore,
    pub probes: Vec<ProbeGrade>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntaxMetrics {
    pub blocks: Vec<BlockScore>,
    pub accuracy: Vec<Option<f64>>,
    pub questionnaire: Vec<f64>,
    pub questionnaire_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "lowercase")]
pub enum RunMetrics {
    Morphology(MorphologyMetrics),
    Morphosyntax(MorphosyntaxMetrics),
    Syntax(SyntaxMetrics),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphologyRow {
    pub run_id: String,
    pub condition: String,
    pub order_seed: u64,
    pub trial_index: usize,
    pub noun: String,
    pub number: String,
    pub raw: String,
    pub parsed: Option<String>,
    pub is_ka: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphosyntaxRow {
    pub run_id: String,
    pub condition: String,
    pub subcondition: String,
    pub trial: u8,
    pub item_index: usize,
    pub sentence: String,
    pub label: String,
    pub error_type: u8,
    pub raw: String,
    pub parsed: Option<String>,
    pub correct: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub run_id: String,
    pub probe_index: usize,
    pub error_type: u8,
    pub sentence: String,
    pub raw: String,
    pub explains: u8,
    pub fixes: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntaxRow {
    pub run_id: String,
    pub grammar: String,
    pub block: usize,
    pub item_index: usize,
    pub sentence: String,
    pub label: String,
    pub raw: String,
    pub parsed: Option<String>,
    pub correct: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireRow {
    pub run_id: String,
    pub question: usize,
    pub truth: String,
    pub raw: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Records {
    Morphology(Vec<MorphologyRow>),
    Morphosyntax {
        items: Vec<MorphosyntaxRow>,
        probes: Vec<ProbeRow>,
    },
    Syntax {
        items: Vec<SyntaxRow>,
        questionnaire: Vec<QuestionnaireRow>,
    },
}

#[derive(Debug)]
pub struct RunOutcome {
    pub transcript: Transcript,
    pub records: Records,
    pub metrics: RunMetrics,
}

#[derive(Debug)]
pub struct RunFailure {
    pub transcript: Transcript,
    pub error: LearnerError,
}

/// Generated material for one run.
#[derive(Debug, Clone)]
pub enum Stimuli {
    Morphology {
        paragraphs: Vec<Paragraph>,
        items: Vec<TestItem>,
    },
    Morphosyntax {
        vocabulary: MsVocabulary,
        training: Vec<MsSentence>,
        test: Vec<MsTestItem>,
        probes: Vec<CorrectionProbe>,
    },
    Syntax {
        grammar: Fsg,
        blocks: Vec<Vec<FsgItem>>,
        questions: Vec<String>,
        truth: QuestionnaireTruth,
    },
}

pub fn load_grammar(cfg: &RunConfig) -> Result<Fsg> {
    match &cfg.syntax.grammar_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Fsg::parse(&text)
        }
        None => fsg::builtin(cfg.condition.label())
            .ok_or_else(|| Error::Grammar(format!("no built-in grammar for {}", cfg.condition))),
    }
}

pub fn build_stimuli(cfg: &RunConfig) -> Result<Stimuli> {
    let stimulus = Rng::new(cfg.seeds.stimulus);
    match cfg.experiment() {
        Experiment::Morphology => {
            let lex = morphology::build_lexicon(&cfg.condition)?;
            let paragraphs = morphology::render_learning_paragraphs(
                &lex,
                &mut Rng::new(cfg.seeds.order).split("paragraphs"),
            )?;
            let items = morphology::build_test_items(&mut stimulus.split("test-items"));
            Ok(Stimuli::Morphology { paragraphs, items })
        }
        Experiment::Morphosyntax => {
            let vocabulary = morphosyntax::vocabulary_for(&cfg.condition)?;
            let training =
                morphosyntax::generate_training_set(&vocabulary, &mut stimulus.split("training"));
            let options = TestSetOptions {
                reuse_training: cfg.morphosyntax.reuse_training,
                type2: cfg.morphosyntax.type2,
            };
            let test = morphosyntax::generate_test_set(
                &vocabulary,
                &training,
                options,
                &mut stimulus.split("test"),
            );
            let probes = morphosyntax::correction_probe(
                &vocabulary,
                cfg.morphosyntax.type2,
                &mut stimulus.split("probes"),
            );
            Ok(Stimuli::Morphosyntax {
                vocabulary,
                training,
                test,
                probes,
            })
        }
        Experiment::Syntax => {
            let grammar = load_grammar(cfg)?;
            let plan = cfg.syntax.plan();
            let blocks = fsg::build_blocks(&grammar, &plan, &mut stimulus.split("blocks"))?;
            let q7 = questionnaire::q7_context(cfg.condition.label());
            let truth = questionnaire::questionnaire_ground_truth(
                &grammar,
                q7,
                cfg.syntax.questionnaire_corpus,
                plan.length_range,
                &mut stimulus.split("questionnaire"),
            )?;
            Ok(Stimuli::Syntax {
                grammar,
                blocks,
                questions: questionnaire::questions(q7),
                truth,
            })
        }
    }
}

/// Runs every phase against `learner`. The outer error is a configuration
/// or stimulus problem; the inner one a learner failure mid-run.
pub fn execute(
    cfg: &RunConfig,
    learner: &mut dyn Learner,
    clock: &dyn Clock,
) -> Result<std::result::Result<RunOutcome, RunFailure>> {
    let stimuli = build_stimuli(cfg)?;
    let mut session = Session {
        transcript: Transcript::new(cfg.run_id(), cfg.condition.clone()),
        learner,
        clock,
    };
    let result = match &stimuli {
        Stimuli::Morphology { paragraphs, items } => {
            run_morphology(cfg, &mut session, paragraphs, items)
        }
        Stimuli::Morphosyntax {
            vocabulary,
            training,
            test,
            probes,
        } => run_morphosyntax(cfg, &mut session, vocabulary, training, test, probes),
        Stimuli::Syntax {
            grammar,
            blocks,
            questions,
            truth,
        } => run_syntax(cfg, &mut session, grammar, blocks, questions, truth),
    };
    match result {
        Ok((records, metrics)) => Ok(Ok(RunOutcome {
            transcript: session.transcript,
            records,
            metrics,
        })),
        Err(Abort::Learner(error)) => Ok(Err(RunFailure {
            transcript: session.transcript,
            error,
        })),
        Err(Abort::Fatal(e)) => Err(e),
    }
}

type Scored = std::result::Result<(Records, RunMetrics), Abort>;

fn ack(phase: Phase, text: String) -> Step {
    Step::new(phase, text, StructuredQuery::Acknowledge)
}

fn words(items: &[&str]) -> Vec<String> {
    items.iter().map(|w| (*w).to_owned()).collect()
}

fn run_morphology(
    cfg: &RunConfig,
    s: &mut Session<'_>,
    paragraphs: &[Paragraph],
    items: &[TestItem],
) -> Scored {
    let run_id = cfg.run_id();
    s.exchange(ack(Phase::Starting, morphology::render_starting_prompt()))?;

    let exposure: Vec<StructuredEvent> = paragraphs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let singular =
                std::iter::repeat_n((p.noun.to_owned(), None), p.singular_mentions as usize);
            let plural = std::iter::repeat_n(
                (p.noun.to_owned(), Some(p.marker.to_owned())),
                p.plural_mentions as usize,
            );
            StructuredEvent::MorphExposure {
                paragraph: i,
                tokens: singular.chain(plural).collect(),
            }
        })
        .collect();
    let learning = ack(
        Phase::Learning,
        morphology::render_learning_prompt(paragraphs)?,
    )
    .with_events(exposure);
    s.exchange(learning)?;

    let mut records = Vec::with_capacity(items.len());
    let mut rows = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let text = morphology::render_testing_prompt(item.noun, item.number_word)?;
        let query = StructuredQuery::PluralBlank {
            noun: item.noun.to_owned(),
            number: item.number_word.to_owned(),
        };
        let raw = s.exchange(Step::new(Phase::Testing, text, query))?;
        let parsed = morphology::parse_plural_response(&raw, item.noun);
        if parsed.is_none() {
            log::info!("{run_id}: unparseable reply to trial {i}: {raw:?}");
        }
        let record = TrialRecord::new(
            &run_id,
            i,
            item.noun,
            morphology::REGULAR_MARKER,
            &raw,
            parsed.clone(),
        );
        rows.push(MorphologyRow {
            run_id: run_id.clone(),
            condition: cfg.condition.label().to_owned(),
            order_seed: cfg.seeds.order,
            trial_index: i,
            noun: item.noun.to_owned(),
            number: item.number_word.to_owned(),
            raw,
            parsed,
            is_ka: record.correct(),
        });
        records.push(record);
    }

    let mut post = Vec::new();
    for probe in morphology::POST_TESTING_PROMPTS {
        post.push(s.exchange(Step::new(
            Phase::PostTesting,
            probe,
            StructuredQuery::FreeText,
        ))?);
    }

    let overrides = match &cfg.annotations.morphology {
        Some(path) => Some(AnnotationOverrides::load(path)?),
        None => None,
    };
    let explicit =
        morphology::annotate_explicit_knowledge(&run_id, [&post[0], &post[1]], overrides.as_ref());
    let parseable = records.iter().filter(|r| r.is_parseable()).count();
    let regular_count = records.iter().filter(|r| r.correct() == Some(true)).count();
    let regularization_rate = match morphology::score_regularization(&records) {
        Ok(rate) => Some(rate),
        Err(Error::NoParseableTrials) => {
            log::warn!("{run_id}: no parseable test replies; run is invalid for rate analyses");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let metrics = MorphologyMetrics {
        regularization_rate,
        regular_count,
        parseable,
        trials: records.len(),
        explicit,
    };
    Ok((Records::Morphology(rows), RunMetrics::Morphology(metrics)))
}

fn run_morphosyntax(
    cfg: &RunConfig,
    s: &mut Session<'_>,
    vocabulary: &MsVocabulary,
    training: &[MsSentence],
    test: &[MsTestItem],
    probes: &[CorrectionProbe],
) -> Scored {
    let run_id = cfg.run_id();
    let (frequency, subcondition) = morphosyntax::parse_condition_label(cfg.condition.label())?;
    s.exchange(ack(Phase::Starting, morphosyntax::render_starting_prompt()))?;
    let exposure = training
        .iter()
        .map(|t| StructuredEvent::SentenceExposure {
            words: words(&t.words),
        })
        .collect();
    s.exchange(
        ack(
            Phase::Learning,
            morphosyntax::render_learning_prompt(training)?,
        )
        .with_events(exposure),
    )?;

    let mut judged = Vec::with_capacity(test.len());
    let mut rows = Vec::with_capacity(test.len());
    for (i, item) in test.iter().enumerate() {
        let first_of_round = i == 0 || test[i - 1].trial != item.trial;
        let text = if first_of_round {
            morphosyntax::render_test_start(item.trial, &item.sentence)
        } else {
            morphosyntax::render_test_item(&item.sentence)
        };
        let query = StructuredQuery::Judgment {
            words: words(&item.sentence.words),
        };
        let raw = s.exchange(Step::new(Phase::Testing, text, query))?;
        let parsed = morphosyntax::parse_judgment(&raw);
        if parsed.is_none() {
            log::info!("{run_id}: unparseable judgment for item {i}: {raw:?}");
        }
        let truth = if item.label.is_grammatical() {
            Judgment::Correct
        } else {
            Judgment::Incorrect
        };
        rows.push(MorphosyntaxRow {
            run_id: run_id.clone(),
            condition: frequency.as_str().to_owned(),
            subcondition: subcondition.as_str().to_owned(),
            trial: item.trial,
            item_index: i,
            sentence: item.sentence.render(),
            label: if item.label.is_grammatical() {
                "grammatical"
            } else {
                "ungrammatical"
            }
            .to_owned(),
            error_type: item.label.error_code(),
            raw,
            parsed: parsed.map(|p| p.as_str().to_owned()),
            correct: parsed.map(|p| p == truth),
        });
        judged.push(JudgedItem {
            item: *item,
            parsed,
        });
        let last_of_round = test.get(i + 1).is_none_or(|next| next.trial != item.trial);
        if last_of_round && item.trial < morphosyntax::TRIALS {
            s.exchange(ack(
                Phase::Testing,
                morphosyntax::render_test_end(item.trial),
            ))?;
        }
    }

    for probe in morphosyntax::POST_TESTING_PROMPTS {
        s.exchange(Step::new(
            Phase::PostTesting,
            probe,
            StructuredQuery::FreeText,
        ))?;
    }
    let overrides = match &cfg.annotations.morphosyntax {
        Some(path) => Some(ExplainOverrides::load(path)?),
        None => None,
    };
    let mut probe_rows = Vec::with_capacity(probes.len());
    let mut grades = Vec::with_capacity(probes.len());
    for (i, probe) in probes.iter().enumerate() {
        let raw = s.exchange(Step::new(
            Phase::PostTesting,
            probe.render(),
            StructuredQuery::FreeText,
        ))?;
        let mut grade = morphosyntax::grade_correction(&raw, vocabulary);
        if let Some(explains) = overrides.as_ref().and_then(|o| o.get(&run_id, i)) {
            grade.explains = explains;
        }
        probe_rows.push(ProbeRow {
            run_id: run_id.clone(),
            probe_index: i,
            error_type: probe.error_type.code(),
            sentence: probe.sentence.render(),
            raw,
            explains: grade.explains,
            fixes: grade.fixes,
        });
        grades.push(grade);
    }
    let score = morphosyntax::score_run(&judged)?;
    Ok((
        Records::Morphosyntax {
            items: rows,
            probes: probe_rows,
        },
        RunMetrics::Morphosyntax(MorphosyntaxMetrics {
            score,
            probes: grades,
        }),
    ))
}

fn letters_as_words(letters: &[fsg::Letter]) -> Vec<String> {
    letters.iter().map(|l| l.to_string()).collect()
}

fn run_syntax(
    cfg: &RunConfig,
    s: &mut Session<'_>,
    grammar: &Fsg,
    blocks: &[Vec<FsgItem>],
    questions: &[String],
    truth: &QuestionnaireTruth,
) -> Scored {
    let run_id = cfg.run_id();
    let plan = cfg.syntax.plan();
    s.exchange(ack(
        Phase::Starting,
        fsg::render_starting_prompt(grammar, &plan),
    ))?;

    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut item_index = 0;
    for (b, block) in blocks.iter().enumerate() {
        let mut previous: Option<(&FsgItem, Option<bool>)> = None;
        for item in block {
            let feedback = previous.map(|(prev, parsed)| Feedback {
                was_correct: parsed == Some(prev.grammatical),
                previous: &prev.letters,
                grammatical: prev.grammatical,
            });
            let turn = match feedback {
                None => LearningTurn::Start {
                    current: &item.letters,
                },
                Some(feedback) => LearningTurn::Middle {
                    feedback,
                    current: &item.letters,
                },
            };
            let events = feedback_event(feedback);
            let query = StructuredQuery::YesNo {
                words: letters_as_words(&item.letters),
            };
            let text = fsg::render_learning_turn(&turn)?;
            let raw = s.exchange(Step::new(Phase::Learning, text, query).with_events(events))?;
            let parsed = fsg::parse_yes_no(&raw);
            if parsed.is_none() {
                log::info!("{run_id}: unparseable yes/no for item {item_index}: {raw:?}");
            }
            rows.push(SyntaxRow {
                run_id: run_id.clone(),
                grammar: cfg.condition.label().to_owned(),
                block: b + 1,
                item_index,
                sentence: item.render(),
                label: if item.grammatical {
                    "grammatical"
                } else {
                    "ungrammatical"
                }
                .to_owned(),
                raw,
                parsed: parsed.map(|p| if p { "yes" } else { "no" }.to_owned()),
                correct: parsed.map(|p| p == item.grammatical),
            });
            records.push(BlockRecord {
                block: b + 1,
                grammatical: item.grammatical,
                parsed,
            });
            previous = Some((item, parsed));
            item_index += 1;
        }
        if let Some((prev, parsed)) = previous {
            let feedback = Feedback {
                was_correct: parsed == Some(prev.grammatical),
                previous: &prev.letters,
                grammatical: prev.grammatical,
            };
            let turn = LearningTurn::End {
                feedback,
                batch: b + 1,
                last: b + 1 == blocks.len(),
            };
            let text = fsg::render_learning_turn(&turn)?;
            s.exchange(ack(Phase::Learning, text).with_events(feedback_event(Some(feedback))))?;
        }
    }

    let query = StructuredQuery::Questionnaire {
        questions: questions.to_vec(),
    };
    let reply = s.exchange(Step::new(
        Phase::PostTesting,
        questionnaire::render_prompt(questions),
        query,
    ))?;
    let answers = questionnaire::split_numbered_answers(&reply, questions);
    let mut q_rows = Vec::with_capacity(questions.len());
    let mut scores = Vec::with_capacity(questions.len());
    for (i, (answer, expected)) in answers.iter().zip(&truth.answers).enumerate() {
        let score = questionnaire::grade_answer(answer, expected);
        q_rows.push(QuestionnaireRow {
            run_id: run_id.clone(),
            question: i + 1,
            truth: render_letter_set(expected),
            raw: answer.clone(),
            score,
        });
        scores.push(score);
    }
    let block_scores = fsg::score_blocks(&records);
    let metrics = SyntaxMetrics {
        accuracy: block_scores.iter().map(BlockScore::accuracy).collect(),
        blocks: block_scores,
        questionnaire_mean: scores.iter().sum::<f64>() / scores.len().max(1) as f64,
        questionnaire: scores,
    };
    Ok((
        Records::Syntax {
            items: rows,
            questionnaire: q_rows,
        },
        RunMetrics::Syntax(metrics),
    ))
}

fn feedback_event(feedback: Option<Feedback<'_>>) -> Vec<StructuredEvent> {
    feedback
        .map(|f| StructuredEvent::Feedback {
            words: letters_as_words(f.previous),
            grammatical: f.grammatical,
        })
        .into_iter()
        .collect()
}

fn render_letter_set(set: &BTreeSet<fsg::Letter>) -> String {
    set.iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// JSON view of the stimuli, for the `generate` command.
pub fn stimuli_json(condition: &ConditionId, stimuli: &Stimuli) -> serde_json::Value {
    use serde_json::json;
    match stimuli {
        Stimuli::Morphology { paragraphs, items } => json!({
            "condition": condition,
            "paragraphs": paragraphs,
            "test_items": items,
        }),
        Stimuli::Morphosyntax {
            vocabulary,
            training,
            test,
            probes,
        } => json!({
            "condition": condition,
            "vocabulary": vocabulary.label(),
            "training": training.iter().map(MsSentence::render).collect::<Vec<_>>(),
            "test": test.iter().map(|t| json!({
                "trial": t.trial,
                "sentence": t.sentence.render(),
                "error_type": t.label.error_code(),
            })).collect::<Vec<_>>(),
            "probes": probes.iter().map(|p| json!({
                "error_type": p.error_type.code(),
                "sentence": p.sentence.render(),
            })).collect::<Vec<_>>(),
        }),
        Stimuli::Syntax {
            grammar,
            blocks,
            questions,
            truth,
        } => json!({
            "condition": condition,
            "grammar": grammar.to_text(),
            "blocks": blocks.iter().map(|b| b.iter().map(|i| json!({
                "sentence": i.render(),
                "grammatical": i.grammatical,
                "pair": i.pair,
            })).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "questions": questions,
            "answers": truth.answers.iter().map(render_letter_set).collect::<Vec<_>>(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::seeds_for;
    use crate::learners::{BaselineKind, ScriptedLearner, StructuredAdapter};

    fn config(condition: &str) -> RunConfig {
        let c: ConditionId = condition.parse().unwrap();
        RunConfig {
            seeds: seeds_for(3, &c, 0, 0),
            condition: c,
            learner: "scripted".into(),
            learner_config: Default::default(),
            cell: 0,
            rep: 0,
            morphosyntax: Default::default(),
            syntax: Default::default(),
            annotations: Default::default(),
            out_dir: "unused".into(),
        }
    }

    fn exchanges(condition: &str) -> usize {
        let mut learner = ScriptedLearner::new(vec!["I'm ready.".into()], None);
        let outcome = execute(&config(condition), &mut learner, &FixedClock::default())
            .unwrap()
            .unwrap();
        assert!(outcome.transcript.validate().is_empty());
        outcome.transcript.turns.len() / 2
    }

    #[test]
    fn session_lengths() {
        assert_eq!(exchanges("morphology/5R4E"), 16);
        assert_eq!(exchanges("morphosyntax/low-S2"), 107);
        assert_eq!(exchanges("syntax/grammarB"), 128);
    }

    #[test]
    fn failure_keeps_completed_turns_only() {
        let mut learner = ScriptedLearner::new(vec!["sepka".into()], Some(5));
        let failure = execute(
            &config("morphology/3R6E"),
            &mut learner,
            &FixedClock::default(),
        )
        .unwrap()
        .unwrap_err();
        assert_eq!(failure.transcript.turns.len(), 10);
        assert_eq!(
            failure.transcript.turns.last().unwrap().role,
            Role::Assistant
        );
        assert!(matches!(failure.error, LearnerError::Scripted(6)));
    }

    #[test]
    fn unparseable_replies_are_kept_and_unscored() {
        let mut learner = ScriptedLearner::new(vec!["hmm".into()], None);
        let outcome = execute(
            &config("morphology/5R4E"),
            &mut learner,
            &FixedClock::default(),
        )
        .unwrap()
        .unwrap();
        let RunMetrics::Morphology(m) = outcome.metrics else {
            panic!()
        };
        assert_eq!((m.parseable, m.regularization_rate), (0, None));
        let Records::Morphology(rows) = outcome.records else {
            panic!()
        };
        assert!(rows
            .iter()
            .all(|r| r.raw == "hmm" && r.parsed.is_none() && r.is_ka.is_none()));
    }

    #[test]
    fn baseline_sees_learning_events() {
        let mut learner = StructuredAdapter::new(BaselineKind::Majority.build(Rng::new(0)));
        let outcome = execute(
            &config("morphology/5R4E"),
            &mut learner,
            &FixedClock::default(),
        )
        .unwrap()
        .unwrap();
        let RunMetrics::Morphology(m) = outcome.metrics else {
            panic!()
        };
        assert_eq!(m.regularization_rate, Some(1.0));
    }

    #[test]
    fn syntax_feedback_follows_replies() {
        let mut learner = ScriptedLearner::new(vec!["yes".into()], None);
        let outcome = execute(
            &config("syntax/grammarA"),
            &mut learner,
            &FixedClock::default(),
        )
        .unwrap()
        .unwrap();
        let turns = &outcome.transcript.turns;
        let second_prompt = &turns[4].content;
        assert!(
            second_prompt.starts_with("You answer is "),
            "{second_prompt}"
        );
        let RunMetrics::Syntax(m) = outcome.metrics else {
            panic!()
        };
        // Always "yes" on balanced blocks.
        assert!(m.accuracy.iter().all(|a| *a == Some(0.5)));
    }

    #[test]
    fn stimuli_depend_on_seeds_only() {
        let a = stimuli_json(
            &config("morphosyntax/high-S1").condition,
            &build_stimuli(&config("morphosyntax/high-S1")).unwrap(),
        );
        let b = stimuli_json(
            &config("morphosyntax/high-S1").condition,
            &build_stimuli(&config("morphosyntax/high-S1")).unwrap(),
        );
        assert_eq!(a, b);
        let mut other = config("morphosyntax/high-S1");
        other.seeds.stimulus ^= 1;
        assert_ne!(
            a,
            stimuli_json(&other.condition, &build_stimuli(&other).unwrap())
        );
    }
}
