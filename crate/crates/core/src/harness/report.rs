//! Suite-level aggregation, comparisons to human data, and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::manifest::write_atomic;
use super::protocol::RunMetrics;
use super::run::RunSummary;
use crate::analysis::reference::{self, ComparisonRow, LearnerValue};
use crate::analysis::{self, StatResult};
use crate::{ConditionId, Experiment, Result, Rng};

pub const TREND_PERMUTATIONS: usize = 10_000;

const ERROR_ROW_NAMES: [&str; 7] = [
    "error_type1",
    "error_type2",
    "error_type3",
    "error_type4",
    "all_false_positive",
    "false_negative",
    "total_errors",
];
const ERROR_COLUMNS: [&str; 5] = ["t1", "t2", "t3", "t4", "total"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorphologySummary {
    pub condition: ConditionId,
    pub runs: usize,
    /// Runs with at least one parseable reply.
    pub valid_runs: usize,
    pub regular: usize,
    pub parseable: usize,
    pub pooled_rate: Option<f64>,
    pub recognized_pattern: usize,
    pub identified_ka: usize,
    pub vs_human: Option<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorphosyntaxSummary {
    pub condition: ConditionId,
    pub runs: usize,
    /// Mean errors per run, rows as in the human tables, columns t1-t4 and total.
    pub mean_errors: Vec<(String, [f64; 5])>,
    pub mean_omissions: f64,
    pub precision: f64,
    pub recall: f64,
    pub explains: f64,
    pub fixes: f64,
    pub vs_human: Vec<ComparisonRow>,
    pub table_correlation: Option<StatResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntaxSummary {
    pub condition: ConditionId,
    pub runs: usize,
    /// Runs with every block judged at least once; only these enter the tests.
    pub complete_runs: usize,
    pub block_means: Vec<Option<f64>>,
    pub block_effect: Option<StatResult>,
    pub linear_trend: Option<StatResult>,
    pub permutation: Option<StatResult>,
    pub questionnaire_means: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SuiteAnalysis {
    pub morphology: Vec<MorphologySummary>,
    /// 5R4E against 3R6E, pooled over runs.
    pub morphology_contrast: Option<StatResult>,
    pub morphosyntax: Vec<MorphosyntaxSummary>,
    pub syntax: Vec<SyntaxSummary>,
}

fn stat_or_warn(what: &str, r: Result<StatResult>) -> Option<StatResult> {
    r.map_err(|e| log::warn!("{what}: {e}")).ok()
}

pub fn analyze(summaries: &[RunSummary], seed: u64) -> Result<SuiteAnalysis> {
    let mut groups: BTreeMap<String, (ConditionId, Vec<&RunSummary>)> = BTreeMap::new();
    for s in summaries {
        groups
            .entry(s.condition.to_string())
            .or_insert_with(|| (s.condition.clone(), Vec::new()))
            .1
            .push(s);
    }
    let mut out = SuiteAnalysis::default();
    for (condition, runs) in groups.into_values() {
        match condition.experiment() {
            Experiment::Morphology => out.morphology.push(morphology_summary(condition, &runs)?),
            Experiment::Morphosyntax => out
                .morphosyntax
                .push(morphosyntax_summary(condition, &runs)),
            Experiment::Syntax => out.syntax.push(syntax_summary(condition, &runs, seed)),
        }
    }
    let find = |label: &str| out.morphology.iter().find(|m| m.condition.label() == label);
    if let (Some(a), Some(b)) = (find("5R4E"), find("3R6E")) {
        if a.parseable > 0 && b.parseable > 0 {
            out.morphology_contrast = stat_or_warn(
                "morphology contrast",
                analysis::two_proportion_test(a.regular, a.parseable, b.regular, b.parseable),
            );
        }
    }
    Ok(out)
}

fn morphology_summary(condition: ConditionId, runs: &[&RunSummary]) -> Result<MorphologySummary> {
    let mut s = MorphologySummary {
        condition,
        runs: runs.len(),
        valid_runs: 0,
        regular: 0,
        parseable: 0,
        pooled_rate: None,
        recognized_pattern: 0,
        identified_ka: 0,
        vs_human: None,
    };
    for r in runs {
        if let RunMetrics::Morphology(m) = &r.metrics {
            if m.regularization_rate.is_some() {
                s.valid_runs += 1;
            }
            s.regular += m.regular_count;
            s.parseable += m.parseable;
            s.recognized_pattern += usize::from(m.explicit.recognized_pattern);
            s.identified_ka += usize::from(m.explicit.identified_ka);
        }
    }
    if s.parseable > 0 {
        let rate = s.regular as f64 / s.parseable as f64;
        s.pooled_rate = Some(rate);
        let value = LearnerValue {
            experiment: Experiment::Morphology,
            condition: s.condition.label().to_owned(),
            statistic: "regularization_rate".into(),
            value: rate,
            counts: Some((s.regular, s.parseable)),
        };
        s.vs_human = reference::compare_to_human(&[value])?.pop();
    }
    Ok(s)
}

fn morphosyntax_summary(condition: ConditionId, runs: &[&RunSummary]) -> MorphosyntaxSummary {
    let mut sums = [[0.0f64; 5]; 7];
    let (mut omissions, mut precision, mut recall, mut explains, mut fixes, mut probes) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0usize);
    let mut n = 0usize;
    for r in runs {
        let RunMetrics::Morphosyntax(m) = &r.metrics else {
            continue;
        };
        n += 1;
        for (t, e) in m.score.trials.iter().enumerate().take(4) {
            let cells = [
                e.false_positives[0],
                e.false_positives[1],
                e.false_positives[2],
                e.false_positives[3],
                e.all_false_positives(),
                e.false_negatives,
                e.total,
            ];
            for (row, v) in cells.into_iter().enumerate() {
                sums[row][t] += f64::from(v);
                sums[row][4] += f64::from(v);
            }
            omissions += f64::from(e.omissions);
        }
        precision += m.score.precision;
        recall += m.score.recall;
        for g in &m.probes {
            explains += f64::from(g.explains);
            fixes += f64::from(g.fixes);
            probes += 1;
        }
    }
    let div = |v: f64, d: usize| if d == 0 { 0.0 } else { v / d as f64 };
    let mean_errors: Vec<(String, [f64; 5])> = ERROR_ROW_NAMES
        .iter()
        .zip(sums)
        .map(|(name, row)| ((*name).to_owned(), row.map(|v| div(v, n))))
        .collect();

    let frequency = condition
        .label()
        .split('-')
        .next()
        .unwrap_or_default()
        .to_owned();
    let mut vs_human = Vec::new();
    let mut table_correlation = None;
    if let Some(human) = reference::human_error_table(&frequency) {
        let values: Vec<LearnerValue> = mean_errors
            .iter()
            .flat_map(|(row, cells)| {
                ERROR_COLUMNS
                    .iter()
                    .zip(cells)
                    .map(|(col, v)| LearnerValue {
                        experiment: Experiment::Morphosyntax,
                        condition: condition.label().to_owned(),
                        statistic: reference::error_statistic(row, col),
                        value: *v,
                        counts: None,
                    })
            })
            .collect();
        vs_human = reference::compare_to_human(&values).unwrap_or_else(|e| {
            log::warn!("{condition}: {e}");
            Vec::new()
        });
        // Per-trial cells only; the total column would double count.
        let learner: Vec<f64> = mean_errors
            .iter()
            .flat_map(|(_, c)| c[..4].to_vec())
            .collect();
        let humans: Vec<f64> = human.iter().flat_map(|(_, c)| c[..4].to_vec()).collect();
        if n > 0 {
            table_correlation = stat_or_warn(
                &format!("{condition} error table correlation"),
                analysis::pearson_correlation(&learner, &humans),
            );
        }
    }
    MorphosyntaxSummary {
        condition,
        runs: n,
        mean_errors,
        mean_omissions: div(omissions, n),
        precision: div(precision, n),
        recall: div(recall, n),
        explains: div(explains, probes),
        fixes: div(fixes, probes),
        vs_human,
        table_correlation,
    }
}

fn syntax_summary(condition: ConditionId, runs: &[&RunSummary], seed: u64) -> SyntaxSummary {
    let metrics: Vec<_> = runs
        .iter()
        .filter_map(|r| match &r.metrics {
            RunMetrics::Syntax(m) => Some(m),
            _ => None,
        })
        .collect();
    let n_blocks = metrics.iter().map(|m| m.accuracy.len()).max().unwrap_or(0);
    let curves: Vec<Vec<f64>> = metrics
        .iter()
        .filter(|m| m.accuracy.len() == n_blocks)
        .filter_map(|m| m.accuracy.iter().copied().collect::<Option<Vec<f64>>>())
        .collect();
    if curves.len() < metrics.len() {
        log::warn!(
            "{condition}: {} runs with an unjudged block left out of the tests",
            metrics.len() - curves.len()
        );
    }
    let block_means = (0..n_blocks)
        .map(|b| {
            let vals: Vec<f64> = metrics
                .iter()
                .filter_map(|m| m.accuracy.get(b).copied().flatten())
                .collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    let n_questions = metrics
        .iter()
        .map(|m| m.questionnaire.len())
        .max()
        .unwrap_or(0);
    let questionnaire_means = (0..n_questions)
        .map(|q| {
            let vals: Vec<f64> = metrics
                .iter()
                .filter_map(|m| m.questionnaire.get(q).copied())
                .collect();
            vals.iter().sum::<f64>() / vals.len().max(1) as f64
        })
        .collect();
    let (mut block_effect, mut linear_trend, mut permutation) = (None, None, None);
    if curves.len() >= 2 {
        let what = condition.to_string();
        block_effect = stat_or_warn(&what, analysis::bf_bic_block_effect(&curves));
        linear_trend = stat_or_warn(&what, analysis::bf_bic_linear_trend(&curves));
        let rng = Rng::new(seed).split("trend").split(&what);
        permutation = stat_or_warn(
            &what,
            analysis::permutation_trend_test(&curves, TREND_PERMUTATIONS, &rng),
        );
    }
    SyntaxSummary {
        condition,
        runs: metrics.len(),
        complete_runs: curves.len(),
        block_means,
        block_effect,
        linear_trend,
        permutation,
        questionnaire_means,
    }
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

fn opt4(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), f4)
}

fn stat_cell(s: &Option<StatResult>) -> String {
    match s {
        None => "NA".into(),
        Some(s) => {
            let mut out = format!("{} = {}", s.method, f4(s.statistic));
            if let Some(p) = s.p_value {
                let _ = write!(out, ", p = {}", f4(p));
            }
            if let Some(bf) = s.bayes_factor {
                let _ = write!(out, ", BF = {bf:.4e}");
            }
            out
        }
    }
}

pub fn render_markdown(a: &SuiteAnalysis) -> String {
    let mut md = String::from("# Suite report\n");
    if !a.morphology.is_empty() {
        md.push_str("\n## Morphology\n\n");
        md.push_str("| condition | runs | valid | regular / parseable | rate | human | delta | test | pattern | ka |\n");
        md.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
        for m in &a.morphology {
            let (human, delta, test) = match &m.vs_human {
                Some(c) => (f4(c.human), f4(c.delta), stat_cell(&c.test)),
                None => ("NA".into(), "NA".into(), "NA".into()),
            };
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} / {} | {} | {} | {} | {} | {} | {} |",
                m.condition.label(),
                m.runs,
                m.valid_runs,
                m.regular,
                m.parseable,
                opt4(m.pooled_rate),
                human,
                delta,
                test,
                m.recognized_pattern,
                m.identified_ka
            );
        }
        if a.morphology_contrast.is_some() {
            let _ = writeln!(md, "\n5R4E vs 3R6E: {}", stat_cell(&a.morphology_contrast));
        }
    }
    if !a.morphosyntax.is_empty() {
        md.push_str("\n## Morphosyntax\n");
        for m in &a.morphosyntax {
            let _ = writeln!(
                md,
                "\n### {}\n\nruns {}, precision {}, recall {}, omissions {}, explains {}, fixes {}\n",
                m.condition.label(),
                m.runs,
                f4(m.precision),
                f4(m.recall),
                f4(m.mean_omissions),
                f4(m.explains),
                f4(m.fixes)
            );
            md.push_str("| errors | t1 | t2 | t3 | t4 | total | human total |\n|---|---|---|---|---|---|---|\n");
            for (row, cells) in &m.mean_errors {
                let stat = reference::error_statistic(row, "total");
                let human = m
                    .vs_human
                    .iter()
                    .find(|c| c.statistic == stat)
                    .map(|c| c.human);
                let _ = writeln!(
                    md,
                    "| {row} | {} | {} | {} | {} | {} | {} |",
                    f4(cells[0]),
                    f4(cells[1]),
                    f4(cells[2]),
                    f4(cells[3]),
                    f4(cells[4]),
                    opt4(human)
                );
            }
            let _ = writeln!(
                md,
                "\ncorrelation with human table: {}",
                stat_cell(&m.table_correlation)
            );
        }
    }
    if !a.syntax.is_empty() {
        md.push_str("\n## Syntax\n");
        for s in &a.syntax {
            let curve: Vec<String> = s.block_means.iter().map(|v| opt4(*v)).collect();
            let q: Vec<String> = s.questionnaire_means.iter().map(|v| f4(*v)).collect();
            let _ = writeln!(
                md,
                "\n### {}\n\nruns {} ({} complete)\n\nblock accuracy: {}\n\nblock effect: {}\n\nlinear trend: {}\n\npermutation trend: {}\n\nquestionnaire: {}",
                s.condition.label(),
                s.runs,
                s.complete_runs,
                curve.join(", "),
                stat_cell(&s.block_effect),
                stat_cell(&s.linear_trend),
                stat_cell(&s.permutation),
                q.join(", ")
            );
        }
    }
    md
}

#[derive(Serialize)]
struct StatRow<'a> {
    experiment: Experiment,
    condition: &'a str,
    statistic: String,
    value: String,
    method: &'a str,
    p_value: String,
    bayes_factor: String,
    n: String,
}

fn stat_row<'a>(
    experiment: Experiment,
    condition: &'a str,
    statistic: &str,
    s: &'a StatResult,
) -> StatRow<'a> {
    StatRow {
        experiment,
        condition,
        statistic: statistic.to_owned(),
        value: format!("{:.6}", s.statistic),
        method: &s.method,
        p_value: s.p_value.map(|p| format!("{p:.6}")).unwrap_or_default(),
        bayes_factor: s
            .bayes_factor
            .map(|b| format!("{b:.6e}"))
            .unwrap_or_default(),
        n: s.n
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join("x"),
    }
}

fn value_row<'a>(
    experiment: Experiment,
    condition: &'a str,
    statistic: &str,
    v: f64,
) -> StatRow<'a> {
    StatRow {
        experiment,
        condition,
        statistic: statistic.to_owned(),
        value: format!("{v:.6}"),
        method: "",
        p_value: String::new(),
        bayes_factor: String::new(),
        n: String::new(),
    }
}

/// Flat table of every statistic in the analysis.
pub fn stats_csv(a: &SuiteAnalysis) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for m in &a.morphology {
        let c = m.condition.label();
        if let Some(rate) = m.pooled_rate {
            w.serialize(value_row(
                Experiment::Morphology,
                c,
                "regularization_rate",
                rate,
            ))?;
        }
        if let Some(cmp) = &m.vs_human {
            w.serialize(value_row(
                Experiment::Morphology,
                c,
                "delta_vs_human",
                cmp.delta,
            ))?;
            if let Some(t) = &cmp.test {
                w.serialize(stat_row(Experiment::Morphology, c, "vs_human", t))?;
            }
        }
    }
    if let Some(t) = &a.morphology_contrast {
        w.serialize(stat_row(Experiment::Morphology, "5R4E-3R6E", "contrast", t))?;
    }
    for m in &a.morphosyntax {
        let c = m.condition.label();
        for (row, cells) in &m.mean_errors {
            for (col, v) in ERROR_COLUMNS.iter().zip(cells) {
                w.serialize(value_row(
                    Experiment::Morphosyntax,
                    c,
                    &reference::error_statistic(row, col),
                    *v,
                ))?;
            }
        }
        w.serialize(value_row(
            Experiment::Morphosyntax,
            c,
            "precision",
            m.precision,
        ))?;
        w.serialize(value_row(Experiment::Morphosyntax, c, "recall", m.recall))?;
        if let Some(t) = &m.table_correlation {
            w.serialize(stat_row(
                Experiment::Morphosyntax,
                c,
                "human_table_correlation",
                t,
            ))?;
        }
    }
    for s in &a.syntax {
        let c = s.condition.label();
        for (b, v) in s.block_means.iter().enumerate() {
            if let Some(v) = v {
                w.serialize(value_row(
                    Experiment::Syntax,
                    c,
                    &format!("block{}_accuracy", b + 1),
                    *v,
                ))?;
            }
        }
        for (name, t) in [
            ("block_effect", &s.block_effect),
            ("linear_trend", &s.linear_trend),
            ("permutation_trend", &s.permutation),
        ] {
            if let Some(t) = t {
                w.serialize(stat_row(Experiment::Syntax, c, name, t))?;
            }
        }
        for (q, v) in s.questionnaire_means.iter().enumerate() {
            w.serialize(value_row(
                Experiment::Syntax,
                c,
                &format!("q{}_score", q + 1),
                *v,
            ))?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::Error::io("<csv>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 is UTF-8"))
}

const SVG_W: f64 = 480.0;
const SVG_H: f64 = 300.0;
const PAD: f64 = 40.0;

/// Line chart of mean block accuracy, one polyline per condition, y in [0, 1].
pub fn accuracy_svg(syntax: &[SyntaxSummary]) -> String {
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let n = syntax
        .iter()
        .map(|s| s.block_means.len())
        .max()
        .unwrap_or(0)
        .max(2);
    let x = |b: usize| PAD + (SVG_W - 2.0 * PAD) * b as f64 / (n - 1) as f64;
    let y = |v: f64| SVG_H - PAD - (SVG_H - 2.0 * PAD) * v;
    let mut svg = svg_frame("block", "accuracy");
    let _ = writeln!(
        svg,
        r##"<line x1="{PAD}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#999" stroke-dasharray="4"/>"##,
        y(0.5),
        SVG_W - PAD,
        y(0.5)
    );
    for (i, s) in syntax.iter().enumerate() {
        let color = colors[i % colors.len()];
        let points: Vec<String> = s
            .block_means
            .iter()
            .enumerate()
            .filter_map(|(b, v)| v.map(|v| format!("{:.1},{:.1}", x(b), y(v))))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}" font-size="12">{}</text>"#,
            SVG_W - PAD - 70.0,
            PAD + 14.0 * i as f64,
            s.condition.label()
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Bar chart of pooled regularization rates with human adult rates as ticks.
pub fn rates_svg(morphology: &[MorphologySummary]) -> String {
    let mut svg = svg_frame("condition", "regularization");
    let slot = (SVG_W - 2.0 * PAD) / morphology.len().max(1) as f64;
    let y = |v: f64| SVG_H - PAD - (SVG_H - 2.0 * PAD) * v;
    for (i, m) in morphology.iter().enumerate() {
        let x0 = PAD + slot * i as f64 + slot * 0.2;
        let w = slot * 0.6;
        if let Some(rate) = m.pooled_rate {
            let _ = writeln!(
                svg,
                r##"<rect x="{x0:.1}" y="{:.1}" width="{w:.1}" height="{:.1}" fill="#1f77b4"/>"##,
                y(rate),
                y(0.0) - y(rate)
            );
        }
        if let Some(c) = &m.vs_human {
            let _ = writeln!(
                svg,
                r##"<line x1="{x0:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#d62728" stroke-width="3"/>"##,
                y(c.human),
                x0 + w,
                y(c.human)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
            x0 + w / 2.0,
            SVG_H - PAD + 16.0,
            m.condition.label()
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn svg_frame(x_label: &str, y_label: &str) -> String {
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" font-family="sans-serif">
"#
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{PAD}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        SVG_H - PAD,
        SVG_W - PAD,
        SVG_H - PAD
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{:.1}" stroke="black"/>"#,
        SVG_H - PAD
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{x_label}</text>"#,
        SVG_W / 2.0,
        SVG_H - 6.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="4" y="{:.1}" font-size="12">{y_label}</text>"#,
        PAD - 10.0
    );
    svg
}

/// Writes `report.md`, `stats.csv`, `analysis.json` and any charts into `dir`.
pub fn write_report(dir: &Path, a: &SuiteAnalysis) -> Result<()> {
    write_atomic(&dir.join("report.md"), render_markdown(a).as_bytes())?;
    write_atomic(&dir.join("stats.csv"), stats_csv(a)?.as_bytes())?;
    let mut json = serde_json::to_string_pretty(a)?;
    json.push('\n');
    write_atomic(&dir.join("analysis.json"), json.as_bytes())?;
    if !a.syntax.is_empty() {
        write_atomic(
            &dir.join("charts/syntax_accuracy.svg"),
            accuracy_svg(&a.syntax).as_bytes(),
        )?;
    }
    if !a.morphology.is_empty() {
        write_atomic(
            &dir.join("charts/morphology_rates.svg"),
            rates_svg(&a.morphology).as_bytes(),
        )?;
    }
    Ok(())
}

/// Every `metrics.json` under `dir`, one level deep, in run-id order.
pub fn collect_summaries(dir: &Path) -> Result<Vec<RunSummary>> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| crate::Error::io(dir, e))?;
    let mut paths: Vec<_> = entries.filter_map(|e| e.ok()).map(|e| e.path()).collect();
    paths.sort();
    for p in paths {
        let metrics = p.join("metrics.json");
        if metrics.is_file() {
            let text =
                std::fs::read_to_string(&metrics).map_err(|e| crate::Error::io(&metrics, e))?;
            out.push(serde_json::from_str(&text)?);
        }
    }
    Ok(out)
}
