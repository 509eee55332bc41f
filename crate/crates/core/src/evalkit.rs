//! Likert questionnaire analysis: per-criterion summaries by evaluator
//! group and Mann-Whitney comparisons between the two generation systems.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{self, StatsError, UTestMethod, UTestMode};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("row {row}: {reason}")]
    Range { row: usize, reason: String },
    #[error("no ratings for {0}")]
    EmptyInput(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Therapist,
    Student,
}

impl FromStr for Role {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "therapist" => Ok(Role::Therapist),
            "student" => Ok(Role::Student),
            other => Err(format!("unknown role `{other}`")),
        }
    }
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Therapist => "therapist",
            Role::Student => "student",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Template,
    Llm,
}

impl FromStr for System {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "template" => Ok(System::Template),
            "llm" => Ok(System::Llm),
            other => Err(format!("unknown system `{other}`")),
        }
    }
}

impl System {
    pub const BOTH: [System; 2] = [System::Template, System::Llm];

    pub fn as_str(self) -> &'static str {
        match self {
            System::Template => "template",
            System::Llm => "llm",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            System::Template => "Template",
            System::Llm => "LLM",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Fluidity,
    Conciseness,
    Relevance,
    Coherence,
    Session,
    Affect,
    Results,
    CognitiveFunctions,
    LinguisticIndicators,
}

impl Criterion {
    pub const ALL: [Criterion; 9] = [
        Criterion::Fluidity,
        Criterion::Conciseness,
        Criterion::Relevance,
        Criterion::Coherence,
        Criterion::Session,
        Criterion::Affect,
        Criterion::Results,
        Criterion::CognitiveFunctions,
        Criterion::LinguisticIndicators,
    ];

    /// Column name in the ratings CSV.
    pub fn column(self) -> &'static str {
        match self {
            Criterion::Fluidity => "fluidity",
            Criterion::Conciseness => "conciseness",
            Criterion::Relevance => "relevance",
            Criterion::Coherence => "coherence",
            Criterion::Session => "session",
            Criterion::Affect => "affect",
            Criterion::Results => "results",
            Criterion::CognitiveFunctions => "cf",
            Criterion::LinguisticIndicators => "li",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Criterion::Fluidity => "Fluidity",
            Criterion::Conciseness => "Conciseness",
            Criterion::Relevance => "Relevance",
            Criterion::Coherence => "Coherence",
            Criterion::Session => "Session",
            Criterion::Affect => "Affect",
            Criterion::Results => "Results",
            Criterion::CognitiveFunctions => "CF",
            Criterion::LinguisticIndicators => "LI",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// A summary column: one criterion or the per-record overall mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Criterion(Criterion),
    Overall,
}

impl Column {
    pub fn all() -> impl Iterator<Item = Column> {
        Criterion::ALL.into_iter().map(Column::Criterion).chain([Column::Overall])
    }

    pub fn label(self) -> &'static str {
        match self {
            Column::Criterion(c) => c.label(),
            Column::Overall => "Overall",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikertRecord {
    pub evaluator_id: String,
    pub role: Role,
    pub survey_version: u8,
    pub report_id: String,
    pub system: System,
    /// In [`Criterion::ALL`] order, each in 1..=5.
    pub scores: [u8; 9],
    pub comment: String,
}

impl LikertRecord {
    pub fn score(&self, c: Criterion) -> u8 {
        self.scores[c.index()]
    }

    /// Mean of the nine scores.
    pub fn overall(&self) -> f64 {
        self.scores.iter().map(|&s| s as f64).sum::<f64>() / 9.0
    }

    pub fn value(&self, column: Column) -> f64 {
        match column {
            Column::Criterion(c) => self.score(c) as f64,
            Column::Overall => self.overall(),
        }
    }
}

const META_COLUMNS: [&str; 5] = ["evaluator_id", "role", "survey_version", "report_id", "system"];

pub fn load_records(text: &str) -> Result<Vec<LikertRecord>, EvalError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| EvalError::Schema(format!("missing column `{name}`")))
    };
    let meta: Vec<usize> = META_COLUMNS.iter().map(|c| col(c)).collect::<Result<_, _>>()?;
    let crit: Vec<usize> = Criterion::ALL.iter().map(|c| col(c.column())).collect::<Result<_, _>>()?;
    let comment = headers.iter().position(|h| h == "comment");
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let field = |idx: usize| record.get(idx).unwrap_or("");
        let range = |reason: String| EvalError::Range { row, reason };
        let role: Role = field(meta[1]).parse().map_err(range)?;
        let survey_version: u8 = field(meta[2])
            .parse()
            .ok()
            .filter(|v| matches!(v, 1 | 2))
            .ok_or_else(|| range(format!("survey_version `{}` is not 1 or 2", field(meta[2]))))?;
        let system: System = field(meta[4]).parse().map_err(range)?;
        let mut scores = [0u8; 9];
        for (k, &idx) in crit.iter().enumerate() {
            let raw = field(idx);
            scores[k] = raw
                .parse()
                .ok()
                .filter(|s| (1..=5).contains(s))
                .ok_or_else(|| range(format!("{} score `{raw}` is outside 1..5", Criterion::ALL[k].column())))?;
        }
        out.push(LikertRecord {
            evaluator_id: field(meta[0]).to_string(),
            role,
            survey_version,
            report_id: field(meta[3]).to_string(),
            system,
            scores,
            comment: comment.map(|c| field(c).to_string()).unwrap_or_default(),
        });
    }
    Ok(out)
}

pub fn write_records(records: &[LikertRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = META_COLUMNS.to_vec();
    header.extend(Criterion::ALL.iter().map(|c| c.column()));
    header.push("comment");
    w.write_record(&header).expect("in-memory write");
    for r in records {
        let mut row = vec![
            r.evaluator_id.clone(),
            r.role.as_str().to_string(),
            r.survey_version.to_string(),
            r.report_id.clone(),
            r.system.as_str().to_string(),
        ];
        row.extend(r.scores.iter().map(|s| s.to_string()));
        row.push(r.comment.clone());
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupFilter {
    All,
    Therapists,
    Students,
}

impl GroupFilter {
    pub const BLOCKS: [GroupFilter; 3] = [GroupFilter::All, GroupFilter::Therapists, GroupFilter::Students];

    pub fn accepts(self, r: &LikertRecord) -> bool {
        match self {
            GroupFilter::All => true,
            GroupFilter::Therapists => r.role == Role::Therapist,
            GroupFilter::Students => r.role == Role::Student,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            GroupFilter::All => "All",
            GroupFilter::Therapists => "Speech therapists",
            GroupFilter::Students => "Students",
        }
    }
}

impl fmt::Display for GroupFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionSummary {
    pub column: Column,
    pub system: System,
    pub group: GroupFilter,
    pub mean: f64,
    /// Sample standard deviation; 0 when `n == 1`.
    pub std: f64,
    pub n: usize,
    pub std_defined: bool,
}

fn select(records: &[LikertRecord], group: GroupFilter, system: System) -> Vec<&LikertRecord> {
    records.iter().filter(|r| group.accepts(r) && r.system == system).collect()
}

/// Nine criterion summaries followed by the overall column.
pub fn summarize(records: &[LikertRecord], group: GroupFilter, system: System) -> Result<Vec<CriterionSummary>, EvalError> {
    let rows = select(records, group, system);
    if rows.is_empty() {
        return Err(EvalError::EmptyInput(format!("{group} / {}", system.label())));
    }
    Column::all()
        .map(|column| {
            let values: Vec<f64> = rows.iter().map(|r| r.value(column)).collect();
            let d = stats::descriptives(&values)?;
            Ok(CriterionSummary {
                column,
                system,
                group,
                mean: d.mean,
                std: d.std.unwrap_or(0.0),
                n: d.n,
                std_defined: d.std.is_some(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitOfAnalysis {
    /// Every report rating is one observation.
    #[default]
    Ratings,
    /// One observation per evaluator: the mean of their ratings.
    EvaluatorMeans,
}

pub const ALPHA: f64 = 0.05;
pub const N_CRITERIA_TESTS: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub column: Column,
    pub group: GroupFilter,
    pub u: f64,
    pub p_uncorrected: f64,
    pub p_bonferroni: f64,
    pub significant_uncorrected: bool,
    pub significant_corrected: bool,
    pub method: UTestMethod,
}

fn sample(rows: &[&LikertRecord], column: Column, unit: UnitOfAnalysis) -> Vec<f64> {
    match unit {
        UnitOfAnalysis::Ratings => rows.iter().map(|r| r.value(column)).collect(),
        UnitOfAnalysis::EvaluatorMeans => {
            let mut by_eval: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for r in rows {
                by_eval.entry(&r.evaluator_id).or_default().push(r.value(column));
            }
            by_eval.values().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect()
        }
    }
}

/// Two-sided Mann-Whitney test of template against LLM ratings, with
/// Bonferroni correction over the nine criteria.
pub fn compare_systems(
    records: &[LikertRecord],
    column: Column,
    group: GroupFilter,
    unit: UnitOfAnalysis,
) -> Result<ComparisonResult, EvalError> {
    let a = sample(&select(records, group, System::Template), column, unit);
    let b = sample(&select(records, group, System::Llm), column, unit);
    if a.is_empty() || b.is_empty() {
        return Err(EvalError::EmptyInput(format!("{group}: one system has no ratings")));
    }
    let test = stats::mann_whitney_u_with(&a, &b, UTestMode::Auto)?;
    Ok(comparison_from_p(column, group, test.u, test.p, test.method))
}

fn comparison_from_p(column: Column, group: GroupFilter, u: f64, p: f64, method: UTestMethod) -> ComparisonResult {
    let p_bonferroni = stats::bonferroni(p, N_CRITERIA_TESTS).expect("p is a probability");
    ComparisonResult {
        column,
        group,
        u,
        p_uncorrected: p,
        p_bonferroni,
        significant_uncorrected: p < ALPHA,
        significant_corrected: p_bonferroni < ALPHA,
        method,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalBlock {
    pub group: GroupFilter,
    pub n_evaluators: usize,
    pub template: Vec<CriterionSummary>,
    pub llm: Vec<CriterionSummary>,
    pub comparisons: Vec<ComparisonResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub blocks: Vec<EvalBlock>,
    pub unit: UnitOfAnalysis,
    pub notices: Vec<String>,
}

/// All, therapist and student blocks. Groups without ratings for both
/// systems are skipped with a notice.
pub fn analyze(records: &[LikertRecord], unit: UnitOfAnalysis) -> Result<EvalReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyInput("questionnaire".into()));
    }
    let mut blocks = Vec::new();
    let mut notices = Vec::new();
    for group in GroupFilter::BLOCKS {
        let rows: Vec<&LikertRecord> = records.iter().filter(|r| group.accepts(r)).collect();
        if rows.is_empty() {
            continue;
        }
        let has = |s: System| rows.iter().any(|r| r.system == s);
        if !has(System::Template) || !has(System::Llm) {
            notices.push(format!("{group}: only one system rated, block and comparisons skipped"));
            continue;
        }
        let n_evaluators = rows.iter().map(|r| r.evaluator_id.as_str()).collect::<std::collections::BTreeSet<_>>().len();
        let comparisons = Criterion::ALL
            .iter()
            .map(|&c| compare_systems(records, Column::Criterion(c), group, unit))
            .collect::<Result<_, _>>()?;
        blocks.push(EvalBlock {
            group,
            n_evaluators,
            template: summarize(records, group, System::Template)?,
            llm: summarize(records, group, System::Llm)?,
            comparisons,
        });
    }
    Ok(EvalReport { blocks, unit, notices })
}

fn cell(s: &CriterionSummary, starred: bool) -> String {
    format!("{:.2} ± {:.2}{}", s.mean, s.std, if starred { "*" } else { "" })
}

/// Markdown table in the layout of a block-per-group results table.
/// A `*` marks the higher mean where the uncorrected p is below 0.05.
pub fn render_summary_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let columns: Vec<Column> = Column::all().collect();
    let _ = writeln!(
        out,
        "| | {} |",
        columns.iter().map(|c| c.label()).collect::<Vec<_>>().join(" | ")
    );
    let _ = writeln!(out, "|---|{}", "---|".repeat(columns.len()));
    for block in &report.blocks {
        let _ = writeln!(
            out,
            "| **{}** ({} evaluators) |{}",
            block.group,
            block.n_evaluators,
            " |".repeat(columns.len())
        );
        for (system, own, other) in [
            (System::Template, &block.template, &block.llm),
            (System::Llm, &block.llm, &block.template),
        ] {
            let cells: Vec<String> = own
                .iter()
                .zip(other)
                .map(|(s, o)| {
                    let significant = block
                        .comparisons
                        .iter()
                        .any(|c| c.column == s.column && c.significant_uncorrected);
                    cell(s, significant && s.mean > o.mean)
                })
                .collect();
            let _ = writeln!(out, "| {} | {} |", system.label(), cells.join(" | "));
        }
    }
    let _ = writeln!(
        out,
        "\n\\* p < 0.05, two-sided Mann-Whitney U test, uncorrected (Bonferroni over {N_CRITERIA_TESTS} criteria reported in the comparisons file)."
    );
    for notice in &report.notices {
        let _ = writeln!(out, "\nNote: {notice}");
    }
    out
}

pub fn write_comparisons(report: &EvalReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "group",
        "criterion",
        "u",
        "p_uncorrected",
        "p_bonferroni",
        "significant_uncorrected",
        "significant_corrected",
        "method",
    ])
    .expect("in-memory write");
    for block in &report.blocks {
        for c in &block.comparisons {
            w.write_record([
                format!("{:?}", c.group).to_lowercase(),
                c.column.label().to_string(),
                format!("{}", c.u),
                format!("{:.6}", c.p_uncorrected),
                format!("{:.6}", c.p_bonferroni),
                c.significant_uncorrected.to_string(),
                c.significant_corrected.to_string(),
                match c.method {
                    UTestMethod::Exact => "exact".to_string(),
                    UTestMethod::NormalApproxTieCorrected => "normal".to_string(),
                },
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Mean and standard deviation per criterion.
pub type CriterionTargets = [(f64, f64); 9];

/// Reference per-group means and standard deviations used to shape the
/// synthetic fixture, in [`Criterion::ALL`] order.
pub const TARGETS: [(Role, System, CriterionTargets); 4] = [
    (
        Role::Therapist,
        System::Template,
        [(4.5, 0.53), (4.8, 0.42), (4.2, 1.14), (4.4, 0.70), (3.8, 1.03), (3.9, 0.99), (4.2, 1.23), (3.6, 1.26), (3.4, 1.71)],
    ),
    (
        Role::Therapist,
        System::Llm,
        [(3.2, 1.23), (4.7, 0.48), (3.8, 1.23), (3.5, 1.08), (3.3, 1.06), (3.7, 1.25), (3.5, 1.35), (3.5, 0.85), (3.6, 1.51)],
    ),
    (
        Role::Student,
        System::Template,
        [(4.5, 0.71), (3.5, 1.35), (3.5, 0.85), (4.1, 0.74), (3.5, 0.53), (3.3, 0.82), (4.7, 0.48), (3.4, 1.17), (3.1, 1.37)],
    ),
    (
        Role::Student,
        System::Llm,
        [(4.1, 1.2), (4.7, 0.48), (4.0, 0.67), (4.2, 0.42), (3.6, 0.97), (3.7, 1.06), (3.9, 1.29), (3.4, 1.17), (4.1, 0.99)],
    ),
];

fn sample_std(v: &[u8]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().map(|&x| x as f64).sum::<f64>() / n;
    (v.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Ten scores in 1..=5 with the exact target mean and a standard deviation
/// close to the target.
fn shaped_scores(mean: f64, std: f64, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let total = (mean * 10.0).round() as u32;
    let base = (total / 10) as u8;
    let extra = (total % 10) as usize;
    let mut v: Vec<u8> = (0..10).map(|i| base + u8::from(i < extra)).collect();
    for _ in 0..400 {
        let (i, j) = (rng.gen_range(0..10), rng.gen_range(0..10));
        if i == j || v[i] >= 5 || v[j] <= 1 {
            continue;
        }
        let before = (sample_std(&v) - std).abs();
        v[i] += 1;
        v[j] -= 1;
        if (sample_std(&v) - std).abs() >= before {
            v[i] -= 1;
            v[j] += 1;
        }
    }
    v.shuffle(rng);
    v
}

/// Synthetic ratings: four therapists and four students, half on each
/// survey version (3 template + 2 LLM reports, or 2 + 3). Group means match
/// the reference targets exactly; the data is labeled as synthetic.
pub fn synthetic_fixture(seed: u64) -> Vec<LikertRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for (role, prefix) in [(Role::Therapist, "T"), (Role::Student, "S")] {
        for system in System::BOTH {
            // rating slots for this role and system
            let mut slots = Vec::new();
            for e in 1..=4u8 {
                let version = if e <= 2 { 1 } else { 2 };
                let n_reports = match (version, system) {
                    (1, System::Template) | (2, System::Llm) => 3,
                    _ => 2,
                };
                for k in 1..=n_reports {
                    slots.push((format!("{prefix}{e}"), version, format!("v{version}-{}-{k}", system.as_str())));
                }
            }
            let targets = TARGETS.iter().find(|t| t.0 == role && t.1 == system).unwrap().2;
            let columns: Vec<Vec<u8>> = targets.iter().map(|&(m, s)| shaped_scores(m, s, &mut rng)).collect();
            for (i, (evaluator_id, survey_version, report_id)) in slots.into_iter().enumerate() {
                let mut scores = [0u8; 9];
                for (c, col) in columns.iter().enumerate() {
                    scores[c] = col[i];
                }
                records.push(LikertRecord {
                    evaluator_id,
                    role,
                    survey_version,
                    report_id,
                    system,
                    scores,
                    comment: "synthetic fixture".into(),
                });
            }
        }
    }
    records.sort_by(|a, b| (&a.evaluator_id, &a.report_id).cmp(&(&b.evaluator_id, &b.report_id)));
    records
}
