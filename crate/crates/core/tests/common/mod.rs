//! Fixture locations and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use ccreport::affect::{EmotionLabel, EmotionTrace};
use ccreport::ingest::{EmotionRecord, ExerciseCatalog, ParseMode, Session};
use ccreport::linguistics::{Indicator, LexiconTagger, Phonemizer, RulePhonemizer};
use ccreport::norms::{load_affect_norms, load_indicator_norms};
use ccreport::pipeline::{self, AnalysisOptions, Analysis, Norms, Rendered, SessionPaths, SessionSources};
use ccreport::reportgen::{Locale, SectionToggles, TemplateSet};
use regex::Regex;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn mci_paths() -> SessionPaths {
    SessionPaths::in_dir(&fixtures().join("mci_session"))
}

pub fn mci_session() -> Session {
    let sources = SessionSources::read(&mci_paths()).unwrap();
    pipeline::load_session(&sources, &ExerciseCatalog::builtin(), ParseMode::Strict).unwrap()
}

pub fn fixture_norms() -> Norms {
    let dir = fixtures().join("norms");
    Norms {
        indicators: Some(load_indicator_norms(&std::fs::read_to_string(dir.join("indicator_norms.csv")).unwrap()).unwrap()),
        affect: Some(load_affect_norms(&std::fs::read_to_string(dir.join("affect_norms.csv")).unwrap()).unwrap()),
    }
}

pub fn analyze_fixture(locale: Locale, toggles: SectionToggles) -> (Analysis, Rendered) {
    let session = mci_session();
    let norms = fixture_norms();
    let templates = TemplateSet::builtin(locale);
    let options = AnalysisOptions {
        toggles,
        ..AnalysisOptions::default()
    };
    let analysis = pipeline::analyze(
        &session,
        &ExerciseCatalog::builtin(),
        &norms,
        &LexiconTagger::builtin(),
        &RulePhonemizer::builtin(),
        &options,
        &templates,
    )
    .unwrap();
    let rendered = pipeline::render(&analysis, &templates, toggles, norms.cohort_note()).unwrap();
    (analysis, rendered)
}

/// Standard normal survival function from the Abramowitz-Stegun 7.1.26
/// erf approximation (absolute error below 1.5e-7).
pub fn normal_sf_oracle(z: f64) -> f64 {
    let x = z.abs() / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erf = 1.0 - poly * (-x * x).exp();
    let cdf = 0.5 * (1.0 + erf.copysign(z));
    1.0 - cdf
}

fn u_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for x in a {
        for y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// Two-sided exact p-value by enumerating every relabeling of the pooled
/// sample, with U counted pairwise.
pub fn mann_whitney_brute_force(a: &[f64], b: &[f64]) -> (f64, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (n, n1) = (pooled.len(), a.len());
    let center = (a.len() * b.len()) as f64 / 2.0;
    let observed = u_statistic(a, b);
    let dev = (observed - center).abs();
    let (mut extreme, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (i, v) in pooled.iter().enumerate() {
            if mask & (1 << i) != 0 {
                x.push(*v);
            } else {
                y.push(*v);
            }
        }
        total += 1;
        if (u_statistic(&x, &y) - center).abs() >= dev - 1e-9 {
            extreme += 1;
        }
    }
    (observed, extreme as f64 / total as f64)
}

pub fn trace_from_rows(rows: Vec<[f64; 10]>) -> EmotionTrace {
    EmotionTrace {
        sequences: rows
            .into_iter()
            .enumerate()
            .map(|(i, intensities)| EmotionRecord {
                sequence_index: i as u32,
                intensities,
            })
            .collect(),
    }
}

/// Alternates `mean[l] ± spread` per label over `n` sequences.
pub fn alternating_trace(mean: [f64; 10], spread: f64, n: usize) -> EmotionTrace {
    trace_from_rows(
        (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                mean.map(|m| m + sign * spread)
            })
            .collect(),
    )
}

pub fn label_means(f: impl Fn(EmotionLabel) -> f64) -> [f64; 10] {
    EmotionLabel::ALL.map(f)
}

pub const SESSION_S: f64 = 1800.0;

/// One phoneme per letter, so the oracle can count independently.
pub struct Letters;

impl Phonemizer for Letters {
    fn count(&self, text: &str) -> usize {
        text.chars().filter(|c| c.is_alphabetic()).count()
    }
}

pub struct Row {
    pub speaker: String,
    pub text: String,
    pub start: f64,
    pub end: f64,
}

pub fn read_rows(text: &str) -> Vec<Row> {
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            Row {
                speaker: f[0].to_string(),
                text: f[1].to_string(),
                start: f[2].parse().unwrap(),
                end: f[3].parse().unwrap(),
            }
        })
        .collect()
}

pub fn strip_markup(text: &str) -> String {
    let mut out = String::new();
    let mut depth = 0;
    for c in text.chars() {
        match c {
            '<' => depth += 1,
            '>' => depth -= 1,
            _ if depth == 0 => out.push(c),
            _ => {}
        }
    }
    out
}

/// Spreadsheet-style recomputation: one row per subject utterance, summed
/// columns, then ratios.
pub fn oracle(transcript: &str, tags: &str) -> BTreeMap<Indicator, f64> {
    let pos: BTreeMap<(usize, usize), String> = tags
        .lines()
        .skip(1)
        .fold((BTreeMap::new(), BTreeMap::<usize, usize>::new()), |(mut m, mut next), line| {
            let f: Vec<&str> = line.split(',').collect();
            let row: usize = f[0].parse().unwrap();
            let k = next.entry(row).or_insert(0);
            m.insert((row, *k), f[2].to_string());
            *k += 1;
            (m, next)
        })
        .0;
    let (mut words, mut content, mut letters, mut utterances) = (0.0, 0.0, 0.0, 0.0);
    let mut speaking = 0.0;
    let mut types = BTreeSet::new();
    for (i, row) in read_rows(transcript).iter().enumerate() {
        let text = strip_markup(&row.text);
        if row.speaker != "subject" || text.trim().is_empty() {
            continue;
        }
        utterances += 1.0;
        speaking += row.end - row.start;
        for (k, w) in text.split_whitespace().enumerate() {
            words += 1.0;
            letters += w.chars().count() as f64;
            types.insert(w.to_string());
            if ["noun", "verb", "adjective", "adverb"].contains(&pos[&(i, k)].as_str()) {
                content += 1.0;
            }
        }
    }
    BTreeMap::from([
        (Indicator::VocabularySize, types.len() as f64),
        (Indicator::SpeakingTime, speaking / SESSION_S * 60.0),
        (Indicator::SpeechRate, letters / speaking),
        (Indicator::MeanUtteranceLength, words / utterances),
        (Indicator::MeanUtteranceDuration, speaking / utterances),
        (Indicator::LexicalDiversity, types.len() as f64 / words),
        (Indicator::ContentDensity, content / words),
    ])
}

/// Reference English template sentences; `{}` is a slot.
pub const TEMPLATE_SENTENCES: [&str; 11] = [
    "The session on {} took place around {}. During this session, the patient completed {} activities ({} exercises performed twice) over {}. Table 1 summarizes the cognitive functions targeted and the results of the activities.",
    "Among these activities: {} activities were not successful (correct response rate < 60%).",
    "{} activities were partially successful (correct response rate between 60% and 80%).",
    "The remaining activities showed completely satisfactory results (correct response rate > 80%).",
    "The success rate for the exercises is {}%.",
    "The exercises that were not successful are: {}.",
    "During the session, the patient appeared particularly {} ({}, but also {}) compared to the emotions expressed by patients in the same group.",
    "Table 2 below presents the values of the linguistic indicators computed from the patient's utterances during the interaction. Explanations of the different indicators are provided in the Appendix.",
    "Compared to the norm, the value of \"{}\" is higher.",
    "Conversely, the value of \"{}\" is lower.",
    // first lower sentence when nothing is higher
    "Compared to the norm, the value of \"{}\" is lower.",
];

pub fn sentence_regex() -> Regex {
    let alternatives: Vec<String> = TEMPLATE_SENTENCES
        .iter()
        .map(|t| t.split("{}").map(regex::escape).collect::<Vec<_>>().join("[^\\n]+?"))
        .collect();
    let any = format!("(?:{})", alternatives.join("|"));
    Regex::new(&format!("^{any}(?: {any})*$")).unwrap()
}

pub fn paragraphs(md: &str) -> Vec<&str> {
    md.split("\n\n")
        .map(str::trim)
        .filter(|p| !p.is_empty() && !p.starts_with('#') && !p.starts_with('|') && !p.starts_with("**"))
        .filter(|p| !p.starts_with("- "))
        .collect()
}

/// Glossary entries of the reference prompt, key then explanation.
pub const GLOSSARY: [(&str, &str); 12] = [
    ("date_session_string", "Session date"),
    ("textual_start_time", "Session start time"),
    ("nb_activities", "Number of activities completed"),
    ("nb_exercises", "Number of exercises completed"),
    ("duration_session_str", "Session duration"),
    ("num_failed", "Number of failed activities"),
    ("num_partial", "Number of partially successful activities"),
    ("success_rate", "Success rate - successful activities / total activities"),
    ("exo_failed", "Failed activities"),
    (
        "salientEmotions",
        "Emotions particularly expressed by the patient compared to patients in the same group",
    ),
    ("Exo_results_TableDict", "Exercises and cognitive functions addressed"),
    ("TableDict", "Linguistic indicators"),
];

pub const NEUTRALITY: &str = "The report must not contain any diagnosis or interpretation but should focus on factual data. It is better to remain descriptive, objective, and neutral.";

pub const LEGEND: [&str; 3] = [
    "successful = accuracy > 80%",
    "partial = accuracy between 60% and 80%",
    "unsuccessful = accuracy < 60%",
];

