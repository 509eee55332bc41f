//! Report variables, the two summary tables and Markdown/HTML rendering.

mod render;
mod templates;

use chrono::{Datelike, NaiveDate, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affect::EmotionSelection;
use crate::ingest::{Activity, EmotionLabel, ExerciseCatalog, IngestError, Polarity, Session};
use crate::linguistics::{Indicator, IndicatorSet};
use crate::norms::{IndicatorNorms, NormError};
use crate::stats::QuartileNorm;

pub use self::render::{
    build_document, render_html, render_markdown, Block, ReportDocument, ReportInputs, Section, SectionKind, SectionToggles,
    TableBlock,
};
pub use self::render::outcome_marker;
pub use self::templates::{has_placeholder, Locale, TemplateSet, TEMPLATE_KEYS};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("accuracy {0} is outside [0, 100]")]
    Range(f64),
    #[error("no activities to report")]
    EmptyInput,
    #[error("template error: {0}")]
    Template(String),
    #[error("render error: {0}")]
    Render(String),
    #[error("no norm for indicator `{0}`")]
    MissingNorm(Indicator),
    #[error(transparent)]
    Catalog(#[from] IngestError),
    #[error("exercise `{0}` has more than two attempts")]
    TooManyAttempts(String),
    #[error(transparent)]
    Norm(NormError),
}

impl From<NormError> for ReportError {
    fn from(e: NormError) -> Self {
        match e {
            NormError::MissingNorm(i) => ReportError::MissingNorm(i),
            other => ReportError::Norm(other),
        }
    }
}

/// Ordered so that `Failed < Partial < Successful`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeClass {
    Failed,
    Partial,
    Successful,
}

impl OutcomeClass {
    pub fn css_class(self) -> &'static str {
        match self {
            OutcomeClass::Failed => "outcome-failed",
            OutcomeClass::Partial => "outcome-partial",
            OutcomeClass::Successful => "outcome-success",
        }
    }

    pub fn template_key(self) -> &'static str {
        match self {
            OutcomeClass::Failed => "outcome_failed",
            OutcomeClass::Partial => "outcome_partial",
            OutcomeClass::Successful => "outcome_success",
        }
    }
}

pub const FAILED_BELOW: f64 = 60.0;
pub const SUCCESS_ABOVE: f64 = 80.0;

/// `< 60` failed, `[60, 80]` partial, `> 80` successful.
pub fn classify_outcome(accuracy_pct: f64) -> Result<OutcomeClass, ReportError> {
    if !(0.0..=100.0).contains(&accuracy_pct) {
        return Err(ReportError::Range(accuracy_pct));
    }
    Ok(if accuracy_pct < FAILED_BELOW {
        OutcomeClass::Failed
    } else if accuracy_pct <= SUCCESS_ABOVE {
        OutcomeClass::Partial
    } else {
        OutcomeClass::Successful
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextVars {
    pub date_session_string: String,
    pub textual_start_time: String,
    pub nb_activities: usize,
    pub nb_exercises: usize,
    pub duration_session_str: String,
    /// Every exercise was attempted exactly twice.
    pub all_repeated: bool,
}

const MONTHS_FR: [&str; 12] = [
    "janvier", "février", "mars", "avril", "mai", "juin", "juillet", "août", "septembre", "octobre", "novembre",
    "décembre",
];

pub fn format_date(date: NaiveDate, locale: Locale) -> String {
    match locale {
        Locale::Fr => {
            let day = if date.day() == 1 { "1er".to_string() } else { date.day().to_string() };
            format!("{day} {} {}", MONTHS_FR[date.month0() as usize], date.year())
        }
        Locale::En => date.format("%B %-d, %Y").to_string(),
    }
}

/// Rounds to the nearest five minutes, halves rounding up.
pub fn format_start_time(time: NaiveTime, locale: Locale) -> String {
    let secs = time.num_seconds_from_midnight();
    let rounded = ((secs + 150) / 300 * 300) % 86_400;
    let (h, m) = (rounded / 3600, rounded % 3600 / 60);
    match locale {
        Locale::Fr => format!("{h}h{m:02}"),
        Locale::En => format!("{h}:{m:02}"),
    }
}

/// `N min` under an hour, `H h MM` from an hour up.
pub fn format_duration(duration_s: f64) -> String {
    let minutes = (duration_s / 60.0).round().max(0.0) as u64;
    if minutes < 60 {
        format!("{minutes} min")
    } else {
        format!("{} h {:02}", minutes / 60, minutes % 60)
    }
}

pub fn context_vars(session: &Session, locale: Locale) -> ContextVars {
    ContextVars {
        date_session_string: format_date(session.date, locale),
        textual_start_time: format_start_time(session.start_time, locale),
        nb_activities: session.nb_activities(),
        nb_exercises: session.nb_exercises(),
        duration_session_str: format_duration(session.duration_s),
        all_repeated: session.all_exercises_repeated(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedActivity {
    pub exercise_id: String,
    pub display_name: String,
    pub ordinal: usize,
}

impl FailedActivity {
    pub fn label(&self, locale: Locale) -> String {
        match locale {
            Locale::Fr => format!("{} ({} activité)", self.display_name, french_ordinal(self.ordinal)),
            Locale::En => format!("{} (activity {})", self.display_name, self.ordinal),
        }
    }
}

/// `1ʳᵉ`, `2ᵉ`, `3ᵉ`, ... (feminine, agreeing with « activité »).
pub fn french_ordinal(n: usize) -> String {
    if n == 1 {
        "1ʳᵉ".to_string()
    } else {
        format!("{n}ᵉ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsVars {
    pub num_failed: usize,
    pub num_partial: usize,
    pub num_success: usize,
    pub nb_activities: usize,
    /// Percentage of successful activities.
    pub success_rate: f64,
    /// In session order.
    pub exo_failed: Vec<FailedActivity>,
}

impl ResultsVars {
    pub fn success_rate_str(&self) -> String {
        format!("{:.1}", self.success_rate)
    }

    pub fn is_consistent(&self) -> bool {
        self.num_failed + self.num_partial + self.num_success == self.nb_activities
            && self.exo_failed.len() == self.num_failed
    }
}

pub fn results_vars(activities: &[Activity], catalog: &ExerciseCatalog) -> Result<ResultsVars, ReportError> {
    if activities.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    let mut ordered: Vec<&Activity> = activities.iter().collect();
    ordered.sort_by_key(|a| a.ordinal);
    let (mut num_failed, mut num_partial, mut num_success) = (0, 0, 0);
    let mut exo_failed = Vec::new();
    for a in ordered {
        match classify_outcome(a.accuracy_pct)? {
            OutcomeClass::Failed => {
                num_failed += 1;
                exo_failed.push(FailedActivity {
                    exercise_id: a.exercise_id.clone(),
                    display_name: catalog.get(&a.exercise_id)?.display_name.clone(),
                    ordinal: a.ordinal,
                });
            }
            OutcomeClass::Partial => num_partial += 1,
            OutcomeClass::Successful => num_success += 1,
        }
    }
    Ok(ResultsVars {
        num_failed,
        num_partial,
        num_success,
        nb_activities: activities.len(),
        success_rate: 100.0 * num_success as f64 / activities.len() as f64,
        exo_failed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Higher,
    Lower,
    Within,
}

impl Direction {
    pub fn arrow(self) -> &'static str {
        match self {
            Direction::Higher => "↑",
            Direction::Lower => "↓",
            Direction::Within => "",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComparisonRule {
    /// Outside `[q1, q3]`.
    #[default]
    Interquartile,
    /// Any difference from the median.
    Median,
}

impl ComparisonRule {
    pub fn direction(self, value: f64, norm: &QuartileNorm) -> Direction {
        let (low, high) = match self {
            ComparisonRule::Interquartile => (norm.q1, norm.q3),
            ComparisonRule::Median => (norm.median, norm.median),
        };
        if value > high {
            Direction::Higher
        } else if value < low {
            Direction::Lower
        } else {
            Direction::Within
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorComparison {
    pub indicator: Indicator,
    pub value: f64,
    pub direction: Direction,
    pub norm: QuartileNorm,
}

pub fn compare_indicators(set: &IndicatorSet, norms: &IndicatorNorms) -> Result<Vec<IndicatorComparison>, ReportError> {
    compare_indicators_with(set, norms, ComparisonRule::Interquartile)
}

pub fn compare_indicators_with(
    set: &IndicatorSet,
    norms: &IndicatorNorms,
    rule: ComparisonRule,
) -> Result<Vec<IndicatorComparison>, ReportError> {
    Indicator::ALL
        .iter()
        .map(|&indicator| {
            let norm = *norms.get(indicator)?;
            let value = set.value(indicator);
            Ok(IndicatorComparison {
                indicator,
                value,
                direction: rule.direction(value, &norm),
                norm,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub ordinal: usize,
    pub accuracy_pct: f64,
    pub outcome: OutcomeClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExerciseRow {
    pub exercise_id: String,
    pub display_name: String,
    pub cognitive_functions: Vec<String>,
    pub attempts: [Option<Attempt>; 2],
}

/// One row per exercise, in order of first appearance.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExerciseTable {
    pub rows: Vec<ExerciseRow>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IndicatorTable {
    pub rows: Vec<IndicatorComparison>,
}

/// Attempts are placed in session order, so a lone attempt fills column 1.
pub fn build_tables(
    activities: &[Activity],
    catalog: &ExerciseCatalog,
    comparisons: &[IndicatorComparison],
) -> Result<(ExerciseTable, IndicatorTable), ReportError> {
    let mut ordered: Vec<&Activity> = activities.iter().collect();
    ordered.sort_by_key(|a| a.ordinal);
    let mut rows: Vec<ExerciseRow> = Vec::new();
    for a in ordered {
        let attempt = Attempt {
            ordinal: a.ordinal,
            accuracy_pct: a.accuracy_pct,
            outcome: classify_outcome(a.accuracy_pct)?,
        };
        let idx = match rows.iter().position(|r| r.exercise_id == a.exercise_id) {
            Some(i) => i,
            None => {
                let entry = catalog.get(&a.exercise_id)?;
                rows.push(ExerciseRow {
                    exercise_id: entry.exercise_id.clone(),
                    display_name: entry.display_name.clone(),
                    cognitive_functions: entry.cognitive_functions.clone(),
                    attempts: [None, None],
                });
                rows.len() - 1
            }
        };
        let slot = rows[idx]
            .attempts
            .iter_mut()
            .find(|s| s.is_none())
            .ok_or_else(|| ReportError::TooManyAttempts(a.exercise_id.clone()))?;
        *slot = Some(attempt);
    }
    Ok((
        ExerciseTable { rows },
        IndicatorTable {
            rows: comparisons.to_vec(),
        },
    ))
}

/// Fills for the affect sentence: primary label, labels sharing its
/// polarity, labels of the opposite polarity.
pub fn affect_slots(selection: &EmotionSelection) -> Option<(EmotionLabel, Vec<EmotionLabel>, Vec<EmotionLabel>)> {
    let primary = selection.primary?;
    let (same, other) = match primary.polarity() {
        Polarity::Positive => (selection.other_positive.clone(), selection.negative.clone()),
        Polarity::Negative => (selection.negative.clone(), selection.other_positive.clone()),
    };
    Some((primary, same, other))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ExerciseCatalog;

    fn activity(id: &str, ordinal: usize, acc: f64) -> Activity {
        Activity {
            exercise_id: id.into(),
            repetition: 1,
            ordinal,
            accuracy_pct: acc,
            start_ms: 0,
            end_ms: 1,
        }
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_outcome(85.0).unwrap(), OutcomeClass::Successful);
        assert_eq!(classify_outcome(70.0).unwrap(), OutcomeClass::Partial);
        assert_eq!(classify_outcome(59.9).unwrap(), OutcomeClass::Failed);
        assert_eq!(classify_outcome(80.0).unwrap(), OutcomeClass::Partial);
        assert_eq!(classify_outcome(60.0).unwrap(), OutcomeClass::Partial);
        assert!(classify_outcome(100.1).is_err());
        assert!(classify_outcome(f64::NAN).is_err());
    }

    #[test]
    fn formatting() {
        let d = NaiveDate::from_ymd_opt(2021, 3, 12).unwrap();
        assert_eq!(format_date(d, Locale::Fr), "12 mars 2021");
        assert_eq!(format_date(d, Locale::En), "March 12, 2021");
        assert_eq!(format_date(NaiveDate::from_ymd_opt(2021, 8, 1).unwrap(), Locale::Fr), "1er août 2021");
        let t = |h, m, s| NaiveTime::from_hms_opt(h, m, s).unwrap();
        assert_eq!(format_start_time(t(14, 32, 10), Locale::Fr), "14h30");
        assert_eq!(format_start_time(t(14, 32, 30), Locale::Fr), "14h35");
        assert_eq!(format_start_time(t(9, 58, 0), Locale::En), "10:00");
        assert_eq!(format_start_time(t(23, 58, 0), Locale::Fr), "0h00");
        assert_eq!(format_duration(2700.0), "45 min");
        assert_eq!(format_duration(3600.0), "1 h 00");
        assert_eq!(format_duration(3929.0), "1 h 05");
        assert_eq!(format_duration(3569.0), "59 min");
    }

    #[test]
    fn results_example() {
        let catalog = ExerciseCatalog::builtin();
        let accs = [85.0, 90.0, 95.0, 62.0, 81.0, 40.0, 100.0, 10.0];
        let ids = ["Exo1", "Exo1", "Exo2", "Exo2", "Exo3", "Exo3", "Exo7", "Exo7"];
        let acts: Vec<_> = ids.iter().zip(accs).enumerate().map(|(i, (id, a))| activity(id, i + 1, a)).collect();
        let r = results_vars(&acts, &catalog).unwrap();
        assert_eq!((r.num_failed, r.num_partial, r.num_success), (2, 1, 5));
        assert_eq!(r.success_rate, 62.5);
        assert_eq!(r.success_rate_str(), "62.5");
        assert!(r.is_consistent());
        assert_eq!(r.exo_failed[0].label(Locale::Fr), "Que d'accros (6ᵉ activité)");
        assert!(matches!(results_vars(&[], &catalog), Err(ReportError::EmptyInput)));
    }

    #[test]
    fn ordinals() {
        assert_eq!(french_ordinal(1), "1ʳᵉ");
        assert_eq!(french_ordinal(6), "6ᵉ");
    }

    #[test]
    fn comparison_rules() {
        let norm = QuartileNorm {
            median: 0.25,
            q1: 0.22,
            q3: 0.28,
            n_sessions: 10,
        };
        let r = ComparisonRule::Interquartile;
        assert_eq!(r.direction(0.28, &norm), Direction::Within);
        assert_eq!(r.direction(0.22, &norm), Direction::Within);
        assert_eq!(r.direction(0.31, &norm), Direction::Higher);
        assert_eq!(r.direction(0.1, &norm), Direction::Lower);
        assert_eq!(ComparisonRule::Median.direction(0.26, &norm), Direction::Higher);
    }

    #[test]
    fn table_rows() {
        let catalog = ExerciseCatalog::builtin();
        let acts = vec![activity("Exo1", 1, 85.0), activity("Exo2", 2, 30.0), activity("Exo1", 3, 62.0)];
        let (t1, t2) = build_tables(&acts, &catalog, &[]).unwrap();
        assert_eq!(t1.rows.len(), 2);
        let exo1 = &t1.rows[0];
        assert_eq!(exo1.attempts[0].unwrap().outcome, OutcomeClass::Successful);
        assert_eq!(exo1.attempts[1].unwrap().outcome, OutcomeClass::Partial);
        assert!(t1.rows[1].attempts[1].is_none());
        assert!(t2.rows.is_empty());
        let three = vec![activity("Exo1", 1, 85.0), activity("Exo1", 2, 85.0), activity("Exo1", 3, 85.0)];
        assert!(matches!(build_tables(&three, &catalog, &[]), Err(ReportError::TooManyAttempts(_))));
        assert!(build_tables(&[activity("Nope", 1, 50.0)], &catalog, &[]).is_err());
    }

    #[test]
    fn affect_slot_polarity() {
        let sel = EmotionSelection {
            primary: Some(EmotionLabel::Frustrated),
            other_positive: vec![EmotionLabel::Satisfied],
            negative: vec![EmotionLabel::Anxious],
        };
        let (p, same, other) = affect_slots(&sel).unwrap();
        assert_eq!(p, EmotionLabel::Frustrated);
        assert_eq!(same, vec![EmotionLabel::Anxious]);
        assert_eq!(other, vec![EmotionLabel::Satisfied]);
        assert!(affect_slots(&EmotionSelection::default()).is_none());
    }
}
