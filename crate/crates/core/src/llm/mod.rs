//! JSON variable payload, prompt construction and the chat-completion
//! client contract.

mod client;

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reportgen::{
    outcome_marker, Direction, ExerciseTable, IndicatorTable, Locale, OutcomeClass, ReportInputs, TemplateSet,
};

pub use self::client::{
    extract_markdown, request_report, request_report_with, ChatClient, ChatReply, ChatRequest, ClientError, Extracted,
    LlmResponse, MockClient, ReplayClient, RetryPolicy,
};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("incomplete payload: {0}")]
    IncompletePayload(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("service returned status {status}: {body}")]
    Service { status: u16, body: String },
    #[error("gave up after {attempts} attempts: {last}")]
    GaveUp { attempts: u32, last: String },
}

/// Header plus rows, the table shape the prompt describes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableDict {
    pub list_of_strings: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// The variables handed to the language model, in prompt order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariablePayload {
    pub date_session_string: String,
    pub textual_start_time: String,
    pub nb_activities: usize,
    pub nb_exercises: usize,
    pub duration_session_str: String,
    pub num_failed: usize,
    pub num_partial: usize,
    pub success_rate: f64,
    pub exo_failed: Vec<String>,
    #[serde(rename = "salientEmotions")]
    pub salient_emotions: Vec<String>,
    #[serde(rename = "Exo_results_TableDict")]
    pub exo_results_table: TableDict,
    #[serde(rename = "TableDict")]
    pub indicator_table: TableDict,
}

pub const PAYLOAD_KEYS: [&str; 12] = [
    "date_session_string",
    "textual_start_time",
    "nb_activities",
    "nb_exercises",
    "duration_session_str",
    "num_failed",
    "num_partial",
    "success_rate",
    "exo_failed",
    "salientEmotions",
    "Exo_results_TableDict",
    "TableDict",
];

/// HTML entities for the comparison arrows.
pub const ARROW_DOWN_ENTITY: &str = "&#129047;";
pub const ARROW_UP_ENTITY: &str = "&#129045;";

fn exercise_dict(templates: &TemplateSet, table: &ExerciseTable) -> TableDict {
    // column labels stay in English: they are keys the prompt explains
    TableDict {
        list_of_strings: ["Exercise", "Cognitive skills stimulated", "Attempt 1", "Attempt 2"]
            .map(String::from)
            .to_vec(),
        rows: table
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![r.display_name.clone(), r.cognitive_functions.join(", ")];
                row.extend(r.attempts.iter().map(|a| match a {
                    Some(a) => outcome_marker(templates, a.outcome, a.accuracy_pct),
                    None => "—".to_string(),
                }));
                row
            })
            .collect(),
    }
}

fn indicator_dict(locale: Locale, table: Option<&IndicatorTable>) -> TableDict {
    TableDict {
        list_of_strings: ["Indicator", "Value", "Comparison", "Norm"].map(String::from).to_vec(),
        rows: table
            .map(|t| {
                t.rows
                    .iter()
                    .map(|c| {
                        vec![
                            locale.indicator_name(c.indicator).to_string(),
                            format!("{:.2}", c.value),
                            match c.direction {
                                Direction::Higher => ARROW_UP_ENTITY.to_string(),
                                Direction::Lower => ARROW_DOWN_ENTITY.to_string(),
                                Direction::Within => String::new(),
                            },
                            format!("{:.2} [{:.2}; {:.2}]", c.norm.median, c.norm.q1, c.norm.q3),
                        ]
                    })
                    .collect()
            })
            .unwrap_or_default(),
    }
}

/// Mirrors the report variables. A missing trace gives an empty emotion
/// list; missing indicators give a header-only indicator table.
pub fn build_payload(inputs: &ReportInputs<'_>, templates: &TemplateSet) -> Result<VariablePayload, LlmError> {
    let (c, r) = (inputs.context, inputs.results);
    if !r.is_consistent() || r.nb_activities != c.nb_activities {
        return Err(LlmError::IncompletePayload("results do not match the session context".into()));
    }
    let locale = templates.locale;
    let salient_emotions = inputs
        .emotions
        .map(|s| s.labels().into_iter().map(|l| locale.emotion(l).to_string()).collect())
        .unwrap_or_default();
    Ok(VariablePayload {
        date_session_string: c.date_session_string.clone(),
        textual_start_time: c.textual_start_time.clone(),
        nb_activities: c.nb_activities,
        nb_exercises: c.nb_exercises,
        duration_session_str: c.duration_session_str.clone(),
        num_failed: r.num_failed,
        num_partial: r.num_partial,
        success_rate: (r.success_rate * 10.0).round() / 10.0,
        exo_failed: r.exo_failed.iter().map(|f| f.label(locale)).collect(),
        salient_emotions,
        exo_results_table: exercise_dict(templates, inputs.exercises),
        indicator_table: indicator_dict(locale, inputs.indicators),
    })
}

impl VariablePayload {
    /// Canonical text: declared key order, two-space indentation.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("payload serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| LlmError::IncompletePayload(e.to_string()))?;
        let keys: Vec<&str> = value
            .as_object()
            .ok_or_else(|| LlmError::IncompletePayload("payload is not a JSON object".into()))?
            .keys()
            .map(String::as_str)
            .collect();
        if keys != PAYLOAD_KEYS {
            return Err(LlmError::IncompletePayload(format!("unexpected key set {keys:?}")));
        }
        serde_json::from_value(value).map_err(|e| LlmError::IncompletePayload(e.to_string()))
    }
}

/// Builds the payload and returns its canonical JSON text.
pub fn serialize_variables(inputs: &ReportInputs<'_>, templates: &TemplateSet) -> Result<String, LlmError> {
    Ok(build_payload(inputs, templates)?.to_canonical_json())
}

/// Reference cohort behind the indicator norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortNote {
    pub sessions: usize,
    pub participants: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptDocument {
    pub text: String,
    /// Byte range of the substituted payload inside `text`.
    pub variable_block_span: Range<usize>,
}

impl PromptDocument {
    pub fn payload(&self) -> &str {
        &self.text[self.variable_block_span.clone()]
    }
}

pub const VARIABLES_SLOT: &str = "{{Variables}}";
const COHORT_SLOT: &str = "{{Cohort}}";

const PROMPT_EN: &str = include_str!("../../data/prompt_en.txt");
const PROMPT_FR: &str = include_str!("../../data/prompt_fr.txt");

pub fn prompt_template(locale: Locale) -> &'static str {
    match locale {
        Locale::Fr => PROMPT_FR,
        Locale::En => PROMPT_EN,
    }
}

fn cohort_sentence(locale: Locale, cohort: Option<CohortNote>) -> String {
    match (locale, cohort) {
        (Locale::En, Some(c)) => format!(
            "(Note on the norm: {} sessions from {} participants in a group of individuals of the same age range as the patient (using median and 1st and 3rd quartiles).)",
            c.sessions, c.participants
        ),
        (Locale::En, None) => {
            "(Note on the norm: sessions from a group of individuals of the same age range as the patient (using median and 1st and 3rd quartiles).)".into()
        }
        (Locale::Fr, Some(c)) => format!(
            "(Remarque sur la norme : {} séances de {} participants d'un groupe de personnes de la même tranche d'âge que le patient (médiane et 1er et 3e quartiles).)",
            c.sessions, c.participants
        ),
        (Locale::Fr, None) => {
            "(Remarque sur la norme : séances d'un groupe de personnes de la même tranche d'âge que le patient (médiane et 1er et 3e quartiles).)".into()
        }
    }
}

/// Substitutes the payload into the prompt template exactly once.
pub fn build_prompt(payload_json: &str, locale: Locale, cohort: Option<CohortNote>) -> Result<PromptDocument, LlmError> {
    VariablePayload::from_json(payload_json)?;
    let template = prompt_template(locale).replacen(COHORT_SLOT, &cohort_sentence(locale, cohort), 1);
    let at = template
        .find(VARIABLES_SLOT)
        .expect("prompt template holds the variables slot");
    let mut text = String::with_capacity(template.len() + payload_json.len());
    text.push_str(&template[..at]);
    let start = text.len();
    text.push_str(payload_json);
    let end = text.len();
    text.push_str(&template[at + VARIABLES_SLOT.len()..]);
    Ok(PromptDocument {
        text,
        variable_block_span: start..end,
    })
}

/// Thresholds the prompt states for the outcome markers.
pub fn threshold_legend(outcome: OutcomeClass) -> &'static str {
    match outcome {
        OutcomeClass::Successful => "successful = accuracy > 80%",
        OutcomeClass::Partial => "partial = accuracy between 60% and 80%",
        OutcomeClass::Failed => "unsuccessful = accuracy < 60%",
    }
}
