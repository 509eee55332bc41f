//! Parsers for the raw session material and assembly of a [`Session`].
//!
//! All parsers are pure functions of their input text.

mod catalog;
mod log;
mod trace;
mod transcript;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::catalog::{load_exercise_catalog, ExerciseCatalog, ExerciseCatalogEntry};
pub use self::log::{
    format_timestamp, parse_session_log, parse_timestamp, write_session_log, EndGame, EventKind, LogEvent,
    ParseMode, SessionLog,
};
pub use self::trace::{load_emotion_trace, write_emotion_trace, EmotionLabel, EmotionRecord, EmotionTrace, Polarity};
pub use self::transcript::{is_nonverbal_only, parse_transcript, write_transcript, Speaker, Utterance};

pub(crate) use self::transcript::diacritic_regex;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("log file contains no events")]
    EmptyLog,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("row {row}: {reason}")]
    Range { row: usize, reason: String },
    #[error("exercise `{0}` not found in catalog")]
    NotFound(String),
    #[error("exercise `{0}` referenced by the log is not in the catalog")]
    CatalogMismatch(String),
    #[error("invalid session structure: {0}")]
    Structure(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "young")]
    Young,
    #[serde(rename = "senior")]
    Senior,
    #[serde(rename = "MCI")]
    Mci,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Young => "young",
            Group::Senior => "senior",
            Group::Mci => "MCI",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "young" => Ok(Group::Young),
            "senior" => Ok(Group::Senior),
            "mci" => Ok(Group::Mci),
            other => Err(IngestError::Schema(format!("unknown group `{other}`"))),
        }
    }
}

/// One attempt at an exercise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    pub exercise_id: String,
    pub repetition: u8,
    /// 1-based position in the session, by end time.
    pub ordinal: usize,
    pub accuracy_pct: f64,
    pub start_ms: u64,
    pub end_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub session_id: String,
    pub participant_id: String,
    pub group: Group,
    pub date: NaiveDate,
    pub start_time: NaiveTime,
    pub activities: Vec<Activity>,
    pub transcript: Vec<Utterance>,
    pub trace: Option<EmotionTrace>,
    pub duration_s: f64,
    /// Non-fatal structural findings.
    pub warnings: Vec<String>,
}

impl Session {
    pub fn nb_activities(&self) -> usize {
        self.activities.len()
    }

    pub fn nb_exercises(&self) -> usize {
        self.activities
            .iter()
            .map(|a| a.exercise_id.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// True when every exercise of the session was attempted exactly twice.
    pub fn all_exercises_repeated(&self) -> bool {
        let n = self.nb_exercises();
        n > 0 && self.nb_activities() == 2 * n && self.activities.iter().filter(|a| a.repetition == 2).count() == n
    }
}

/// Header keys read from the log: `session`, `participant`, `group`, `date`
/// (`YYYY-MM-DD`) and `start` (`HH:MM:SS`).
fn header_field<'a>(log: &'a SessionLog, key: &str) -> Result<&'a str, IngestError> {
    log.header
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| IngestError::Schema(format!("log header is missing `#{key}=`")))
}

/// Joins a parsed log, transcript and optional trace into a session.
///
/// Activities are numbered by `ENDGAME` time; an activity starts at the
/// previous `ENDGAME` (or the first event) and ends at its own.
pub fn assemble_session(
    log: &SessionLog,
    transcript: Vec<Utterance>,
    catalog: &ExerciseCatalog,
    trace: Option<EmotionTrace>,
) -> Result<Session, IngestError> {
    let session_id = header_field(log, "session")?.to_string();
    let participant_id = header_field(log, "participant")?.to_string();
    let group: Group = header_field(log, "group")?.parse()?;
    let date = NaiveDate::parse_from_str(header_field(log, "date")?, "%Y-%m-%d")
        .map_err(|e| IngestError::Schema(format!("bad header date: {e}")))?;
    let start_time = NaiveTime::parse_from_str(header_field(log, "start")?, "%H:%M:%S")
        .map_err(|e| IngestError::Schema(format!("bad header start time: {e}")))?;

    let first_ms = log.events.first().ok_or(IngestError::EmptyLog)?.timestamp_ms;
    let last_ms = log.events.last().ok_or(IngestError::EmptyLog)?.timestamp_ms;
    let duration_s = (last_ms - first_ms) as f64 / 1000.0;
    if duration_s <= 0.0 {
        return Err(IngestError::Structure("session duration is zero".into()));
    }

    let mut activities = Vec::new();
    let mut previous_end = first_ms;
    for (i, (ts, game)) in log.end_games()?.into_iter().enumerate() {
        if !catalog.contains(&game.exercise_id) {
            return Err(IngestError::CatalogMismatch(game.exercise_id));
        }
        activities.push(Activity {
            exercise_id: game.exercise_id,
            repetition: game.repetition,
            ordinal: i + 1,
            accuracy_pct: game.accuracy_pct,
            start_ms: previous_end,
            end_ms: ts,
        });
        previous_end = ts;
    }

    let mut session = Session {
        session_id,
        participant_id,
        group,
        date,
        start_time,
        activities,
        transcript,
        trace,
        duration_s,
        warnings: log.warnings.clone(),
    };
    session.warnings.extend(structure_warnings(&session));
    for w in &session.warnings {
        ::log::warn!("{}: {w}", session.session_id);
    }
    Ok(session)
}

fn structure_warnings(session: &Session) -> Vec<String> {
    let mut out = Vec::new();
    if session.activities.is_empty() {
        out.push("no ENDGAME event: session has no activity".to_string());
        return out;
    }
    let mut seen = BTreeSet::new();
    for a in &session.activities {
        if !seen.insert((a.exercise_id.as_str(), a.repetition)) {
            out.push(format!("{} repetition {} appears more than once", a.exercise_id, a.repetition));
        }
    }
    match session.group {
        Group::Mci => {
            if session.nb_exercises() != 4 || session.nb_activities() != 8 || !session.all_exercises_repeated() {
                out.push(format!(
                    "MCI session expected 4 exercises x 2 repetitions, found {} activities over {} exercises",
                    session.nb_activities(),
                    session.nb_exercises()
                ));
            }
        }
        Group::Young | Group::Senior => {
            if session.activities.iter().any(|a| a.repetition != 1) {
                out.push(format!("{} session expected one repetition per exercise", session.group));
            }
        }
    }
    out
}
