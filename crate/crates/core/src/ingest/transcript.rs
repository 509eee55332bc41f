use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Subject,
    Avatar,
}

impl Speaker {
    pub fn as_str(self) -> &'static str {
        match self {
            Speaker::Subject => "subject",
            Speaker::Avatar => "avatar",
        }
    }

    fn parse(raw: &str) -> Option<Self> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "subject" => Some(Speaker::Subject),
            "avatar" => Some(Speaker::Avatar),
            _ => None,
        }
    }
}

/// One transcript row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    pub text: String,
    pub start_s: f64,
    pub end_s: f64,
    pub nonverbal_only: bool,
}

impl Utterance {
    pub fn new(speaker: Speaker, text: &str, start_s: f64, end_s: f64) -> Self {
        let text = text.trim().to_string();
        Utterance {
            speaker,
            nonverbal_only: is_nonverbal_only(&text),
            text,
            start_s,
            end_s,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

pub(crate) fn diacritic_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<[^<>]*>").unwrap())
}

/// True when the text is one or more `<..>` markup tokens and nothing else.
pub fn is_nonverbal_only(text: &str) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:<[^<>]*>\s*)+$").unwrap())
        .is_match(text)
}

const COLUMNS: [&str; 4] = ["speaker", "text", "start_s", "end_s"];

/// Parses a `speaker,text,start_s,end_s` CSV. Rows keep file order.
pub fn parse_transcript(text: &str) -> Result<Vec<Utterance>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let mut index = [0usize; 4];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::Schema(format!("transcript is missing column `{name}`")))?;
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let cell = |k: usize| record.get(index[k]).unwrap_or("");
        let speaker = Speaker::parse(cell(0)).ok_or_else(|| {
            IngestError::Schema(format!("row {row}: unknown speaker `{}`", cell(0)))
        })?;
        let number = |k: usize| -> Result<f64, IngestError> {
            cell(k)
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| IngestError::Range {
                    row,
                    reason: format!("`{}` is not a valid {}", cell(k), COLUMNS[k]),
                })
        };
        let (start_s, end_s) = (number(2)?, number(3)?);
        if start_s < 0.0 || end_s < start_s {
            return Err(IngestError::Range {
                row,
                reason: format!("interval [{start_s}, {end_s}] is not ordered"),
            });
        }
        out.push(Utterance::new(speaker, cell(1), start_s, end_s));
    }
    Ok(out)
}

pub fn write_transcript(utterances: &[Utterance]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(COLUMNS).expect("in-memory write");
    for u in utterances {
        writer
            .write_record([
                u.speaker.as_str(),
                u.text.as_str(),
                &format_seconds(u.start_s),
                &format_seconds(u.end_s),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn format_seconds(v: f64) -> String {
    // shortest representation that parses back to the same value
    format!("{v:?}")
}
