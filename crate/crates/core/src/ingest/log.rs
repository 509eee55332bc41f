use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Rep,
    Txt,
    EndGame,
    ConfDialog,
    SetVar,
    Unknown,
}

impl EventKind {
    fn classify(channel: &str, tag: &str) -> Self {
        match (channel, tag) {
            ("LOG", "REP") => EventKind::Rep,
            ("LOG", "TXT") => EventKind::Txt,
            ("LOG", "ENDGAME") => EventKind::EndGame,
            ("CONF", "DIALOG") => EventKind::ConfDialog,
            ("LOG", "SETVAR") => EventKind::SetVar,
            _ => EventKind::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    Strict,
    #[default]
    Permissive,
}

/// One line of a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    /// Milliseconds since the start of the session file.
    pub timestamp_ms: u64,
    pub kind: EventKind,
    pub channel: String,
    pub tag: String,
    pub payload: Vec<(String, String)>,
}

impl LogEvent {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.payload
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Result of an `ENDGAME` event, validated at parse time.
#[derive(Debug, Clone, PartialEq)]
pub struct EndGame {
    pub exercise_id: String,
    pub repetition: u8,
    pub accuracy_pct: f64,
}

impl EndGame {
    pub fn from_event(event: &LogEvent, line: usize) -> Result<Self, IngestError> {
        let field = |key: &str| {
            event.get(key).ok_or_else(|| IngestError::Parse {
                line,
                reason: format!("ENDGAME payload is missing `{key}`"),
            })
        };
        let exercise_id = field("exo")?.to_string();
        if exercise_id.is_empty() {
            return Err(IngestError::Parse {
                line,
                reason: "empty exercise identifier".into(),
            });
        }
        let repetition: u8 = field("rep")?.parse().map_err(|_| IngestError::Parse {
            line,
            reason: "repetition is not an integer".into(),
        })?;
        if !(1..=2).contains(&repetition) {
            return Err(IngestError::Parse {
                line,
                reason: format!("repetition {repetition} outside {{1, 2}}"),
            });
        }
        let accuracy_pct: f64 = field("score")?.parse().map_err(|_| IngestError::Parse {
            line,
            reason: "score is not a number".into(),
        })?;
        if !(0.0..=100.0).contains(&accuracy_pct) {
            return Err(IngestError::Parse {
                line,
                reason: format!("score {accuracy_pct} outside [0, 100]"),
            });
        }
        Ok(EndGame {
            exercise_id,
            repetition,
            accuracy_pct,
        })
    }
}

/// Parsed log: `#key=value` header lines followed by events sorted by time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SessionLog {
    pub header: BTreeMap<String, String>,
    pub events: Vec<LogEvent>,
    pub warnings: Vec<String>,
}

impl SessionLog {
    pub fn end_games(&self) -> Result<Vec<(u64, EndGame)>, IngestError> {
        self.events
            .iter()
            .enumerate()
            .filter(|(_, e)| e.kind == EventKind::EndGame)
            .map(|(i, e)| EndGame::from_event(e, i + 1).map(|g| (e.timestamp_ms, g)))
            .collect()
    }
}

pub fn parse_timestamp(raw: &str) -> Option<u64> {
    let (hms, millis) = raw.split_once('.')?;
    let mut parts = hms.split(':');
    let (h, m, s) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() || millis.len() != 3 || m.len() != 2 || s.len() != 2 || h.is_empty()
    {
        return None;
    }
    let all_digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
    if ![h, m, s, millis].iter().all(|t| all_digits(t)) {
        return None;
    }
    let (h, m, s, ms): (u64, u64, u64, u64) = (
        h.parse().ok()?,
        m.parse().ok()?,
        s.parse().ok()?,
        millis.parse().ok()?,
    );
    if m >= 60 || s >= 60 {
        return None;
    }
    Some(((h * 60 + m) * 60 + s) * 1000 + ms)
}

pub fn format_timestamp(ms: u64) -> String {
    let (h, rest) = (ms / 3_600_000, ms % 3_600_000);
    format!(
        "{:02}:{:02}:{:02}.{:03}",
        h,
        rest / 60_000,
        (rest % 60_000) / 1000,
        rest % 1000
    )
}

/// Splits on unescaped `sep`, keeping escapes in place.
fn split_unescaped(s: &str, sep: char) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            let last = out.last_mut().unwrap();
            last.push(c);
            if let Some(n) = chars.next() {
                last.push(n);
            }
        } else if c == sep {
            out.push(String::new());
        } else {
            out.last_mut().unwrap().push(c);
        }
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(n) = chars.next() {
                out.push(n);
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if matches!(c, '\\' | '|' | ';' | '=') {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

fn parse_payload(raw: &str) -> Vec<(String, String)> {
    if raw.is_empty() {
        return Vec::new();
    }
    split_unescaped(raw, ';')
        .into_iter()
        .map(|field| {
            let parts = split_unescaped(&field, '=');
            let key = unescape(&parts[0]);
            let value = parts[1..].join("=");
            (key, unescape(&value))
        })
        .collect()
}

/// Parses a log file.
///
/// Lines have the form `HH:MM:SS.mmm|CHANNEL|TAG|k=v;k=v`. Lines starting
/// with `#` carry `key=value` header metadata; blank lines are skipped.
/// `\` escapes `|`, `;`, `=` and itself inside payloads.
pub fn parse_session_log(text: &str, mode: ParseMode) -> Result<SessionLog, IngestError> {
    let mut log = SessionLog::default();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((k, v)) = meta.split_once('=') {
                log.header.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let fields = split_unescaped(line, '|');
        if fields.len() < 3 || fields.len() > 4 {
            return Err(IngestError::Parse {
                line: line_no,
                reason: format!("expected 3 or 4 `|`-separated fields, found {}", fields.len()),
            });
        }
        let timestamp_ms = parse_timestamp(fields[0].trim()).ok_or_else(|| IngestError::Parse {
            line: line_no,
            reason: format!("malformed timestamp `{}`", fields[0]),
        })?;
        let channel = fields[1].trim().to_string();
        let tag = fields[2].trim().to_string();
        let kind = EventKind::classify(&channel, &tag);
        if kind == EventKind::Unknown {
            match mode {
                ParseMode::Strict => {
                    return Err(IngestError::Parse {
                        line: line_no,
                        reason: format!("unknown event `{channel}|{tag}`"),
                    })
                }
                ParseMode::Permissive => {
                    let msg = format!("line {line_no}: unknown event `{channel}|{tag}` kept as Unknown");
                    log::warn!("{msg}");
                    log.warnings.push(msg);
                }
            }
        }
        let payload = fields.get(3).map(|p| parse_payload(p)).unwrap_or_default();
        let event = LogEvent {
            timestamp_ms,
            kind,
            channel,
            tag,
            payload,
        };
        if kind == EventKind::EndGame {
            EndGame::from_event(&event, line_no)?;
        }
        log.events.push(event);
    }
    if log.events.is_empty() {
        return Err(IngestError::EmptyLog);
    }
    log.events.sort_by_key(|e| e.timestamp_ms);
    Ok(log)
}

/// Writes a log back in the canonical grammar.
pub fn write_session_log(log: &SessionLog) -> String {
    let mut out = String::new();
    for (k, v) in &log.header {
        let _ = writeln!(out, "#{k}={v}");
    }
    for e in &log.events {
        let payload = e
            .payload
            .iter()
            .map(|(k, v)| {
                if v.is_empty() {
                    escape(k)
                } else {
                    format!("{}={}", escape(k), escape(v))
                }
            })
            .collect::<Vec<_>>()
            .join(";");
        let _ = writeln!(
            out,
            "{}|{}|{}|{}",
            format_timestamp(e.timestamp_ms),
            e.channel,
            e.tag,
            payload
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endgame_line() {
        let log = parse_session_log("00:03:05.120|LOG|ENDGAME|exo=Exo5;rep=1;score=55", ParseMode::Strict)
            .unwrap();
        assert_eq!(log.events.len(), 1);
        assert_eq!(log.events[0].timestamp_ms, 185_120);
        let games = log.end_games().unwrap();
        assert_eq!(
            games[0].1,
            EndGame {
                exercise_id: "Exo5".into(),
                repetition: 1,
                accuracy_pct: 55.0
            }
        );
    }

    #[test]
    fn empty_input() {
        assert!(matches!(parse_session_log("", ParseMode::Permissive), Err(IngestError::EmptyLog)));
        assert!(matches!(
            parse_session_log("#session=x\n\n", ParseMode::Permissive),
            Err(IngestError::EmptyLog)
        ));
    }

    #[test]
    fn unknown_tag_modes() {
        let log = parse_session_log("00:00:01.000|LOG|FOO|x", ParseMode::Permissive).unwrap();
        assert_eq!(log.events[0].kind, EventKind::Unknown);
        assert_eq!(log.events[0].payload, vec![("x".to_string(), String::new())]);
        assert_eq!(log.warnings.len(), 1);
        assert!(matches!(
            parse_session_log("00:00:01.000|LOG|FOO|x", ParseMode::Strict),
            Err(IngestError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn malformed_timestamp() {
        for bad in ["0:3:05.120", "00:03:05", "00:61:00.000", "aa:00:00.000", "00:00:00.1234"] {
            let err = parse_session_log(&format!("00:00:00.000|LOG|REP|a=b\n{bad}|LOG|REP|a=b"), ParseMode::Permissive)
                .unwrap_err();
            assert!(matches!(err, IngestError::Parse { line: 2, .. }), "{bad}");
        }
    }

    #[test]
    fn invalid_endgame_payload() {
        for bad in ["exo=Exo1;rep=3;score=50", "exo=Exo1;rep=1;score=101", "rep=1;score=5"] {
            let err = parse_session_log(&format!("00:00:00.000|LOG|ENDGAME|{bad}"), ParseMode::Permissive);
            assert!(matches!(err, Err(IngestError::Parse { .. })), "{bad}");
        }
    }

    #[test]
    fn events_sorted() {
        let log = parse_session_log(
            "00:00:02.000|LOG|REP|b=1\n00:00:01.000|LOG|REP|a=1\n00:00:02.000|CONF|DIALOG|c=1",
            ParseMode::Strict,
        )
        .unwrap();
        let ts: Vec<_> = log.events.iter().map(|e| e.timestamp_ms).collect();
        assert_eq!(ts, vec![1000, 2000, 2000]);
        assert_eq!(log.events[1].get("b"), Some("1"));
        assert_eq!(log.events[2].kind, EventKind::ConfDialog);
    }

    #[test]
    fn escaped_payload_round_trip() {
        let text = "#participant=M01E\n00:00:01.500|LOG|TXT|text=Bonjour\\; ça va ?;who=avatar\n";
        let log = parse_session_log(text, ParseMode::Strict).unwrap();
        assert_eq!(log.events[0].get("text"), Some("Bonjour; ça va ?"));
        assert_eq!(log.header["participant"], "M01E");
        assert_eq!(write_session_log(&log), text);
    }

    #[test]
    fn timestamp_format_round_trip() {
        for ms in [0, 999, 185_120, 3_600_000, 100 * 3_600_000 + 1] {
            assert_eq!(parse_timestamp(&format_timestamp(ms)), Some(ms));
        }
    }
}
