use std::fmt;

use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

/// The ten affect labels produced by the emotion recognizer, in canonical
/// order (five positive, then five negative). The order doubles as the
/// tie-break for equal Z statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionLabel {
    Relaxed,
    Interested,
    Satisfied,
    Confident,
    Happy,
    Frustrated,
    Surprised,
    Annoyed,
    Desperate,
    Anxious,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; 10] = [
        EmotionLabel::Relaxed,
        EmotionLabel::Interested,
        EmotionLabel::Satisfied,
        EmotionLabel::Confident,
        EmotionLabel::Happy,
        EmotionLabel::Frustrated,
        EmotionLabel::Surprised,
        EmotionLabel::Annoyed,
        EmotionLabel::Desperate,
        EmotionLabel::Anxious,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionLabel::Relaxed => "relaxed",
            EmotionLabel::Interested => "interested",
            EmotionLabel::Satisfied => "satisfied",
            EmotionLabel::Confident => "confident",
            EmotionLabel::Happy => "happy",
            EmotionLabel::Frustrated => "frustrated",
            EmotionLabel::Surprised => "surprised",
            EmotionLabel::Annoyed => "annoyed",
            EmotionLabel::Desperate => "desperate",
            EmotionLabel::Anxious => "anxious",
        }
    }

    /// Masculine French adjective used in report prose.
    pub fn french(self) -> &'static str {
        match self {
            EmotionLabel::Relaxed => "détendu",
            EmotionLabel::Interested => "intéressé",
            EmotionLabel::Satisfied => "satisfait",
            EmotionLabel::Confident => "confiant",
            EmotionLabel::Happy => "heureux",
            EmotionLabel::Frustrated => "frustré",
            EmotionLabel::Surprised => "surpris",
            EmotionLabel::Annoyed => "agacé",
            EmotionLabel::Desperate => "désespéré",
            EmotionLabel::Anxious => "anxieux",
        }
    }

    pub fn polarity(self) -> Polarity {
        if self.index() < 5 {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name() == name)
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionRecord {
    pub sequence_index: u32,
    /// Indexed by [`EmotionLabel::index`].
    pub intensities: [f64; 10],
}

impl EmotionRecord {
    pub fn intensity(&self, label: EmotionLabel) -> f64 {
        self.intensities[label.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EmotionTrace {
    pub sequences: Vec<EmotionRecord>,
}

impl EmotionTrace {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn values(&self, label: EmotionLabel) -> impl Iterator<Item = f64> + '_ {
        self.sequences.iter().map(move |r| r.intensity(label))
    }
}

/// Parses a per-sequence intensity CSV with a `sequence_index` column and
/// one column per label.
pub fn load_emotion_trace(text: &str) -> Result<EmotionTrace, IngestError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::Schema(format!("emotion trace is missing column `{name}`")))
    };
    let seq_col = col("sequence_index")?;
    let mut label_cols = [0usize; 10];
    for (slot, label) in label_cols.iter_mut().zip(EmotionLabel::ALL) {
        *slot = col(label.name())?;
    }
    let mut sequences = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let sequence_index = record
            .get(seq_col)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| IngestError::Range {
                row,
                reason: "sequence_index is not a non-negative integer".into(),
            })?;
        let mut intensities = [0.0; 10];
        for (label, (&c, slot)) in EmotionLabel::ALL.iter().zip(label_cols.iter().zip(intensities.iter_mut())) {
            let raw = record.get(c).unwrap_or("").trim();
            let v: f64 = raw.parse().map_err(|_| IngestError::Range {
                row,
                reason: format!("{label}: `{raw}` is not a number"),
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(IngestError::Range {
                    row,
                    reason: format!("{label} intensity {v} outside [0, 1]"),
                });
            }
            *slot = v;
        }
        sequences.push(EmotionRecord {
            sequence_index,
            intensities,
        });
    }
    Ok(EmotionTrace { sequences })
}

pub fn write_emotion_trace(trace: &EmotionTrace) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["sequence_index".to_string()];
    header.extend(EmotionLabel::ALL.iter().map(|l| l.name().to_string()));
    writer.write_record(&header).expect("in-memory write");
    for r in &trace.sequences {
        let mut row = vec![r.sequence_index.to_string()];
        row.extend(r.intensities.iter().map(|v| format!("{v:?}")));
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8")
}
