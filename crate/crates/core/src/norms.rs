//! Reference norms: indicator quartiles and per-label affect moments.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affect::{LabelMoments, PopulationEmotionStats, SubjectStats};
use crate::ingest::EmotionLabel;
use crate::linguistics::{Indicator, IndicatorSet};
use crate::stats::{quartile_norm, QuartileNorm, StatsError};

#[derive(Debug, Error)]
pub enum NormError {
    #[error("empty cohort")]
    EmptyCohort,
    #[error("norm file: {0}")]
    Schema(String),
    #[error("missing norm for indicator `{0}`")]
    MissingNorm(Indicator),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IndicatorNorms {
    pub norms: BTreeMap<Indicator, QuartileNorm>,
    pub n_participants: usize,
}

impl IndicatorNorms {
    pub fn get(&self, indicator: Indicator) -> Result<&QuartileNorm, NormError> {
        self.norms.get(&indicator).ok_or(NormError::MissingNorm(indicator))
    }

    pub fn n_sessions(&self) -> usize {
        self.norms.values().map(|n| n.n_sessions).max().unwrap_or(0)
    }
}

/// Quartile norms over a cohort of `(participant, indicators)` entries.
pub fn build_indicator_norms(cohort: &[(String, IndicatorSet)]) -> Result<IndicatorNorms, NormError> {
    if cohort.is_empty() {
        return Err(NormError::EmptyCohort);
    }
    let mut norms = BTreeMap::new();
    for indicator in Indicator::ALL {
        let values: Vec<f64> = cohort.iter().map(|(_, s)| s.value(indicator)).collect();
        norms.insert(indicator, quartile_norm(&values)?);
    }
    let participants: BTreeSet<&str> = cohort.iter().map(|(p, _)| p.as_str()).collect();
    Ok(IndicatorNorms {
        norms,
        n_participants: participants.len(),
    })
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_indicator_norms(norms: &IndicatorNorms) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["indicator", "median", "q1", "q3", "n_sessions", "n_participants"])
        .expect("in-memory write");
    for (indicator, n) in &norms.norms {
        w.write_record([
            indicator.key().to_string(),
            num(n.median),
            num(n.q1),
            num(n.q3),
            n.n_sessions.to_string(),
            norms.n_participants.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn columns(headers: &csv::StringRecord, names: &[&str]) -> Result<Vec<usize>, NormError> {
    names
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.trim() == *name)
                .ok_or_else(|| NormError::Schema(format!("missing column `{name}`")))
        })
        .collect()
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, col: usize, row: usize) -> Result<T, NormError> {
    record
        .get(col)
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| NormError::Schema(format!("row {row}: bad value in column {}", col + 1)))
}

pub fn load_indicator_norms(text: &str) -> Result<IndicatorNorms, NormError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    let cols = columns(&headers, &["indicator", "median", "q1", "q3", "n_sessions"])?;
    let participants_col = headers.iter().position(|h| h.trim() == "n_participants");
    let mut out = IndicatorNorms::default();
    for (i, record) in r.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let key = record.get(cols[0]).unwrap_or("").trim();
        let indicator = Indicator::from_key(key)
            .ok_or_else(|| NormError::Schema(format!("row {row}: unknown indicator `{key}`")))?;
        let norm = QuartileNorm {
            median: field(&record, cols[1], row)?,
            q1: field(&record, cols[2], row)?,
            q3: field(&record, cols[3], row)?,
            n_sessions: field(&record, cols[4], row)?,
        };
        if !(norm.q1 <= norm.median && norm.median <= norm.q3) || norm.n_sessions == 0 {
            return Err(NormError::Schema(format!("row {row}: expected q1 <= median <= q3 and n_sessions >= 1")));
        }
        if let Some(c) = participants_col {
            out.n_participants = out.n_participants.max(field(&record, c, row)?);
        }
        if out.norms.insert(indicator, norm).is_some() {
            return Err(NormError::Schema(format!("row {row}: duplicate indicator `{key}`")));
        }
    }
    Ok(out)
}

/// Affect norms: pooled rows have an empty `subject` column, per-subject
/// rows name the subject.
pub fn write_affect_norms(stats: &PopulationEmotionStats) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "mu", "sigma", "n_sequences", "n_subjects", "subject"])
        .expect("in-memory write");
    let mut row = |label: EmotionLabel, m: &LabelMoments, n_subjects: usize, subject: &str| {
        w.write_record([
            label.name().to_string(),
            num(m.mu),
            num(m.sigma),
            m.n_sequences.to_string(),
            n_subjects.to_string(),
            subject.to_string(),
        ])
        .expect("in-memory write");
    };
    for label in EmotionLabel::ALL {
        row(label, &stats.pooled[label.index()], stats.source_subject_count, "");
    }
    for s in &stats.subjects {
        for label in EmotionLabel::ALL {
            row(label, &s.labels[label.index()], 1, &s.subject_id);
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn load_affect_norms(text: &str) -> Result<PopulationEmotionStats, NormError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    let cols = columns(&headers, &["label", "mu", "sigma", "n_sequences", "n_subjects"])?;
    let subject_col = headers.iter().position(|h| h.trim() == "subject");
    let mut pooled: [Option<LabelMoments>; 10] = [None; 10];
    let mut n_subjects = 0usize;
    let mut subjects: BTreeMap<String, [Option<LabelMoments>; 10]> = BTreeMap::new();
    for (i, record) in r.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let name = record.get(cols[0]).unwrap_or("").trim();
        let label = EmotionLabel::from_name(name)
            .ok_or_else(|| NormError::Schema(format!("row {row}: unknown label `{name}`")))?;
        let m = LabelMoments {
            mu: field(&record, cols[1], row)?,
            sigma: field(&record, cols[2], row)?,
            n_sequences: field(&record, cols[3], row)?,
        };
        if m.sigma.is_nan() || m.sigma < 0.0 {
            return Err(NormError::Schema(format!("row {row}: negative sigma")));
        }
        let subject = subject_col.and_then(|c| record.get(c)).unwrap_or("").trim();
        let slot = if subject.is_empty() {
            n_subjects = n_subjects.max(field(&record, cols[4], row)?);
            &mut pooled[label.index()]
        } else {
            &mut subjects.entry(subject.to_string()).or_default()[label.index()]
        };
        if slot.replace(m).is_some() {
            return Err(NormError::Schema(format!("row {row}: duplicate entry for `{name}`")));
        }
    }
    let complete = |set: [Option<LabelMoments>; 10], who: &str| -> Result<[LabelMoments; 10], NormError> {
        let mut out = [LabelMoments {
            mu: 0.0,
            sigma: 0.0,
            n_sequences: 0,
        }; 10];
        for (label, (o, s)) in EmotionLabel::ALL.iter().zip(out.iter_mut().zip(set)) {
            *o = s.ok_or_else(|| NormError::Schema(format!("{who}: no row for `{label}`")))?;
        }
        Ok(out)
    };
    let subjects: Vec<SubjectStats> = subjects
        .into_iter()
        .map(|(id, set)| {
            complete(set, &id).map(|labels| SubjectStats {
                subject_id: id,
                labels,
            })
        })
        .collect::<Result<_, _>>()?;
    let pooled = complete(pooled, "pooled rows")?;
    let n_subjects = n_subjects.max(subjects.len()).max(1);
    Ok(PopulationEmotionStats {
        pooled,
        source_session_count: n_subjects,
        source_subject_count: n_subjects,
        subjects,
    })
}
