//! Salient-emotion detection against population norms.
//!
//! A label is salient when the session's mean intensity is significantly
//! above the population mean under a right-tailed Z-test, after Bonferroni
//! correction across the tests performed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{self, StatsError};

pub use crate::ingest::{EmotionLabel, EmotionTrace, Polarity};

/// Below this many sequences the normal approximation is flagged.
pub const NORMALITY_MIN_SEQUENCES: usize = 30;

/// Relative sigma below which a label counts as constant.
pub const DEGENERATE_SIGMA: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum AffectError {
    #[error("empty input")]
    EmptyInput,
    #[error("no population trace remains after exclusion")]
    EmptyPopulation,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub mean: f64,
    pub n: usize,
}

/// Per-label session means, indexed by [`EmotionLabel::index`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub labels: [LabelSummary; 10],
}

impl SessionSummary {
    pub fn get(&self, label: EmotionLabel) -> LabelSummary {
        self.labels[label.index()]
    }

    pub fn n(&self) -> usize {
        self.labels[0].n
    }
}

pub fn summarize_session(trace: &EmotionTrace) -> Result<SessionSummary, AffectError> {
    if trace.is_empty() {
        return Err(AffectError::EmptyInput);
    }
    let n = trace.len();
    let labels = EmotionLabel::ALL.map(|label| LabelSummary {
        mean: trace.values(label).sum::<f64>() / n as f64,
        n,
    });
    Ok(SessionSummary { labels })
}

/// Mean and population standard deviation of one label's intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelMoments {
    pub mu: f64,
    pub sigma: f64,
    pub n_sequences: usize,
}

impl LabelMoments {
    fn from_values(values: impl Iterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.collect();
        let n = values.len();
        if n > 0 && values.iter().all(|v| *v == values[0]) {
            return LabelMoments {
                mu: values[0],
                sigma: 0.0,
                n_sequences: n,
            };
        }
        let mu = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n as f64;
        LabelMoments {
            mu,
            sigma: var.sqrt(),
            n_sequences: n,
        }
    }

    /// Sigma too small relative to mu to be told apart from rounding noise.
    pub fn is_degenerate(&self) -> bool {
        self.sigma.is_nan() || self.sigma <= DEGENERATE_SIGMA * self.mu.abs().max(1.0)
    }

    /// Pools moments of disjoint groups exactly (parallel-variance formula).
    pub fn pool<'a>(parts: impl IntoIterator<Item = &'a LabelMoments>) -> Option<Self> {
        let parts: Vec<_> = parts.into_iter().filter(|m| m.n_sequences > 0).collect();
        let n: usize = parts.iter().map(|m| m.n_sequences).sum();
        if n == 0 {
            return None;
        }
        let mu = parts.iter().map(|m| m.mu * m.n_sequences as f64).sum::<f64>() / n as f64;
        let ss: f64 = parts
            .iter()
            .map(|m| m.n_sequences as f64 * (m.sigma.powi(2) + (m.mu - mu).powi(2)))
            .sum();
        Some(LabelMoments {
            mu,
            sigma: (ss / n as f64).sqrt(),
            n_sequences: n,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectStats {
    pub subject_id: String,
    pub labels: [LabelMoments; 10],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationEmotionStats {
    pub pooled: [LabelMoments; 10],
    pub source_session_count: usize,
    pub source_subject_count: usize,
    pub subjects: Vec<SubjectStats>,
}

impl PopulationEmotionStats {
    /// Labels whose pooled sigma is zero.
    pub fn degenerate_labels(&self) -> Vec<EmotionLabel> {
        EmotionLabel::ALL
            .into_iter()
            .filter(|l| self.pooled[l.index()].is_degenerate())
            .collect()
    }

    /// Rebuilds pooled moments from the per-subject entries, dropping one
    /// subject. Returns `None` when no per-subject data is held.
    pub fn excluding(&self, subject_id: &str) -> Result<Option<Self>, AffectError> {
        if self.subjects.is_empty() {
            return Ok(None);
        }
        let kept: Vec<SubjectStats> = self.subjects.iter().filter(|s| s.subject_id != subject_id).cloned().collect();
        if kept.len() == self.subjects.len() {
            return Ok(None);
        }
        from_subject_stats(kept, None).map(Some)
    }
}

fn from_subject_stats(subjects: Vec<SubjectStats>, sessions: Option<usize>) -> Result<PopulationEmotionStats, AffectError> {
    if subjects.is_empty() {
        return Err(AffectError::EmptyPopulation);
    }
    let pooled = EmotionLabel::ALL.map(|label| {
        LabelMoments::pool(subjects.iter().map(|s| &s.labels[label.index()])).expect("non-empty subjects")
    });
    Ok(PopulationEmotionStats {
        pooled,
        source_session_count: sessions.unwrap_or(subjects.len()),
        source_subject_count: subjects.len(),
        subjects,
    })
}

/// Pools sequence intensities over every `(participant, trace)` pair whose
/// participant is not excluded. Traces of one participant are merged into
/// one subject entry.
pub fn population_stats(
    traces: &[(String, EmotionTrace)],
    exclude_participant: Option<&str>,
) -> Result<PopulationEmotionStats, AffectError> {
    let mut by_subject: BTreeMap<&str, Vec<&EmotionTrace>> = BTreeMap::new();
    let mut sessions = 0;
    for (pid, trace) in traces {
        if Some(pid.as_str()) == exclude_participant || trace.is_empty() {
            continue;
        }
        sessions += 1;
        by_subject.entry(pid.as_str()).or_default().push(trace);
    }
    let subjects: Vec<SubjectStats> = by_subject
        .into_iter()
        .map(|(pid, traces)| SubjectStats {
            subject_id: pid.to_string(),
            labels: EmotionLabel::ALL
                .map(|label| LabelMoments::from_values(traces.iter().flat_map(move |t| t.values(label)))),
        })
        .collect();
    let stats = from_subject_stats(subjects, Some(sessions))?;
    for label in stats.degenerate_labels() {
        log::warn!("population sigma is zero for `{label}`");
    }
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SalienceMode {
    #[default]
    Pooled,
    Pairwise,
}

/// How many tests the Bonferroni factor counts in pairwise mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairwiseCorrection {
    /// `m = 10 * subject_count`.
    #[default]
    LabelsTimesSubjects,
    /// `m = 10`.
    LabelsOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SalienceConfig {
    pub alpha: f64,
    pub mode: SalienceMode,
    /// Pairwise mode: fraction of subjects a label must beat.
    pub tau: f64,
    pub pairwise_correction: PairwiseCorrection,
}

impl Default for SalienceConfig {
    fn default() -> Self {
        SalienceConfig {
            alpha: 0.05,
            mode: SalienceMode::Pooled,
            tau: 1.0,
            pairwise_correction: PairwiseCorrection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSalience {
    pub label: EmotionLabel,
    pub session_mean: f64,
    pub n: usize,
    pub z: f64,
    pub p_raw: f64,
    pub p_corrected: f64,
    pub salient: bool,
    /// Pairwise mode: subjects tested and how many tests passed.
    pub pairwise: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalienceResult {
    /// Tested labels by descending z; ties follow the canonical label order.
    pub labels: Vec<LabelSalience>,
    /// Labels not tested because their reference sigma is zero.
    pub skipped: Vec<EmotionLabel>,
    pub normality_warning: bool,
    pub alpha: f64,
}

impl SalienceResult {
    pub fn salient(&self) -> impl Iterator<Item = &LabelSalience> {
        self.labels.iter().filter(|l| l.salient)
    }
}

pub fn detect_salient(
    summary: &SessionSummary,
    population: &PopulationEmotionStats,
    config: &SalienceConfig,
) -> Result<SalienceResult, AffectError> {
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(AffectError::InvalidArgument(format!("alpha {} outside (0, 1)", config.alpha)));
    }
    if !(0.0..=1.0).contains(&config.tau) {
        return Err(AffectError::InvalidArgument(format!("tau {} outside [0, 1]", config.tau)));
    }
    let n = summary.n();
    let mut labels = Vec::new();
    let mut skipped = Vec::new();
    match config.mode {
        SalienceMode::Pooled => {
            for label in EmotionLabel::ALL {
                let pop = population.pooled[label.index()];
                let mean = summary.get(label).mean;
                if pop.is_degenerate() {
                    skipped.push(label);
                    continue;
                }
                match stats::z_right(mean, pop.mu, pop.sigma, n) {
                    Ok(test) => {
                        let p_corrected = stats::bonferroni(test.p, EmotionLabel::ALL.len())?;
                        labels.push(LabelSalience {
                            label,
                            session_mean: mean,
                            n,
                            z: test.z,
                            p_raw: test.p,
                            p_corrected,
                            salient: p_corrected < config.alpha,
                            pairwise: None,
                        });
                    }
                    Err(StatsError::DegenerateDistribution(_)) => skipped.push(label),
                    Err(e) => return Err(e.into()),
                }
            }
        }
        SalienceMode::Pairwise => {
            if population.subjects.is_empty() {
                return Err(AffectError::EmptyPopulation);
            }
            let m = match config.pairwise_correction {
                PairwiseCorrection::LabelsTimesSubjects => EmotionLabel::ALL.len() * population.subjects.len(),
                PairwiseCorrection::LabelsOnly => EmotionLabel::ALL.len(),
            };
            for label in EmotionLabel::ALL {
                let mean = summary.get(label).mean;
                let mut tests = Vec::new();
                for subject in &population.subjects {
                    let ref_moments = subject.labels[label.index()];
                    if ref_moments.is_degenerate() {
                        continue;
                    }
                    match stats::z_right(mean, ref_moments.mu, ref_moments.sigma, n) {
                        Ok(t) => tests.push((t.z, t.p, stats::bonferroni(t.p, m)?)),
                        Err(StatsError::DegenerateDistribution(_)) => {}
                        Err(e) => return Err(e.into()),
                    }
                }
                if tests.is_empty() {
                    skipped.push(label);
                    continue;
                }
                // the binding test is the k-th strongest, k = ceil(tau * tested), k >= 1
                tests.sort_by(|a, b| b.0.total_cmp(&a.0));
                let required = ((config.tau * tests.len() as f64 - 1e-9).ceil() as usize).clamp(1, tests.len());
                let (z, p_raw, p_corrected) = tests[required - 1];
                let passed = tests.iter().filter(|t| t.2 < config.alpha).count();
                labels.push(LabelSalience {
                    label,
                    session_mean: mean,
                    n,
                    z,
                    p_raw,
                    p_corrected,
                    salient: p_corrected < config.alpha,
                    pairwise: Some((tests.len(), passed)),
                });
            }
        }
    }
    for label in &skipped {
        log::warn!("`{label}` not tested: reference sigma is zero");
    }
    labels.sort_by(|a, b| b.z.total_cmp(&a.z).then(a.label.cmp(&b.label)));
    Ok(SalienceResult {
        labels,
        skipped,
        normality_warning: n < NORMALITY_MIN_SEQUENCES,
        alpha: config.alpha,
    })
}

/// Labels that fill the affect sentence. The primary label is excluded from
/// both lists.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EmotionSelection {
    pub primary: Option<EmotionLabel>,
    pub other_positive: Vec<EmotionLabel>,
    pub negative: Vec<EmotionLabel>,
}

impl EmotionSelection {
    pub fn is_empty(&self) -> bool {
        self.primary.is_none()
    }

    /// Primary first, then positives, then negatives.
    pub fn labels(&self) -> Vec<EmotionLabel> {
        self.primary
            .iter()
            .chain(&self.other_positive)
            .chain(&self.negative)
            .copied()
            .collect()
    }
}

pub const MAX_LABELS_PER_POLARITY: usize = 2;

pub fn select_report_emotions(salience: &SalienceResult) -> EmotionSelection {
    // `labels` is already sorted by descending z
    let mut salient = salience.salient().map(|l| l.label);
    let Some(primary) = salient.next() else {
        return EmotionSelection::default();
    };
    let (mut other_positive, mut negative) = (Vec::new(), Vec::new());
    for label in salient {
        let bucket = match label.polarity() {
            Polarity::Positive => &mut other_positive,
            Polarity::Negative => &mut negative,
        };
        if bucket.len() < MAX_LABELS_PER_POLARITY {
            bucket.push(label);
        }
    }
    EmotionSelection {
        primary: Some(primary),
        other_positive,
        negative,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::EmotionRecord;

    fn constant_trace(values: [f64; 10], n: usize) -> EmotionTrace {
        EmotionTrace {
            sequences: (0..n)
                .map(|i| EmotionRecord {
                    sequence_index: i as u32,
                    intensities: values,
                })
                .collect(),
        }
    }

    fn salience(entries: &[(EmotionLabel, f64)]) -> SalienceResult {
        let mut labels: Vec<LabelSalience> = entries
            .iter()
            .map(|&(label, z)| LabelSalience {
                label,
                session_mean: 0.0,
                n: 100,
                z,
                p_raw: 0.0,
                p_corrected: 0.0,
                salient: true,
                pairwise: None,
            })
            .collect();
        labels.sort_by(|a, b| b.z.total_cmp(&a.z));
        SalienceResult {
            labels,
            skipped: vec![],
            normality_warning: false,
            alpha: 0.05,
        }
    }

    #[test]
    fn session_means() {
        let mut t = constant_trace([0.0; 10], 2);
        t.sequences[0].intensities[EmotionLabel::Happy.index()] = 0.2;
        t.sequences[1].intensities[EmotionLabel::Happy.index()] = 0.4;
        let s = summarize_session(&t).unwrap();
        assert!((s.get(EmotionLabel::Happy).mean - 0.3).abs() < 1e-15);
        assert_eq!(s.get(EmotionLabel::Happy).n, 2);
        assert_eq!(s.get(EmotionLabel::Anxious).mean, 0.0);
        assert_eq!(summarize_session(&EmotionTrace::default()), Err(AffectError::EmptyInput));
    }

    #[test]
    fn pooling_two_participants() {
        let traces = vec![
            ("A".to_string(), constant_trace([0.2; 10], 50)),
            ("B".to_string(), constant_trace([0.4; 10], 50)),
        ];
        let pop = population_stats(&traces, None).unwrap();
        assert!((pop.pooled[0].mu - 0.3).abs() < 1e-12);
        assert!((pop.pooled[0].sigma - 0.1).abs() < 1e-12);
        assert_eq!((pop.source_subject_count, pop.source_session_count), (2, 2));
        let only_b = population_stats(&traces, Some("A")).unwrap();
        assert!((only_b.pooled[3].mu - 0.4).abs() < 1e-12);
        assert_eq!(pop.excluding("A").unwrap().unwrap().pooled, only_b.pooled);
    }

    #[test]
    fn degenerate_and_empty_population() {
        let traces = vec![("A".to_string(), constant_trace([0.5; 10], 10))];
        assert_eq!(population_stats(&traces, Some("A")), Err(AffectError::EmptyPopulation));
        let pop = population_stats(&traces, None).unwrap();
        assert_eq!(pop.pooled[0].mu, 0.5);
        assert_eq!(pop.pooled[0].sigma, 0.0);
        assert_eq!(pop.degenerate_labels().len(), 10);
        let s = summarize_session(&constant_trace([0.9; 10], 10)).unwrap();
        let r = detect_salient(&s, &pop, &SalienceConfig::default()).unwrap();
        assert!(r.labels.is_empty());
        assert_eq!(r.skipped.len(), 10);
    }

    fn population(mu: f64, sigma: f64) -> PopulationEmotionStats {
        let m = LabelMoments {
            mu,
            sigma,
            n_sequences: 1000,
        };
        PopulationEmotionStats {
            pooled: [m; 10],
            source_session_count: 17,
            source_subject_count: 13,
            subjects: vec![],
        }
    }

    #[test]
    fn equal_means_yield_nothing() {
        let pop = population(0.3, 0.1);
        let s = summarize_session(&constant_trace([0.3; 10], 100)).unwrap();
        let r = detect_salient(&s, &pop, &SalienceConfig::default()).unwrap();
        assert_eq!(r.salient().count(), 0);
        assert!(r.labels.iter().all(|l| l.z.abs() < 1e-9));
        assert!(select_report_emotions(&r).is_empty());
    }

    #[test]
    fn ten_sigma_label_is_salient() {
        let pop = population(0.3, 0.1);
        let mut values = [0.3; 10];
        values[EmotionLabel::Interested.index()] = 0.3 + 10.0 * 0.1 / 10.0;
        let s = summarize_session(&constant_trace(values, 100)).unwrap();
        let r = detect_salient(&s, &pop, &SalienceConfig::default()).unwrap();
        let salient: Vec<_> = r.salient().map(|l| l.label).collect();
        assert_eq!(salient, vec![EmotionLabel::Interested]);
        assert!((r.labels[0].z - 10.0).abs() < 1e-9);
        assert!(!r.normality_warning);
    }

    #[test]
    fn small_trace_warns() {
        let s = summarize_session(&constant_trace([0.3; 10], 20)).unwrap();
        let r = detect_salient(&s, &population(0.3, 0.1), &SalienceConfig::default()).unwrap();
        assert!(r.normality_warning);
    }

    #[test]
    fn alpha_is_validated() {
        let s = summarize_session(&constant_trace([0.3; 10], 20)).unwrap();
        for alpha in [0.0, 1.0, -0.1] {
            let cfg = SalienceConfig {
                alpha,
                ..Default::default()
            };
            assert!(matches!(
                detect_salient(&s, &population(0.3, 0.1), &cfg),
                Err(AffectError::InvalidArgument(_))
            ));
        }
    }

    #[test]
    fn selection_rules() {
        use EmotionLabel::*;
        assert_eq!(select_report_emotions(&salience(&[])), EmotionSelection::default());
        let sel = select_report_emotions(&salience(&[(Interested, 4.0)]));
        assert_eq!(sel.primary, Some(Interested));
        assert!(sel.other_positive.is_empty() && sel.negative.is_empty());
        let sel = select_report_emotions(&salience(&[
            (Happy, 5.0),
            (Satisfied, 4.0),
            (Interested, 3.0),
            (Frustrated, 2.8),
        ]));
        assert_eq!(sel.primary, Some(Happy));
        assert_eq!(sel.other_positive, vec![Satisfied, Interested]);
        assert_eq!(sel.negative, vec![Frustrated]);
    }

    #[test]
    fn ties_follow_label_order() {
        let pop = population(0.3, 0.1);
        let s = summarize_session(&constant_trace([0.5; 10], 100)).unwrap();
        let r = detect_salient(&s, &pop, &SalienceConfig::default()).unwrap();
        let order: Vec<_> = r.labels.iter().map(|l| l.label).collect();
        assert_eq!(order, EmotionLabel::ALL.to_vec());
        let sel = select_report_emotions(&r);
        assert_eq!(sel.primary, Some(EmotionLabel::Relaxed));
        assert_eq!(sel.other_positive, vec![EmotionLabel::Interested, EmotionLabel::Satisfied]);
        assert_eq!(sel.negative, vec![EmotionLabel::Frustrated, EmotionLabel::Surprised]);
    }
}
