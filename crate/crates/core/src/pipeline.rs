//! End-to-end wiring: session files in, report artifacts out.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::affect::{self, EmotionSelection, PopulationEmotionStats, SalienceConfig, SalienceResult};
use crate::error::{Error, Result};
use crate::ingest::{
    assemble_session, load_emotion_trace, parse_session_log, parse_transcript, ExerciseCatalog, ParseMode, Session,
};
use crate::linguistics::{clean_utterances, compute_indicator_set, IndicatorSet, LinguisticsError, Phonemizer, Tagger};
use crate::llm::{self, CohortNote, PromptDocument};
use crate::norms::{build_indicator_norms, IndicatorNorms};
use crate::reportgen::{
    build_document, build_tables, compare_indicators_with, context_vars, render_html, render_markdown, results_vars,
    ComparisonRule, ContextVars, ExerciseTable, IndicatorTable, ReportInputs, ResultsVars, SectionToggles,
    TemplateSet,
};
use crate::synth::{LOG_FILE, TRACE_FILE, TRANSCRIPT_FILE};

/// The three files of a session directory. The trace is optional.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionPaths {
    pub log: PathBuf,
    pub transcript: PathBuf,
    pub trace: Option<PathBuf>,
}

impl SessionPaths {
    /// Standard file names inside `dir`; the trace is kept only if present.
    pub fn in_dir(dir: &Path) -> Self {
        let trace = dir.join(TRACE_FILE);
        SessionPaths {
            log: dir.join(LOG_FILE),
            transcript: dir.join(TRANSCRIPT_FILE),
            trace: trace.is_file().then_some(trace),
        }
    }

    pub fn all(&self) -> Vec<&Path> {
        let mut out = vec![self.log.as_path(), self.transcript.as_path()];
        out.extend(self.trace.as_deref());
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionSources {
    pub log: String,
    pub transcript: String,
    pub trace: Option<String>,
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

impl SessionSources {
    pub fn read(paths: &SessionPaths) -> Result<Self> {
        Ok(SessionSources {
            log: read_text(&paths.log)?,
            transcript: read_text(&paths.transcript)?,
            trace: paths.trace.as_deref().map(read_text).transpose()?,
        })
    }
}

pub fn load_session(sources: &SessionSources, catalog: &ExerciseCatalog, mode: ParseMode) -> Result<Session> {
    let log = parse_session_log(&sources.log, mode)?;
    let transcript = parse_transcript(&sources.transcript)?;
    let trace = sources.trace.as_deref().map(load_emotion_trace).transpose()?;
    Ok(assemble_session(&log, transcript, catalog, trace)?)
}

/// Indicators over the subject's utterances; `None` when none is analyzable.
pub fn session_indicators(
    session: &Session,
    tagger: &dyn Tagger,
    phonemizer: &dyn Phonemizer,
) -> Result<Option<IndicatorSet>> {
    let utterances = clean_utterances(&session.transcript);
    match compute_indicator_set(&utterances, session.duration_s, tagger, phonemizer) {
        Ok(set) => Ok(Some(set)),
        Err(LinguisticsError::IndicatorsUnavailable(reason)) => {
            log::warn!("{}: linguistic indicators unavailable ({reason})", session.session_id);
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

/// Reference norms consumed by `analyze`.
#[derive(Debug, Clone, Default)]
pub struct Norms {
    pub indicators: Option<IndicatorNorms>,
    pub affect: Option<PopulationEmotionStats>,
}

impl Norms {
    pub fn cohort_note(&self) -> Option<CohortNote> {
        self.indicators.as_ref().map(|n| CohortNote {
            sessions: n.n_sessions(),
            participants: n.n_participants,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnalysisOptions {
    pub toggles: SectionToggles,
    pub salience: SalienceConfig,
    pub rule: ComparisonRule,
}

/// Every report variable of one session.
#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub context: ContextVars,
    pub results: ResultsVars,
    pub salience: Option<SalienceResult>,
    pub emotions: Option<EmotionSelection>,
    pub indicators: Option<IndicatorSet>,
    pub exercise_table: ExerciseTable,
    pub indicator_table: Option<IndicatorTable>,
}

impl Analysis {
    pub fn inputs(&self) -> ReportInputs<'_> {
        ReportInputs {
            context: &self.context,
            results: &self.results,
            emotions: self.emotions.as_ref(),
            exercises: &self.exercise_table,
            indicators: self.indicator_table.as_ref(),
        }
    }
}

pub fn analyze(
    session: &Session,
    catalog: &ExerciseCatalog,
    norms: &Norms,
    tagger: &dyn Tagger,
    phonemizer: &dyn Phonemizer,
    options: &AnalysisOptions,
    templates: &TemplateSet,
) -> Result<Analysis> {
    let context = context_vars(session, templates.locale);
    let results = results_vars(&session.activities, catalog)?;

    let (mut salience, mut emotions) = (None, None);
    if options.toggles.affect {
        if let Some(trace) = &session.trace {
            let population = norms
                .affect
                .as_ref()
                .ok_or_else(|| Error::MissingNorms("affect norms are required for the affect section".into()))?;
            let held_out = population.excluding(&session.participant_id)?;
            let population = held_out.as_ref().unwrap_or(population);
            let summary = affect::summarize_session(trace)?;
            let result = affect::detect_salient(&summary, population, &options.salience)?;
            if result.normality_warning {
                log::warn!("{}: fewer sequences than the normal approximation expects", session.session_id);
            }
            emotions = Some(affect::select_report_emotions(&result));
            salience = Some(result);
        }
    }

    let mut indicators = None;
    let mut comparisons = Vec::new();
    if options.toggles.language {
        let reference = norms
            .indicators
            .as_ref()
            .ok_or_else(|| Error::MissingNorms("indicator norms are required for the language section".into()))?;
        indicators = session_indicators(session, tagger, phonemizer)?;
        if let Some(set) = &indicators {
            comparisons = compare_indicators_with(set, reference, options.rule)?;
        }
    }
    let (exercise_table, indicator_table) = build_tables(&session.activities, catalog, &comparisons)?;
    Ok(Analysis {
        context,
        results,
        salience,
        emotions,
        indicator_table: indicators.is_some().then_some(indicator_table),
        indicators,
        exercise_table,
    })
}

/// Text artifacts of one generated report.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub markdown: String,
    pub html: String,
    pub payload_json: String,
    pub prompt: PromptDocument,
}

pub fn render(analysis: &Analysis, templates: &TemplateSet, toggles: SectionToggles, cohort: Option<CohortNote>) -> Result<Rendered> {
    let inputs = analysis.inputs();
    let doc = build_document(&inputs, templates, toggles)?;
    let markdown = render_markdown(&doc)?;
    let html = render_html(&markdown, templates);
    let payload_json = llm::serialize_variables(&inputs, templates)?;
    let prompt = llm::build_prompt(&payload_json, templates.locale, cohort)?;
    Ok(Rendered {
        markdown,
        html,
        payload_json,
        prompt,
    })
}

/// Output file names for one session.
pub fn artifact_names(session: &Session) -> ArtifactNames {
    let (p, s) = (&session.participant_id, &session.session_id);
    ArtifactNames {
        markdown: format!("{p}_{s}_report.md"),
        html: format!("{p}_{s}_report.html"),
        prompt: format!("{s}_prompt.txt"),
        payload: format!("{s}_payload.json"),
        llm_response: format!("{s}_llm_response.txt"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactNames {
    pub markdown: String,
    pub html: String,
    pub prompt: String,
    pub payload: String,
    pub llm_response: String,
}

/// Norms built from a cohort of sessions.
#[derive(Debug, Clone)]
pub struct CohortNorms {
    pub indicators: IndicatorNorms,
    /// `None` when no cohort session carries a trace.
    pub affect: Option<PopulationEmotionStats>,
    pub warnings: Vec<String>,
}

pub const SMALL_COHORT: usize = 5;

pub fn build_cohort_norms(sessions: &[Session], tagger: &dyn Tagger, phonemizer: &dyn Phonemizer) -> Result<CohortNorms> {
    if sessions.is_empty() {
        return Err(crate::norms::NormError::EmptyCohort.into());
    }
    let mut warnings = Vec::new();
    let mut cohort = Vec::new();
    let mut traces = Vec::new();
    for s in sessions {
        match session_indicators(s, tagger, phonemizer)? {
            Some(set) => cohort.push((s.participant_id.clone(), set)),
            None => warnings.push(format!("{}: no analyzable utterance, left out of indicator norms", s.session_id)),
        }
        if let Some(t) = &s.trace {
            traces.push((s.participant_id.clone(), t.clone()));
        }
    }
    let indicators = build_indicator_norms(&cohort)?;
    if cohort.len() < SMALL_COHORT {
        warnings.push(format!("small cohort: norms rest on {} session(s)", cohort.len()));
    }
    let affect = if traces.is_empty() {
        None
    } else {
        Some(affect::population_stats(&traces, None)?)
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(CohortNorms {
        indicators,
        affect,
        warnings,
    })
}

/// One diagnostic of `validate`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, outcome: std::result::Result<String, String>) -> Self {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Runs every parser and structural check; never fails.
pub fn validate(paths: &SessionPaths, catalog: &ExerciseCatalog) -> Vec<Check> {
    let mut checks = Vec::new();
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()));

    let log = read(&paths.log).and_then(|t| parse_session_log(&t, ParseMode::Strict).map_err(|e| e.to_string()));
    checks.push(Check::new(
        "log.parse",
        log.as_ref().map(|l| format!("{} events", l.events.len())).map_err(Clone::clone),
    ));
    let transcript = read(&paths.transcript).and_then(|t| parse_transcript(&t).map_err(|e| e.to_string()));
    checks.push(Check::new(
        "transcript.parse",
        transcript.as_ref().map(|u| format!("{} utterances", u.len())).map_err(Clone::clone),
    ));
    let trace = match &paths.trace {
        None => {
            checks.push(Check::new("trace.parse", Ok("no trace file".into())));
            Ok(None)
        }
        Some(p) => {
            let t = read(p).and_then(|t| load_emotion_trace(&t).map_err(|e| e.to_string()));
            checks.push(Check::new(
                "trace.parse",
                t.as_ref().map(|t| format!("{} sequences", t.len())).map_err(Clone::clone),
            ));
            t.map(Some)
        }
    };

    let (Ok(log), Ok(transcript), Ok(trace)) = (log, transcript, trace) else {
        checks.push(Check::new("session.assemble", Err("skipped: an input failed to parse".into())));
        return checks;
    };
    match assemble_session(&log, transcript, catalog, trace) {
        Err(e) => checks.push(Check::new("session.assemble", Err(e.to_string()))),
        Ok(session) => {
            checks.push(Check::new(
                "session.assemble",
                Ok(format!("{} activities over {} exercises", session.nb_activities(), session.nb_exercises())),
            ));
            checks.push(Check::new(
                "session.structure",
                if session.warnings.is_empty() {
                    Ok("consistent with the group profile".into())
                } else {
                    Err(session.warnings.join("; "))
                },
            ));
            checks.push(Check::new(
                "session.outcomes",
                results_vars(&session.activities, catalog)
                    .map(|r| format!("{} failed, {} partial, {} successful", r.num_failed, r.num_partial, r.num_success))
                    .map_err(|e| e.to_string()),
            ));
            checks.push(Check::new(
                "transcript.subject",
                if clean_utterances(&session.transcript).is_empty() {
                    Err("no analyzable subject utterance".into())
                } else {
                    Ok("subject speech present".into())
                },
            ));
        }
    }
    checks
}
