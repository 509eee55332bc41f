mod common;

use std::collections::BTreeMap;

use ccreport::ingest::{ExerciseCatalog, Group, ParseMode, Session};
use ccreport::pipeline::{self, SessionPaths, SessionSources};
use ccreport::synth::{synthesize, SynthConfig, SynthSession, ALL_EXERCISES, MCI_EXERCISES};

fn load(s: &SynthSession) -> Session {
    let sources = SessionSources {
        log: s.log.clone(),
        transcript: s.transcript.clone(),
        trace: Some(s.trace.clone()),
    };
    pipeline::load_session(&sources, &ExerciseCatalog::builtin(), ParseMode::Strict).unwrap()
}

fn repetitions(session: &Session) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for a in &session.activities {
        *m.entry(a.exercise_id.clone()).or_insert(0) += 1;
    }
    m
}

#[test]
fn mci_profile_repeats_four_exercises() {
    let session = load(&synthesize(&SynthConfig::new(3, Group::Mci)));
    assert_eq!(session.nb_activities(), 8);
    assert_eq!(session.nb_exercises(), 4);
    let reps = repetitions(&session);
    assert_eq!(reps.keys().map(String::as_str).collect::<Vec<_>>(), MCI_EXERCISES);
    assert!(reps.values().all(|&n| n == 2));
    assert!(session.warnings.is_empty(), "{:?}", session.warnings);
}

#[test]
fn control_profiles_run_each_exercise_once() {
    for group in [Group::Senior, Group::Young] {
        let session = load(&synthesize(&SynthConfig::new(5, group)));
        assert_eq!(session.nb_activities(), 8);
        let reps = repetitions(&session);
        assert_eq!(reps.keys().map(String::as_str).collect::<Vec<_>>(), ALL_EXERCISES);
        assert!(reps.values().all(|&n| n == 1));
        assert_eq!(session.group, group);
    }
}

#[test]
fn same_seed_is_byte_identical() {
    let a = synthesize(&SynthConfig::new(11, Group::Mci));
    let b = synthesize(&SynthConfig::new(11, Group::Mci));
    assert_eq!(a.files(), b.files());
    let c = synthesize(&SynthConfig::new(12, Group::Mci));
    assert_ne!(a.trace, c.trace);
}

fn write(dir: &std::path::Path, s: &SynthSession) -> SessionPaths {
    for (name, text) in s.files() {
        std::fs::write(dir.join(name), text).unwrap();
    }
    SessionPaths::in_dir(dir)
}

#[test]
fn synthetic_sessions_validate() {
    for group in [Group::Mci, Group::Senior, Group::Young] {
        for seed in 1..=5 {
            let dir = tempfile::tempdir().unwrap();
            let paths = write(dir.path(), &synthesize(&SynthConfig::new(seed, group)));
            let checks = pipeline::validate(&paths, &ExerciseCatalog::builtin());
            for c in &checks {
                assert!(c.passed, "{group:?} seed {seed}: {} {}", c.name, c.detail);
            }
        }
    }
}

#[test]
fn fixture_session_validates() {
    let checks = pipeline::validate(&common::mci_paths(), &ExerciseCatalog::builtin());
    assert!(checks.iter().all(|c| c.passed), "{checks:?}");
}

fn failed(paths: &SessionPaths) -> Vec<String> {
    pipeline::validate(paths, &ExerciseCatalog::builtin())
        .into_iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect()
}

#[test]
fn out_of_range_intensity_fails_trace_check() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = synthesize(&SynthConfig::new(2, Group::Mci));
    let mut lines: Vec<String> = s.trace.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[1].split(',').map(String::from).collect();
    fields[1] = "1.7".into();
    lines[1] = fields.join(",");
    s.trace = lines.join("\n") + "\n";
    let f = failed(&write(dir.path(), &s));
    assert!(f.contains(&"trace.parse".to_string()), "{f:?}");
}

#[test]
fn reversed_utterance_fails_transcript_check() {
    let dir = tempfile::tempdir().unwrap();
    let s = synthesize(&SynthConfig::new(2, Group::Mci));
    let paths = write(dir.path(), &s);
    std::fs::write(&paths.transcript, "speaker,text,start_s,end_s\nsubject,bonjour,6.0,5.0\n").unwrap();
    let f = failed(&paths);
    assert!(f.contains(&"transcript.parse".to_string()), "{f:?}");
}
