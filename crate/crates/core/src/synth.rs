//! Seeded generator of session material (log, transcript, emotion trace).
//!
//! Output is a pure function of the configuration, so the same seed always
//! produces byte-identical files.

use std::collections::BTreeMap;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveTime};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ingest::{
    write_emotion_trace, write_session_log, write_transcript, EmotionLabel, EmotionRecord,
    EmotionTrace, EventKind, Group, LogEvent, SessionLog, Speaker, Utterance,
};

pub const LOG_FILE: &str = "session.log";
pub const TRANSCRIPT_FILE: &str = "transcript.csv";
pub const TRACE_FILE: &str = "emotions.csv";

/// Exercises of an MCI session, each played twice in a row.
pub const MCI_EXERCISES: [&str; 4] = ["Exo1", "Exo2", "Exo3", "Exo7"];
pub const ALL_EXERCISES: [&str; 8] = ["Exo1", "Exo2", "Exo3", "Exo4", "Exo5", "Exo6", "Exo7", "Exo8"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DifficultyCurve {
    Easy,
    Mixed,
    Hard,
}

impl DifficultyCurve {
    /// Mean and spread of the accuracy of a first attempt.
    fn accuracy(self) -> (f64, f64) {
        match self {
            DifficultyCurve::Easy => (88.0, 8.0),
            DifficultyCurve::Mixed => (72.0, 20.0),
            DifficultyCurve::Hard => (52.0, 18.0),
        }
    }
}

impl FromStr for DifficultyCurve {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "easy" => Ok(DifficultyCurve::Easy),
            "mixed" => Ok(DifficultyCurve::Mixed),
            "hard" => Ok(DifficultyCurve::Hard),
            other => Err(format!("unknown difficulty curve `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub profile: Group,
    pub curve: DifficultyCurve,
    pub session_id: String,
    pub participant_id: String,
    pub date: NaiveDate,
    pub start_time: NaiveTime,
    pub n_sequences: usize,
    /// Added to the mean intensity of a label.
    pub affect_boost: BTreeMap<EmotionLabel, f64>,
}

impl SynthConfig {
    pub fn new(seed: u64, profile: Group) -> Self {
        SynthConfig {
            seed,
            profile,
            curve: DifficultyCurve::Mixed,
            session_id: format!("S{seed:03}"),
            participant_id: format!("P{seed:03}"),
            date: NaiveDate::from_ymd_opt(2021, 3, 12).unwrap(),
            start_time: NaiveTime::from_hms_opt(14, 32, 10).unwrap(),
            n_sequences: 120,
            affect_boost: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthSession {
    pub log: String,
    pub transcript: String,
    pub trace: String,
}

impl SynthSession {
    /// File name and content for each generated file.
    pub fn files(&self) -> [(&'static str, &str); 3] {
        [
            (LOG_FILE, &self.log),
            (TRANSCRIPT_FILE, &self.transcript),
            (TRACE_FILE, &self.trace),
        ]
    }
}

const AVATAR_LINES: [&str; 8] = [
    "Voici les consignes de l'exercice.",
    "Prenez votre temps.",
    "Très bien, continuons.",
    "Bravo, c'est correct.",
    "Essayons encore une fois.",
    "Pouvez-vous me dire ce que vous voyez ?",
    "C'est presque ça.",
    "Nous allons passer à la suite.",
];

const SUBJECT_LINES: [&str; 24] = [
    "oui je comprends",
    "d'accord on y va",
    "euh je ne sais pas trop",
    "c'est difficile cette fois",
    "je pense que c'est la bonne réponse",
    "ah oui je me souviens maintenant",
    "il faut aller à gauche puis tout droit",
    "je crois que j'ai réussi",
    "non ce n'est pas ça",
    "attendez je réfléchis",
    "<rire> c'est amusant",
    "<nv>",
    "bon je vais essayer encore",
    "la maison est à côté de l'église",
    "j'aime bien cet exercice",
    "c'était un peu long",
    "je suis un peu fatigué aujourd'hui",
    "voilà c'est fini",
    "euh <hésitation> le chat est sur la table",
    "je cherche le mot mais il ne vient pas",
    "c'est très joli ce dessin",
    "il y a trois objets rouges",
    "on commence par le plus petit",
    "je préfère les exercices avec des mots",
];

/// Baseline mean intensity per label, in canonical label order.
const AFFECT_BASELINE: [f64; 10] = [0.35, 0.40, 0.30, 0.28, 0.22, 0.15, 0.12, 0.10, 0.05, 0.12];
const AFFECT_NOISE: f64 = 0.08;

fn event(t_ms: u64, channel: &str, tag: &str, kind: EventKind, payload: &[(&str, String)]) -> LogEvent {
    LogEvent {
        timestamp_ms: t_ms,
        kind,
        channel: channel.into(),
        tag: tag.into(),
        payload: payload.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn plan_activities(profile: Group, rng: &mut ChaCha8Rng) -> Vec<(&'static str, u8)> {
    match profile {
        Group::Mci => MCI_EXERCISES.iter().flat_map(|&e| [(e, 1), (e, 2)]).collect(),
        Group::Young | Group::Senior => {
            let mut order = ALL_EXERCISES.to_vec();
            order.shuffle(rng);
            order.into_iter().map(|e| (e, 1)).collect()
        }
    }
}

pub fn synthesize(config: &SynthConfig) -> SynthSession {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let plan = plan_activities(config.profile, &mut rng);
    let (acc_mean, acc_sd) = config.curve.accuracy();
    let accuracy = Normal::new(acc_mean, acc_sd).expect("positive spread");

    let mut events = vec![event(0, "LOG", "REP", EventKind::Rep, &[("action", "session_start".into())])];
    let mut utterances = Vec::new();
    let mut t = 2.0_f64;
    utterances.push(Utterance::new(Speaker::Avatar, "Bonjour, nous allons commencer la séance.", t, t + 3.0));
    t += 4.0;
    utterances.push(Utterance::new(Speaker::Subject, "bonjour", t, t + 0.8));
    t += 2.0;

    for (exercise, rep) in plan {
        let start_ms = (t * 1000.0).round() as u64;
        events.push(event(start_ms, "CONF", "DIALOG", EventKind::ConfDialog, &[("exercise", exercise.into())]));
        events.push(event(
            start_ms + 500,
            "LOG",
            "SETVAR",
            EventKind::SetVar,
            &[("name", "exercise".into()), ("value", exercise.into())],
        ));
        let activity_s = rng.gen_range(180.0..420.0_f64).round();
        let end = t + activity_s;
        let exchanges = rng.gen_range(3..7);
        let mut u = t + 2.0;
        for _ in 0..exchanges {
            let line = AVATAR_LINES[rng.gen_range(0..AVATAR_LINES.len())];
            let dur = round2(0.3 * line.split_whitespace().count() as f64 + 0.5);
            events.push(event(
                (u * 1000.0).round() as u64,
                "LOG",
                "TXT",
                EventKind::Txt,
                &[("who", "avatar".into()), ("text", line.into())],
            ));
            utterances.push(Utterance::new(Speaker::Avatar, line, round2(u), round2(u + dur)));
            u += dur + rng.gen_range(0.5..3.0);
            let answer = SUBJECT_LINES[rng.gen_range(0..SUBJECT_LINES.len())];
            let words = answer.split_whitespace().count() as f64;
            let dur = round2(0.35 * words + rng.gen_range(0.2..1.0));
            utterances.push(Utterance::new(Speaker::Subject, answer, round2(u), round2(u + dur)));
            u += dur + rng.gen_range(5.0..20.0);
            if u > end - 10.0 {
                break;
            }
        }
        let bonus = if rep == 2 { 6.0 } else { 0.0 };
        let score = (accuracy.sample(&mut rng) + bonus).round().clamp(0.0, 100.0);
        events.push(event(
            (end * 1000.0).round() as u64,
            "LOG",
            "ENDGAME",
            EventKind::EndGame,
            &[("exo", exercise.into()), ("rep", rep.to_string()), ("score", format!("{score}"))],
        ));
        t = end + rng.gen_range(5.0..15.0_f64).round();
    }
    utterances.push(Utterance::new(Speaker::Avatar, "Merci, la séance est terminée.", t, t + 2.5));
    events.push(event(((t + 5.0) * 1000.0).round() as u64, "LOG", "REP", EventKind::Rep, &[("action", "session_end".into())]));

    let mut header = BTreeMap::new();
    header.insert("session".into(), config.session_id.clone());
    header.insert("participant".into(), config.participant_id.clone());
    header.insert("group".into(), config.profile.as_str().to_string());
    header.insert("date".into(), config.date.format("%Y-%m-%d").to_string());
    header.insert("start".into(), config.start_time.format("%H:%M:%S").to_string());
    events.sort_by_key(|e| e.timestamp_ms);
    let log = SessionLog {
        header,
        events,
        warnings: Vec::new(),
    };

    let noise = Normal::new(0.0, AFFECT_NOISE).expect("positive spread");
    let sequences = (0..config.n_sequences)
        .map(|i| {
            let mut intensities = [0.0; 10];
            for (label, slot) in EmotionLabel::ALL.iter().zip(intensities.iter_mut()) {
                let mean = AFFECT_BASELINE[label.index()] + config.affect_boost.get(label).copied().unwrap_or(0.0);
                let v: f64 = mean + noise.sample(&mut rng);
                *slot = (v.clamp(0.0, 1.0) * 1000.0).round() / 1000.0;
            }
            EmotionRecord {
                sequence_index: i as u32,
                intensities,
            }
        })
        .collect();

    SynthSession {
        log: write_session_log(&log),
        transcript: write_transcript(&utterances),
        trace: write_emotion_trace(&EmotionTrace { sequences }),
    }
}
