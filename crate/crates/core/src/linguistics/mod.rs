//! Linguistic indicators computed from the subject's utterances.

mod phonemes;
mod tagger;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{diacritic_regex, Speaker, Utterance};

pub use self::phonemes::{PhonemeRule, Phonemizer, RulePhonemizer};
pub use self::tagger::{
    load_pretagged, FinePos, LexiconTagger, PreTaggedTagger, TaggedToken, Tagger, TaggerError, WordClass,
};

#[derive(Debug, Error)]
pub enum LinguisticsError {
    #[error("linguistic indicators unavailable: {0}")]
    IndicatorsUnavailable(String),
    #[error("invalid session duration {0} s")]
    InvalidDuration(f64),
    #[error(transparent)]
    Tagger(#[from] TaggerError),
}

/// A subject utterance ready for analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanUtterance {
    /// Row index of the utterance in the original transcript.
    pub source_index: usize,
    pub text: String,
    pub start_s: f64,
    pub end_s: f64,
}

impl CleanUtterance {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Keeps subject speech only, drops non-verbal utterances, and strips inline
/// `<..>` markup. Utterances left empty are dropped.
pub fn clean_utterances(utterances: &[Utterance]) -> Vec<CleanUtterance> {
    utterances
        .iter()
        .enumerate()
        .filter(|(_, u)| u.speaker == Speaker::Subject && !u.nonverbal_only)
        .filter_map(|(i, u)| {
            let stripped = diacritic_regex().replace_all(&u.text, " ");
            let text = stripped.split_whitespace().collect::<Vec<_>>().join(" ");
            (!text.is_empty()).then_some(CleanUtterance {
                source_index: i,
                text,
                start_s: u.start_s,
                end_s: u.end_s,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub position: usize,
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Lowercased word tokens. Elided forms keep their apostrophe and split from
/// the following word (`l'ami` gives `l'`, `ami`); hyphens inside a word are
/// kept; other punctuation is discarded.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut words: Vec<String> = Vec::new();
    let mut current = String::new();
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if is_apostrophe(c) && !current.is_empty() {
            current.push('\'');
            words.push(std::mem::take(&mut current));
        } else if c == '-'
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        {
            current.push('-');
        } else if !current.is_empty() {
            words.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
        .into_iter()
        .enumerate()
        .map(|(position, surface)| Token { surface, position })
        .collect()
}

pub fn tag_tokens(
    utterance_index: usize,
    tokens: &[Token],
    tagger: &dyn Tagger,
) -> Result<Vec<TaggedToken>, TaggerError> {
    tagger.tag(utterance_index, tokens)
}

pub fn estimate_phonemes(text: &str, phonemizer: &dyn Phonemizer) -> usize {
    phonemizer.count(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indicator {
    VocabularySize,
    SpeakingTime,
    SpeechRate,
    MeanUtteranceLength,
    MeanUtteranceDuration,
    LexicalDiversity,
    ContentDensity,
}

impl Indicator {
    pub const ALL: [Indicator; 7] = [
        Indicator::VocabularySize,
        Indicator::SpeakingTime,
        Indicator::SpeechRate,
        Indicator::MeanUtteranceLength,
        Indicator::MeanUtteranceDuration,
        Indicator::LexicalDiversity,
        Indicator::ContentDensity,
    ];

    /// Stable key used in norm files.
    pub fn key(self) -> &'static str {
        match self {
            Indicator::VocabularySize => "vocabulary_size",
            Indicator::SpeakingTime => "speaking_time_min_per_h",
            Indicator::SpeechRate => "speech_rate_phon_per_s",
            Indicator::MeanUtteranceLength => "mean_utterance_len_words",
            Indicator::MeanUtteranceDuration => "mean_utterance_dur_s",
            Indicator::LexicalDiversity => "ttr",
            Indicator::ContentDensity => "content_density",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|i| i.key() == key)
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSet {
    pub vocabulary_size: usize,
    pub speaking_time_min_per_h: f64,
    pub speech_rate_phon_per_s: f64,
    pub mean_utterance_len_words: f64,
    pub mean_utterance_dur_s: f64,
    pub ttr: f64,
    pub content_density: f64,
    /// Present only when every token carries a fine part-of-speech tag.
    pub propositional_density: Option<f64>,
    pub total_tokens: usize,
}

impl IndicatorSet {
    pub fn value(&self, indicator: Indicator) -> f64 {
        match indicator {
            Indicator::VocabularySize => self.vocabulary_size as f64,
            Indicator::SpeakingTime => self.speaking_time_min_per_h,
            Indicator::SpeechRate => self.speech_rate_phon_per_s,
            Indicator::MeanUtteranceLength => self.mean_utterance_len_words,
            Indicator::MeanUtteranceDuration => self.mean_utterance_dur_s,
            Indicator::LexicalDiversity => self.ttr,
            Indicator::ContentDensity => self.content_density,
        }
    }
}

/// Computes the indicator set over cleaned utterances (one utterance per
/// transcript row). Speech rate divides by total speaking time.
pub fn compute_indicator_set(
    utterances: &[CleanUtterance],
    session_duration_s: f64,
    tagger: &dyn Tagger,
    phonemizer: &dyn Phonemizer,
) -> Result<IndicatorSet, LinguisticsError> {
    if session_duration_s.is_nan() || session_duration_s <= 0.0 {
        return Err(LinguisticsError::InvalidDuration(session_duration_s));
    }
    if utterances.is_empty() {
        return Err(LinguisticsError::IndicatorsUnavailable("no analyzable subject utterance".into()));
    }
    let mut total_tokens = 0usize;
    let mut content = 0usize;
    let mut propositional = 0usize;
    let mut all_fine = true;
    let mut vocabulary: HashSet<String> = HashSet::new();
    let mut speaking_s = 0.0;
    let mut phonemes = 0usize;
    for u in utterances {
        let tokens = tokenize(&u.text);
        let tagged = tagger.tag(u.source_index, &tokens)?;
        total_tokens += tagged.len();
        for t in &tagged {
            vocabulary.insert(t.token.surface.clone());
            if t.word_class == WordClass::Content {
                content += 1;
            }
            match t.fine_pos {
                Some(pos) if pos.is_propositional() => propositional += 1,
                Some(_) => {}
                None => all_fine = false,
            }
        }
        speaking_s += u.duration_s();
        phonemes += phonemizer.count(&u.text);
    }
    if total_tokens == 0 {
        return Err(LinguisticsError::IndicatorsUnavailable("utterances contain no word".into()));
    }
    if speaking_s <= 0.0 {
        return Err(LinguisticsError::IndicatorsUnavailable("total speaking time is zero".into()));
    }
    let n_utt = utterances.len() as f64;
    let total = total_tokens as f64;
    Ok(IndicatorSet {
        vocabulary_size: vocabulary.len(),
        speaking_time_min_per_h: speaking_s / session_duration_s * 60.0,
        speech_rate_phon_per_s: phonemes as f64 / speaking_s,
        mean_utterance_len_words: total / n_utt,
        mean_utterance_dur_s: speaking_s / n_utt,
        ttr: vocabulary.len() as f64 / total,
        content_density: content as f64 / total,
        propositional_density: all_fine.then(|| propositional as f64 / total),
        total_tokens,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    fn clean(text: &str, start: f64, end: f64) -> CleanUtterance {
        CleanUtterance {
            source_index: 0,
            text: text.into(),
            start_s: start,
            end_s: end,
        }
    }

    #[test]
    fn cleaning() {
        let rows = vec![
            Utterance::new(Speaker::Subject, "<nv>", 0.0, 1.0),
            Utterance::new(Speaker::Subject, "oui <ri> merci", 1.0, 2.0),
            Utterance::new(Speaker::Avatar, "bonjour", 2.0, 3.0),
            Utterance::new(Speaker::Subject, "<di> bonjour", 3.0, 4.0),
            Utterance::new(Speaker::Subject, "<ii> <?>", 4.0, 5.0),
        ];
        let out = clean_utterances(&rows);
        let texts: Vec<_> = out.iter().map(|u| u.text.as_str()).collect();
        assert_eq!(texts, vec!["oui merci", "bonjour"]);
        assert_eq!(out[1].source_index, 3);
        assert!(clean_utterances(&rows[..1]).is_empty());
    }

    #[test]
    fn tokenizer() {
        assert_eq!(surfaces("Le chat dort."), vec!["le", "chat", "dort"]);
        assert_eq!(surfaces("l'ami"), vec!["l'", "ami"]);
        assert_eq!(surfaces("L\u{2019}enquête, peut-être !"), vec!["l'", "enquête", "peut-être"]);
        assert_eq!(surfaces("bon- ça"), vec!["bon", "ça"]);
        assert!(surfaces("").is_empty());
        assert!(surfaces(" ... ").is_empty());
        let positions: Vec<_> = tokenize("a b c").iter().map(|t| t.position).collect();
        assert_eq!(positions, vec![0, 1, 2]);
    }

    #[test]
    fn two_utterance_example() {
        let utts = vec![clean("le chat dort", 0.0, 2.0), clean("le chat", 10.0, 11.0)];
        let set = compute_indicator_set(&utts, 3600.0, &LexiconTagger::builtin(), &RulePhonemizer::builtin())
            .unwrap();
        assert_eq!(set.total_tokens, 5);
        assert_eq!(set.vocabulary_size, 3);
        assert_abs_diff_eq!(set.ttr, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(set.mean_utterance_len_words, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(set.mean_utterance_dur_s, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(set.speaking_time_min_per_h, 0.05, epsilon = 1e-12);
        // le:function, chat/dort:content
        assert_abs_diff_eq!(set.content_density, 3.0 / 5.0, epsilon = 1e-12);
    }

    #[test]
    fn single_utterance_means() {
        let set = compute_indicator_set(
            &[clean("un deux trois quatre", 5.0, 7.0)],
            100.0,
            &LexiconTagger::builtin(),
            &RulePhonemizer::builtin(),
        )
        .unwrap();
        assert_eq!(set.mean_utterance_len_words, 4.0);
        assert_eq!(set.mean_utterance_dur_s, 2.0);
    }

    struct Fixed(usize);
    impl Phonemizer for Fixed {
        fn count(&self, _: &str) -> usize {
            self.0
        }
    }

    #[test]
    fn speech_rate_division() {
        let set = compute_indicator_set(
            &[clean("a", 0.0, 60.0)],
            3600.0,
            &LexiconTagger::builtin(),
            &Fixed(300),
        )
        .unwrap();
        assert_eq!(set.speech_rate_phon_per_s, 5.0);
    }

    #[test]
    fn unavailable_cases() {
        let (t, p) = (LexiconTagger::builtin(), RulePhonemizer::builtin());
        assert!(matches!(
            compute_indicator_set(&[], 10.0, &t, &p),
            Err(LinguisticsError::IndicatorsUnavailable(_))
        ));
        assert!(matches!(
            compute_indicator_set(&[clean("oui", 3.0, 3.0)], 10.0, &t, &p),
            Err(LinguisticsError::IndicatorsUnavailable(_))
        ));
        assert!(matches!(
            compute_indicator_set(&[clean("oui", 3.0, 4.0)], 0.0, &t, &p),
            Err(LinguisticsError::InvalidDuration(_))
        ));
    }

    #[test]
    fn propositional_density_needs_full_tagging() {
        let (t, p) = (LexiconTagger::builtin(), RulePhonemizer::builtin());
        // every form is in one of the shipped lexicons
        let set = compute_indicator_set(&[clean("je suis très content et fatigué", 0.0, 2.0)], 60.0, &t, &p).unwrap();
        // suis:verb très:adverb content:adjective et:conjunction fatigué:adjective
        assert_abs_diff_eq!(set.propositional_density.unwrap(), 5.0 / 6.0, epsilon = 1e-12);
        let set = compute_indicator_set(&[clean("le zorglub", 0.0, 2.0)], 60.0, &t, &p).unwrap();
        assert_eq!(set.propositional_density, None);
    }
}
