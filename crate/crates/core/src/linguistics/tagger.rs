use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Token;

const FUNCTION_WORDS: &str = include_str!("../../data/function_words.txt");
const OPEN_CLASS: &str = include_str!("../../data/open_class.txt");

#[derive(Debug, Error, PartialEq)]
pub enum TaggerError {
    #[error("utterance {utterance}, token {token_index}: {reason}")]
    Token {
        utterance: usize,
        token_index: usize,
        reason: String,
    },
    #[error("lexicon line {line}: {reason}")]
    Lexicon { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordClass {
    Content,
    Function,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinePos {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Preposition,
    Conjunction,
    Other,
}

impl FinePos {
    pub fn word_class(self) -> WordClass {
        match self {
            FinePos::Noun | FinePos::Verb | FinePos::Adjective | FinePos::Adverb => WordClass::Content,
            _ => WordClass::Function,
        }
    }

    /// Verbs, adjectives, adverbs, prepositions and conjunctions.
    pub fn is_propositional(self) -> bool {
        !matches!(self, FinePos::Noun | FinePos::Other)
    }
}

impl FromStr for FinePos {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "noun" => FinePos::Noun,
            "verb" => FinePos::Verb,
            "adjective" => FinePos::Adjective,
            "adverb" => FinePos::Adverb,
            "preposition" => FinePos::Preposition,
            "conjunction" => FinePos::Conjunction,
            "other" => FinePos::Other,
            other => return Err(format!("unknown part of speech `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub token: Token,
    pub word_class: WordClass,
    pub fine_pos: Option<FinePos>,
}

/// Part-of-speech tagging over the tokens of one utterance.
///
/// `utterance_index` is the row of the utterance in the source transcript,
/// which lets pre-tagged input be looked up.
pub trait Tagger: Send + Sync {
    fn tag(&self, utterance_index: usize, tokens: &[Token]) -> Result<Vec<TaggedToken>, TaggerError>;
}

fn parse_lexicon(text: &str, default: Option<FinePos>) -> Result<HashMap<String, Option<FinePos>>, TaggerError> {
    let mut out = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let form = parts.next().unwrap().to_lowercase();
        let pos = match parts.next() {
            Some(tag) => Some(tag.parse::<FinePos>().map_err(|reason| TaggerError::Lexicon { line: i + 1, reason })?),
            None => default,
        };
        if parts.next().is_some() {
            return Err(TaggerError::Lexicon {
                line: i + 1,
                reason: "expected `form [pos]`".into(),
            });
        }
        out.insert(form, pos);
    }
    Ok(out)
}

/// Closed-class lexicon tagger: listed function forms are function words,
/// everything else is content. An optional open-class lexicon supplies fine
/// tags for content forms.
#[derive(Debug, Clone)]
pub struct LexiconTagger {
    function: HashMap<String, Option<FinePos>>,
    open: HashMap<String, Option<FinePos>>,
}

impl LexiconTagger {
    pub fn builtin() -> Self {
        Self::from_lexicons(FUNCTION_WORDS, Some(OPEN_CLASS)).expect("shipped lexicons are valid")
    }

    pub fn from_lexicons(function_words: &str, open_class: Option<&str>) -> Result<Self, TaggerError> {
        let function = parse_lexicon(function_words, Some(FinePos::Other))?;
        if let Some((form, pos)) = function.iter().find(|(_, p)| p.is_some_and(|p| p.word_class() == WordClass::Content)) {
            return Err(TaggerError::Lexicon {
                line: 0,
                reason: format!("closed-class form `{form}` tagged as content ({pos:?})"),
            });
        }
        let open = match open_class {
            Some(text) => parse_lexicon(text, None)?,
            None => HashMap::new(),
        };
        Ok(LexiconTagger { function, open })
    }

    pub fn is_function_word(&self, form: &str) -> bool {
        self.function.contains_key(form)
    }
}

impl Tagger for LexiconTagger {
    fn tag(&self, _utterance_index: usize, tokens: &[Token]) -> Result<Vec<TaggedToken>, TaggerError> {
        Ok(tokens
            .iter()
            .map(|t| {
                if let Some(pos) = self.function.get(&t.surface) {
                    TaggedToken {
                        token: t.clone(),
                        word_class: WordClass::Function,
                        fine_pos: *pos,
                    }
                } else {
                    let fine_pos = self
                        .open
                        .get(&t.surface)
                        .copied()
                        .flatten()
                        .filter(|p| p.word_class() == WordClass::Content);
                    TaggedToken {
                        token: t.clone(),
                        word_class: WordClass::Content,
                        fine_pos,
                    }
                }
            })
            .collect())
    }
}

/// Tags read from an external `utterance_index,token,fine_pos` CSV.
#[derive(Debug, Clone, Default)]
pub struct PreTaggedTagger {
    by_utterance: BTreeMap<usize, Vec<(String, FinePos)>>,
}

pub fn load_pretagged(text: &str) -> Result<PreTaggedTagger, TaggerError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let bad = |line: usize, reason: String| TaggerError::Lexicon { line, reason };
    let headers = reader.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| bad(1, format!("missing column `{name}`")))
    };
    let (u_col, t_col, p_col) = (col("utterance_index")?, col("token")?, col("fine_pos")?);
    let mut by_utterance: BTreeMap<usize, Vec<(String, FinePos)>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| bad(line, e.to_string()))?;
        let utterance: usize = record
            .get(u_col)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad(line, "utterance_index is not an integer".into()))?;
        let token = record.get(t_col).unwrap_or("").trim().to_lowercase();
        let pos: FinePos = record.get(p_col).unwrap_or("").parse().map_err(|r| bad(line, r))?;
        by_utterance.entry(utterance).or_default().push((token, pos));
    }
    Ok(PreTaggedTagger { by_utterance })
}

impl Tagger for PreTaggedTagger {
    fn tag(&self, utterance_index: usize, tokens: &[Token]) -> Result<Vec<TaggedToken>, TaggerError> {
        let tags = self.by_utterance.get(&utterance_index).map(Vec::as_slice).unwrap_or(&[]);
        tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let err = |reason: String| TaggerError::Token {
                    utterance: utterance_index,
                    token_index: i,
                    reason,
                };
                let (form, pos) = tags.get(i).ok_or_else(|| err("no tag supplied".into()))?;
                if *form != t.surface {
                    return Err(err(format!("tag is for `{form}`, token is `{}`", t.surface)));
                }
                Ok(TaggedToken {
                    token: t.clone(),
                    word_class: pos.word_class(),
                    fine_pos: Some(*pos),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::tokenize;
    use super::*;

    #[test]
    fn default_tagger_example() {
        let tagger = LexiconTagger::builtin();
        // checked against the shipped closed-class list
        assert!(FUNCTION_WORDS.lines().any(|l| l.split_whitespace().next() == Some("le")));
        assert!(!tagger.is_function_word("chat"));
        assert!(!tagger.is_function_word("dort"));
        let tagged = tagger.tag(0, &tokenize("le chat dort")).unwrap();
        let classes: Vec<_> = tagged.iter().map(|t| t.word_class).collect();
        assert_eq!(classes, vec![WordClass::Function, WordClass::Content, WordClass::Content]);
        assert!(tagger.tag(0, &[]).unwrap().is_empty());
    }

    #[test]
    fn unknown_form_is_content() {
        let tagged = LexiconTagger::builtin().tag(0, &tokenize("zorglub")).unwrap();
        assert_eq!(tagged[0].word_class, WordClass::Content);
        assert_eq!(tagged[0].fine_pos, None);
    }

    #[test]
    fn fine_tags_imply_content() {
        let tagger = LexiconTagger::builtin();
        let tagged = tagger.tag(0, &tokenize("je pense que c'est très bon pour le chat")).unwrap();
        for t in tagged {
            if let Some(p) = t.fine_pos {
                assert_eq!(p.word_class(), t.word_class, "{:?}", t.token);
            }
        }
    }

    #[test]
    fn closed_class_lexicon_rejects_content_tags() {
        assert!(LexiconTagger::from_lexicons("chat noun\n", None).is_err());
        assert!(LexiconTagger::from_lexicons("de foo\n", None).is_err());
    }

    #[test]
    fn pretagged_import() {
        let tagger = load_pretagged("utterance_index,token,fine_pos\n3,le,other\n3,chat,noun\n3,dort,verb\n").unwrap();
        let tagged = tagger.tag(3, &tokenize("Le chat dort")).unwrap();
        assert_eq!(tagged[2].fine_pos, Some(FinePos::Verb));
        assert_eq!(tagged[0].word_class, WordClass::Function);
        let err = tagger.tag(3, &tokenize("le chien dort")).unwrap_err();
        assert!(matches!(err, TaggerError::Token { token_index: 1, .. }));
        assert!(matches!(tagger.tag(4, &tokenize("oui")), Err(TaggerError::Token { token_index: 0, .. })));
    }
}
