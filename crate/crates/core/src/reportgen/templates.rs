use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::ReportError;
use crate::ingest::EmotionLabel;
use crate::linguistics::Indicator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Locale {
    #[default]
    Fr,
    En,
}

impl Locale {
    pub fn code(self) -> &'static str {
        match self {
            Locale::Fr => "fr",
            Locale::En => "en",
        }
    }

    pub fn parse(code: &str) -> Option<Self> {
        match code.trim().to_ascii_lowercase().as_str() {
            "fr" => Some(Locale::Fr),
            "en" => Some(Locale::En),
            _ => None,
        }
    }

    pub fn emotion(self, label: EmotionLabel) -> &'static str {
        match self {
            Locale::Fr => label.french(),
            Locale::En => label.name(),
        }
    }

    /// Short indicator name used in prose.
    pub fn indicator_name(self, indicator: Indicator) -> &'static str {
        use Indicator::*;
        match (self, indicator) {
            (Locale::Fr, VocabularySize) => "taille du vocabulaire",
            (Locale::Fr, SpeakingTime) => "temps de parole moyen par heure",
            (Locale::Fr, SpeechRate) => "débit de parole",
            (Locale::Fr, MeanUtteranceLength) => "longueur moyenne des énoncés",
            (Locale::Fr, MeanUtteranceDuration) => "durée moyenne des énoncés",
            (Locale::Fr, LexicalDiversity) => "diversité lexicale",
            (Locale::Fr, ContentDensity) => "densité lexicale de contenu",
            (Locale::En, VocabularySize) => "vocabulary size",
            (Locale::En, SpeakingTime) => "average speaking time per hour",
            (Locale::En, SpeechRate) => "speech rate",
            (Locale::En, MeanUtteranceLength) => "average utterance length",
            (Locale::En, MeanUtteranceDuration) => "average utterance duration",
            (Locale::En, LexicalDiversity) => "lexical diversity",
            (Locale::En, ContentDensity) => "content lexical density",
        }
    }

    pub fn indicator_unit(self, indicator: Indicator) -> Option<&'static str> {
        use Indicator::*;
        match (self, indicator) {
            (_, LexicalDiversity | ContentDensity) => None,
            (Locale::Fr, VocabularySize | MeanUtteranceLength) => Some("mots"),
            (Locale::En, VocabularySize | MeanUtteranceLength) => Some("words"),
            (_, SpeakingTime) => Some("min/h"),
            (Locale::Fr, SpeechRate) => Some("phonèmes/s"),
            (Locale::En, SpeechRate) => Some("phonemes/s"),
            (_, MeanUtteranceDuration) => Some("s"),
        }
    }

    pub fn indicator_definition(self, indicator: Indicator) -> &'static str {
        use Indicator::*;
        match (self, indicator) {
            (Locale::Fr, VocabularySize) => "nombre de mots uniques utilisés.",
            (Locale::Fr, SpeakingTime) => "temps de parole total du patient, ramené en minutes par heure.",
            (Locale::Fr, SpeechRate) => "nombre de phonèmes par seconde.",
            (Locale::Fr, MeanUtteranceLength) => "nombre moyen de mots par énoncé.",
            (Locale::Fr, MeanUtteranceDuration) => "durée moyenne des énoncés, en secondes.",
            (Locale::Fr, LexicalDiversity) => {
                "rapport entre le nombre de mots uniques et le nombre total de mots (TTR)."
            }
            (Locale::Fr, ContentDensity) => {
                "rapport entre le nombre de mots de contenu (verbes, noms, adjectifs, adverbes) et le nombre total de mots."
            }
            (Locale::En, VocabularySize) => "number of unique words used.",
            (Locale::En, SpeakingTime) => "total patient speaking time, normalized to minutes per hour.",
            (Locale::En, SpeechRate) => "number of phonemes per second.",
            (Locale::En, MeanUtteranceLength) => "mean number of words per utterance.",
            (Locale::En, MeanUtteranceDuration) => "mean duration of utterances, in seconds.",
            (Locale::En, LexicalDiversity) => "ratio of unique words to total words (TTR).",
            (Locale::En, ContentDensity) => {
                "ratio of content words (verbs, nouns, adjectives, adverbs) to total words."
            }
        }
    }
}

/// Template keys and the placeholders each may use.
pub const TEMPLATE_KEYS: &[(&str, &[&str])] = &[
    ("title", &[]),
    ("heading_context", &[]),
    ("heading_results", &[]),
    ("heading_affect", &[]),
    ("heading_language", &[]),
    ("heading_appendix", &[]),
    (
        "context",
        &["date_session_string", "textual_start_time", "nb_activities", "nb_exercises", "duration_session_str"],
    ),
    (
        "context_single",
        &["date_session_string", "textual_start_time", "nb_activities", "nb_exercises", "duration_session_str"],
    ),
    ("results_failed", &["num_failed"]),
    ("results_partial", &["num_partial"]),
    ("results_remaining", &[]),
    ("results_rate", &["success_rate"]),
    ("results_exo_failed", &["exo_failed"]),
    ("affect_full", &["emo_state", "emo_same", "emo_other"]),
    ("affect_same_only", &["emo_state", "emo_same"]),
    ("affect_other_only", &["emo_state", "emo_other"]),
    ("affect_primary_only", &["emo_state"]),
    ("affect_none", &[]),
    ("affect_unavailable", &[]),
    ("language_intro", &[]),
    ("language_higher", &["indicator_higher"]),
    ("language_lower", &["indicator_lower"]),
    ("language_lower_after_higher", &["indicator_lower"]),
    ("language_unavailable", &[]),
    ("table1_caption", &[]),
    ("table2_caption", &[]),
    ("col_exercise", &[]),
    ("col_functions", &[]),
    ("col_attempt1", &[]),
    ("col_attempt2", &[]),
    ("col_indicator", &[]),
    ("col_value", &[]),
    ("col_comparison", &[]),
    ("col_norm", &[]),
    ("outcome_success", &[]),
    ("outcome_partial", &[]),
    ("outcome_failed", &[]),
    ("appendix_intro", &[]),
];

const FR: &[(&str, &str)] = &[
    ("title", "Compte rendu de séance de remédiation cognitive"),
    ("heading_context", "Informations contextuelles"),
    ("heading_results", "Résultats"),
    ("heading_affect", "Affect"),
    ("heading_language", "Langage"),
    ("heading_appendix", "Annexe : indicateurs linguistiques"),
    (
        "context",
        "La séance du {date_session_string} a eu lieu vers {textual_start_time}. Au cours de cette séance, le patient a réalisé {nb_activities} activités ({nb_exercises} exercices réalisés deux fois) sur une durée de {duration_session_str}. Le tableau 1 résume les fonctions cognitives ciblées et les résultats des activités.",
    ),
    (
        "context_single",
        "La séance du {date_session_string} a eu lieu vers {textual_start_time}. Au cours de cette séance, le patient a réalisé {nb_activities} activités ({nb_exercises} exercices différents) sur une durée de {duration_session_str}. Le tableau 1 résume les fonctions cognitives ciblées et les résultats des activités.",
    ),
    (
        "results_failed",
        "Parmi ces activités : {num_failed} activités n'ont pas été réussies (taux de réponses correctes < 60 %).",
    ),
    (
        "results_partial",
        "{num_partial} activités ont été partiellement réussies (taux de réponses correctes entre 60 % et 80 %).",
    ),
    (
        "results_remaining",
        "Les autres activités ont montré des résultats tout à fait satisfaisants (taux de réponses correctes > 80 %).",
    ),
    ("results_rate", "Le taux de réussite pour les exercices est de {success_rate} %."),
    ("results_exo_failed", "Les exercices qui n'ont pas été réussis sont : {exo_failed}."),
    (
        "affect_full",
        "Au cours de la séance, le patient est apparu particulièrement {emo_state} ({emo_same}, mais aussi {emo_other}) par rapport aux émotions exprimées par les patients du même groupe.",
    ),
    (
        "affect_same_only",
        "Au cours de la séance, le patient est apparu particulièrement {emo_state} ({emo_same}) par rapport aux émotions exprimées par les patients du même groupe.",
    ),
    (
        "affect_other_only",
        "Au cours de la séance, le patient est apparu particulièrement {emo_state} (mais aussi {emo_other}) par rapport aux émotions exprimées par les patients du même groupe.",
    ),
    (
        "affect_primary_only",
        "Au cours de la séance, le patient est apparu particulièrement {emo_state} par rapport aux émotions exprimées par les patients du même groupe.",
    ),
    ("affect_none", "Aucun état affectif ne s'est démarqué significativement au cours de la séance."),
    ("affect_unavailable", "Aucune donnée affective n'est disponible pour cette séance."),
    (
        "language_intro",
        "Le tableau 2 ci-dessous présente les valeurs des indicateurs linguistiques calculés à partir des énoncés du patient au cours de l'interaction. Les explications des différents indicateurs sont fournies en annexe.",
    ),
    ("language_higher", "Par rapport à la norme, la valeur de « {indicator_higher} » est plus élevée."),
    ("language_lower", "Par rapport à la norme, la valeur de « {indicator_lower} » est plus basse."),
    ("language_lower_after_higher", "À l'inverse, la valeur de « {indicator_lower} » est plus basse."),
    (
        "language_unavailable",
        "Les indicateurs linguistiques n'ont pas pu être calculés : aucun énoncé exploitable du patient.",
    ),
    ("table1_caption", "Tableau 1 : Exercices et fonctions cognitives ciblées"),
    ("table2_caption", "Tableau 2 : Indicateurs linguistiques"),
    ("col_exercise", "Exercice"),
    ("col_functions", "Fonctions cognitives stimulées"),
    ("col_attempt1", "Essai 1"),
    ("col_attempt2", "Essai 2"),
    ("col_indicator", "Indicateur"),
    ("col_value", "Valeur"),
    ("col_comparison", "Comparaison"),
    ("col_norm", "Norme"),
    ("outcome_success", "réussi"),
    ("outcome_partial", "partiel"),
    ("outcome_failed", "échec"),
    (
        "appendix_intro",
        "Les normes correspondent à la médiane et aux premier et troisième quartiles [Q1; Q3] d'une cohorte de référence. Une flèche ↑ (↓) signale une valeur supérieure (inférieure) à l'intervalle interquartile.",
    ),
];

const EN: &[(&str, &str)] = &[
    ("title", "Cognitive remediation session report"),
    ("heading_context", "Contextual Information"),
    ("heading_results", "Results"),
    ("heading_affect", "Affect"),
    ("heading_language", "Language"),
    ("heading_appendix", "Appendix: linguistic indicators"),
    (
        "context",
        "The session on {date_session_string} took place around {textual_start_time}. During this session, the patient completed {nb_activities} activities ({nb_exercises} exercises performed twice) over {duration_session_str}. Table 1 summarizes the cognitive functions targeted and the results of the activities.",
    ),
    (
        "context_single",
        "The session on {date_session_string} took place around {textual_start_time}. During this session, the patient completed {nb_activities} activities ({nb_exercises} different exercises) over {duration_session_str}. Table 1 summarizes the cognitive functions targeted and the results of the activities.",
    ),
    (
        "results_failed",
        "Among these activities: {num_failed} activities were not successful (correct response rate < 60%).",
    ),
    (
        "results_partial",
        "{num_partial} activities were partially successful (correct response rate between 60% and 80%).",
    ),
    (
        "results_remaining",
        "The remaining activities showed completely satisfactory results (correct response rate > 80%).",
    ),
    ("results_rate", "The success rate for the exercises is {success_rate}%."),
    ("results_exo_failed", "The exercises that were not successful are: {exo_failed}."),
    (
        "affect_full",
        "During the session, the patient appeared particularly {emo_state} ({emo_same}, but also {emo_other}) compared to the emotions expressed by patients in the same group.",
    ),
    (
        "affect_same_only",
        "During the session, the patient appeared particularly {emo_state} ({emo_same}) compared to the emotions expressed by patients in the same group.",
    ),
    (
        "affect_other_only",
        "During the session, the patient appeared particularly {emo_state} (but also {emo_other}) compared to the emotions expressed by patients in the same group.",
    ),
    (
        "affect_primary_only",
        "During the session, the patient appeared particularly {emo_state} compared to the emotions expressed by patients in the same group.",
    ),
    ("affect_none", "No affective state stood out significantly during the session."),
    ("affect_unavailable", "No affective data is available for this session."),
    (
        "language_intro",
        "Table 2 below presents the values of the linguistic indicators computed from the patient's utterances during the interaction. Explanations of the different indicators are provided in the Appendix.",
    ),
    ("language_higher", "Compared to the norm, the value of \"{indicator_higher}\" is higher."),
    ("language_lower", "Compared to the norm, the value of \"{indicator_lower}\" is lower."),
    ("language_lower_after_higher", "Conversely, the value of \"{indicator_lower}\" is lower."),
    (
        "language_unavailable",
        "The linguistic indicators could not be computed: no usable patient utterance.",
    ),
    ("table1_caption", "Table 1: Exercises and Targeted Cognitive Functions"),
    ("table2_caption", "Table 2: Linguistic Indicators"),
    ("col_exercise", "Exercise"),
    ("col_functions", "Cognitive skills stimulated"),
    ("col_attempt1", "Attempt 1"),
    ("col_attempt2", "Attempt 2"),
    ("col_indicator", "Indicator"),
    ("col_value", "Value"),
    ("col_comparison", "Comparison"),
    ("col_norm", "Norm"),
    ("outcome_success", "successful"),
    ("outcome_partial", "partial"),
    ("outcome_failed", "unsuccessful"),
    (
        "appendix_intro",
        "Norms are the median and the first and third quartiles [Q1; Q3] of a reference cohort. An arrow ↑ (↓) marks a value above (below) the interquartile range.",
    ),
];

fn placeholder_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([A-Za-z_]*)\}").unwrap())
}

/// True when the text still holds a `{name}` or `{}` placeholder.
pub fn has_placeholder(text: &str) -> bool {
    placeholder_regex().is_match(text)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub locale: Locale,
    strings: BTreeMap<&'static str, String>,
}

impl TemplateSet {
    pub fn builtin(locale: Locale) -> Self {
        let source = match locale {
            Locale::Fr => FR,
            Locale::En => EN,
        };
        TemplateSet {
            locale,
            strings: source.iter().map(|(k, v)| (*k, v.to_string())).collect(),
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.strings.get(key).map(String::as_str).unwrap_or_else(|| panic!("unknown template key `{key}`"))
    }

    /// Applies a `key = value` override file; `#` starts a comment line.
    pub fn with_overrides(mut self, text: &str) -> Result<Self, ReportError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ReportError::Template(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            let (name, allowed) = TEMPLATE_KEYS
                .iter()
                .find(|(k, _)| *k == key)
                .ok_or_else(|| ReportError::Template(format!("line {}: unknown template key `{key}`", i + 1)))?;
            let value = value.trim();
            for cap in placeholder_regex().captures_iter(value) {
                if !allowed.contains(&&cap[1]) {
                    return Err(ReportError::Template(format!(
                        "line {}: placeholder `{{{}}}` is not available in `{key}`",
                        i + 1,
                        &cap[1]
                    )));
                }
            }
            self.strings.insert(name, value.to_string());
        }
        Ok(self)
    }

    /// Fills `{name}` slots of a template.
    pub fn fill(&self, key: &str, values: &[(&str, &str)]) -> Result<String, ReportError> {
        let template = self.get(key);
        let mut missing = None;
        let out = placeholder_regex().replace_all(template, |caps: &regex::Captures| {
            match values.iter().find(|(k, _)| *k == &caps[1]) {
                Some((_, v)) => v.to_string(),
                None => {
                    missing.get_or_insert_with(|| caps[0].to_string());
                    caps[0].to_string()
                }
            }
        });
        match missing {
            Some(slot) => Err(ReportError::Render(format!("template `{key}` left {slot} unfilled"))),
            None => Ok(out.into_owned()),
        }
    }

    /// Joins items as natural-language enumeration.
    pub fn join_list(&self, items: &[String]) -> String {
        let and = match self.locale {
            Locale::Fr => " et ",
            Locale::En => " and ",
        };
        match items {
            [] => String::new(),
            [one] => one.clone(),
            [head @ .., last] => format!("{}{and}{last}", head.join(", ")),
        }
    }
}
