mod common;

use ccreport::ingest::{parse_transcript, Speaker, Utterance};
use ccreport::linguistics::{
    clean_utterances, compute_indicator_set, load_pretagged, tokenize, IndicatorSet, LexiconTagger, RulePhonemizer,
};
use common::{oracle, Letters, SESSION_S};
use proptest::prelude::*;

fn fixture() -> (String, String) {
    let dir = common::fixtures().join("linguistics");
    (
        std::fs::read_to_string(dir.join("transcript.csv")).unwrap(),
        std::fs::read_to_string(dir.join("tags.csv")).unwrap(),
    )
}

fn fixture_indicators() -> IndicatorSet {
    let (transcript, tags) = fixture();
    let utterances = clean_utterances(&parse_transcript(&transcript).unwrap());
    assert_eq!(utterances.len(), 20);
    compute_indicator_set(&utterances, SESSION_S, &load_pretagged(&tags).unwrap(), &Letters).unwrap()
}

#[test]
fn twenty_utterance_fixture_matches_oracle() {
    let set = fixture_indicators();
    let (transcript, tags) = fixture();
    for (indicator, expected) in oracle(&transcript, &tags) {
        let got = set.value(indicator);
        assert!((got - expected).abs() <= 1e-9, "{indicator}: {got} vs {expected}");
    }
}

#[test]
fn pretagged_fixture_has_propositional_density() {
    let set = fixture_indicators();
    let p = set.propositional_density.expect("every token is tagged");
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn builtin_tagger_runs_on_fixture() {
    let (transcript, _) = fixture();
    let utterances = clean_utterances(&parse_transcript(&transcript).unwrap());
    let set = compute_indicator_set(&utterances, SESSION_S, &LexiconTagger::builtin(), &RulePhonemizer::builtin())
        .unwrap();
    assert_eq!(set.total_tokens, fixture_indicators().total_tokens);
}

const WORDS: [&str; 16] = [
    "le", "chat", "dort", "et", "la", "maison", "est", "grande", "l'ami", "vient", "très", "souvent", "euh",
    "peut-être", "ici", "avec",
];

fn utterance() -> impl Strategy<Value = (Vec<usize>, f64)> {
    (prop::collection::vec(0..WORDS.len(), 1..12), 0.2f64..6.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ratio_bounds_hold(rows in prop::collection::vec(utterance(), 1..15)) {
        let mut t = 0.0;
        let utterances: Vec<Utterance> = rows
            .iter()
            .map(|(ws, d)| {
                let text = ws.iter().map(|&i| WORDS[i]).collect::<Vec<_>>().join(" ");
                let u = Utterance::new(Speaker::Subject, &text, t, t + d);
                t += d + 0.5;
                u
            })
            .collect();
        let clean = clean_utterances(&utterances);
        let set = compute_indicator_set(&clean, t + 1.0, &LexiconTagger::builtin(), &RulePhonemizer::builtin()).unwrap();
        let tokens: usize = clean.iter().map(|u| tokenize(&u.text).len()).sum();
        prop_assert_eq!(set.total_tokens, tokens);
        prop_assert!(set.ttr > 0.0 && set.ttr <= 1.0);
        prop_assert!((0.0..=1.0).contains(&set.content_density));
        if let Some(p) = set.propositional_density {
            prop_assert!((0.0..=1.0).contains(&p));
        }
        prop_assert!(set.vocabulary_size as f64 <= set.mean_utterance_len_words * clean.len() as f64 + 1e-9);
        prop_assert!(set.speaking_time_min_per_h <= 60.0);
    }
}
