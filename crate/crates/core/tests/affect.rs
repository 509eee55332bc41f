mod common;

use ccreport::affect::{
    detect_salient, population_stats, select_report_emotions, summarize_session, EmotionLabel, EmotionTrace,
    LabelSalience, Polarity, SalienceConfig, SalienceMode, SalienceResult, MAX_LABELS_PER_POLARITY,
};
use common::{alternating_trace, label_means, trace_from_rows};
use proptest::prelude::*;

const MU: f64 = 0.3;
const SIGMA: f64 = 0.1;

/// Two subjects whose pooled moments are exactly `MU` and `SIGMA` per label.
fn population() -> Vec<(String, EmotionTrace)> {
    vec![
        ("A".into(), alternating_trace([MU; 10], SIGMA, 50)),
        ("B".into(), alternating_trace([MU; 10], SIGMA, 50)),
    ]
}

#[test]
fn single_elevated_label_is_sole_salient() {
    let pop = population_stats(&population(), None).unwrap();
    for l in EmotionLabel::ALL {
        assert!((pop.pooled[l.index()].mu - MU).abs() < 1e-12);
        assert!((pop.pooled[l.index()].sigma - SIGMA).abs() < 1e-12);
    }
    let n = 100;
    let target = EmotionLabel::Happy;
    let shift = 10.0 * SIGMA / (n as f64).sqrt();
    let session = alternating_trace(label_means(|l| if l == target { MU + shift } else { MU }), 0.05, n);
    let config = SalienceConfig {
        alpha: 0.05,
        mode: SalienceMode::Pooled,
        ..SalienceConfig::default()
    };
    let result = detect_salient(&summarize_session(&session).unwrap(), &pop, &config).unwrap();
    let salient: Vec<_> = result.salient().map(|l| l.label).collect();
    assert_eq!(salient, vec![target]);
    let top = &result.labels[0];
    assert!((top.z - 10.0).abs() < 1e-9);
    assert_eq!(top.p_corrected, (top.p_raw * 10.0).min(1.0));
    let selection = select_report_emotions(&result);
    assert_eq!(selection.primary, Some(target));
    assert!(selection.other_positive.is_empty() && selection.negative.is_empty());
}

#[test]
fn equal_means_give_empty_selection() {
    let pop = population_stats(&population(), None).unwrap();
    let session = alternating_trace([MU; 10], 0.07, 100);
    let result = detect_salient(&summarize_session(&session).unwrap(), &pop, &SalienceConfig::default()).unwrap();
    assert_eq!(result.salient().count(), 0);
    assert!(select_report_emotions(&result).is_empty());
}

fn fake(label: EmotionLabel, z: f64) -> LabelSalience {
    LabelSalience {
        label,
        session_mean: 0.0,
        n: 100,
        z,
        p_raw: 0.0,
        p_corrected: 0.0,
        salient: true,
        pairwise: None,
    }
}

#[test]
fn ordering_and_caps_example() {
    use EmotionLabel::*;
    let result = SalienceResult {
        labels: vec![fake(Happy, 5.0), fake(Satisfied, 4.0), fake(Interested, 3.0), fake(Frustrated, 2.8)],
        skipped: vec![],
        normality_warning: false,
        alpha: 0.05,
    };
    let s = select_report_emotions(&result);
    assert_eq!(s.primary, Some(Happy));
    assert_eq!(s.other_positive, vec![Satisfied, Interested]);
    assert_eq!(s.negative, vec![Frustrated]);
}

#[test]
fn zero_sigma_labels_are_skipped() {
    let mut rows = vec![[MU; 10]; 40];
    for (i, r) in rows.iter_mut().enumerate() {
        for l in EmotionLabel::ALL {
            if l != EmotionLabel::Relaxed {
                r[l.index()] += if i % 2 == 0 { SIGMA } else { -SIGMA };
            }
        }
    }
    let pop = population_stats(&[("A".into(), trace_from_rows(rows))], None).unwrap();
    let session = alternating_trace([0.9; 10], 0.01, 40);
    let result = detect_salient(&summarize_session(&session).unwrap(), &pop, &SalienceConfig::default()).unwrap();
    assert_eq!(result.skipped, vec![EmotionLabel::Relaxed]);
    assert!(result.labels.iter().all(|l| l.label != EmotionLabel::Relaxed));
}

#[test]
fn pairwise_tau_zero_means_any_subject() {
    // subject A is low on `anxious`, subject B is high
    let a = alternating_trace([0.2; 10], SIGMA, 60);
    let b = alternating_trace(label_means(|l| if l == EmotionLabel::Anxious { 0.6 } else { 0.2 }), SIGMA, 60);
    let pop = population_stats(&[("A".into(), a), ("B".into(), b)], None).unwrap();
    let session = alternating_trace(label_means(|l| if l == EmotionLabel::Anxious { 0.4 } else { 0.2 }), 0.05, 100);
    let summary = summarize_session(&session).unwrap();
    let any = SalienceConfig {
        mode: SalienceMode::Pairwise,
        tau: 0.0,
        ..SalienceConfig::default()
    };
    let all = SalienceConfig { tau: 1.0, ..any };
    let r_any = detect_salient(&summary, &pop, &any).unwrap();
    let r_all = detect_salient(&summary, &pop, &all).unwrap();
    let anxious = |r: &SalienceResult| r.labels.iter().find(|l| l.label == EmotionLabel::Anxious).unwrap().clone();
    assert!(anxious(&r_any).salient);
    assert_eq!(anxious(&r_any).pairwise, Some((2, 1)));
    assert!(!anxious(&r_all).salient);
    for l in &r_any.labels {
        let (_, passed) = l.pairwise.unwrap();
        assert_eq!(l.salient, passed >= 1, "{}", l.label);
    }
}

#[test]
fn leave_one_out_drops_subject() {
    let pop = population_stats(&population(), None).unwrap();
    let held = pop.excluding("A").unwrap().unwrap();
    assert_eq!(held.source_subject_count, 1);
    assert!(pop.excluding("Z").unwrap().is_none());
}

fn salience_generator() -> impl Strategy<Value = SalienceResult> {
    prop::collection::vec((any::<bool>(), 0.0f64..10.0), 10).prop_map(|flags| {
        let mut labels: Vec<LabelSalience> = EmotionLabel::ALL
            .iter()
            .zip(flags)
            .map(|(&l, (salient, z))| LabelSalience {
                salient,
                ..fake(l, z)
            })
            .collect();
        labels.sort_by(|a, b| b.z.total_cmp(&a.z).then(a.label.cmp(&b.label)));
        SalienceResult {
            labels,
            skipped: vec![],
            normality_warning: false,
            alpha: 0.05,
        }
    })
}

fn random_trace(n: usize) -> impl Strategy<Value = EmotionTrace> {
    prop::collection::vec(prop::array::uniform10(0.0f64..1.0), n).prop_map(trace_from_rows)
}

fn map_trace(t: &EmotionTrace, a: f64, b: f64) -> EmotionTrace {
    trace_from_rows(t.sequences.iter().map(|r| r.intensities.map(|x| a * x + b)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn caps_hold(result in salience_generator()) {
        let s = select_report_emotions(&result);
        prop_assert!(s.other_positive.len() <= MAX_LABELS_PER_POLARITY);
        prop_assert!(s.negative.len() <= MAX_LABELS_PER_POLARITY);
        prop_assert!(s.other_positive.iter().all(|l| l.polarity() == Polarity::Positive));
        prop_assert!(s.negative.iter().all(|l| l.polarity() == Polarity::Negative));
        if let Some(p) = s.primary {
            prop_assert!(!s.other_positive.contains(&p) && !s.negative.contains(&p));
            let top = result.salient().next().unwrap().label;
            prop_assert_eq!(p, top);
        } else {
            prop_assert_eq!(result.salient().count(), 0);
        }
    }

    #[test]
    fn selection_is_affine_invariant(
        session in random_trace(40),
        p1 in random_trace(30),
        p2 in random_trace(30),
        a in 0.5f64..4.0,
        b in -1.0f64..1.0,
    ) {
        let config = SalienceConfig::default();
        let run = |s: &EmotionTrace, x: &EmotionTrace, y: &EmotionTrace| {
            let pop = population_stats(&[("X".into(), x.clone()), ("Y".into(), y.clone())], None).unwrap();
            detect_salient(&summarize_session(s).unwrap(), &pop, &config).unwrap()
        };
        let base = run(&session, &p1, &p2);
        let moved = run(&map_trace(&session, a, b), &map_trace(&p1, a, b), &map_trace(&p2, a, b));
        for (x, y) in base.labels.iter().zip(&moved.labels) {
            prop_assert!((x.z - y.z).abs() <= 1e-9 * x.z.abs().max(1.0));
        }
        let flags = |r: &SalienceResult| {
            let mut v: Vec<_> = r.salient().map(|l| l.label).collect();
            v.sort();
            v
        };
        prop_assert_eq!(flags(&base), flags(&moved));
        let (s1, s2) = (select_report_emotions(&base), select_report_emotions(&moved));
        prop_assert_eq!(s1.primary, s2.primary);
        let set = |v: &[EmotionLabel]| { let mut v = v.to_vec(); v.sort(); v };
        prop_assert_eq!(set(&s1.other_positive), set(&s2.other_positive));
        prop_assert_eq!(set(&s1.negative), set(&s2.negative));
    }

    #[test]
    fn raising_a_label_never_lowers_its_z(
        session in random_trace(40),
        p1 in random_trace(30),
        label in 0usize..10,
        bump in 0.0f64..0.5,
    ) {
        let pop = population_stats(&[("X".into(), p1)], None).unwrap();
        let l = EmotionLabel::ALL[label];
        let raised = trace_from_rows(session.sequences.iter().map(|r| {
            let mut v = r.intensities;
            v[label] += bump;
            v
        }).collect());
        let config = SalienceConfig::default();
        let z = |t: &EmotionTrace| {
            detect_salient(&summarize_session(t).unwrap(), &pop, &config).unwrap()
                .labels.iter().find(|x| x.label == l).unwrap().z
        };
        prop_assert!(z(&raised) >= z(&session));
    }
}
