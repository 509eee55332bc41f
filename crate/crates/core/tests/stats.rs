mod common;

use ccreport::stats::{bonferroni, mann_whitney_u_with, normal_sf, quartile_norm, z_right, UTestMethod, UTestMode};
use proptest::prelude::*;

#[test]
fn right_tail_at_zero_is_one_half() {
    assert_eq!(normal_sf(0.0), 0.5);
    assert_eq!(z_right(0.4, 0.4, 0.1, 25).unwrap().p, 0.5);
}

#[test]
fn five_percent_critical_value() {
    let p = normal_sf(1.6449);
    assert!((p - 0.05).abs() <= 1e-4);
    assert!((p - common::normal_sf_oracle(1.6449)).abs() <= 1e-6);
}

#[test]
fn survival_function_tracks_erf_oracle() {
    for i in -60..=60 {
        let z = i as f64 / 10.0;
        assert!((normal_sf(z) - common::normal_sf_oracle(z)).abs() < 1e-6, "z = {z}");
    }
}

#[test]
fn degenerate_sigma_is_rejected() {
    assert!(z_right(1.0, 0.0, 0.0, 10).is_err());
    assert!(z_right(1.0, 0.0, 1.0, 0).is_err());
}

#[test]
fn quartiles_of_constant_cohort_collapse() {
    let n = quartile_norm(&[2.5; 7]).unwrap();
    assert_eq!((n.q1, n.median, n.q3), (2.5, 2.5, 2.5));
}

#[test]
fn four_vs_four_exact_extreme() {
    let r = mann_whitney_u_with(&[5.0; 4], &[1.0; 4], UTestMode::Exact).unwrap();
    assert_eq!(r.u, 16.0);
    assert!((r.p - 2.0 / 70.0).abs() < 1e-12);
    assert_eq!(r.method, UTestMethod::Exact);
}

fn small_sample() -> impl Strategy<Value = Vec<f64>> {
    // few distinct values so ties are common
    prop::collection::vec((0u8..6).prop_map(f64::from), 1..=8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn z_is_affine_invariant(
        mean in 0.0f64..1.0,
        mu in 0.0f64..1.0,
        sigma in 0.01f64..0.5,
        n in 1usize..500,
        a in 0.5f64..50.0,
        b in -10.0f64..10.0,
    ) {
        prop_assume!((mean - mu).abs() >= 0.01);
        let z = z_right(mean, mu, sigma, n).unwrap().z;
        let scaled = z_right(a * mean + b, a * mu + b, a * sigma, n).unwrap().z;
        // relative: |z| reaches the thousands, beyond absolute f64 resolution
        prop_assert!((z - scaled).abs() <= 1e-12 * z.abs(), "z = {}, scaled = {}", z, scaled);
    }

    #[test]
    fn bonferroni_is_capped_product(p in 0.0f64..=1.0, m in 1usize..50) {
        prop_assert_eq!(bonferroni(p, m).unwrap(), (m as f64 * p).min(1.0));
        prop_assert!(bonferroni(p, m).unwrap() >= p);
        prop_assert!(bonferroni(p, m + 1).unwrap() >= bonferroni(p, m).unwrap());
    }

    #[test]
    fn bonferroni_is_monotone_in_p(p in 0.0f64..=1.0, q in 0.0f64..=1.0, m in 1usize..50) {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        prop_assert!(bonferroni(lo, m).unwrap() <= bonferroni(hi, m).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(600))]

    #[test]
    fn exact_p_matches_permutation_oracle(a in small_sample(), b in small_sample()) {
        let r = mann_whitney_u_with(&a, &b, UTestMode::Exact).unwrap();
        let (u, p) = common::mann_whitney_brute_force(&a, &b);
        prop_assert_eq!(r.u, u);
        prop_assert!((r.p - p).abs() <= 1e-12, "p = {}, oracle = {}", r.p, p);
    }

    #[test]
    fn u_is_symmetric(a in small_sample(), b in small_sample()) {
        let ab = mann_whitney_u_with(&a, &b, UTestMode::Exact).unwrap();
        let ba = mann_whitney_u_with(&b, &a, UTestMode::Exact).unwrap();
        prop_assert_eq!(ab.u + ba.u, (a.len() * b.len()) as f64);
        prop_assert_eq!(ab.p, ba.p);
    }

    #[test]
    fn normal_approximation_is_a_probability(
        a in prop::collection::vec(0.0f64..10.0, 9..30),
        b in prop::collection::vec(0.0f64..10.0, 9..30),
    ) {
        let r = mann_whitney_u_with(&a, &b, UTestMode::Auto).unwrap();
        prop_assert_eq!(r.method, UTestMethod::NormalApproxTieCorrected);
        prop_assert!((0.0..=1.0).contains(&r.p));
    }
}
