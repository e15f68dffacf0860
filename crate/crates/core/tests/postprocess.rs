mod common;

use std::collections::BTreeMap;

use mfree_core::sim::{ghz_ideal, sample_noisy, IdealDistribution, NoiseSpec};
use mfree_core::solver::{mitigate_with_overhead, SolveOptions};
use mfree_core::{expval, nearest_probability, BitString, DiagonalOperator, QuasiDistribution};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn quasi_strategy() -> impl Strategy<Value = (Vec<String>, Vec<f64>)> {
    (1usize..=10).prop_flat_map(|size| {
        (
            proptest::collection::btree_set("[01]{5}", size..=size),
            proptest::collection::vec(-0.5f64..1.0, size..=size),
        )
            .prop_map(|(keys, mut w)| {
                let shift = (1.0 - w.iter().sum::<f64>()) / w.len() as f64;
                w.iter_mut().for_each(|v| *v += shift);
                (keys.into_iter().collect(), w)
            })
    })
}

fn build(keys: &[String], w: &[f64]) -> QuasiDistribution {
    QuasiDistribution::from_text(keys.iter().map(String::as_str).zip(w.iter().copied())).unwrap()
}

fn operator_strategy() -> impl Strategy<Value = String> {
    "[IZ01]{5}"
}

proptest! {
    #[test]
    fn projection_matches_subset_enumeration((keys, w) in quasi_strategy()) {
        let out = nearest_probability(&build(&keys, &w));
        let reference = brute_force_projection(&w);
        for ((_, a), b) in out.iter().zip(&reference) {
            prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
            prop_assert!(a >= 0.0);
        }
        prop_assert!((out.sum() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn projection_is_idempotent((keys, w) in quasi_strategy()) {
        let once = nearest_probability(&build(&keys, &w));
        let twice = nearest_probability(&once);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn expval_bounded_by_total_weight((keys, w) in quasi_strategy(), op in operator_strategy()) {
        let q = build(&keys, &w);
        let op = DiagonalOperator::parse(&op).unwrap();
        let v = expval(&q, &op).unwrap();
        let total: f64 = w.iter().map(|x| x.abs()).sum();
        prop_assert!(v.abs() <= total + 1e-12);
    }

    #[test]
    fn factor_operators_match_text_evaluation(key in "[01]{6}", op in "[IZ01]{6}") {
        let s: BitString = key.parse().unwrap();
        let v = DiagonalOperator::parse(&op).unwrap().eigenvalue(&s).unwrap();
        let expected: f64 = key
            .chars()
            .zip(op.chars())
            .map(|(b, f)| match (f, b) {
                ('I', _) => 1.0,
                ('Z', '0') => 1.0,
                ('Z', _) => -1.0,
                ('0', '0') | ('1', '1') => 1.0,
                _ => 0.0,
            })
            .product();
        prop_assert_eq!(v, expected);
    }
}

#[test]
fn mitigated_parity_is_unbiased() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for config in 0..3u64 {
        // even widths so the GHZ parity is nonzero
        let n = 2 * rng.random_range(2..=4);
        let cal = random_cal(n, 0.01, 0.04, &mut rng);
        let ideal = ghz_ideal(n, Some(0.1)).unwrap();
        let op = DiagonalOperator::parity(n);
        let truth = ideal.expval(&op).unwrap();
        let shots = 2000;
        let mut values = Vec::new();
        let mut bound: f64 = 0.0;
        for rep in 0..500 {
            let counts = sample_noisy(&ideal, &NoiseSpec::new(cal.clone(), config * 10_000 + rep), shots).unwrap();
            let r = mitigate_with_overhead(&cal, &counts, n, &SolveOptions::default()).unwrap();
            values.push(expval(&r.quasi, &op).unwrap());
            bound = bound.max(r.overhead.unwrap().sigma_bound(shots));
        }
        let m = mean(&values);
        assert!((m - truth).abs() <= 3.0 * bound, "n {n}: mean {m}, truth {truth}, bound {bound}");
        // the raw estimate is visibly biased at these rates
        let counts = sample_noisy(&ideal, &NoiseSpec::new(cal.clone(), 1), 200_000).unwrap();
        let raw = counts.expval_raw(|s| op.eigenvalue(s).unwrap());
        assert!((raw - truth).abs() > (m - truth).abs(), "n {n}: raw {raw}, mitigated {m}, truth {truth}");
    }
}

#[test]
fn random_operator_expectations_are_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let n = 6;
    let cal = random_cal(n, 0.01, 0.03, &mut rng);
    let ideal = IdealDistribution::random(n, 5, 41).unwrap();
    let counts = sample_noisy(&ideal, &NoiseSpec::new(cal.clone(), 41), 200_000).unwrap();
    let r = mitigate_with_overhead(&cal, &counts, n, &SolveOptions::default()).unwrap();
    let sigma = r.overhead.unwrap().sigma_bound(counts.shots());
    for _ in 0..20 {
        let spec: String = (0..n).map(|_| ['I', 'Z', '0', '1'][rng.random_range(0..4)]).collect();
        let op = DiagonalOperator::parse(&spec).unwrap();
        let got = expval(&r.quasi, &op).unwrap();
        let truth = ideal.expval(&op).unwrap();
        assert!((got - truth).abs() <= 4.0 * sigma, "{spec}: {got} vs {truth}");
    }
}

#[test]
fn projection_keeps_support_and_order() {
    let q = QuasiDistribution::from_text([("000", 0.5), ("011", -0.1), ("101", 0.45), ("111", 0.15)]).unwrap();
    let p = nearest_probability(&q);
    let keys: Vec<String> = p.iter().map(|(k, _)| k.to_string()).collect();
    assert_eq!(keys, ["000", "011", "101", "111"]);
    let map: BTreeMap<String, f64> = p.iter().map(|(k, w)| (k.to_string(), w)).collect();
    assert_eq!(map["011"], 0.0);
    assert!(p.is_probability());
}
