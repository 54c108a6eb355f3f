use std::collections::HashMap;

use proptest::prelude::*;
use racetrack_betree::workload::{
    generate, key_for, zipf_head_probability, Op, WorkloadId, WorkloadSpec, ZIPF_EXPONENT,
};

fn counts(ops: &[Op]) -> (usize, usize, usize) {
    let mut c = (0, 0, 0);
    for op in ops {
        match op {
            Op::Read { .. } => c.0 += 1,
            Op::Update { .. } => c.1 += 1,
            Op::Insert { .. } => c.2 += 1,
        }
    }
    c
}

#[test]
fn read_only_workload_after_load() {
    let s = generate(&WorkloadSpec::new(WorkloadId::C, 500, 1000, 5), 64).unwrap();
    assert_eq!(counts(&s.load), (0, 0, 500));
    assert_eq!(counts(&s.run), (1000, 0, 0));
}

#[test]
fn mixes_follow_the_table() {
    // 4 standard deviations of a binomial(20000, p) proportion stay well
    // inside 2 percentage points
    let n = 20_000;
    for w in WorkloadId::ALL {
        let s = generate(&WorkloadSpec::new(w, 1000, n, 9), 64).unwrap();
        let (r, u, i) = counts(&s.run);
        let (pr, pu, pi, _) = w.mix();
        for (got, pct) in [(r, pr), (u, pu), (i, pi)] {
            let frac = got as f64 / n as f64;
            assert!((frac - pct as f64 / 100.0).abs() < 0.02, "{w}: {got} vs {pct}%");
        }
    }
}

#[test]
fn zipf_head_matches_analytic_probability() {
    let items = 1000u64;
    let ops = 100_000u64;
    let s = generate(&WorkloadSpec::new(WorkloadId::C, items, ops, 17), 64).unwrap();
    let mut freq: HashMap<u64, u64> = HashMap::new();
    for op in &s.run {
        *freq.entry(op.key()).or_default() += 1;
    }
    let (&top, &hits) = freq.iter().max_by_key(|(_, c)| **c).unwrap();
    assert_eq!(top, key_for(0, 64));
    let expected = zipf_head_probability(items, ZIPF_EXPONENT);
    let observed = hits as f64 / ops as f64;
    assert!(((observed - expected) / expected).abs() < 0.05, "observed {observed}, expected {expected}");
}

#[test]
fn head_probability_normalizes() {
    // sum of k^-s over k = 1..n equals 1 / head
    let n = 50;
    let h = zipf_head_probability(n, 0.5);
    let sum: f64 = (1..=n).map(|k| (k as f64).powf(-0.5)).sum();
    assert!((h * sum - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn same_seed_same_stream(seed in any::<u64>(), w in 0usize..6, load in 1u64..300, ops in 0u64..300) {
        let spec = WorkloadSpec::new(WorkloadId::ALL[w], load, ops, seed);
        prop_assert_eq!(generate(&spec, 64).unwrap(), generate(&spec, 64).unwrap());
    }

    #[test]
    fn reads_and_updates_touch_loaded_or_inserted_keys(seed in any::<u64>(), w in 0usize..6) {
        let s = generate(&WorkloadSpec::new(WorkloadId::ALL[w], 200, 400, seed), 64).unwrap();
        let mut known: std::collections::HashSet<u64> = s.load.iter().map(|o| o.key()).collect();
        for op in &s.run {
            match op {
                Op::Insert { key, .. } => { known.insert(*key); }
                other => prop_assert!(known.contains(&other.key())),
            }
        }
    }
}
