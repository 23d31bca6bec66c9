use std::collections::BTreeMap;

use super::*;
use crate::measures::merger_rate;
use crate::rng::{split, Lane};
use crate::stats::{chi_square_test, ks_test, MeanSe};

#[test]
fn two_blocks_survive_exponentially() {
    let m = MeasureSpec::uniform();
    let table = RateTable::new(&m, 2);
    let reps = 100_000;
    let mut rng = split(21, 0, Lane::Chain);
    let hits = (0..reps)
        .filter(|_| {
            simulate_chain_with(&table, 2, 1.0, &[1.0], &mut rng).unwrap().snapshots[0]
                .1
                .num_blocks()
                == 2
        })
        .count();
    let est = MeanSe::proportion(hits, reps);
    assert!(est.within((-1.0f64).exp(), 3.0), "{est:?}");
}

#[test]
fn kingman_three_blocks() {
    let m = MeasureSpec::kingman();
    let table = RateTable::new(&m, 3);
    let mut rng = split(22, 0, Lane::Chain);
    let mut first = Vec::new();
    for _ in 0..20_000 {
        let tr = simulate_chain_with(&table, 3, f64::INFINITY, &[], &mut rng).unwrap();
        assert!(tr.events.iter().all(|e| e.merged.len() == 2));
        assert_eq!(tr.events.len(), 2);
        first.push(tr.events[0].time);
    }
    let r = ks_test(&first, |x| 1.0 - (-3.0 * x).exp());
    assert!(r.p_value > 0.001, "{r:?}");
}

#[test]
fn zero_horizon_is_singletons() {
    let mut rng = split(23, 0, Lane::Chain);
    for m in [MeasureSpec::uniform(), MeasureSpec::kingman(), MeasureSpec::x_squared()] {
        let tr = simulate_chain(&m, 6, 0.0, &[0.0], &mut rng).unwrap();
        assert!(tr.events.is_empty());
        assert_eq!(tr.snapshots[0].1, Partition::singletons(6));
    }
}

#[test]
fn invalid_arguments() {
    let mut rng = split(24, 0, Lane::Chain);
    let m = MeasureSpec::uniform();
    assert!(simulate_chain(&m, 1, 1.0, &[], &mut rng).is_err());
    assert!(simulate_chain(&m, 3, -1.0, &[], &mut rng).is_err());
    assert!(simulate_chain(&m, 3, 1.0, &[2.0], &mut rng).is_err());
}

#[test]
fn trajectory_invariants_and_reproducibility() {
    let m = MeasureSpec::beta(0.5).unwrap();
    let a = simulate_chain(&m, 50, f64::INFINITY, &[0.1, 0.01, 1.0], &mut split(26, 3, Lane::Chain)).unwrap();
    let b = simulate_chain(&m, 50, f64::INFINITY, &[0.1, 0.01, 1.0], &mut split(26, 3, Lane::Chain)).unwrap();
    assert_eq!(a.to_lines(), b.to_lines());
    assert_eq!(a, b);
    assert!(a.events.windows(2).all(|w| w[0].time < w[1].time));
    assert!(a.events.windows(2).all(|w| w[0].blocks_after > w[1].blocks_after));
    assert!(a.events.iter().all(|e| e.merged.len() >= 2));
    assert_eq!(a.events.last().unwrap().blocks_after, 1);
    for (t, p) in &a.snapshots {
        assert_eq!(*p, a.partition_at(*t));
        assert_eq!(p.num_blocks(), a.blocks_at(*t));
    }
}

#[test]
fn rate_matrix_small_cases() {
    let m = MeasureSpec::uniform();
    let q2 = rate_matrix(&m, 2).unwrap();
    assert_eq!(q2.len(), 2);
    let r = q2.rate(&Partition::singletons(2), &Partition::one_block(2)).unwrap();
    assert!((r - 1.0).abs() < 1e-12);
    let q3 = rate_matrix(&m, 3).unwrap();
    let s = Partition::singletons(3);
    let pair: Partition = "1,2|3".parse().unwrap();
    assert!((q3.rate(&s, &pair).unwrap() - 0.5).abs() < 1e-12);
    assert!((q3.rate(&s, &Partition::one_block(3)).unwrap() - 0.5).abs() < 1e-12);
    for n in 1..=5 {
        let q = rate_matrix(&MeasureSpec::beta(0.5).unwrap(), n).unwrap();
        for i in 0..q.len() {
            assert!(q.row_sum(i).abs() < 1e-12);
        }
        assert!(q.entries().all(|(a, b, _)| q.index_of(a) < q.index_of(b)));
    }
    assert!(matches!(rate_matrix(&m, 8), Err(ChainError::TooLarge { .. })));
}

#[test]
fn transition_probabilities_properties() {
    let m = MeasureSpec::uniform();
    let p0 = transition_probabilities(&m, 4, 0.0).unwrap();
    assert_eq!(p0[&Partition::singletons(4)], 1.0);
    let p = transition_probabilities(&m, 4, 1.0).unwrap();
    assert!((p.values().sum::<f64>() - 1.0).abs() < 1e-10);
    let late = transition_probabilities(&m, 4, 60.0).unwrap();
    assert!(late[&Partition::one_block(4)] > 1.0 - 1e-10);
    let p2 = transition_probabilities(&m, 2, 1.0).unwrap();
    assert!((p2[&Partition::singletons(2)] - (-1.0f64).exp()).abs() < 1e-14);
}

#[test]
fn expm_agrees_with_uniformization() {
    for m in [
        MeasureSpec::uniform(),
        MeasureSpec::kingman(),
        MeasureSpec::beta(1.5).unwrap(),
    ] {
        for (n, t) in [(3, 1.0), (5, 0.3), (6, 2.0)] {
            let a = transition_probabilities(&m, n, t).unwrap();
            let b = transition_probabilities_uniformized(&m, n, t).unwrap();
            for (k, v) in &a {
                assert!((v - b[k]).abs() < 1e-10, "{} n={n} {k}: {v} vs {}", m.describe(), b[k]);
            }
            assert!((a.values().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn chain_matches_matrix_exponential_n4() {
    let m = MeasureSpec::beta(0.5).unwrap();
    let exact = transition_probabilities(&m, 4, 0.7).unwrap();
    let table = RateTable::new(&m, 4);
    let mut rng = split(27, 0, Lane::Chain);
    let mut counts: BTreeMap<Partition, u64> = BTreeMap::new();
    for _ in 0..50_000 {
        let tr = simulate_chain_with(&table, 4, 0.7, &[0.7], &mut rng).unwrap();
        *counts.entry(tr.snapshots[0].1.clone()).or_default() += 1;
    }
    let obs: Vec<u64> = exact.keys().map(|k| *counts.get(k).unwrap_or(&0)).collect();
    let exp: Vec<f64> = exact.values().copied().collect();
    let r = chi_square_test(&obs, &exp);
    assert!(r.p_value > 0.001, "{r:?}");
}

#[test]
fn restriction_consistency_n3_to_n2() {
    let m = MeasureSpec::beta(1.5).unwrap();
    let exact2 = transition_probabilities(&m, 2, 1.0).unwrap();
    let table = RateTable::new(&m, 3);
    let mut rng = split(28, 0, Lane::Chain);
    let mut counts: BTreeMap<Partition, u64> = BTreeMap::new();
    for _ in 0..50_000 {
        let tr = simulate_chain_with(&table, 3, 1.0, &[1.0], &mut rng).unwrap();
        *counts.entry(tr.snapshots[0].1.restrict(2).unwrap()).or_default() += 1;
    }
    let obs: Vec<u64> = exact2.keys().map(|k| *counts.get(k).unwrap_or(&0)).collect();
    let exp: Vec<f64> = exact2.values().copied().collect();
    assert!(chi_square_test(&obs, &exp).p_value > 0.001);
}

#[test]
fn jump_sizes_follow_rate_row() {
    let m = MeasureSpec::uniform();
    let n = 8;
    let table = RateTable::new(&m, n);
    let mut rng = split(29, 0, Lane::Chain);
    let mut counts = vec![0u64; n + 1];
    for _ in 0..40_000 {
        let tr = simulate_chain_with(&table, n, f64::INFINITY, &[], &mut rng).unwrap();
        counts[tr.events[0].merged.len()] += 1;
    }
    let row = table.row(n).unwrap();
    let exp: Vec<f64> = (2..=n).map(|k| row.size_probability(k)).collect();
    assert!(chi_square_test(&counts[2..], &exp).p_value > 0.001);
    let l33 = merger_rate(&m, 3, 3).unwrap();
    let l32 = merger_rate(&m, 3, 2).unwrap();
    assert!((table.row(3).unwrap().size_probability(3) - l33 / (3.0 * l32 + l33)).abs() < 1e-14);
    assert!((table.row(3).unwrap().size_probability(3) - 0.25).abs() < 1e-12);
}
