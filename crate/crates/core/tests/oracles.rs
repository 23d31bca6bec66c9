use lambda_coalescent::chain::{transition_probabilities, transition_probabilities_uniformized};
use lambda_coalescent::measures::{classify, merger_rate, moment, nu_tail_mass, Regime};
use lambda_coalescent::partition::Partition;
use lambda_coalescent::{Atom, MeasureSpec};
use statrs::function::beta::ln_beta;

fn beta_rate(alpha: f64, i: u64, k: u64) -> f64 {
    (ln_beta(k as f64 - alpha, (i - k) as f64 + alpha) - ln_beta(2.0 - alpha, alpha)).exp()
}

#[test]
fn kingman_rates() {
    let m = MeasureSpec::kingman();
    for i in 2..12 {
        assert_eq!(merger_rate(&m, i, 2).unwrap(), 1.0);
        for k in 3..=i {
            assert_eq!(merger_rate(&m, i, k).unwrap(), 0.0);
        }
    }
}

#[test]
fn beta_rates_match_closed_form() {
    for alpha in [0.25, 0.5, 1.0, 1.5, 1.9] {
        let m = MeasureSpec::beta(alpha).unwrap();
        for i in 2..=30 {
            for k in 2..=i {
                let (got, want) = (merger_rate(&m, i, k).unwrap(), beta_rate(alpha, i, k));
                assert!(
                    (got - want).abs() <= 1e-10 * want.max(1.0),
                    "alpha {alpha} i {i} k {k}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn uniform_small_rates() {
    let m = MeasureSpec::uniform();
    assert!((merger_rate(&m, 3, 2).unwrap() - 0.5).abs() < 1e-14);
    assert!((merger_rate(&m, 3, 3).unwrap() - 0.5).abs() < 1e-14);
    assert!((merger_rate(&m, 4, 2).unwrap() - 1.0 / 3.0).abs() < 1e-14);
}

#[test]
fn moments_of_beta_half() {
    let m = MeasureSpec::beta(0.5).unwrap();
    assert!((moment(&m, -1, 1e-10).unwrap().value - 2.0).abs() < 1e-8);
    assert!(moment(&m, -2, 1e-10).unwrap().value.is_infinite());
}

#[test]
fn regimes_of_atoms_and_presets() {
    let atom = MeasureSpec::atoms(vec![Atom {
        location: 0.5,
        mass: 1.0,
    }])
    .unwrap();
    assert_eq!(classify(&atom).unwrap().label, Regime::A);
    assert_eq!(classify(&MeasureSpec::uniform()).unwrap().label, Regime::C);
    let b = classify(&MeasureSpec::beta(0.5).unwrap()).unwrap();
    assert_eq!(b.label, Regime::B);
    assert!(b.mu_star_implied);
}

#[test]
fn x_squared_tail_mass() {
    // Λ = x² dx gives ν(dx) = dx on (0, 1].
    let m = MeasureSpec::x_squared();
    for eps in [0.5, 0.1, 0.01] {
        assert!((nu_tail_mass(&m, eps).unwrap() - (1.0 - eps)).abs() < 1e-10);
    }
}

#[test]
fn kingman_three_blocks_closed_form() {
    let p = transition_probabilities(&MeasureSpec::kingman(), 3, 0.7).unwrap();
    let all = (-3.0f64 * 0.7).exp();
    assert!((p[&Partition::singletons(3)] - all).abs() < 1e-12);
    let pair = Partition::new(3, vec![vec![1, 2], vec![3]]).unwrap();
    let want = (1.0 / 3.0) * 1.5 * ((-0.7f64).exp() - all);
    assert!((p[&pair] - want).abs() < 1e-12, "{} vs {want}", p[&pair]);
    let total: f64 = p.values().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn expm_matches_uniformization() {
    for m in [MeasureSpec::uniform(), MeasureSpec::beta(1.5).unwrap()] {
        for n in 2..=5 {
            let a = transition_probabilities(&m, n, 0.8).unwrap();
            let b = transition_probabilities_uniformized(&m, n, 0.8).unwrap();
            for (k, v) in &a {
                assert!((v - b[k]).abs() < 1e-10);
            }
        }
    }
}
