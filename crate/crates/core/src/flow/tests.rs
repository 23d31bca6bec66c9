use super::*;
use crate::measures::{nu_first_moment, Atom};
use crate::rng::{split, Lane};
use crate::stats::{ks_test, MeanSe};
use statrs::distribution::{DiscreteCDF, Poisson as PoissonLaw};

fn grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|j| 0.5f64.powi(j)).collect()
}

#[test]
fn point_count_mean_uniform() {
    let m = MeasureSpec::uniform();
    let mut rng = split(31, 0, Lane::Points);
    let counts: Vec<f64> = (0..100_000)
        .map(|_| sample_points(&m, 1.0, 0.5, &mut rng).unwrap().len() as f64)
        .collect();
    let est = MeanSe::of(&counts);
    assert!(est.within(1.0, 3.0), "{est:?}");
}

#[test]
fn single_atom_points() {
    let m = MeasureSpec::atoms(vec![Atom {
        location: 0.5,
        mass: 1.0,
    }])
    .unwrap();
    let mut rng = split(32, 0, Lane::Points);
    let mut counts = Vec::new();
    for _ in 0..20_000 {
        let p = sample_points(&m, 2.0, 0.25, &mut rng).unwrap();
        assert!(p.points().iter().all(|pt| pt.x == 0.5));
        assert!(p.points().windows(2).all(|w| w[0].time < w[1].time));
        assert!(p.points().iter().all(|pt| pt.time > 0.0 && pt.time <= 2.0));
        counts.push(p.len() as f64);
    }
    assert!(MeanSe::of(&counts).within(8.0, 3.0));
}

#[test]
fn support_excluded_gives_empty() {
    let m = MeasureSpec::atoms(vec![Atom {
        location: 0.3,
        mass: 1.0,
    }])
    .unwrap();
    let mut rng = split(33, 0, Lane::Points);
    for _ in 0..100 {
        assert!(sample_points(&m, 5.0, 0.5, &mut rng).unwrap().is_empty());
        let part = flow_partition(&m, 5.0, 0.5, 10, FlowStreams::new(33, 1)).unwrap();
        assert_eq!(part.num_blocks(), 10);
    }
    assert!(sample_points(&m, 1.0, 0.0, &mut rng).is_err());
    assert!(sample_points(&m, 0.0, 0.5, &mut rng).is_err());
}

#[test]
fn refinement_superposition() {
    let m = MeasureSpec::beta(0.5).unwrap();
    let mut rng = split(34, 0, Lane::Points);
    let mean = nu_tail_mass(&m, 0.05).unwrap();
    let law = PoissonLaw::new(mean).unwrap();
    let mut counts = Vec::new();
    for _ in 0..10_000 {
        let p = sample_points(&m, 1.0, 0.2, &mut rng).unwrap();
        let q = refine_points(&p, &m, 0.05, &mut rng).unwrap();
        assert!(q.len() >= p.len());
        assert!(p.points().iter().all(|pt| q.points().contains(pt)));
        assert!(q.points().windows(2).all(|w| w[0].time < w[1].time));
        counts.push(q.len() as f64);
    }
    // discrete law: compare the mid-point CDF to avoid the KS tie bias
    let r = ks_test(&counts, |k| {
        0.5 * (law.cdf(k as u64) + if k >= 1.0 { law.cdf(k as u64 - 1) } else { 0.0 })
    });
    let est = MeanSe::of(&counts);
    assert!(est.within(mean, 3.0), "{est:?} vs {mean}");
    assert!(r.statistic < 0.1);
    let p = sample_points(&m, 1.0, 0.2, &mut rng).unwrap();
    assert!(refine_points(&p, &m, 0.3, &mut rng).is_err());
}

#[test]
fn empty_layer_refinement_is_identity() {
    let m = MeasureSpec::atoms(vec![Atom {
        location: 0.6,
        mass: 0.5,
    }])
    .unwrap();
    let mut rng = split(35, 0, Lane::Points);
    let p = sample_points(&m, 1.0, 0.5, &mut rng).unwrap();
    let q = refine_points(&p, &m, 0.1, &mut rng).unwrap();
    assert_eq!(p.points(), q.points());
}

#[test]
fn empty_point_set_gives_identity() {
    let p = PoissonPointSet::empty(1.0, 0.5);
    let b = build_flow_bridge(&p, &mut FlowStreams::new(1, 0).locations(), true).unwrap();
    assert_eq!(b.bridge, FiniteBridge::identity());
    assert_eq!(b.events.unwrap().len(), 0);
}

#[test]
fn dust_is_product_and_holes_are_case_a() {
    let m = MeasureSpec::uniform();
    let req = FlowRequest {
        t: 1.0,
        eps_grid: grid(2, 8),
        thresholds: vec![0.0, 0.01],
        paint_n: None,
        track: true,
    };
    for rep in 0..200 {
        let r = simulate_flow(&m, &req, FlowStreams::new(36, rep)).unwrap();
        for l in &r.levels {
            assert!((l.dust - l.dust_product).abs() <= 1e-12);
            assert_eq!(l.holes, l.case_a);
            assert_eq!(l.census[0].1, l.holes);
        }
        assert!(r.levels.windows(2).all(|w| w[1].dust <= w[0].dust));
        assert!(r.levels.windows(2).all(|w| w[1].points >= w[0].points));
        let events = r.events.as_ref().unwrap();
        assert_eq!(events.len(), r.levels.last().unwrap().points);
        for e in events {
            assert_eq!(e.remap < e.dust_before, e.case == CompositionCase::A);
        }
        let lb = lower_bound_check(events, &r.bridge, &[2, 4, 8, 16, 64, 256]);
        assert!(lb.iter().all(LowerBound::holds), "{lb:?}");
    }
}

#[test]
fn dust_mean_matches_campbell() {
    let m = MeasureSpec::beta(0.5).unwrap();
    let eps_grid = grid(2, 8);
    let req = FlowRequest {
        t: 1.0,
        eps_grid: eps_grid.clone(),
        thresholds: vec![],
        paint_n: None,
        track: false,
    };
    let reps = 10_000;
    let mut dust = vec![Vec::with_capacity(reps); eps_grid.len()];
    for rep in 0..reps as u64 {
        let r = simulate_flow(&m, &req, FlowStreams::new(37, rep)).unwrap();
        for (i, l) in r.levels.iter().enumerate() {
            dust[i].push(l.dust);
        }
    }
    for (i, &eps) in eps_grid.iter().enumerate() {
        let oracle = (-nu_first_moment(&m, eps).unwrap()).exp();
        let est = MeanSe::of(&dust[i]);
        assert!(est.within(oracle, 3.0), "eps {eps}: {est:?} vs {oracle}");
    }
}

#[test]
fn hole_census_edges() {
    let b = FiniteBridge::new(
        0.5,
        vec![
            crate::bridge::Jump {
                location: 0.1,
                size: 0.3,
            },
            crate::bridge::Jump {
                location: 0.6,
                size: 0.2,
            },
        ],
    )
    .unwrap();
    assert_eq!(
        hole_census(&b, &[0.0, 0.25, 0.3, 1.5]),
        vec![(0.0, 2), (0.25, 1), (0.3, 1), (1.5, 0)]
    );
}

#[test]
fn flow_partition_reproducible_and_shared_uniforms() {
    let m = MeasureSpec::beta(0.5).unwrap();
    let a = flow_partition(&m, 1.0, 0.01, 200, FlowStreams::new(38, 4)).unwrap();
    let b = flow_partition(&m, 1.0, 0.01, 200, FlowStreams::new(38, 4)).unwrap();
    assert_eq!(a, b);
    let req = FlowRequest {
        t: 1.0,
        eps_grid: vec![0.01],
        thresholds: vec![],
        paint_n: Some(200),
        track: false,
    };
    let r = simulate_flow(&m, &req, FlowStreams::new(38, 4)).unwrap();
    assert_eq!(r.levels[0].partition.as_ref().unwrap(), &a);
}

#[test]
fn two_sample_collision_tracks_chain() {
    // P[1 ~ 2 at time t] for Λ uniform = 1 − e^{−t}
    let m = MeasureSpec::uniform();
    let t = 0.3;
    let reps = 20_000;
    let hits = (0..reps as u64)
        .filter(|&rep| {
            flow_partition(&m, t, 1e-3, 2, FlowStreams::new(39, rep))
                .unwrap()
                .num_blocks()
                == 1
        })
        .count();
    // truncation removes events with x ≤ eps: exact rate is ∫_eps^1 x² ν(dx)
    let rate = 1.0 - 1e-3;
    let est = MeanSe::proportion(hits, reps);
    assert!(est.within(1.0 - (-t * rate).exp(), 3.0), "{est:?}");
}

#[test]
fn grid_validation() {
    let m = MeasureSpec::uniform();
    let mut req = FlowRequest {
        t: 1.0,
        eps_grid: vec![],
        thresholds: vec![],
        paint_n: None,
        track: false,
    };
    assert!(simulate_flow(&m, &req, FlowStreams::new(1, 0)).is_err());
    req.eps_grid = vec![0.1, 0.2];
    assert!(simulate_flow(&m, &req, FlowStreams::new(1, 0)).is_err());
}
