use super::*;
use crate::rng::{split, Lane};
use crate::stats::{chi_square_test, chi_square_two_sample, ks_test};
use proptest::prelude::*;
use rand::Rng;
use std::collections::BTreeMap;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn random_bridge<R: Rng>(rng: &mut R, steps: usize) -> FiniteBridge {
    let mut b = FiniteBridge::identity();
    for _ in 0..steps {
        let x = rng.random_range(0.01..0.6);
        let u = rng.random::<f64>();
        b = compose(&b, &FiniteBridge::simple(x, u).unwrap());
    }
    b
}

#[test]
fn simple_bridge_evaluation() {
    let b = FiniteBridge::simple(0.4, 0.5).unwrap();
    assert!(close(b.evaluate(0.5), 0.7, 1e-15));
    assert!(close(b.evaluate_left(0.5), 0.3, 1e-15));
    assert_eq!(b.evaluate(1.0), 1.0);
    assert!(close(b.dust(), 0.6, 1e-15));
    let b0 = FiniteBridge::simple(0.4, 0.0).unwrap();
    assert!(close(b0.evaluate(0.0), 0.4, 1e-15));
    for x in [0.0, 1.0, -0.1, f64::NAN] {
        assert!(matches!(FiniteBridge::simple(x, 0.5), Err(BridgeError::BadJumpSize(_))));
    }
    assert!(FiniteBridge::simple(0.5, 1.0).is_err());
}

#[test]
fn inverse_examples() {
    let id = FiniteBridge::identity();
    for v in [0.0, 0.25, 0.9] {
        assert_eq!(id.inverse(v), v);
    }
    let b = FiniteBridge::simple(0.4, 0.5).unwrap();
    for v in [0.3, 0.5, 0.69] {
        assert_eq!(b.inverse(v), 0.5);
    }
    assert_eq!(b.inverse(1.0), 1.0);
    assert!(close(b.inverse(0.15), 0.25, 1e-15));
    assert!(close(b.inverse(0.85), 0.75, 1e-15));
}

#[test]
fn holes_examples() {
    let b = FiniteBridge::simple(0.4, 0.5).unwrap();
    let h = b.holes();
    assert_eq!(h.len(), 1);
    assert!(close(h[0].lo, 0.3, 1e-15) && close(h[0].hi, 0.7, 1e-15));
    assert_eq!(h[0].boundary(), h[0].hi);
    assert!(FiniteBridge::identity().holes().is_empty());
    assert_eq!(FiniteBridge::identity().dust(), 1.0);
}

#[test]
fn compose_identity_laws() {
    let mut rng = split(5, 0, Lane::Aux);
    for _ in 0..50 {
        let b = random_bridge(&mut rng, 5);
        assert_eq!(compose(&FiniteBridge::identity(), &b), b);
        assert_eq!(compose(&b, &FiniteBridge::identity()), b);
    }
}

#[test]
fn compose_matches_pointwise_definition() {
    let mut rng = split(6, 0, Lane::Aux);
    for _ in 0..200 {
        let f = random_bridge(&mut rng, 4);
        let g = random_bridge(&mut rng, 4);
        let h = compose(&f, &g);
        for _ in 0..50 {
            let y: f64 = rng.random();
            assert!(close(h.evaluate(y), g.evaluate(f.evaluate(y)), 1e-12));
        }
        assert_eq!(h.slope(), f.slope() * g.slope());
    }
}

#[test]
fn dust_multiplicativity() {
    let s = FiniteBridge::simple(0.3, 0.2).unwrap();
    let b = compose(&s, &FiniteBridge::simple(0.25, 0.8).unwrap());
    assert_eq!(b.dust(), s.dust() * (1.0 - 0.25));
    let xs = [0.1, 0.5, 0.33, 0.72, 0.05];
    let mut b = FiniteBridge::identity();
    let mut prod = 1.0;
    let mut rng = split(7, 0, Lane::Aux);
    for &x in &xs {
        b = compose(&b, &FiniteBridge::simple(x, rng.random()).unwrap());
        prod *= 1.0 - x;
    }
    assert_eq!(b.dust(), prod);
}

#[test]
fn three_step_hole_pattern() {
    // second location lands in dust, third inside the first hole
    let b1 = FiniteBridge::simple(0.3, 0.6).unwrap();
    let t2 = compose_tracked(&b1, 0.2, 0.1).unwrap();
    assert_eq!(t2.case, CompositionCase::A);
    let h = t2.result.holes()[1];
    let t3 = compose_tracked(&t2.result, 0.25, 0.5 * (h.lo + h.hi)).unwrap();
    assert!(matches!(t3.case, CompositionCase::B { .. }));
    assert_eq!(t2.result.holes().len(), 2);
    assert_eq!(t3.result.holes().len(), 2);
}

#[test]
fn tracked_case_sizes() {
    let mut rng = split(8, 0, Lane::Aux);
    let mut seen_a = 0;
    let mut seen_b = 0;
    for _ in 0..2000 {
        let steps = rng.random_range(0..6);
        let first = random_bridge(&mut rng, steps);
        let x = rng.random_range(0.01..0.9);
        let u: f64 = rng.random();
        let t = compose_tracked(&first, x, u).unwrap();
        let old = first.holes();
        let new = t.result.holes();
        assert_eq!(t.child_map.len(), old.len());
        let mut seen = std::collections::HashSet::new();
        assert!(t.child_map.iter().all(|&c| c < new.len() && seen.insert(c)));
        match t.case {
            CompositionCase::A => {
                seen_a += 1;
                assert_eq!(new.len(), old.len() + 1);
                let (_, nh) = t.new_hole.unwrap();
                assert!(close(nh.lo, (1.0 - x) * u, 1e-12));
                assert!(close(nh.hi, (1.0 - x) * u + x, 1e-12));
                assert_eq!(nh.size, x);
                for (i, h) in old.iter().enumerate() {
                    assert_eq!(new[t.child_map[i]].size, (1.0 - x) * h.size);
                }
            }
            CompositionCase::B { hole } => {
                seen_b += 1;
                assert_eq!(new.len(), old.len());
                assert!(t.new_hole.is_none());
                for (i, h) in old.iter().enumerate() {
                    let child = new[t.child_map[i]].size;
                    if i == hole {
                        assert_eq!(child, (1.0 - x) * h.size + x);
                    } else {
                        assert_eq!(child, (1.0 - x) * h.size);
                    }
                }
            }
        }
    }
    assert!(seen_a > 100 && seen_b > 100);
}

#[test]
fn boundary_collision_rejected() {
    let b = FiniteBridge::simple(0.4, 0.5).unwrap();
    let hi = b.holes()[0].hi;
    assert!(matches!(
        compose_tracked(&b, 0.2, hi),
        Err(BridgeError::BoundaryCollision { hole: 0, .. })
    ));
    let lo = b.holes()[0].lo;
    assert!(matches!(
        compose_tracked(&b, 0.2, lo).unwrap().case,
        CompositionCase::B { hole: 0 }
    ));
}

#[test]
fn conservation_over_long_chain() {
    let mut rng = split(9, 0, Lane::Aux);
    let mut b = FiniteBridge::identity();
    let mut prod = 1.0;
    for _ in 0..10_000 {
        let x = rng.random_range(1e-4..1e-3);
        let u: f64 = rng.random();
        b = match compose_tracked(&b, x, u) {
            Ok(t) => t.result,
            Err(_) => continue,
        };
        prod *= 1.0 - x;
    }
    assert_eq!(b.dust(), prod);
    let sizes = compensated_sum(b.holes().iter().map(|h| h.size));
    assert!(close(sizes + b.dust(), 1.0, 1e-12), "{}", sizes + b.dust());
    assert!(b.holes().windows(2).all(|w| w[0].hi <= w[1].lo + 1e-12));
}

#[test]
fn lower_lipschitz_constant_is_slope() {
    let mut rng = split(10, 0, Lane::Aux);
    for _ in 0..20 {
        let b = random_bridge(&mut rng, 6);
        let mut min_ratio = f64::INFINITY;
        for _ in 0..5000 {
            let (p, q): (f64, f64) = (rng.random(), rng.random());
            let (lo, hi) = if p < q { (p, q) } else { (q, p) };
            if hi - lo > 1e-9 {
                min_ratio = min_ratio.min((b.evaluate(hi) - b.evaluate(lo)) / (hi - lo));
            }
        }
        assert!(min_ratio >= b.slope() - 1e-9);
        // equality attained on a jump-free stretch
        let knots: Vec<f64> = std::iter::once(0.0)
            .chain(b.jumps().iter().map(|j| j.location))
            .chain(std::iter::once(1.0))
            .collect();
        let w = knots
            .windows(2)
            .max_by(|a, c| (a[1] - a[0]).total_cmp(&(c[1] - c[0])))
            .unwrap();
        let (lo, hi) = (w[0], w[0] + 0.5 * (w[1] - w[0]));
        assert!(close((b.evaluate(hi) - b.evaluate(lo)) / (hi - lo), b.slope(), 1e-9));
    }
}

#[test]
fn monotone_and_inverse_laws() {
    let mut rng = split(11, 0, Lane::Aux);
    for _ in 0..100 {
        let b = random_bridge(&mut rng, 5);
        let mut ys: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        ys.sort_by(f64::total_cmp);
        assert!(ys.windows(2).all(|w| b.evaluate(w[0]) <= b.evaluate(w[1])));
        for &y in &ys {
            assert!(b.inverse(b.evaluate(y)) >= y - 1e-12);
            let v: f64 = rng.random();
            if b.hole_index(v).is_none() {
                assert!(b.evaluate(b.inverse(v)) >= v - 1e-12);
            }
        }
    }
}

#[test]
fn dust_remap_examples() {
    let id = FiniteBridge::identity();
    for v in [0.0, 0.3, 0.99] {
        assert_eq!(id.dust_remap(v), v);
    }
    let b = FiniteBridge::simple(0.4, 0.5).unwrap();
    assert!(close(b.dust_remap(0.2), 0.2, 1e-15));
    // dust [0,0.3) ∪ [0.7,1] stacks onto [0,0.6): 0.8 ↦ 0.3 + 0.1
    assert!(close(b.dust_remap(0.8), 0.4, 1e-15));
    assert!(close(b.dust_remap(0.5), 0.8, 1e-15));
    assert_eq!(b.dust_remap(1.0), 1.0);
}

#[test]
fn dust_remap_iff_property() {
    let mut rng = split(12, 0, Lane::Aux);
    for _ in 0..10_000 {
        let steps = rng.random_range(0..5);
        let b = random_bridge(&mut rng, steps);
        let v: f64 = rng.random();
        assert_eq!(b.dust_remap(v) < b.dust(), b.hole_index(v).is_none());
    }
}

#[test]
fn dust_remap_preserves_lebesgue() {
    let mut rng = split(13, 0, Lane::Aux);
    let b = random_bridge(&mut rng, 6);
    let us: Vec<f64> = (0..100_000).map(|_| b.dust_remap(rng.random())).collect();
    let r = ks_test(&us, |x| x.clamp(0.0, 1.0));
    assert!(r.p_value > 0.001, "{r:?}");
}

#[test]
fn paintbox_identity_all_singletons() {
    let mut rng = split(14, 0, Lane::Aux);
    let p = paintbox(&FiniteBridge::identity(), 10, &mut rng);
    assert_eq!(p.num_blocks(), 10);
}

#[test]
fn paintbox_membership_is_multinomial() {
    let b = FiniteBridge::new(
        0.5,
        vec![
            Jump {
                location: 0.2,
                size: 0.3,
            },
            Jump {
                location: 0.7,
                size: 0.2,
            },
        ],
    )
    .unwrap();
    let mut rng = split(15, 0, Lane::Aux);
    let mut counts = [0u64; 3];
    for _ in 0..100_000 {
        let v: f64 = rng.random();
        match b.hole_index(v) {
            Some(h) => counts[h] += 1,
            None => counts[2] += 1,
        }
    }
    let r = chi_square_test(&counts, &[0.3, 0.2, 0.5]);
    assert!(r.p_value > 0.001, "{r:?}");
}

#[test]
fn paintbox_pair_collision_probability() {
    let eps = 0.2;
    let b = FiniteBridge::simple(1.0 - eps, 0.4).unwrap();
    let mut rng = split(16, 0, Lane::Aux);
    let n = 100_000;
    let hits = (0..n).filter(|_| paintbox(&b, 2, &mut rng).num_blocks() == 1).count();
    let est = crate::stats::MeanSe::proportion(hits, n);
    assert!(est.within((1.0 - eps) * (1.0 - eps), 3.5), "{est:?}");
}

#[test]
fn paintbox_exchangeable() {
    let mut brng = split(17, 0, Lane::Aux);
    let b = random_bridge(&mut brng, 3);
    let n = 5;
    let mut rng = split(17, 1, Lane::Paintbox);
    let mut direct: BTreeMap<Partition, u64> = BTreeMap::new();
    let mut permuted: BTreeMap<Partition, u64> = BTreeMap::new();
    for _ in 0..100_000 {
        let p = paintbox(&b, n, &mut rng);
        *direct.entry(p).or_default() += 1;
        let q = paintbox(&b, n, &mut rng);
        let mut perm: Vec<u32> = (1..=n as u32).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        *permuted.entry(q.permute(&perm).unwrap()).or_default() += 1;
    }
    let keys: Vec<&Partition> = direct
        .keys()
        .chain(permuted.keys())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let a: Vec<u64> = keys.iter().map(|k| *direct.get(*k).unwrap_or(&0)).collect();
    let c: Vec<u64> = keys.iter().map(|k| *permuted.get(*k).unwrap_or(&0)).collect();
    let r = chi_square_two_sample(&a, &c);
    assert!(r.p_value > 0.001, "{r:?}");
}

#[test]
fn svg_rendering() {
    let id = render_svg(&FiniteBridge::identity());
    assert_eq!(id.matches("class=\"hole\"").count(), 0);
    assert_eq!(id.matches("class=\"graph\"").count(), 1);
    let b = FiniteBridge::simple(0.4, 0.5).unwrap();
    let s = render_svg(&b);
    assert_eq!(s.matches("class=\"hole\"").count(), 1);
    assert!(s.contains("height=\"160.000000\""));
    assert_eq!(s, render_svg(&b));
}

#[test]
fn text_round_trip() {
    let mut rng = split(18, 0, Lane::Aux);
    for _ in 0..100 {
        let b = random_bridge(&mut rng, 4);
        let back: FiniteBridge = b.to_string().parse().unwrap();
        assert_eq!(back, b);
    }
    assert!("0.5;0.1:0.4".parse::<FiniteBridge>().is_err());
    assert!("nonsense".parse::<FiniteBridge>().is_err());
    assert_eq!("1;".parse::<FiniteBridge>().unwrap(), FiniteBridge::identity());
}

proptest! {
    #[test]
    fn hole_sizes_plus_dust_is_one(steps in prop::collection::vec((0.001f64..0.999, 0.0f64..1.0), 0..30)) {
        let mut b = FiniteBridge::identity();
        for (x, u) in steps {
            if let Ok(t) = compose_tracked(&b, x, u) {
                let diff = t.result.holes().len() as i64 - b.holes().len() as i64;
                prop_assert_eq!(diff == 1, t.case == CompositionCase::A);
                prop_assert!(diff == 0 || diff == 1);
                b = t.result;
            }
        }
        prop_assert!((b.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(b.holes().iter().all(|h| h.size > 0.0 && h.hi >= h.lo));
    }
}
