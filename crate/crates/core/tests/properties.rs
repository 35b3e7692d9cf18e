//! Invariants checked on random inputs across the gallery.

use std::f64::consts::PI;

use hypercert::constants::{derive_constants, verify_expansion, Probe};
use hypercert::cover::{birkhoff_bound_check, build_cover, schedule, CoverCertificate, CoverConfig, CoverOutcome};
use hypercert::enclosure::enclose_orbit_average;
use hypercert::falsify::{falsify_total_probability, orbit_average, find_periodic_orbits};
use hypercert::interval::{interval_eval, ElementaryOp, Interval};
use hypercert::matrix::{vec_norm, Mat};
use hypercert::measure::{integrate, invariance_defect, lyapunov_exponent, EmpiricalMeasure};
use hypercert::observable::{birkhoff_average, observable_lambda, Observable, Which};
use hypercert::space::{PhaseBox, PhaseSpace, Point};
use hypercert::splitting::{certify_hyperbolic, HyperbolicOutcome, Line, Splitting};
use hypercert::system::{MapSystem, GALLERY};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sys(spec: &str) -> MapSystem {
    MapSystem::parse(spec).unwrap()
}

fn gallery() -> Vec<MapSystem> {
    GALLERY.iter().map(|g| sys(g.id)).collect()
}

fn certified(spec: &str, rate: f64, n_max: usize, depth: usize) -> CoverCertificate {
    match build_cover(&sys(spec), &Observable::Lambda, &CoverConfig::new(rate, n_max, depth)).unwrap() {
        CoverOutcome::Certified(c) => *c,
        CoverOutcome::Inconclusive(r) => panic!("{spec} inconclusive: {} witnesses", r.witnesses.len()),
    }
}

/// The λ certificates the gallery admits.
fn circle_certificates() -> Vec<CoverCertificate> {
    vec![
        certified("doubling", 0.6, 8, 12),
        certified("perturbed-doubling a=0.05", 0.4, 8, 14),
        certified("perturbed-doubling a=0.01", 0.6, 8, 14),
    ]
}

fn cat_hyperbolic() -> hypercert::splitting::HyperbolicCertificate {
    let cat = sys("cat");
    match certify_hyperbolic(&cat, &Splitting::exact(&cat).unwrap(), 0.9, 0.9, 4, 6).unwrap() {
        HyperbolicOutcome::Certified(h) => *h,
        HyperbolicOutcome::Inconclusive { side, .. } => panic!("cat inconclusive on {side:?}"),
    }
}

fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    let n = a.dim();
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (a.get(i, j) - b.get(i, j)).abs())
        .fold(0.0, f64::max)
}

/// A box around `x` of half-width `h` on each coordinate axis.
fn box_around(x: &Point, h: f64) -> PhaseBox {
    match *x {
        Point::Circle(v) => PhaseBox::arc(v - h, v + h).normalized(),
        Point::Torus([a, b]) => PhaseBox::rect((a - h, a + h), (b - h, b + h)).normalized(),
        Point::Atom(i) => PhaseBox::Atom(i),
    }
}

fn contains_with_slack(outer: &Interval, inner: &Interval) -> bool {
    let slack = |v: f64| 4.0 * f64::EPSILON * v.abs().max(1.0);
    outer.lo() - slack(outer.lo()) <= inner.lo() && inner.hi() <= outer.hi() + slack(outer.hi())
}

// Dynamics.

#[test]
fn cocycle_property() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for s in gallery() {
        for _ in 0..40 {
            let x = s.space().random_point(&mut rng);
            let m = rng.random_range(0..=20);
            let n = rng.random_range(0..=20);
            let whole = s.tangent_map(&x, m + n);
            let split = s.tangent_map(&s.evaluate(&x, n), m).mul(&s.tangent_map(&x, n));
            let scale = (0..whole.dim())
                .flat_map(|i| (0..whole.dim()).map(move |j| (i, j)))
                .map(|(i, j)| whole.get(i, j).abs())
                .fold(1.0, f64::max);
            assert!(
                max_abs_diff(&whole, &split) <= 1e-10 * scale,
                "{s} at {x} m={m} n={n}"
            );
        }
    }
}

#[test]
fn degree_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for s in gallery().into_iter().filter(|s| s.space() == PhaseSpace::Circle) {
        let d = s.degree().unwrap() as f64;
        for _ in 0..1000 {
            let x: f64 = rng.random();
            let gap = s.circle_lift(x + 1.0) - s.circle_lift(x);
            assert!((gap - d).abs() <= 1e-12, "{s} at {x}: {gap}");
        }
    }
}

#[test]
fn lambda_chain_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for s in gallery() {
        for _ in 0..30 {
            let x = s.space().random_point(&mut rng);
            let n = rng.random_range(1..=30);
            let lhs = s.tangent_map(&x, n).inv_op_norm().ln();
            let rhs = birkhoff_average(&s, &Observable::Lambda, &x, n).unwrap() * n as f64;
            assert!(lhs <= rhs + 1e-9 * rhs.abs().max(1.0), "{s} at {x} n={n}: {lhs} > {rhs}");
        }
    }
}

#[test]
fn period2_exponent_independent_of_vector() {
    let p2 = sys("period2-cocycle");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let t: f64 = rng.random_range(0.0..2.0 * PI);
        let e = lyapunov_exponent(&p2, &Point::Atom(0), [t.cos(), t.sin()], 1000).unwrap();
        assert!((e - 0.5 * 1.5f64.ln()).abs() <= 1e-9, "angle {t}: {e}");
    }
}

// Enclosure.

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn elementary_containment(
        lo in -20.0f64..20.0, w in 0.0f64..5.0, t in 0.0f64..=1.0,
        lo2 in -20.0f64..20.0, w2 in 0.0f64..5.0, t2 in 0.0f64..=1.0,
    ) {
        let a = Interval::new(lo, lo + w);
        let b = Interval::new(lo2, lo2 + w2);
        let x = (lo + t * w).clamp(a.lo(), a.hi());
        let y = (lo2 + t2 * w2).clamp(b.lo(), b.hi());
        let cases: [(ElementaryOp, Vec<Interval>, f64); 8] = [
            (ElementaryOp::Add, vec![a, b], x + y),
            (ElementaryOp::Sub, vec![a, b], x - y),
            (ElementaryOp::Mul, vec![a, b], x * y),
            (ElementaryOp::Div, vec![a, b], x / y),
            (ElementaryOp::Log, vec![a.abs()], x.abs().ln()),
            (ElementaryOp::Exp, vec![a], x.exp()),
            (ElementaryOp::Sin, vec![a], x.sin()),
            (ElementaryOp::Cos, vec![a], x.cos()),
        ];
        for (op, args, exact) in cases {
            if let Ok(r) = interval_eval(op, &args) {
                prop_assert!(r.contains(exact) || !exact.is_finite(), "{:?}{:?} = {:?} misses {}", op, args, r, exact);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn observable_enclosure_contains_point_values(
        idx in 0usize..7, seed in any::<u64>(), h in 1e-6f64..0.05,
    ) {
        let s = sys(GALLERY[idx].id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = s.space().random_point(&mut rng);
        let b = box_around(&c, h);
        let enc = Observable::Lambda.enclose(&s, &b).unwrap();
        for _ in 0..8 {
            let y = b.random_point(&mut rng);
            let v = observable_lambda(&s, &y).unwrap();
            prop_assert!(enc.contains(v), "{} {:?}: {} outside {:?}", s, b, v, enc);
        }
    }

    #[test]
    fn enclosure_monotone_under_inclusion(
        idx in 0usize..7, seed in any::<u64>(), h in 1e-5f64..0.02, shrink in 0.05f64..1.0, n in 1usize..6,
    ) {
        let s = sys(GALLERY[idx].id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = s.space().random_point(&mut rng);
        let outer = box_around(&c, h);
        let inner = box_around(&c, h * shrink);
        prop_assume!(inner.is_subset_of(&outer));
        let (Ok(big), Ok(small)) = (
            enclose_orbit_average(&s, &outer, &Observable::Lambda, n),
            enclose_orbit_average(&s, &inner, &Observable::Lambda, n),
        ) else {
            return Ok(());
        };
        prop_assert!(contains_with_slack(&big, &small), "{} n={}: {:?} not within {:?}", s, n, small, big);
    }

}

#[test]
fn enclosure_width_halves() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut failures = Vec::new();
    for s in gallery() {
        for _ in 0..200 {
            let c = s.space().random_point(&mut rng);
            let h = 10f64.powf(rng.random_range(-7.0..-4.0));
            let n = rng.random_range(1..5);
            let (Ok(wide), Ok(narrow)) = (
                enclose_orbit_average(&s, &box_around(&c, h), &Observable::Lambda, n),
                enclose_orbit_average(&s, &box_around(&c, h / 2.0), &Observable::Lambda, n),
            ) else {
                continue;
            };
            if narrow.width() > wide.width() / 2.0 + 1e-12 {
                failures.push(format!("{s} at {c} h={h:e} n={n}: {:e} vs {:e}", narrow.width(), wide.width()));
            }
        }
    }
    assert!(failures.is_empty(), "{} cases, first: {}", failures.len(), failures[0]);
}

// Covering.

#[test]
fn cover_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for cert in circle_certificates() {
        for _ in 0..1000 {
            let x = cert.system.space().random_point(&mut rng);
            for m in 1..=50 {
                let (actual, bound) = birkhoff_bound_check(&cert.system, &Observable::Lambda, &cert, &x, m).unwrap();
                assert!(actual <= bound + 1e-9, "{} at {x} m={m}: {actual} > {bound}", cert.system);
            }
        }
    }
}

#[test]
fn schedule_increments_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for cert in circle_certificates() {
        let nbar = cert.nbar();
        for _ in 0..200 {
            let x = cert.system.space().random_point(&mut rng);
            let mut prev = schedule(&cert.system, &cert, &x, 0).unwrap();
            assert_eq!(prev, 0);
            for k in 1..=20 {
                let next = schedule(&cert.system, &cert, &x, k).unwrap();
                assert!((1..=nbar).contains(&(next - prev)), "{} at {x} k={k}", cert.system);
                prev = next;
            }
        }
    }
}

#[test]
fn entry_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for cert in circle_certificates() {
        for e in &cert.entries {
            for _ in 0..1000 {
                let y = e.region.random_point(&mut rng);
                let avg = birkhoff_average(&cert.system, &Observable::Lambda, &y, e.n).unwrap();
                assert!(avg < -cert.rate, "{} box {:?} at {y}: {avg}", cert.system, e.region);
            }
        }
    }
}

#[test]
fn cover_is_deterministic() {
    for (spec, rate) in [("perturbed-doubling a=0.05", 0.4), ("intermittent", 0.1)] {
        let cfg = CoverConfig::new(rate, 8, 10);
        let a = build_cover(&sys(spec), &Observable::Lambda, &cfg).unwrap();
        let b = build_cover(&sys(spec), &Observable::Lambda, &cfg).unwrap();
        match (a, b) {
            (CoverOutcome::Certified(a), CoverOutcome::Certified(b)) => {
                assert_eq!(
                    hypercert::document::to_json(&a).unwrap(),
                    hypercert::document::to_json(&b).unwrap()
                );
            }
            (CoverOutcome::Inconclusive(a), CoverOutcome::Inconclusive(b)) => {
                assert_eq!(
                    hypercert::document::report_json(&a),
                    hypercert::document::report_json(&b)
                );
            }
            _ => panic!("{spec}: outcomes differ"),
        }
    }
}

// Constants.

#[test]
fn certificates_verify() {
    for cert in circle_certificates() {
        let r = verify_expansion(&cert.system, &cert.constants, Probe::AllDirections, 1000, 60, 11).unwrap();
        assert!(r.min_ratio >= 1.0 - 1e-9, "{}: {}", cert.system, r.min_ratio);
    }
}

#[test]
fn sigma_monotone() {
    let grid_c = [0.05, 0.1, 0.4, 0.8, 1.2, 2.0];
    for nbar in 1..=12 {
        for w in grid_c.windows(2) {
            let lo = derive_constants(nbar, w[0], 0.3).unwrap().sigma;
            let hi = derive_constants(nbar, w[1], 0.3).unwrap().sigma;
            assert!(hi > lo, "σ not increasing in c at N̄={nbar}");
        }
    }
    for &c in &grid_c {
        for nbar in 1..12 {
            let a = derive_constants(nbar, c, 0.3).unwrap().sigma;
            let b = derive_constants(nbar + 1, c, 0.3).unwrap().sigma;
            assert!(b < a, "σ not decreasing in N̄ at c={c}");
        }
    }
}

#[test]
fn exponent_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for cert in circle_certificates() {
        let floor = cert.constants.sigma.ln() - 1e-3;
        for _ in 0..100 {
            let x = cert.system.space().random_point(&mut rng);
            let e = lyapunov_exponent(&cert.system, &x, [1.0, 0.0], 10_000).unwrap();
            assert!(e >= floor, "{} at {x}: {e} < {floor}", cert.system);
        }
    }
}

// Falsifier.

#[test]
fn witness_validity() {
    for s in gallery() {
        if let Some(w) = falsify_total_probability(&s, &Observable::Lambda, 6).unwrap() {
            assert!(w.residual <= 1e-10, "{s}: residual {}", w.residual);
            let orbit = find_periodic_orbits(&s, 6)
                .unwrap()
                .into_iter()
                .find(|o| o.points == w.points)
                .expect("witness is one of the enumerated orbits");
            let again = orbit_average(&s, &orbit, &Observable::Lambda).unwrap();
            assert!((again - w.average).abs() <= 1e-12, "{s}");
            let direct = birkhoff_average(&s, &Observable::Lambda, &w.points[0], w.period).unwrap();
            assert!((direct - w.average).abs() <= 1e-12, "{s}: {direct} vs {}", w.average);
        }
    }
}

#[test]
fn certificate_and_positive_witness_are_exclusive() {
    for s in gallery() {
        let mut observables = vec![Observable::Lambda];
        if let Ok(sp) = Splitting::for_system(&s, 30) {
            observables.push(Observable::directional(Which::Cu, sp));
            observables.push(Observable::directional(Which::Cs, sp));
        }
        for phi in observables {
            let witness = falsify_total_probability(&s, &phi, 4).unwrap();
            for rate in [0.05, 0.3] {
                let cover = build_cover(&s, &phi, &CoverConfig::new(rate, 4, 8)).unwrap();
                let positive = witness.as_ref().is_some_and(|w| w.average > 0.0);
                assert!(
                    !(cover.certificate().is_some() && positive),
                    "{s} {}: certified at rate {rate} yet witness {:?}",
                    phi.kind_name(),
                    witness
                );
            }
        }
    }
}

// Splitting.

#[test]
fn exact_splitting_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for s in gallery() {
        let Ok(sp) = Splitting::exact(&s) else { continue };
        for _ in 0..1000 {
            let x = s.space().random_point(&mut rng);
            for line in [Line::Unstable, Line::Stable] {
                let r = sp.invariance_residual(&s, &x, line).unwrap();
                assert!(r <= 1e-10, "{s} at {x} {line:?}: {r}");
            }
        }
    }
}

#[test]
fn contraction_of_f_is_expansion_of_inverse() {
    let cat = sys("cat");
    let inv = sys("cat-inverse");
    let cfg = CoverConfig::new(0.9, 4, 6);
    let cs = build_cover(&cat, &Observable::directional(Which::Cs, Splitting::exact(&cat).unwrap()), &cfg).unwrap();
    let cu = build_cover(&inv, &Observable::directional(Which::Cu, Splitting::exact(&inv).unwrap()), &cfg).unwrap();
    let (a, b) = (cs.certificate().unwrap().constants, cu.certificate().unwrap().constants);
    assert_eq!(a.nbar, b.nbar);
    for (x, y) in [(a.sigma, b.sigma), (a.big_c, b.big_c), (a.alpha, b.alpha), (a.c, b.c)] {
        assert!((x - y).abs() <= 1e-9, "{a:?} vs {b:?}");
    }
}

#[test]
fn hyperbolic_inequalities_hold() {
    let h = cat_hyperbolic();
    let cat = sys("cat");
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..1000 {
        let x = cat.space().random_point(&mut rng);
        let tu = h.splitting.angle(&cat, &x, Line::Unstable).unwrap();
        let d = |n| cat.tangent_map(&x, n);
        // Forward pushing is unstable along E^s, so the stable side multiplies
        // one-step stretches along the splitting instead.
        let mut gs = 0.0;
        let mut y = x;
        for n in 1..=40 {
            let gu = vec_norm(d(n).apply([tu.cos(), tu.sin()]), 2).ln();
            let ts = h.splitting.angle(&cat, &y, Line::Stable).unwrap();
            gs += vec_norm(cat.jacobian(&y).apply([ts.cos(), ts.sin()]), 2).ln();
            y = cat.map(&y);
            let rate = n as f64 * h.sigma.ln();
            assert!(gu >= h.big_c.ln() + rate - 1e-9, "unstable at {x} n={n}");
            assert!(gs <= -h.big_c.ln() - rate + 1e-9, "stable at {x} n={n}");
        }
    }
}

// Measures.

#[test]
fn telescoping_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for s in gallery() {
        for _ in 0..50 {
            let x = s.space().random_point(&mut rng);
            let n = rng.random_range(1..=200);
            let mu = EmpiricalMeasure::new(&s, &x, n).unwrap();
            let got = invariance_defect(&mu, &Observable::Lambda).unwrap();
            let first = observable_lambda(&s, &x).unwrap();
            let last = observable_lambda(&s, &s.evaluate(&x, n)).unwrap();
            let want = (last - first).abs() / n as f64;
            assert!((got - want).abs() <= f64::EPSILON * want.max(f64::MIN_POSITIVE), "{s}");
        }
    }
}

#[test]
fn integrate_matches_birkhoff_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for s in gallery() {
        let mut observables = vec![Observable::Lambda];
        if let Ok(sp) = Splitting::exact(&s) {
            observables.push(Observable::directional(Which::Cu, sp));
            observables.push(Observable::directional(Which::Cs, sp));
        }
        for phi in &observables {
            for _ in 0..20 {
                let x = s.space().random_point(&mut rng);
                let n = rng.random_range(1..=300);
                let mu = EmpiricalMeasure::new(&s, &x, n).unwrap();
                let a = integrate(&mu, phi).unwrap();
                let b = birkhoff_average(&s, phi, &x, n).unwrap();
                assert!((a - b).abs() <= f64::EPSILON * a.abs().max(b.abs()), "{s} {}", phi.kind_name());
            }
        }
    }
}
