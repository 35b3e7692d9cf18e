//! Falsification of the nonuniform-expansion hypothesis.
//!
//! Periodic orbits carry exact invariant measures. If some orbit has a
//! nonnegative average of the observable, the strict inequality fails on a
//! set of total probability and no cover certificate can exist.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::cover::{pool, CoverCertificate};
use crate::error::{Error, Result};
use crate::matrix::{IMat, Mat};
use crate::observable::{compensated_mean, CompensatedSum, Observable};
use crate::space::{reduce, PhaseBox, PhaseSpace, Point};
use crate::system::{Family, MapSystem};

/// Averages at or above `−DEFAULT_TOLERANCE` count as violations.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Largest accepted `|fᵖ(x) − x|` over a reported orbit.
pub const RESIDUAL_LIMIT: f64 = 1e-10;
/// Bound on `|det(Aᵖ − I)|` for the lattice enumeration on the torus.
const MAX_TORUS_POINTS: i128 = 4_000_000;
const NEWTON_STEPS: usize = 16;
const CONTINUATION_STEPS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicOrbit {
    /// `x, f(x), …, f^{p−1}(x)`, starting from the smallest point.
    pub points: Vec<Point>,
    pub period: usize,
    /// `max |fᵖ(y) − y|` over the orbit.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicOrbitWitness {
    pub points: Vec<Point>,
    pub period: usize,
    pub average: f64,
    pub residual: f64,
}

fn point_key(p: &Point) -> Vec<f64> {
    match *p {
        Point::Atom(i) => vec![i as f64],
        _ => p.coords(),
    }
}

fn cmp_points(a: &Point, b: &Point) -> std::cmp::Ordering {
    point_key(a)
        .partial_cmp(&point_key(b))
        .expect("finite coordinates")
}

fn orbit_residual(system: &MapSystem, points: &[Point], p: usize) -> f64 {
    points
        .iter()
        .map(|x| system.evaluate(x, p).dist(x))
        .fold(0.0, f64::max)
}

/// Builds the orbit through `x`, rotated to start at its smallest point.
fn make_orbit(system: &MapSystem, x: Point, p: usize) -> PeriodicOrbit {
    let mut points = Vec::with_capacity(p);
    let mut y = x;
    for _ in 0..p {
        points.push(y);
        y = system.map(&y);
    }
    let start = (0..p)
        .min_by(|&i, &j| cmp_points(&points[i], &points[j]))
        .expect("p >= 1");
    points.rotate_left(start);
    let residual = orbit_residual(system, &points, p);
    PeriodicOrbit {
        points,
        period: p,
        residual,
    }
}

/// Root of the increasing function `g` on `[0, 1]` with `g(0) ≤ k ≤ g(1)`.
fn bisect_root(g: impl Fn(f64) -> f64, k: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if g(lo) == k {
        return lo;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v == k {
            return mid;
        }
        if v < k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (g(lo) - k).abs() <= (g(hi) - k).abs() {
        lo
    } else {
        hi
    }
}

/// Fixed points of `fᵖ` in `[0, 1)` for a circle system, increasing. One root
/// of `F^p(x) − x = k` for each integer `k ∈ [F^p(0), F^p(0) + dᵖ − 1)`.
pub fn circle_fixed_points(system: &MapSystem, p: usize) -> Result<Vec<f64>> {
    let d = system
        .degree()
        .filter(|&d| d >= 2)
        .ok_or_else(|| Error::Unsupported(format!("{} has no expanding circle lift", system.id())))?;
    let lift = |x: f64| (0..p).fold(x, |y, _| system.circle_lift(y));
    let g = |x: f64| lift(x) - x;
    let g0 = g(0.0);
    let count = d.checked_pow(p as u32).ok_or_else(|| {
        Error::InvalidParameter(format!("period {p} too large for degree {d}"))
    })? - 1;
    let k0 = g0.ceil() as i64;
    let ks: Vec<i64> = (0..count).map(|i| k0 + i).collect();
    let mut roots: Vec<f64> = pool().install(|| {
        ks.par_iter()
            .map(|&k| bisect_root(g, k as f64))
            .collect()
    });
    for r in &mut roots {
        if *r >= 1.0 {
            *r = 0.0;
        }
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

fn circle_orbits(system: &MapSystem, p_max: usize) -> Result<Vec<PeriodicOrbit>> {
    let mut out = Vec::new();
    for p in 1..=p_max {
        let roots = circle_fixed_points(system, p)?;
        let mut seen = vec![false; roots.len()];
        for i in 0..roots.len() {
            if seen[i] {
                continue;
            }
            // Walk the orbit through the root list so points stay on roots.
            let mut members = vec![i];
            let mut x = roots[i];
            loop {
                let y = reduce(system.circle_lift(x));
                let j = nearest(&roots, y);
                if j == i || members.len() > p {
                    break;
                }
                members.push(j);
                x = roots[j];
            }
            for &m in &members {
                seen[m] = true;
            }
            if members.len() != p {
                continue; // smaller minimal period, reported at that period
            }
            let mut points: Vec<Point> = members.iter().map(|&m| Point::circle(roots[m])).collect();
            let start = (0..p)
                .min_by(|&a, &b| cmp_points(&points[a], &points[b]))
                .expect("p >= 1");
            points.rotate_left(start);
            let residual = orbit_residual(system, &points, p);
            out.push(PeriodicOrbit {
                points,
                period: p,
                residual,
            });
        }
    }
    Ok(out)
}

fn nearest(sorted: &[f64], y: f64) -> usize {
    let mut best = 0;
    let mut bd = f64::INFINITY;
    let idx = sorted.partition_point(|&r| r < y);
    for j in [idx.wrapping_sub(1), idx, 0, sorted.len() - 1] {
        if let Some(&r) = sorted.get(j) {
            let d = crate::space::circle_dist(r, y);
            if d < bd {
                bd = d;
                best = j;
            }
        }
    }
    best
}

type IMat2 = [[i128; 2]; 2];

fn imat_mul(a: IMat2, b: IMat2) -> IMat2 {
    let mut r = [[0i128; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

fn egcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a.abs(), a.signum(), 0)
    } else {
        let (g, x, y) = egcd(b, a.rem_euclid(b));
        (g, y, x - (a.div_euclid(b)) * y)
    }
}

/// Integer points `m ∈ (ℤ/D)²` with `B m ≡ 0 (mod D)`.
fn lattice_kernel(b: IMat2, d: i128) -> Vec<[i128; 2]> {
    let mut out = Vec::new();
    let (g, inv, _) = egcd(b[0][1].rem_euclid(d), d);
    let step = d / g;
    for i in 0..d {
        let rhs = (-b[0][0] * i).rem_euclid(d);
        if rhs % g != 0 {
            continue;
        }
        let j0 = ((rhs / g) * inv).rem_euclid(step);
        for t in 0..g {
            let j = j0 + t * step;
            if (b[1][0] * i + b[1][1] * j).rem_euclid(d) == 0 {
                out.push([i, j]);
            }
        }
    }
    out
}

/// Periodic orbits of a toral automorphism by exact lattice arithmetic:
/// fixed points of `Aᵖ` are the points `m/D` with `(Aᵖ − I)m ≡ 0 (mod D)`,
/// `D = |det(Aᵖ − I)|`.
fn linear_torus_orbits(system: &MapSystem, a: [[i64; 2]; 2], p_max: usize) -> Result<Vec<PeriodicOrbit>> {
    let a = [
        [a[0][0] as i128, a[0][1] as i128],
        [a[1][0] as i128, a[1][1] as i128],
    ];
    let mut out = Vec::new();
    let mut ap = [[1i128, 0], [0, 1]];
    for p in 1..=p_max {
        ap = imat_mul(a, ap);
        let b = [[ap[0][0] - 1, ap[0][1]], [ap[1][0], ap[1][1] - 1]];
        let d = (b[0][0] * b[1][1] - b[0][1] * b[1][0]).abs();
        if d == 0 {
            return Err(Error::Unsupported(format!("A^{p} - I is singular")));
        }
        if d > MAX_TORUS_POINTS {
            return Err(Error::InvalidParameter(format!(
                "period {p} has {d} fixed points, above the enumeration limit {MAX_TORUS_POINTS}"
            )));
        }
        let pts = lattice_kernel(b, d);
        let index: BTreeMap<[i128; 2], usize> = pts.iter().enumerate().map(|(k, m)| (*m, k)).collect();
        let mut seen = vec![false; pts.len()];
        for k in 0..pts.len() {
            if seen[k] {
                continue;
            }
            let mut members = vec![k];
            let mut m = pts[k];
            loop {
                m = [
                    (a[0][0] * m[0] + a[0][1] * m[1]).rem_euclid(d),
                    (a[1][0] * m[0] + a[1][1] * m[1]).rem_euclid(d),
                ];
                let j = index[&m];
                if j == k {
                    break;
                }
                members.push(j);
            }
            for &j in &members {
                seen[j] = true;
            }
            if members.len() != p {
                continue;
            }
            let mut points: Vec<Point> = members
                .iter()
                .map(|&j| Point::torus(pts[j][0] as f64 / d as f64, pts[j][1] as f64 / d as f64))
                .collect();
            let start = (0..p)
                .min_by(|&x, &y| cmp_points(&points[x], &points[y]))
                .expect("p >= 1");
            points.rotate_left(start);
            let residual = orbit_residual(system, &points, p);
            out.push(PeriodicOrbit {
                points,
                period: p,
                residual,
            });
        }
    }
    Ok(out)
}

fn wrap_half(v: f64) -> f64 {
    v - v.round()
}

/// Newton refinement of a period-`p` point of `system` from `x`.
fn newton_periodic(system: &MapSystem, mut x: [f64; 2], p: usize) -> Option<[f64; 2]> {
    for _ in 0..NEWTON_STEPS {
        let pt = Point::Torus(x);
        let y = system.evaluate(&pt, p);
        let Point::Torus(yv) = y else { unreachable!() };
        let r = [wrap_half(yv[0] - x[0]), wrap_half(yv[1] - x[1])];
        if r[0].abs().max(r[1].abs()) < 1e-15 {
            break;
        }
        let j = system.tangent_map(&pt, p);
        let m = Mat::new2(j.get(0, 0) - 1.0, j.get(0, 1), j.get(1, 0), j.get(1, 1) - 1.0);
        let step = m.inverse()?.apply(r);
        x = [reduce(x[0] - step[0]), reduce(x[1] - step[1])];
    }
    Some(x)
}

/// Periodic orbits of the perturbed cat map, continued by Newton's method
/// from the orbits of the unperturbed automorphism.
fn perturbed_cat_orbits(system: &MapSystem, a: f64, p_max: usize) -> Result<Vec<PeriodicOrbit>> {
    let cat = MapSystem::new(Family::Cat)?;
    let base = linear_torus_orbits(&cat, cat.linear_part().expect("cat is linear"), p_max)?;
    let continued: Vec<Option<PeriodicOrbit>> = pool().install(|| {
        base.par_iter()
            .map(|orb| {
                let Point::Torus(mut x) = orb.points[0] else {
                    unreachable!()
                };
                for s in 1..=CONTINUATION_STEPS {
                    let sys = MapSystem::new(Family::PerturbedCat {
                        a: a * s as f64 / CONTINUATION_STEPS as f64,
                    })
                    .ok()?;
                    x = newton_periodic(&sys, x, orb.period)?;
                }
                let o = make_orbit(system, Point::Torus(x), orb.period);
                (o.residual <= RESIDUAL_LIMIT).then_some(o)
            })
            .collect()
    });
    let mut out: Vec<PeriodicOrbit> = continued.into_iter().flatten().collect();
    out.sort_by(|x, y| {
        x.period
            .cmp(&y.period)
            .then_with(|| cmp_points(&x.points[0], &y.points[0]))
    });
    Ok(out)
}

/// All periodic orbits of minimal period `p ≤ p_max`, ordered by period and
/// then by smallest point.
pub fn find_periodic_orbits(system: &MapSystem, p_max: usize) -> Result<Vec<PeriodicOrbit>> {
    if p_max == 0 {
        return Err(Error::InvalidParameter("P_max must be >= 1".into()));
    }
    match system.family() {
        Family::Doubling | Family::PerturbedDoubling { .. } | Family::Intermittent => {
            circle_orbits(system, p_max)
        }
        Family::Cat | Family::CatInverse => {
            linear_torus_orbits(system, system.linear_part().expect("linear"), p_max)
        }
        Family::PerturbedCat { a } if a == 0.0 => {
            linear_torus_orbits(system, system.linear_part().expect("linear"), p_max)
        }
        Family::PerturbedCat { a } => perturbed_cat_orbits(system, a, p_max),
        Family::Period2Cocycle => Ok(if p_max >= 2 {
            vec![make_orbit(system, Point::Atom(0), 2)]
        } else {
            vec![]
        }),
    }
}

/// `∫ φ dμ` for the uniform measure on the orbit.
pub fn orbit_average(system: &MapSystem, orbit: &PeriodicOrbit, phi: &Observable) -> Result<f64> {
    let vals = orbit
        .points
        .iter()
        .map(|x| phi.evaluate(system, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(compensated_mean(vals))
}

/// The orbit with the largest `φ`-average, if that average is at least
/// `−tolerance`.
pub fn falsify_with_tolerance(
    system: &MapSystem,
    phi: &Observable,
    p_max: usize,
    tolerance: f64,
) -> Result<Option<PeriodicOrbitWitness>> {
    let orbits = find_periodic_orbits(system, p_max)?;
    let mut best: Option<PeriodicOrbitWitness> = None;
    for o in orbits {
        if o.residual > RESIDUAL_LIMIT {
            continue;
        }
        let average = orbit_average(system, &o, phi)?;
        if best.as_ref().is_none_or(|b| average > b.average) {
            best = Some(PeriodicOrbitWitness {
                points: o.points,
                period: o.period,
                average,
                residual: o.residual,
            });
        }
    }
    Ok(best.filter(|w| w.average >= -tolerance))
}

pub fn falsify_total_probability(
    system: &MapSystem,
    phi: &Observable,
    p_max: usize,
) -> Result<Option<PeriodicOrbitWitness>> {
    falsify_with_tolerance(system, phi, p_max, DEFAULT_TOLERANCE)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    ViolationFound,
    NoViolationUpToHorizon,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDiagnostic {
    pub base: Point,
    /// `times[k − 1]`: first `n` with Birkhoff average `> −1/k`.
    pub times: Vec<Option<usize>>,
    pub horizon: usize,
    pub verdict: Verdict,
}

/// Searches, for each `k ≤ k_max`, the first time `n_k ≤ horizon` at which the
/// Birkhoff average of `φ` at `x` exceeds `−1/k`.
pub fn empirical_measure_diagnostic(
    system: &MapSystem,
    phi: &Observable,
    x: &Point,
    k_max: usize,
    horizon: usize,
) -> Result<EmpiricalDiagnostic> {
    if k_max == 0 || horizon < k_max {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k_max <= horizon, got k_max={k_max}, horizon={horizon}"
        )));
    }
    let mut averages = Vec::with_capacity(horizon);
    let mut sum = CompensatedSum::default();
    let mut p = *x;
    for n in 1..=horizon {
        sum.add(phi.evaluate(system, &p)?);
        averages.push(sum.value() / n as f64);
        p = system.map(&p);
    }
    let times: Vec<Option<usize>> = (1..=k_max)
        .map(|k| {
            let thr = -1.0 / k as f64;
            averages.iter().position(|&a| a > thr).map(|i| i + 1)
        })
        .collect();
    let verdict = if times.iter().all(Option::is_some) {
        Verdict::ViolationFound
    } else {
        Verdict::NoViolationUpToHorizon
    };
    Ok(EmpiricalDiagnostic {
        base: *x,
        times,
        horizon,
        verdict,
    })
}

/// Where eventual expansion is checked.
#[derive(Clone, Copy, Debug)]
pub enum ExpansionTarget<'a> {
    Points(&'a [Point]),
    /// Every box of a cover, with interval products of derivatives.
    Cover(&'a CoverCertificate),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventualExpansionEntry {
    pub region: PhaseBox,
    /// Least `N` with `‖(df_xᴺ)⁻¹‖ < 1`, if any `N ≤ N_max`.
    pub n: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventualExpansionReport {
    pub entries: Vec<EventualExpansionEntry>,
    pub n_max: usize,
}

impl EventualExpansionReport {
    pub fn failures(&self) -> impl Iterator<Item = &EventualExpansionEntry> {
        self.entries.iter().filter(|e| e.n.is_none())
    }

    pub fn holds(&self) -> bool {
        self.failures().next().is_none()
    }
}

fn point_box(x: &Point) -> PhaseBox {
    match *x {
        Point::Circle(v) => PhaseBox::arc(v, v),
        Point::Torus([a, b]) => PhaseBox::rect((a, a), (b, b)),
        Point::Atom(i) => PhaseBox::Atom(i),
    }
}

fn point_eventual_n(system: &MapSystem, x: &Point, n_max: usize) -> Option<usize> {
    let mut acc = Mat::identity(system.tangent_dim());
    let mut p = *x;
    for n in 1..=n_max {
        acc = system.jacobian(&p).mul(&acc);
        p = system.map(&p);
        if acc.det().abs() > 0.0 && acc.inv_op_norm() < 1.0 {
            return Some(n);
        }
    }
    None
}

fn box_eventual_n(system: &MapSystem, b: &PhaseBox, n_max: usize) -> Option<usize> {
    let mut acc = IMat::from_mat(&Mat::identity(system.tangent_dim()));
    let mut cur = *b;
    for n in 1..=n_max {
        acc = system.jacobian_box(&cur).mul(&acc);
        cur = system.image_box(&cur);
        if let Ok(bound) = acc.inv_norm_bound() {
            if bound.hi() < 1.0 {
                return Some(n);
            }
        }
    }
    None
}

/// For each point or cover box, the least `N ≤ n_max` with
/// `‖(df_xᴺ)⁻¹‖ < 1`; certified over boxes when a cover is given.
pub fn eventual_expansion_check(
    system: &MapSystem,
    target: ExpansionTarget<'_>,
    n_max: usize,
) -> EventualExpansionReport {
    let entries = match target {
        ExpansionTarget::Points(pts) => pts
            .iter()
            .map(|x| EventualExpansionEntry {
                region: point_box(x),
                n: point_eventual_n(system, x, n_max),
            })
            .collect(),
        ExpansionTarget::Cover(cert) => pool().install(|| {
            cert.entries
                .par_iter()
                .map(|e| EventualExpansionEntry {
                    region: e.region,
                    n: box_eventual_n(system, &e.region, n_max),
                })
                .collect()
        }),
    };
    EventualExpansionReport { entries, n_max }
}

/// A uniform grid of `g` points per axis (both atoms on the two-point space).
pub fn grid_points(space: PhaseSpace, g: usize) -> Vec<Point> {
    let t = |i: usize| i as f64 / g as f64;
    match space {
        PhaseSpace::Circle => (0..g).map(|i| Point::circle(t(i))).collect(),
        PhaseSpace::Torus => (0..g)
            .flat_map(|i| (0..g).map(move |j| Point::torus(t(i), t(j))))
            .collect(),
        PhaseSpace::TwoPoint => vec![Point::Atom(0), Point::Atom(1)],
    }
}
