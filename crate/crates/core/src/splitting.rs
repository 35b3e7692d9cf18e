//! Invariant line-field splittings on the torus and certification of
//! hyperbolicity along them.
//!
//! A splitting assigns to every point an unstable line `E^cu` and a stable
//! line `E^cs`, stored as angles in `[0, π)`. Gallery systems with a known
//! splitting use it exactly; otherwise directions come from power iteration of
//! the derivative cocycle along backward (unstable) or forward (stable) orbit
//! segments, and certificates built on them are conditional on that estimate.

use std::f64::consts::PI;

use crate::constants::ExpansionConstants;
use crate::cover::{build_cover, CoverCertificate, CoverConfig, CoverOutcome, InconclusiveReport};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::observable::{Observable, Which};
use crate::space::{PhaseBox, PhaseSpace, Point};
use crate::system::MapSystem;

/// Default power-iteration length for estimated splittings.
pub const DEFAULT_ITERATIONS: usize = 30;
/// Default angular tolerance (radians) for estimated directions.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Angular slack around closed-form directions.
const EXACT_SLACK: f64 = 8.0 * f64::EPSILON;
/// Initial direction for power iteration; any angle off the gallery's
/// invariant lines works.
const GENERIC_ANGLE: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Line {
    Unstable,
    Stable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplittingKind {
    /// `E^cs ⊕ E^cu`.
    CsCu,
    /// `E^s ⊕ E^c ⊕ E^u` on a surface: one of the two lines is the
    /// one-dimensional center, the remaining summand is trivial.
    Scu { center: Line },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplittingSource {
    Exact,
    Estimated { iterations: usize, tolerance: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Splitting {
    pub kind: SplittingKind,
    pub source: SplittingSource,
}

/// Difference of two line angles, folded into `[0, π/2]`.
pub fn line_angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

fn angle_of(v: [f64; 2]) -> f64 {
    v[1].atan2(v[0]).rem_euclid(PI)
}

fn normalize(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

impl Splitting {
    /// The gallery's closed-form splitting.
    pub fn exact(system: &MapSystem) -> Result<Self> {
        system.exact_splitting().ok_or_else(|| {
            Error::Unsupported(format!("{} has no closed-form splitting", system.id()))
        })?;
        Ok(Self {
            kind: SplittingKind::CsCu,
            source: SplittingSource::Exact,
        })
    }

    pub fn estimated(iterations: usize, tolerance: f64) -> Self {
        Self {
            kind: SplittingKind::CsCu,
            source: SplittingSource::Estimated {
                iterations: iterations.max(1),
                tolerance,
            },
        }
    }

    /// Exact splitting when the gallery has one, otherwise an estimate.
    pub fn for_system(system: &MapSystem, iterations: usize) -> Result<Self> {
        if system.tangent_dim() != 2 {
            return Err(Error::Unsupported(format!(
                "{} has 1-dimensional tangent spaces",
                system.id()
            )));
        }
        Self::exact(system).or_else(|_| {
            if system.is_diffeomorphism() {
                Ok(Self::estimated(iterations, DEFAULT_TOLERANCE))
            } else {
                Err(Error::Unsupported(format!(
                    "{} is not invertible; splitting estimation needs backward orbits",
                    system.id()
                )))
            }
        })
    }

    pub fn with_center(mut self, center: Line) -> Self {
        self.kind = SplittingKind::Scu { center };
        self
    }

    pub fn center_line(&self) -> Line {
        match self.kind {
            SplittingKind::Scu { center } => center,
            SplittingKind::CsCu => Line::Unstable,
        }
    }

    pub fn is_conditional(&self) -> bool {
        matches!(self.source, SplittingSource::Estimated { .. })
    }

    /// Direction angle of `line` at `x`.
    pub fn angle(&self, system: &MapSystem, x: &Point, line: Line) -> Result<f64> {
        match self.source {
            SplittingSource::Exact => {
                let [u, s] = system.exact_splitting().ok_or_else(|| {
                    Error::Unsupported(format!("{} has no closed-form splitting", system.id()))
                })?;
                Ok(match line {
                    Line::Unstable => u,
                    Line::Stable => s,
                })
            }
            SplittingSource::Estimated { iterations, .. } => {
                power_iterate(system, x, line, iterations)
            }
        }
    }

    /// Angle interval containing the direction of `line` over the box.
    ///
    /// Estimated splittings sample the corners and center and widen by twice
    /// the observed spread plus the tolerance.
    pub fn angle_enclosure(&self, system: &MapSystem, b: &PhaseBox, line: Line) -> Result<Interval> {
        match self.source {
            SplittingSource::Exact => {
                let t = self.angle(system, &b.center(), line)?;
                Ok(Interval::new(t - EXACT_SLACK, t + EXACT_SLACK))
            }
            SplittingSource::Estimated { tolerance, .. } => {
                let center = self.angle(system, &b.center(), line)?;
                let mut spread: f64 = 0.0;
                for p in b.sample_points() {
                    let t = self.angle(system, &p, line)?;
                    spread = spread.max(line_angle_diff(t, center));
                }
                let half = 2.0 * spread + tolerance;
                Ok(Interval::new(center - half, center + half))
            }
        }
    }

    /// `angle(df_x E(x), E(f x))` for one line.
    pub fn invariance_residual(&self, system: &MapSystem, x: &Point, line: Line) -> Result<f64> {
        let t = self.angle(system, x, line)?;
        let pushed = angle_of(system.jacobian(x).apply([t.cos(), t.sin()]));
        let next = self.angle(system, &system.map(x), line)?;
        Ok(line_angle_diff(pushed, next))
    }

    fn tolerance(&self) -> f64 {
        match self.source {
            SplittingSource::Exact => 1e-8,
            SplittingSource::Estimated { tolerance, .. } => tolerance,
        }
    }
}

fn power_iterate(system: &MapSystem, x: &Point, line: Line, n: usize) -> Result<f64> {
    let mut v = [GENERIC_ANGLE.cos(), GENERIC_ANGLE.sin()];
    match line {
        Line::Unstable => {
            let mut orbit = Vec::with_capacity(n);
            let mut p = *x;
            for _ in 0..n {
                p = system.inverse(&p)?;
                orbit.push(p);
            }
            for q in orbit.iter().rev() {
                v = normalize(system.jacobian(q).apply(v));
            }
        }
        Line::Stable => {
            let mut orbit = Vec::with_capacity(n);
            let mut p = *x;
            for _ in 0..n {
                orbit.push(p);
                p = system.map(&p);
            }
            for q in orbit.iter().rev() {
                let inv = system
                    .check_invertible(q)?
                    .inverse()
                    .expect("invertible after determinant check");
                v = normalize(inv.apply(v));
            }
        }
    }
    Ok(angle_of(v))
}

/// Directions at a point estimated by power iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplittingEstimate {
    pub unstable: f64,
    pub stable: f64,
    /// Change of either angle between `n_iter - 1` and `n_iter` iterations.
    pub residual: f64,
    pub iterations: usize,
}

pub fn estimate_splitting(system: &MapSystem, x: &Point, n_iter: usize) -> Result<SplittingEstimate> {
    if n_iter == 0 {
        return Err(Error::InvalidParameter("n_iter must be >= 1".into()));
    }
    if !system.is_diffeomorphism() || system.tangent_dim() != 2 {
        return Err(Error::Unsupported(format!(
            "{} is not a surface diffeomorphism",
            system.id()
        )));
    }
    let u = power_iterate(system, x, Line::Unstable, n_iter)?;
    let s = power_iterate(system, x, Line::Stable, n_iter)?;
    let residual = if n_iter > 1 {
        let u1 = power_iterate(system, x, Line::Unstable, n_iter - 1)?;
        let s1 = power_iterate(system, x, Line::Stable, n_iter - 1)?;
        line_angle_diff(u, u1).max(line_angle_diff(s, s1))
    } else {
        f64::INFINITY
    };
    Ok(SplittingEstimate {
        unstable: u,
        stable: s,
        residual,
        iterations: n_iter,
    })
}

/// Largest invariance residual over `samples` deterministic points.
pub fn max_invariance_residual(
    system: &MapSystem,
    splitting: &Splitting,
    samples: usize,
) -> Result<f64> {
    let pts = sample_points(system, samples);
    let mut worst: f64 = 0.0;
    for p in &pts {
        for line in [Line::Unstable, Line::Stable] {
            worst = worst.max(splitting.invariance_residual(system, p, line)?);
        }
    }
    Ok(worst)
}

fn sample_points(system: &MapSystem, samples: usize) -> Vec<Point> {
    match system.space() {
        PhaseSpace::TwoPoint => vec![Point::Atom(0), Point::Atom(1)],
        PhaseSpace::Torus => {
            let g = (samples as f64).sqrt().ceil().max(1.0) as usize;
            (0..g)
                .flat_map(|i| {
                    (0..g).map(move |j| {
                        Point::torus((i as f64 + 0.5) / g as f64, (j as f64 + 0.5) / g as f64)
                    })
                })
                .collect()
        }
        PhaseSpace::Circle => vec![],
    }
}

/// Restricted-norm constants for both sides of a hyperbolic splitting.
#[derive(Clone, Debug)]
pub struct HyperbolicCertificate {
    pub cu: CoverCertificate,
    pub cs: CoverCertificate,
    /// Combined `C`, the smaller of the two sides.
    pub big_c: f64,
    /// Combined `σ`, the smaller of the two sides.
    pub sigma: f64,
    pub splitting: Splitting,
}

impl HyperbolicCertificate {
    pub fn cu_constants(&self) -> &ExpansionConstants {
        &self.cu.constants
    }

    pub fn cs_constants(&self) -> &ExpansionConstants {
        &self.cs.constants
    }
}

#[derive(Clone, Debug)]
pub enum HyperbolicOutcome {
    Certified(Box<HyperbolicCertificate>),
    Inconclusive {
        /// Which side failed first.
        side: Which,
        report: Box<InconclusiveReport>,
    },
}

/// Runs the covering certifier on `λ^cu` at rate `r_cu` and on `λ^cs` at
/// rate `r_cs`.
pub fn certify_hyperbolic(
    system: &MapSystem,
    splitting: &Splitting,
    r_cu: f64,
    r_cs: f64,
    n_max: usize,
    depth_max: usize,
) -> Result<HyperbolicOutcome> {
    let residual = max_invariance_residual(system, splitting, 64)?;
    let tol = splitting.tolerance();
    if residual > tol {
        return Err(Error::SplittingResidual {
            residual,
            tolerance: tol,
        });
    }
    let mut certs = Vec::with_capacity(2);
    for (which, rate) in [(Which::Cu, r_cu), (Which::Cs, r_cs)] {
        let phi = Observable::directional(which, *splitting);
        let cfg = CoverConfig::new(rate, n_max, depth_max);
        match build_cover(system, &phi, &cfg)? {
            CoverOutcome::Certified(c) => certs.push(*c),
            CoverOutcome::Inconclusive(report) => {
                return Ok(HyperbolicOutcome::Inconclusive {
                    side: which,
                    report,
                })
            }
        }
    }
    let cs = certs.pop().expect("two certificates");
    let cu = certs.pop().expect("two certificates");
    Ok(HyperbolicOutcome::Certified(Box::new(HyperbolicCertificate {
        big_c: cu.constants.big_c.min(cs.constants.big_c),
        sigma: cu.constants.sigma.min(cs.constants.sigma),
        cu,
        cs,
        splitting: *splitting,
    })))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityReport {
    /// Grid sizes probed, in order.
    pub grids: Vec<usize>,
    /// Largest adjacent-cell angle difference per grid, `[unstable, stable]`.
    pub moduli: Vec<[f64; 2]>,
    pub threshold: f64,
    /// Set when the finest grid's modulus exceeds the threshold.
    pub red_flag: bool,
    /// Set for discrete phase spaces, where adjacency is undefined.
    pub skipped: bool,
}

/// Maximum angle jump between adjacent cells of a `grid × grid` lattice on
/// the torus, for each line.
pub fn continuity_modulus(system: &MapSystem, splitting: &Splitting, grid: usize) -> Result<[f64; 2]> {
    if grid < 2 {
        return Err(Error::InvalidParameter("grid must be >= 2".into()));
    }
    let mut out = [0.0f64; 2];
    for (k, line) in [Line::Unstable, Line::Stable].into_iter().enumerate() {
        let mut angles = vec![0.0; grid * grid];
        for i in 0..grid {
            for j in 0..grid {
                let p = Point::torus(i as f64 / grid as f64, j as f64 / grid as f64);
                angles[i * grid + j] = splitting.angle(system, &p, line)?;
            }
        }
        for i in 0..grid {
            for j in 0..grid {
                let a = angles[i * grid + j];
                let right = angles[((i + 1) % grid) * grid + j];
                let up = angles[i * grid + (j + 1) % grid];
                out[k] = out[k]
                    .max(line_angle_diff(a, right))
                    .max(line_angle_diff(a, up));
            }
        }
    }
    Ok(out)
}

/// Probes continuity of the splitting on successively finer grids.
pub fn splitting_continuity_check(
    system: &MapSystem,
    splitting: &Splitting,
    grids: &[usize],
    threshold: f64,
) -> Result<ContinuityReport> {
    if system.space() != PhaseSpace::Torus {
        return Ok(ContinuityReport {
            grids: grids.to_vec(),
            moduli: vec![],
            threshold,
            red_flag: false,
            skipped: true,
        });
    }
    let moduli = grids
        .iter()
        .map(|&g| continuity_modulus(system, splitting, g))
        .collect::<Result<Vec<_>>>()?;
    let red_flag = moduli
        .last()
        .is_some_and(|m| m[0].max(m[1]) > threshold);
    Ok(ContinuityReport {
        grids: grids.to_vec(),
        moduli,
        threshold,
        red_flag,
        skipped: false,
    })
}
