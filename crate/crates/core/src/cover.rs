//! Finite covers by adaptive bisection.
//!
//! Every box of the cover carries a return time `N` such that the enclosed
//! average `(1/N) Σ_{j<N} φ(fʲy)` stays below `−r` on the whole box. With
//! `c = 2r` the global data `N̄ = max N`, `c`, and the certified maximum `α` of
//! `φ` feed the schedule `N_{k+1}(x) = N_k(x) + N₁(f^{N_k(x)}x)`, the bound
//! `Σ_{j<mN̄} φ(fʲx) ≤ −(c/2)m + α⁺N̄`, and the expansion constants.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::constants::{derive_constants, ExpansionConstants};
use crate::enclosure::{average_of, OrbitStepper};
use crate::error::{Error, Result};
use crate::interval::{Interval, ROUNDING_DISCIPLINE};
use crate::observable::{birkhoff_sum, Observable};
use crate::space::{normalize_coord, PhaseBox, PhaseSpace, Point};
use crate::splitting::Splitting;
use crate::system::MapSystem;

/// Environment variable bounding the worker count (0 = automatic).
pub const THREADS_ENV: &str = "HYPERCERT_THREADS";

/// Margin by which pointwise averages must clear `−r` before a cell counts
/// as obstructed; covers floating-point error in the point orbit.
pub const OBSTRUCTION_SLACK: f64 = 1e-9;

/// Upper bound on cells processed at one subdivision level.
pub const DEFAULT_MAX_CELLS: usize = 1 << 21;

pub(crate) fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let n = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverEntry {
    pub region: PhaseBox,
    /// Return time `N(B)`.
    pub n: usize,
    /// Certified gap: the enclosed average is at most `−r − margin`.
    pub margin: f64,
    /// Upper bound of `φ` on the box itself.
    pub observable_max: f64,
}

/// What stopped a box from being certified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Blocking {
    /// Smallest upper endpoint achieved over `N ≤ N_max` (`+∞` if none).
    pub best_upper: f64,
    pub best_n: usize,
    /// The average enclosure at `best_n`.
    pub enclosure: Interval,
    pub observable_max: f64,
    /// The box center itself has every average `≥ −r + OBSTRUCTION_SLACK`
    /// for `N ≤ N_max`, so no box containing it can be certified and the
    /// cell is not subdivided further.
    pub center_obstructed: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct CoverConfig {
    pub rate: f64,
    pub n_max: usize,
    pub depth_max: usize,
    pub max_cells: usize,
}

impl CoverConfig {
    pub fn new(rate: f64, n_max: usize, depth_max: usize) -> Self {
        Self {
            rate,
            n_max,
            depth_max,
            max_cells: DEFAULT_MAX_CELLS,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rate must be > 0, got {}",
                self.rate
            )));
        }
        if self.n_max == 0 {
            return Err(Error::InvalidParameter("N_max must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub tool: String,
    pub rounding: String,
    pub seed: u64,
    pub depth_max: usize,
    pub depth_reached: usize,
    pub n_max: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplittingRecord {
    pub splitting: Splitting,
    /// Largest sampled invariance residual.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverCertificate {
    pub system: MapSystem,
    pub observable: String,
    pub rate: f64,
    /// Sorted by box coordinates.
    pub entries: Vec<CoverEntry>,
    pub constants: ExpansionConstants,
    pub provenance: Provenance,
    pub splitting: Option<SplittingRecord>,
}

impl CoverCertificate {
    /// `N₁(y)`: smallest return time among boxes containing `y`.
    pub fn return_time(&self, y: &Point) -> Result<usize> {
        self.entries
            .iter()
            .filter(|e| e.region.contains(y))
            .map(|e| e.n)
            .min()
            .ok_or_else(|| Error::NotCovered(y.to_string()))
    }

    pub fn nbar(&self) -> usize {
        self.constants.nbar
    }
}

/// A connected cluster of cells that could not be certified.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    /// Smallest box containing the cluster.
    pub region: PhaseBox,
    pub cells: usize,
    /// The cell with the weakest bound, and that bound.
    pub worst_cell: PhaseBox,
    pub blocking: Blocking,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InconclusiveReport {
    pub system: MapSystem,
    pub observable: String,
    pub rate: f64,
    pub witnesses: Vec<Witness>,
    pub failing_cells: usize,
    pub depth_reached: usize,
    pub budget_exhausted: bool,
}

#[derive(Clone, Debug)]
pub enum CoverOutcome {
    Certified(Box<CoverCertificate>),
    Inconclusive(Box<InconclusiveReport>),
}

impl CoverOutcome {
    pub fn certificate(&self) -> Option<&CoverCertificate> {
        match self {
            CoverOutcome::Certified(c) => Some(c),
            CoverOutcome::Inconclusive(_) => None,
        }
    }

    pub fn report(&self) -> Option<&InconclusiveReport> {
        match self {
            CoverOutcome::Inconclusive(r) => Some(r),
            CoverOutcome::Certified(_) => None,
        }
    }
}

/// Smallest `N ≤ N_max` whose enclosure on `b` stays below `−r`, or the data
/// that blocked it.
pub fn probe_box(
    system: &MapSystem,
    b: &PhaseBox,
    phi: &Observable,
    rate: f64,
    n_max: usize,
) -> std::result::Result<CoverEntry, Blocking> {
    let mut stepper = OrbitStepper::new(system, b, phi);
    let mut blocking = Blocking {
        best_upper: f64::INFINITY,
        best_n: 0,
        enclosure: Interval::ENTIRE,
        observable_max: f64::INFINITY,
        center_obstructed: false,
    };
    for n in 1..=n_max {
        let Ok((e, sum)) = stepper.step() else {
            break;
        };
        if n == 1 {
            blocking.observable_max = e.hi();
        }
        let avg = average_of(&sum, n);
        if avg.hi() < -rate {
            let margin = (-rate - avg.hi()).next_down();
            if margin > 0.0 {
                return Ok(CoverEntry {
                    region: *b,
                    n,
                    margin,
                    observable_max: blocking.observable_max,
                });
            }
        }
        if avg.hi() < blocking.best_upper {
            blocking.best_upper = avg.hi();
            blocking.best_n = n;
            blocking.enclosure = avg;
        }
        // Once the image is the whole space every later step adds the same
        // bound `e`, so the average upper bound moves monotonically toward
        // `e.hi()` and can no longer cross `−r` if `e.hi() ≥ −r`.
        if stepper.current().is_whole() && e.hi() >= -rate {
            break;
        }
    }
    Err(blocking)
}

fn center_obstructed(system: &MapSystem, b: &PhaseBox, phi: &Observable, rate: f64, n_max: usize) -> bool {
    let mut p = b.center();
    let mut sum = crate::observable::CompensatedSum::default();
    for n in 1..=n_max {
        let Ok(v) = phi.evaluate(system, &p) else {
            return false;
        };
        sum.add(v);
        if sum.value() / n as f64 <= -rate + OBSTRUCTION_SLACK {
            return false;
        }
        p = system.map(&p);
    }
    true
}

/// `find_box_time`: the certified entry for `b`, if any `N ≤ N_max` works.
pub fn find_box_time(
    system: &MapSystem,
    b: &PhaseBox,
    phi: &Observable,
    rate: f64,
    n_max: usize,
) -> Option<CoverEntry> {
    if !(rate > 0.0) || n_max == 0 {
        return None;
    }
    probe_box(system, b, phi, rate, n_max).ok()
}

fn sort_boxes<T>(items: &mut [T], key: impl Fn(&T) -> &PhaseBox) {
    items.sort_by(|a, b| {
        key(a)
            .sort_key()
            .partial_cmp(&key(b).sort_key())
            .expect("box coordinates are finite")
    });
}

/// Builds a cover of the whole phase space or reports the blocking regions.
/// The result does not depend on worker count or scheduling.
pub fn build_cover(system: &MapSystem, phi: &Observable, cfg: &CoverConfig) -> Result<CoverOutcome> {
    cfg.validate()?;
    let mut frontier = system.space().root_boxes();
    let mut entries: Vec<CoverEntry> = Vec::new();
    let mut obstructed: Vec<(PhaseBox, Blocking)> = Vec::new();
    let mut depth = 0;
    loop {
        let results: Vec<_> = pool().install(|| {
            frontier
                .par_iter()
                .map(|b| {
                    probe_box(system, b, phi, cfg.rate, cfg.n_max).map_err(|mut blk| {
                        blk.center_obstructed = center_obstructed(system, b, phi, cfg.rate, cfg.n_max);
                        blk
                    })
                })
                .collect()
        });
        let mut failed = Vec::new();
        for (b, r) in frontier.iter().zip(results) {
            match r {
                Ok(e) => entries.push(e),
                Err(blk) if blk.center_obstructed => obstructed.push((*b, blk)),
                Err(blk) => failed.push((*b, blk)),
            }
        }
        let splittable = failed.iter().all(|(b, _)| b.bisect().is_some());
        let over_budget = 2 * failed.len() > cfg.max_cells;
        let stuck = depth >= cfg.depth_max || !splittable || over_budget;
        if failed.is_empty() && obstructed.is_empty() {
            break;
        }
        if failed.is_empty() || stuck {
            failed.append(&mut obstructed);
            return Ok(CoverOutcome::Inconclusive(Box::new(InconclusiveReport {
                system: *system,
                observable: phi.kind_name(),
                rate: cfg.rate,
                failing_cells: failed.len(),
                witnesses: merge_witnesses(failed),
                depth_reached: depth,
                budget_exhausted: over_budget && depth < cfg.depth_max && splittable,
            })));
        }
        frontier = failed
            .iter()
            .flat_map(|(b, _)| {
                let (l, r) = b.bisect().expect("checked splittable");
                [l, r]
            })
            .collect();
        depth += 1;
    }
    sort_boxes(&mut entries, |e| &e.region);
    let nbar = entries.iter().map(|e| e.n).max().expect("non-empty cover");
    let alpha = entries
        .iter()
        .map(|e| e.observable_max)
        .fold(f64::NEG_INFINITY, f64::max);
    let c = 2.0 * cfg.rate;
    let constants = derive_constants(nbar, c, alpha)?;
    let splitting = match phi.splitting() {
        Some(s) => Some(SplittingRecord {
            splitting: *s,
            residual: crate::splitting::max_invariance_residual(system, s, 64)?,
        }),
        None => None,
    };
    Ok(CoverOutcome::Certified(Box::new(CoverCertificate {
        system: *system,
        observable: phi.kind_name(),
        rate: cfg.rate,
        entries,
        constants,
        provenance: Provenance {
            tool: format!("hypercert {}", env!("CARGO_PKG_VERSION")),
            rounding: ROUNDING_DISCIPLINE.to_string(),
            seed: 0,
            depth_max: cfg.depth_max,
            depth_reached: depth,
            n_max: cfg.n_max,
        },
        splitting,
    })))
}

/// Smallest cyclic arc `[start, start + len]` containing the given subintervals
/// of `[0, 1]`.
fn minimal_arc(mut ivs: Vec<(f64, f64)>) -> Interval {
    ivs.sort_by(|a, b| a.partial_cmp(b).expect("finite endpoints"));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in ivs {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    let first = merged[0];
    let last = *merged.last().expect("non-empty");
    // Largest uncovered gap, the wrap-around gap included.
    let mut best = (first.0 + 1.0 - last.1, first.0, last.1);
    for w in merged.windows(2) {
        let gap = w[1].0 - w[0].1;
        if gap > best.0 {
            best = (gap, w[1].0, w[0].1 + 1.0);
        }
    }
    if best.0 <= 0.0 {
        return Interval::new(0.0, 1.0);
    }
    normalize_coord(Interval::new(best.1, best.2))
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn unwrapped(iv: &Interval) -> (f64, f64) {
    (iv.lo(), iv.hi())
}

/// Closed cyclic intervals in `[0, 1]` share a point.
fn touch(a: (f64, f64), b: (f64, f64)) -> bool {
    (a.0 <= b.1 && b.0 <= a.1) || (a.1 >= 1.0 && b.0 <= 0.0) || (b.1 >= 1.0 && a.0 <= 0.0)
}

/// Groups failing cells into connected clusters of touching cells, corners
/// and the identification `0 ≡ 1` included.
fn merge_witnesses(failed: Vec<(PhaseBox, Blocking)>) -> Vec<Witness> {
    let Some((first, _)) = failed.first() else {
        return vec![];
    };
    if first.space() == PhaseSpace::TwoPoint {
        return failed
            .into_iter()
            .map(|(b, blk)| Witness {
                region: b,
                cells: 1,
                worst_cell: b,
                blocking: blk,
            })
            .collect();
    }
    let ivs: Vec<Vec<(f64, f64)>> = failed
        .iter()
        .map(|(b, _)| b.intervals().iter().map(unwrapped).collect())
        .collect();
    let dims = ivs[0].len();
    // Sweep along the first axis; cells touching x = 1 are also entered
    // shifted by −1 so that the seam is an ordinary adjacency.
    let mut events: Vec<(f64, f64, usize)> = Vec::with_capacity(ivs.len());
    for (k, c) in ivs.iter().enumerate() {
        events.push((c[0].0, c[0].1, k));
        if c[0].1 >= 1.0 {
            events.push((c[0].0 - 1.0, c[0].1 - 1.0, k));
        }
    }
    events.sort_by(|a, b| a.partial_cmp(b).expect("finite endpoints"));
    let mut parent: Vec<usize> = (0..failed.len()).collect();
    for i in 0..events.len() {
        let (_, hi_i, a) = events[i];
        for &(lo_j, _, b) in &events[i + 1..] {
            if lo_j > hi_i {
                break;
            }
            if a == b || (dims == 2 && !touch(ivs[a][1], ivs[b][1])) {
                continue;
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for k in 0..failed.len() {
        let r = find(&mut parent, k);
        groups.entry(r).or_default().push(k);
    }
    let mut out: Vec<Witness> = groups
        .into_values()
        .map(|members| {
            let axes: Vec<Interval> = (0..dims)
                .map(|d| minimal_arc(members.iter().map(|&k| ivs[k][d]).collect()))
                .collect();
            let region = if dims == 1 {
                PhaseBox::Arc(axes[0])
            } else {
                PhaseBox::Rect([axes[0], axes[1]])
            };
            let worst = members
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    failed[a]
                        .1
                        .best_upper
                        .total_cmp(&failed[b].1.best_upper)
                        .then(b.cmp(&a))
                })
                .expect("non-empty group");
            Witness {
                region,
                cells: members.len(),
                worst_cell: failed[worst].0,
                blocking: failed[worst].1,
            }
        })
        .collect();
    sort_boxes(&mut out, |w| &w.region);
    out
}

/// `N_k(x)` with `N₀ = 0` and `N_{k+1} = N_k + N₁(f^{N_k}x)`.
pub fn schedule(system: &MapSystem, cert: &CoverCertificate, x: &Point, k: usize) -> Result<usize> {
    let mut total = 0;
    let mut y = *x;
    for _ in 0..k {
        let n1 = cert.return_time(&y)?;
        total += n1;
        y = system.evaluate(&y, n1);
    }
    Ok(total)
}

/// `(Σ_{j<mN̄} φ(fʲx), −(c/2)m + C₀)`.
pub fn birkhoff_bound_check(
    system: &MapSystem,
    phi: &Observable,
    cert: &CoverCertificate,
    x: &Point,
    m: usize,
) -> Result<(f64, f64)> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    let k = &cert.constants;
    let actual = birkhoff_sum(system, phi, x, m * k.nbar)?;
    let bound = -(k.c / 2.0) * m as f64 + k.c0;
    Ok((actual, bound))
}
