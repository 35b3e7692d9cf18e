//! Rigorous enclosures of Birkhoff averages over boxes.
//!
//! The box is pushed forward through the system's interval image oracle and
//! the observable is enclosed on each image; the running interval sums bound
//! `(1/N) Σ_{j<N} φ(fʲy)` simultaneously for every `y` in the box. Once an
//! image covers a whole coordinate circle it stays the full coordinate, so the
//! enclosure degrades gracefully instead of failing.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::observable::Observable;
use crate::space::PhaseBox;
use crate::system::MapSystem;

/// Per-step enclosures along the interval orbit of a box.
#[derive(Clone, Debug)]
pub struct OrbitEnclosure {
    /// `phi_bounds[j]` contains `φ(fʲy)` for all `y` in the box.
    pub phi_bounds: Vec<Interval>,
    /// `sums[j]` contains `Σ_{i≤j} φ(fⁱy)`.
    pub sums: Vec<Interval>,
    /// Set when the observable could not be enclosed at step `sums.len()`.
    pub stopped: Option<String>,
}

impl OrbitEnclosure {
    /// Enclosure of the average over the first `n` steps, if computed.
    pub fn average(&self, n: usize) -> Option<Interval> {
        let s = self.sums.get(n.checked_sub(1)?)?;
        Some(average_of(s, n))
    }
}

/// Steps the interval orbit of a box one iterate at a time.
#[derive(Clone, Debug)]
pub struct OrbitStepper<'a> {
    system: &'a MapSystem,
    phi: &'a Observable,
    cur: PhaseBox,
    sum: Option<Interval>,
    steps: usize,
}

impl<'a> OrbitStepper<'a> {
    pub fn new(system: &'a MapSystem, b: &PhaseBox, phi: &'a Observable) -> Self {
        Self {
            system,
            phi,
            cur: *b,
            sum: None,
            steps: 0,
        }
    }

    /// Encloses `φ` on the next image and returns `(φ bound, running sum)`.
    pub fn step(&mut self) -> Result<(Interval, Interval)> {
        if self.steps > 0 {
            self.cur = self.system.image_box(&self.cur);
        }
        let e = self.phi.enclose(self.system, &self.cur)?;
        let acc = match self.sum {
            None => e,
            Some(s) => s.add(&e),
        };
        self.sum = Some(acc);
        self.steps += 1;
        Ok((e, acc))
    }

    /// Current image box (the box itself before the first step).
    pub fn current(&self) -> &PhaseBox {
        &self.cur
    }
}

/// Average enclosure from a running sum over `n ≥ 1` steps.
pub fn average_of(sum: &Interval, n: usize) -> Interval {
    sum.div(&Interval::point(n as f64))
        .expect("n >= 1 is nonzero")
}

/// Encloses up to `n` steps; stops early if the observable leaves its domain.
pub fn enclose_orbit(system: &MapSystem, b: &PhaseBox, phi: &Observable, n: usize) -> OrbitEnclosure {
    let mut phi_bounds = Vec::with_capacity(n);
    let mut sums = Vec::with_capacity(n);
    let mut stepper = OrbitStepper::new(system, b, phi);
    let mut stopped = None;
    for _ in 0..n {
        match stepper.step() {
            Ok((e, acc)) => {
                phi_bounds.push(e);
                sums.push(acc);
            }
            Err(err) => {
                stopped = Some(err.to_string());
                break;
            }
        }
    }
    OrbitEnclosure {
        phi_bounds,
        sums,
        stopped,
    }
}

/// Interval containing `{(1/N) Σ_{j<N} φ(fʲy) : y ∈ B}`.
pub fn enclose_orbit_average(
    system: &MapSystem,
    b: &PhaseBox,
    phi: &Observable,
    n: usize,
) -> Result<Interval> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    let orbit = enclose_orbit(system, b, phi, n);
    match orbit.average(n) {
        Some(avg) => Ok(avg),
        None => Err(Error::Domain(orbit.stopped.unwrap_or_default())),
    }
}
