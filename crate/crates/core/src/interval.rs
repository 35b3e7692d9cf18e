//! Closed real intervals with outward rounding.
//!
//! Every operation first computes its endpoints in round-to-nearest and then
//! pushes them outward: one ulp for the IEEE-exact operations (`+ - * / sqrt`),
//! two ulps for the libm transcendental functions, whose results are within one
//! ulp of the exact value on the supported platforms. The resulting interval
//! therefore contains the exact real image of its inputs.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use crate::error::{Error, Result};

/// Name of the rounding discipline recorded in certificates.
pub const ROUNDING_DISCIPLINE: &str = "ulp-inflation";

#[inline]
fn down(x: f64) -> f64 {
    if x == f64::NEG_INFINITY || x.is_nan() {
        x
    } else {
        x.next_down()
    }
}

#[inline]
fn up(x: f64) -> f64 {
    if x == f64::INFINITY || x.is_nan() {
        x
    } else {
        x.next_up()
    }
}

#[inline]
fn down2(x: f64) -> f64 {
    down(down(x))
}

#[inline]
fn up2(x: f64) -> f64 {
    up(up(x))
}

#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl Interval {
    /// Builds `[lo, hi]`. Panics if `lo > hi` or either endpoint is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn try_new(lo: f64, hi: f64) -> Result<Self> {
        if lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::Domain(format!("invalid interval [{lo}, {hi}]")))
        }
    }

    pub const fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    /// An interval guaranteed to contain 2π.
    pub fn tau() -> Self {
        Self {
            lo: TAU.next_down(),
            hi: TAU.next_up(),
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Shift by an integer; exact for the magnitudes used on the phase space.
    pub(crate) fn shift(&self, k: f64) -> Interval {
        Interval {
            lo: self.lo + k,
            hi: self.hi + k,
        }
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval {
            lo: down(self.lo + o.lo),
            hi: up(self.hi + o.hi),
        }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        Interval {
            lo: down(self.lo - o.hi),
            hi: up(self.hi - o.lo),
        }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let p = [
            self.lo * o.lo,
            self.lo * o.hi,
            self.hi * o.lo,
            self.hi * o.hi,
        ];
        // 0 * inf produces NaN; treat such a product as unbounded.
        if p.iter().any(|v| v.is_nan()) {
            return Interval::ENTIRE;
        }
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval {
            lo: down(lo),
            hi: up(hi),
        }
    }

    pub fn scale(&self, k: f64) -> Interval {
        self.mul(&Interval::point(k))
    }

    pub fn div(&self, o: &Interval) -> Result<Interval> {
        if o.contains_zero() {
            return Err(Error::Domain(format!(
                "division by an interval containing zero: {o:?}"
            )));
        }
        let p = [
            self.lo / o.lo,
            self.lo / o.hi,
            self.hi / o.lo,
            self.hi / o.hi,
        ];
        if p.iter().any(|v| v.is_nan()) {
            return Ok(Interval::ENTIRE);
        }
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Interval {
            lo: down(lo),
            hi: up(hi),
        })
    }

    pub fn recip(&self) -> Result<Interval> {
        Interval::point(1.0).div(self)
    }

    pub fn abs(&self) -> Interval {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            self.neg()
        } else {
            Interval {
                lo: 0.0,
                hi: self.hi.max(-self.lo),
            }
        }
    }

    /// Tight square (never negative, unlike `x.mul(x)`).
    pub fn sqr(&self) -> Interval {
        let a = self.abs();
        Interval {
            lo: down(a.lo * a.lo).max(0.0),
            hi: up(a.hi * a.hi),
        }
    }

    /// Square root of the nonnegative part; errors if the interval lies below 0.
    pub fn sqrt(&self) -> Result<Interval> {
        if self.hi < 0.0 {
            return Err(Error::Domain(format!("sqrt of negative interval {self:?}")));
        }
        let lo = self.lo.max(0.0);
        Ok(Interval {
            lo: down(lo.sqrt()).max(0.0),
            hi: up(self.hi.sqrt()),
        })
    }

    pub fn log(&self) -> Result<Interval> {
        if self.lo <= 0.0 {
            return Err(Error::Domain(format!(
                "log of non-positive interval {self:?}"
            )));
        }
        Ok(Interval {
            lo: down2(self.lo.ln()),
            hi: up2(self.hi.ln()),
        })
    }

    pub fn exp(&self) -> Interval {
        Interval {
            lo: down2(self.lo.exp()).max(0.0),
            hi: up2(self.hi.exp()),
        }
    }

    pub fn sin(&self) -> Interval {
        periodic_extrema(self, f64::sin, FRAC_PI_2, -FRAC_PI_2)
    }

    pub fn cos(&self) -> Interval {
        periodic_extrema(self, f64::cos, 0.0, PI)
    }

    /// sin(2πx) over the interval.
    pub fn sin_tau(&self) -> Interval {
        Interval::tau().mul(self).sin()
    }

    /// cos(2πx) over the interval.
    pub fn cos_tau(&self) -> Interval {
        Interval::tau().mul(self).cos()
    }

    pub fn max_with(&self, o: &Interval) -> Interval {
        Interval {
            lo: self.lo.max(o.lo),
            hi: self.hi.max(o.hi),
        }
    }
}

/// Does the interval contain some `phase + 2πk`? Errs on the side of "yes".
fn hits_phase(x: &Interval, phase: f64) -> bool {
    let t0 = (x.lo - phase) / TAU;
    let t1 = (x.hi - phase) / TAU;
    let slack = 1e-12 + 8.0 * f64::EPSILON * t0.abs().max(t1.abs());
    (t1 + slack).floor() >= (t0 - slack).ceil()
}

fn periodic_extrema(x: &Interval, f: fn(f64) -> f64, argmax: f64, argmin: f64) -> Interval {
    if !(x.lo.is_finite() && x.hi.is_finite()) || x.width() >= TAU {
        return Interval { lo: -1.0, hi: 1.0 };
    }
    let a = f(x.lo);
    let b = f(x.hi);
    let mut lo = down2(a.min(b));
    let mut hi = up2(a.max(b));
    if hits_phase(x, argmax) {
        hi = 1.0;
    }
    if hits_phase(x, argmin) {
        lo = -1.0;
    }
    Interval {
        lo: lo.max(-1.0),
        hi: hi.min(1.0),
    }
}

/// Elementary operations addressable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Log,
    Exp,
    Sin,
    Cos,
}

/// Evaluates `op` on its interval arguments (two for arithmetic, one otherwise).
pub fn interval_eval(op: ElementaryOp, args: &[Interval]) -> Result<Interval> {
    let arity = match op {
        ElementaryOp::Add | ElementaryOp::Sub | ElementaryOp::Mul | ElementaryOp::Div => 2,
        _ => 1,
    };
    if args.len() != arity {
        return Err(Error::InvalidParameter(format!(
            "{op:?} takes {arity} argument(s), got {}",
            args.len()
        )));
    }
    Ok(match op {
        ElementaryOp::Add => args[0].add(&args[1]),
        ElementaryOp::Sub => args[0].sub(&args[1]),
        ElementaryOp::Mul => args[0].mul(&args[1]),
        ElementaryOp::Div => args[0].div(&args[1])?,
        ElementaryOp::Log => args[0].log()?,
        ElementaryOp::Exp => args[0].exp(),
        ElementaryOp::Sin => args[0].sin(),
        ElementaryOp::Cos => args[0].cos(),
    })
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;

    #[test]
    fn log_of_one_two() {
        let r = Interval::new(1.0, 2.0).log().unwrap();
        assert!(r.contains_interval(&Interval::new(0.0, 0.693147)));
        assert!(r.hi() < 0.693148);
    }

    #[test]
    fn cos_quarter_turn() {
        let r = Interval::new(0.0, 0.25).cos_tau();
        assert!(r.contains_interval(&Interval::new(0.0, 1.0)));
        assert!(r.width() <= 1.0 + 1e-12);
    }

    #[test]
    fn endpoint_addition() {
        let r = Interval::new(1.0, 2.0).add(&Interval::new(-1.0, 1.0));
        assert!(r.contains_interval(&Interval::new(0.0, 3.0)));
        assert!(r.width() <= 3.0 + 1e-14);
    }

    #[test]
    fn domain_errors() {
        assert!(Interval::new(1.0, 2.0).div(&Interval::new(-1.0, 1.0)).is_err());
        assert!(Interval::new(0.0, 2.0).log().is_err());
        assert!(Interval::new(-3.0, -1.0).sqrt().is_err());
        assert!(interval_eval(ElementaryOp::Log, &[Interval::new(-1.0, 1.0)]).is_err());
        assert!(interval_eval(ElementaryOp::Add, &[Interval::point(1.0)]).is_err());
    }

    #[test]
    fn sin_interior_extrema() {
        let r = Interval::new(1.0, 2.0).sin();
        assert_eq!(r.hi(), 1.0);
        assert!(r.lo() <= 1.0f64.sin());
        let r = Interval::new(4.0, 5.0).sin();
        assert_eq!(r.lo(), -1.0);
        let r = Interval::new(-0.1, 0.1).cos();
        assert_eq!(r.hi(), 1.0);
        let r = Interval::new(0.0, 10.0).sin();
        assert_eq!((r.lo(), r.hi()), (-1.0, 1.0));
    }

    #[test]
    fn square_is_nonnegative() {
        let r = Interval::new(-2.0, 1.0).sqr();
        assert_eq!(r.lo(), 0.0);
        assert!(r.contains(4.0));
    }
}
