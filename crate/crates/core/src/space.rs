//! Phase spaces, points and boxes.
//!
//! Circle and torus coordinates live in `[0, 1)`. A box coordinate is an
//! interval whose lower end is in `[0, 1)` and whose width is at most 1; an
//! upper end above 1 means the arc wraps through `0 ≡ 1`.

use std::fmt;

use rand::Rng;

use crate::interval::Interval;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhaseSpace {
    Circle,
    Torus,
    /// Two isolated points `p` and `q` with the discrete metric.
    TwoPoint,
}

impl PhaseSpace {
    /// Number of real coordinates of a point.
    pub fn coord_dim(&self) -> usize {
        match self {
            PhaseSpace::Circle => 1,
            PhaseSpace::Torus => 2,
            PhaseSpace::TwoPoint => 0,
        }
    }

    /// Boxes whose union is the whole space: the root of every subdivision.
    pub fn root_boxes(&self) -> Vec<PhaseBox> {
        match self {
            PhaseSpace::Circle => vec![PhaseBox::Arc(Interval::new(0.0, 1.0))],
            PhaseSpace::Torus => vec![PhaseBox::Rect([Interval::new(0.0, 1.0); 2])],
            PhaseSpace::TwoPoint => vec![PhaseBox::Atom(0), PhaseBox::Atom(1)],
        }
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            PhaseSpace::Circle => Point::Circle(rng.random::<f64>()),
            PhaseSpace::Torus => Point::Torus([rng.random::<f64>(), rng.random::<f64>()]),
            PhaseSpace::TwoPoint => Point::Atom(rng.random_range(0..2u8)),
        }
    }
}

/// Reduction mod 1 into `[0, 1)`.
pub fn reduce(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance on ℝ/ℤ.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = reduce(a - b);
    d.min(1.0 - d)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point {
    Circle(f64),
    Torus([f64; 2]),
    /// 0 is `p`, 1 is `q`.
    Atom(u8),
}

impl Point {
    pub fn circle(x: f64) -> Self {
        Point::Circle(reduce(x))
    }

    pub fn torus(x: f64, y: f64) -> Self {
        Point::Torus([reduce(x), reduce(y)])
    }

    pub fn space(&self) -> PhaseSpace {
        match self {
            Point::Circle(_) => PhaseSpace::Circle,
            Point::Torus(_) => PhaseSpace::Torus,
            Point::Atom(_) => PhaseSpace::TwoPoint,
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        match *self {
            Point::Circle(x) => vec![x],
            Point::Torus([x, y]) => vec![x, y],
            Point::Atom(i) => vec![i as f64],
        }
    }

    /// Builds a point on `space` from raw coordinates, reducing mod 1.
    pub fn from_coords(space: PhaseSpace, c: &[f64]) -> Option<Self> {
        match (space, c) {
            (PhaseSpace::Circle, [x]) => Some(Point::circle(*x)),
            (PhaseSpace::Torus, [x, y]) => Some(Point::torus(*x, *y)),
            (PhaseSpace::TwoPoint, [i]) if *i == 0.0 || *i == 1.0 => Some(Point::Atom(*i as u8)),
            _ => None,
        }
    }

    /// Distance on the phase space (discrete metric on atoms).
    pub fn dist(&self, other: &Point) -> f64 {
        match (self, other) {
            (Point::Circle(a), Point::Circle(b)) => circle_dist(*a, *b),
            (Point::Torus(a), Point::Torus(b)) => {
                circle_dist(a[0], b[0]).hypot(circle_dist(a[1], b[1]))
            }
            (Point::Atom(a), Point::Atom(b)) => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
            _ => f64::INFINITY,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Circle(x) => write!(f, "{x}"),
            Point::Torus([x, y]) => write!(f, "({x}, {y})"),
            Point::Atom(0) => write!(f, "p"),
            Point::Atom(_) => write!(f, "q"),
        }
    }
}

/// A tangent vector at a base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVector {
    pub base: Point,
    pub components: [f64; 2],
    pub dim: usize,
}

impl TangentVector {
    pub fn norm(&self) -> f64 {
        crate::matrix::vec_norm(self.components, self.dim)
    }
}

/// Puts a coordinate interval in canonical form: `lo ∈ [0,1)`, or the whole
/// circle `[0, 1]` once the width reaches 1.
pub fn normalize_coord(iv: Interval) -> Interval {
    if !(iv.lo().is_finite() && iv.hi().is_finite()) || iv.width() >= 1.0 {
        return Interval::new(0.0, 1.0);
    }
    let k = iv.lo().floor();
    if k == 0.0 {
        iv
    } else {
        iv.shift(-k)
    }
}

fn coord_contains(iv: &Interval, x: f64) -> bool {
    iv.contains(x) || iv.contains(x + 1.0)
}

fn coord_is_full(iv: &Interval) -> bool {
    iv.lo() <= 0.0 && iv.hi() >= 1.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhaseBox {
    Arc(Interval),
    Rect([Interval; 2]),
    Atom(u8),
}

impl PhaseBox {
    pub fn arc(lo: f64, hi: f64) -> Self {
        PhaseBox::Arc(normalize_coord(Interval::new(lo, hi)))
    }

    pub fn rect(x: (f64, f64), y: (f64, f64)) -> Self {
        PhaseBox::Rect([
            normalize_coord(Interval::new(x.0, x.1)),
            normalize_coord(Interval::new(y.0, y.1)),
        ])
    }

    pub fn normalized(self) -> Self {
        match self {
            PhaseBox::Arc(i) => PhaseBox::Arc(normalize_coord(i)),
            PhaseBox::Rect([a, b]) => PhaseBox::Rect([normalize_coord(a), normalize_coord(b)]),
            a => a,
        }
    }

    pub fn space(&self) -> PhaseSpace {
        match self {
            PhaseBox::Arc(_) => PhaseSpace::Circle,
            PhaseBox::Rect(_) => PhaseSpace::Torus,
            PhaseBox::Atom(_) => PhaseSpace::TwoPoint,
        }
    }

    pub fn intervals(&self) -> Vec<Interval> {
        match self {
            PhaseBox::Arc(i) => vec![*i],
            PhaseBox::Rect(r) => r.to_vec(),
            PhaseBox::Atom(_) => vec![],
        }
    }

    /// Whether coordinate `axis` crosses `0 ≡ 1`.
    pub fn wraps(&self, axis: usize) -> bool {
        self.intervals().get(axis).is_some_and(|i| i.hi() > 1.0)
    }

    pub fn is_full(&self, axis: usize) -> bool {
        self.intervals().get(axis).is_some_and(coord_is_full)
    }

    /// True for a box equal to the whole circle or torus.
    pub fn is_whole(&self) -> bool {
        match self {
            PhaseBox::Atom(_) => false,
            _ => self.intervals().iter().all(coord_is_full),
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        match (self, x) {
            (PhaseBox::Arc(i), Point::Circle(v)) => coord_contains(i, *v),
            (PhaseBox::Rect(r), Point::Torus(v)) => {
                coord_contains(&r[0], v[0]) && coord_contains(&r[1], v[1])
            }
            (PhaseBox::Atom(a), Point::Atom(b)) => a == b,
            _ => false,
        }
    }

    /// Set inclusion, accounting for wrap-around.
    pub fn is_subset_of(&self, other: &PhaseBox) -> bool {
        fn coord_subset(a: &Interval, b: &Interval) -> bool {
            coord_is_full(b)
                || b.contains_interval(a)
                || b.contains_interval(&a.shift(1.0))
                || b.contains_interval(&a.shift(-1.0))
        }
        match (self, other) {
            (PhaseBox::Arc(a), PhaseBox::Arc(b)) => coord_subset(a, b),
            (PhaseBox::Rect(a), PhaseBox::Rect(b)) => {
                coord_subset(&a[0], &b[0]) && coord_subset(&a[1], &b[1])
            }
            (PhaseBox::Atom(a), PhaseBox::Atom(b)) => a == b,
            _ => false,
        }
    }

    pub fn max_width(&self) -> f64 {
        self.intervals()
            .iter()
            .map(Interval::width)
            .fold(0.0, f64::max)
    }

    /// Splits the longest axis at its midpoint (ties go to the lowest axis).
    /// Atoms cannot be split.
    pub fn bisect(&self) -> Option<(PhaseBox, PhaseBox)> {
        let halves = |i: &Interval| {
            let m = i.mid();
            (
                normalize_coord(Interval::new(i.lo(), m)),
                normalize_coord(Interval::new(m, i.hi())),
            )
        };
        match self {
            PhaseBox::Arc(i) => {
                let (a, b) = halves(i);
                Some((PhaseBox::Arc(a), PhaseBox::Arc(b)))
            }
            PhaseBox::Rect(r) => {
                let axis = if r[1].width() > r[0].width() { 1 } else { 0 };
                let (a, b) = halves(&r[axis]);
                let mut left = *r;
                let mut right = *r;
                left[axis] = a;
                right[axis] = b;
                Some((PhaseBox::Rect(left), PhaseBox::Rect(right)))
            }
            PhaseBox::Atom(_) => None,
        }
    }

    pub fn center(&self) -> Point {
        match self {
            PhaseBox::Arc(i) => Point::circle(i.mid()),
            PhaseBox::Rect(r) => Point::torus(r[0].mid(), r[1].mid()),
            PhaseBox::Atom(a) => Point::Atom(*a),
        }
    }

    /// Corner points followed by the center.
    pub fn sample_points(&self) -> Vec<Point> {
        let mut pts = match self {
            PhaseBox::Arc(i) => vec![Point::circle(i.lo()), Point::circle(i.hi())],
            PhaseBox::Rect(r) => vec![
                Point::torus(r[0].lo(), r[1].lo()),
                Point::torus(r[0].hi(), r[1].lo()),
                Point::torus(r[0].lo(), r[1].hi()),
                Point::torus(r[0].hi(), r[1].hi()),
            ],
            PhaseBox::Atom(_) => vec![],
        };
        pts.push(self.center());
        pts
    }

    /// A uniformly random point of the box.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let pick = |i: &Interval, rng: &mut R| {
            let t: f64 = rng.random();
            (i.lo() + t * i.width()).min(i.hi())
        };
        match self {
            PhaseBox::Arc(i) => Point::circle(pick(i, rng)),
            PhaseBox::Rect(r) => {
                let x = pick(&r[0], rng);
                let y = pick(&r[1], rng);
                Point::torus(x, y)
            }
            PhaseBox::Atom(a) => Point::Atom(*a),
        }
    }

    /// Lexicographic key on lower endpoints, used for deterministic ordering.
    pub fn sort_key(&self) -> (f64, f64, f64, f64) {
        match self {
            PhaseBox::Arc(i) => (i.lo(), 0.0, i.hi(), 0.0),
            PhaseBox::Rect(r) => (r[0].lo(), r[1].lo(), r[0].hi(), r[1].hi()),
            PhaseBox::Atom(a) => (*a as f64, 0.0, 0.0, 0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_is_idempotent() {
        for x in [-2.75, -1e-20, 0.0, 0.3, 1.0, 7.125] {
            let r = reduce(x);
            assert!((0.0..1.0).contains(&r));
            assert_eq!(reduce(r), r);
        }
    }

    #[test]
    fn wrapped_arc_contains_zero() {
        let b = PhaseBox::arc(-1.0 / 64.0, 1.0 / 64.0);
        assert!(b.wraps(0));
        assert!(b.contains(&Point::circle(0.0)));
        assert!(b.contains(&Point::circle(0.99)));
        assert!(!b.contains(&Point::circle(0.5)));
        if let PhaseBox::Arc(i) = b {
            assert_eq!(i.lo(), 63.0 / 64.0);
        }
    }

    #[test]
    fn bisect_longest_axis_first() {
        let b = PhaseBox::rect((0.0, 0.5), (0.0, 1.0));
        let (l, r) = b.bisect().unwrap();
        assert_eq!(l, PhaseBox::rect((0.0, 0.5), (0.0, 0.5)));
        assert_eq!(r, PhaseBox::rect((0.0, 0.5), (0.5, 1.0)));
        let sq = PhaseBox::rect((0.0, 0.5), (0.0, 0.5));
        let (l, _) = sq.bisect().unwrap();
        assert_eq!(l, PhaseBox::rect((0.0, 0.25), (0.0, 0.5)));
        assert!(PhaseBox::Atom(0).bisect().is_none());
    }

    #[test]
    fn wide_images_become_full() {
        let b = PhaseBox::arc(0.2, 1.4);
        assert!(b.is_full(0));
        assert!(PhaseBox::arc(0.0, 0.25).is_subset_of(&PhaseBox::arc(-0.1, 0.3)));
        assert!(PhaseBox::arc(0.95, 1.05).is_subset_of(&PhaseBox::arc(0.9, 1.1)));
    }
}
