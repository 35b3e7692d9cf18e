//! The gallery of map systems.
//!
//! Each system exposes its map, exact symbolic derivative, and interval
//! enclosures of both over boxes. Systems are addressed by an id and a
//! `key=value` parameter list, e.g. `perturbed-doubling a=0.05`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::matrix::{IMat, Mat};
use crate::space::{normalize_coord, reduce, PhaseBox, PhaseSpace, Point};

/// Determinants below this magnitude are treated as critical points.
pub const DET_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    Doubling,
    PerturbedDoubling { a: f64 },
    Intermittent,
    Cat,
    CatInverse,
    PerturbedCat { a: f64 },
    Period2Cocycle,
}

#[derive(Clone, Copy, Debug)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub domain: &'static str,
}

#[derive(Clone, Copy, Debug)]
pub struct GalleryEntry {
    pub id: &'static str,
    pub space: PhaseSpace,
    pub params: &'static [ParamSpec],
    pub summary: &'static str,
}

pub const GALLERY: &[GalleryEntry] = &[
    GalleryEntry {
        id: "doubling",
        space: PhaseSpace::Circle,
        params: &[],
        summary: "f(x) = 2x mod 1",
    },
    GalleryEntry {
        id: "perturbed-doubling",
        space: PhaseSpace::Circle,
        params: &[ParamSpec {
            name: "a",
            default: 0.05,
            domain: "|a| < 1/(2π)",
        }],
        summary: "f(x) = 2x + a sin(2πx) mod 1",
    },
    GalleryEntry {
        id: "intermittent",
        space: PhaseSpace::Circle,
        params: &[],
        summary: "f(x) = 2x - sin(2πx)/(2π) mod 1, neutral fixed point at 0",
    },
    GalleryEntry {
        id: "cat",
        space: PhaseSpace::Torus,
        params: &[],
        summary: "toral automorphism with rows (2,1),(1,1)",
    },
    GalleryEntry {
        id: "cat-inverse",
        space: PhaseSpace::Torus,
        params: &[],
        summary: "inverse of cat, rows (1,-1),(-1,2)",
    },
    GalleryEntry {
        id: "perturbed-cat",
        space: PhaseSpace::Torus,
        params: &[ParamSpec {
            name: "a",
            default: 0.01,
            domain: "finite a",
        }],
        summary: "cat composed with (x, y) -> (x + a sin(2πy), y)",
    },
    GalleryEntry {
        id: "period2-cocycle",
        space: PhaseSpace::TwoPoint,
        params: &[],
        summary: "two-point orbit {p, q} with df_p = diag(1/2, 3), df_q = diag(3, 1/2)",
    },
];

const CAT: [[f64; 2]; 2] = [[2.0, 1.0], [1.0, 1.0]];
const CAT_INV: [[f64; 2]; 2] = [[1.0, -1.0], [-1.0, 2.0]];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapSystem {
    family: Family,
}

impl MapSystem {
    pub fn new(family: Family) -> Result<Self> {
        match family {
            Family::PerturbedDoubling { a } if !(a.is_finite() && a.abs() < 1.0 / TAU) => Err(
                Error::InvalidParameter(format!("perturbed-doubling needs |a| < 1/(2π), got {a}")),
            ),
            Family::PerturbedCat { a } if !a.is_finite() => Err(Error::InvalidParameter(
                format!("perturbed-cat needs finite a, got {a}"),
            )),
            _ => Ok(Self { family }),
        }
    }

    /// Looks up a gallery system by id with `(name, value)` parameters.
    pub fn from_id(id: &str, params: &[(String, f64)]) -> Result<Self> {
        let entry = GALLERY
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| Error::UnknownSystem(id.to_string()))?;
        for (k, _) in params {
            if !entry.params.iter().any(|p| p.name == k) {
                return Err(Error::InvalidParameter(format!(
                    "system `{id}` has no parameter `{k}`"
                )));
            }
        }
        let get = |name: &str| {
            params
                .iter()
                .rev()
                .find(|(k, _)| k == name)
                .map(|(_, v)| *v)
                .or_else(|| entry.params.iter().find(|p| p.name == name).map(|p| p.default))
                .unwrap_or(0.0)
        };
        let family = match id {
            "doubling" => Family::Doubling,
            "perturbed-doubling" => Family::PerturbedDoubling { a: get("a") },
            "intermittent" => Family::Intermittent,
            "cat" => Family::Cat,
            "cat-inverse" => Family::CatInverse,
            "perturbed-cat" => Family::PerturbedCat { a: get("a") },
            "period2-cocycle" => Family::Period2Cocycle,
            _ => unreachable!(),
        };
        Self::new(family)
    }

    /// Parses `id key=value ...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut words = spec.split_whitespace();
        let id = words
            .next()
            .ok_or_else(|| Error::InvalidParameter("empty system spec".into()))?;
        let params = words.map(parse_param).collect::<Result<Vec<_>>>()?;
        Self::from_id(id, &params)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn id(&self) -> &'static str {
        match self.family {
            Family::Doubling => "doubling",
            Family::PerturbedDoubling { .. } => "perturbed-doubling",
            Family::Intermittent => "intermittent",
            Family::Cat => "cat",
            Family::CatInverse => "cat-inverse",
            Family::PerturbedCat { .. } => "perturbed-cat",
            Family::Period2Cocycle => "period2-cocycle",
        }
    }

    pub fn params(&self) -> Vec<(String, f64)> {
        match self.family {
            Family::PerturbedDoubling { a } | Family::PerturbedCat { a } => {
                vec![("a".to_string(), a)]
            }
            _ => vec![],
        }
    }

    pub fn space(&self) -> PhaseSpace {
        match self.family {
            Family::Doubling | Family::PerturbedDoubling { .. } | Family::Intermittent => {
                PhaseSpace::Circle
            }
            Family::Cat | Family::CatInverse | Family::PerturbedCat { .. } => PhaseSpace::Torus,
            Family::Period2Cocycle => PhaseSpace::TwoPoint,
        }
    }

    /// Dimension of the tangent spaces.
    pub fn tangent_dim(&self) -> usize {
        match self.space() {
            PhaseSpace::Circle => 1,
            _ => 2,
        }
    }

    /// Topological degree of a circle map.
    pub fn degree(&self) -> Option<i64> {
        match self.space() {
            PhaseSpace::Circle => Some(2),
            _ => None,
        }
    }

    pub fn is_diffeomorphism(&self) -> bool {
        self.space() != PhaseSpace::Circle
    }

    /// The system of `f⁻¹`, when it belongs to the gallery.
    pub fn inverse_system(&self) -> Option<MapSystem> {
        match self.family {
            Family::Cat => Some(MapSystem {
                family: Family::CatInverse,
            }),
            Family::CatInverse => Some(MapSystem {
                family: Family::Cat,
            }),
            _ => None,
        }
    }

    fn linear(&self) -> Option<[[f64; 2]; 2]> {
        match self.family {
            Family::Cat => Some(CAT),
            Family::CatInverse => Some(CAT_INV),
            _ => None,
        }
    }

    /// Integer matrix of a linear toral automorphism (also the unperturbed
    /// part of `perturbed-cat`).
    pub fn linear_part(&self) -> Option<[[i64; 2]; 2]> {
        let m = match self.family {
            Family::Cat | Family::PerturbedCat { .. } => CAT,
            Family::CatInverse => CAT_INV,
            _ => return None,
        };
        Some([
            [m[0][0] as i64, m[0][1] as i64],
            [m[1][0] as i64, m[1][1] as i64],
        ])
    }

    /// Circle lift `F : ℝ → ℝ` with `F(x + 1) = F(x) + degree`.
    pub fn circle_lift(&self, x: f64) -> f64 {
        match self.family {
            Family::Doubling => 2.0 * x,
            Family::PerturbedDoubling { a } => 2.0 * x + a * (TAU * x).sin(),
            Family::Intermittent => 2.0 * x - (TAU * x).sin() / TAU,
            _ => panic!("circle_lift on a non-circle system"),
        }
    }

    /// Torus lift `F : ℝ² → ℝ²`.
    pub fn torus_lift(&self, v: [f64; 2]) -> [f64; 2] {
        let [x, y] = v;
        match self.family {
            Family::PerturbedCat { a } => {
                let u = x + a * (TAU * y).sin();
                [2.0 * u + y, u + y]
            }
            _ => {
                let m = self.linear().expect("torus_lift on a non-torus system");
                [m[0][0] * x + m[0][1] * y, m[1][0] * x + m[1][1] * y]
            }
        }
    }

    pub fn map(&self, x: &Point) -> Point {
        match *x {
            Point::Circle(v) => Point::circle(self.circle_lift(v)),
            Point::Torus(v) => {
                let [a, b] = self.torus_lift(v);
                Point::torus(a, b)
            }
            Point::Atom(i) => Point::Atom(1 - i),
        }
    }

    pub fn inverse(&self, x: &Point) -> Result<Point> {
        match (*x, self.family) {
            (Point::Torus([u, v]), Family::PerturbedCat { a }) => {
                let (s, y) = (u - v, -u + 2.0 * v);
                Ok(Point::torus(s - a * (TAU * y).sin(), y))
            }
            (Point::Torus(v), _) => {
                let inv = self
                    .inverse_system()
                    .expect("linear torus system has an inverse");
                Ok(Point::Torus(
                    inv.torus_lift(v).map(reduce),
                ))
            }
            (Point::Atom(i), _) => Ok(Point::Atom(1 - i)),
            _ => Err(Error::Unsupported(format!(
                "{} is not invertible",
                self.id()
            ))),
        }
    }

    /// `fⁿ(x)`.
    pub fn evaluate(&self, x: &Point, n: usize) -> Point {
        (0..n).fold(*x, |p, _| self.map(&p))
    }

    /// Derivative `df_x`.
    pub fn jacobian(&self, x: &Point) -> Mat {
        match (*x, self.family) {
            (Point::Circle(_), Family::Doubling) => Mat::scalar(2.0),
            (Point::Circle(v), Family::PerturbedDoubling { a }) => {
                Mat::scalar(2.0 + TAU * a * (TAU * v).cos())
            }
            (Point::Circle(v), Family::Intermittent) => Mat::scalar(2.0 - (TAU * v).cos()),
            (Point::Torus([_, y]), Family::PerturbedCat { a }) => {
                let s = TAU * a * (TAU * y).cos();
                Mat::new2(2.0, 2.0 * s + 1.0, 1.0, s + 1.0)
            }
            (Point::Torus(_), _) => {
                let m = self.linear().expect("linear torus system");
                Mat::new2(m[0][0], m[0][1], m[1][0], m[1][1])
            }
            (Point::Atom(0), _) => Mat::diag(0.5, 3.0),
            (Point::Atom(_), _) => Mat::diag(3.0, 0.5),
            _ => panic!("point {x:?} is not on the phase space of {}", self.id()),
        }
    }

    /// Checks the local-diffeomorphism premise at `x`.
    pub fn check_invertible(&self, x: &Point) -> Result<Mat> {
        let m = self.jacobian(x);
        let det = m.det();
        if det.abs() < DET_FLOOR {
            return Err(Error::NonInvertible {
                at: x.to_string(),
                det,
            });
        }
        Ok(m)
    }

    /// Ordered product `df_{f^{n-1}x} ⋯ df_x`; identity for `n = 0`.
    pub fn tangent_map(&self, x: &Point, n: usize) -> Mat {
        let mut acc = Mat::identity(self.tangent_dim());
        let mut p = *x;
        for _ in 0..n {
            acc = self.jacobian(&p).mul(&acc);
            p = self.map(&p);
        }
        acc
    }

    /// Interval image of a box, normalized.
    pub fn image_box(&self, b: &PhaseBox) -> PhaseBox {
        match (*b, self.family) {
            (PhaseBox::Arc(x), fam) => {
                let img = match fam {
                    Family::Doubling => x.scale(2.0),
                    Family::PerturbedDoubling { a } => x.scale(2.0).add(&x.sin_tau().scale(a)),
                    Family::Intermittent => {
                        let inv_tau = Interval::point(1.0)
                            .div(&Interval::tau())
                            .expect("2π is nonzero");
                        x.scale(2.0).sub(&x.sin_tau().mul(&inv_tau))
                    }
                    _ => panic!("arc box on a non-circle system"),
                };
                PhaseBox::Arc(normalize_coord(img))
            }
            (PhaseBox::Rect([x, y]), Family::PerturbedCat { a }) => {
                let u = x.add(&y.sin_tau().scale(a));
                PhaseBox::Rect([
                    normalize_coord(u.scale(2.0).add(&y)),
                    normalize_coord(u.add(&y)),
                ])
            }
            (PhaseBox::Rect([x, y]), _) => {
                let m = self.linear().expect("rect box on a non-torus system");
                let row = |r: [f64; 2]| x.scale(r[0]).add(&y.scale(r[1]));
                PhaseBox::Rect([normalize_coord(row(m[0])), normalize_coord(row(m[1]))])
            }
            (PhaseBox::Atom(i), _) => PhaseBox::Atom(1 - i),
        }
    }

    /// Interval derivative over a box.
    pub fn jacobian_box(&self, b: &PhaseBox) -> IMat {
        let p = Interval::point;
        match (*b, self.family) {
            (PhaseBox::Arc(_), Family::Doubling) => IMat::scalar(p(2.0)),
            (PhaseBox::Arc(x), Family::PerturbedDoubling { a }) => {
                IMat::scalar(p(2.0).add(&x.cos_tau().mul(&Interval::tau().scale(a))))
            }
            (PhaseBox::Arc(x), Family::Intermittent) => IMat::scalar(p(2.0).sub(&x.cos_tau())),
            (PhaseBox::Rect([_, y]), Family::PerturbedCat { a }) => {
                let s = y.cos_tau().mul(&Interval::tau().scale(a));
                IMat::new2(p(2.0), s.scale(2.0).add(&p(1.0)), p(1.0), s.add(&p(1.0)))
            }
            (PhaseBox::Rect(_), _) => {
                IMat::from_mat(&self.jacobian(&Point::Torus([0.0, 0.0])))
            }
            (PhaseBox::Atom(i), _) => IMat::from_mat(&self.jacobian(&Point::Atom(i))),
            _ => panic!("box {b:?} is not on the phase space of {}", self.id()),
        }
    }

    /// Angles in `[0, π)` of the exact unstable and stable lines, for systems
    /// whose invariant splitting is known in closed form.
    pub fn exact_splitting(&self) -> Option<[f64; 2]> {
        match self.family {
            Family::Period2Cocycle => Some([PI / 2.0, 0.0]),
            Family::PerturbedCat { a } if a == 0.0 => {
                MapSystem { family: Family::Cat }.exact_splitting()
            }
            _ => {
                let m = self.linear()?;
                let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
                let tr = a + d;
                let det = a * d - b * c;
                let disc = (tr * tr - 4.0 * det).sqrt();
                let big = (tr + disc) / 2.0;
                let small = (tr - disc) / 2.0;
                let angle = |lam: f64| {
                    // (A - λI)v = 0 with v = (b, λ - a)
                    let t = (lam - a).atan2(b);
                    t.rem_euclid(PI)
                };
                Some([angle(big), angle(small)])
            }
        }
    }
}

impl fmt::Display for MapSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())?;
        for (k, v) in self.params() {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Parses a single `key=value` parameter.
pub fn parse_param(s: &str) -> Result<(String, f64)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got `{s}`")))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("`{v}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::InvalidParameter(format!("`{s}` is not finite")));
    }
    Ok((k.trim().to_string(), v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(spec: &str) -> MapSystem {
        MapSystem::parse(spec).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(sys("doubling").evaluate(&Point::circle(0.3), 1), Point::circle(0.6));
        assert_eq!(
            sys("cat").evaluate(&Point::torus(0.5, 0.5), 1),
            Point::torus(0.5, 0.0)
        );
        assert_eq!(sys("intermittent").evaluate(&Point::circle(0.0), 10), Point::circle(0.0));
        let x = Point::circle(0.37);
        assert_eq!(sys("doubling").evaluate(&x, 0), x);
    }

    #[test]
    fn tangent_map_examples() {
        assert_eq!(sys("doubling").tangent_map(&Point::circle(0.1), 5), Mat::scalar(32.0));
        assert_eq!(
            sys("period2-cocycle").tangent_map(&Point::Atom(0), 2),
            Mat::diag(1.5, 1.5)
        );
        assert_eq!(
            sys("cat").tangent_map(&Point::torus(0.3, 0.9), 1),
            Mat::new2(2.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn parsing_errors() {
        assert!(matches!(MapSystem::parse("henon"), Err(Error::UnknownSystem(_))));
        assert!(MapSystem::parse("perturbed-doubling a=0.2").is_err());
        assert!(MapSystem::parse("perturbed-doubling b=0.01").is_err());
        assert!(MapSystem::parse("perturbed-doubling a=x").is_err());
        assert!(MapSystem::parse("doubling a").is_err());
        let s = sys("perturbed-doubling a=0.01");
        assert_eq!(s.params(), vec![("a".to_string(), 0.01)]);
        assert_eq!(s.to_string(), "perturbed-doubling a=0.01");
    }

    #[test]
    fn inverse_undoes_map() {
        for spec in ["cat", "cat-inverse", "perturbed-cat a=0.05", "period2-cocycle"] {
            let s = sys(spec);
            let pts = match s.space() {
                PhaseSpace::TwoPoint => vec![Point::Atom(0), Point::Atom(1)],
                _ => vec![Point::torus(0.1, 0.7), Point::torus(0.93, 0.02)],
            };
            for x in pts {
                let y = s.inverse(&s.map(&x)).unwrap();
                assert!(x.dist(&y) < 1e-12, "{spec}: {x} vs {y}");
            }
        }
        assert!(sys("doubling").inverse(&Point::circle(0.2)).is_err());
    }

    #[test]
    fn cat_splitting_angles() {
        let [u, s] = sys("cat").exact_splitting().unwrap();
        assert!((u - ((5f64.sqrt() - 1.0) / 2.0).atan()).abs() < 1e-15);
        assert!(((u - s).abs() - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn intermittent_has_unit_slope_at_zero() {
        let m = sys("intermittent").check_invertible(&Point::circle(0.0)).unwrap();
        assert_eq!(m.get(0, 0), 1.0);
    }
}
