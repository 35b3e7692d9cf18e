//! Scalar observables along orbits: `λ(x) = log‖(df_x)⁻¹‖`, the directional
//! variants `λ^cu`, `λ^cs`, `λ^c`, and user-supplied continuous functions.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::space::{PhaseBox, Point};
use crate::splitting::{Line, Splitting};
use crate::system::{MapSystem, DET_FLOOR};

/// Sign convention for the one-dimensional center direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CenterSign {
    /// Certify expansion: the observable is `log‖df⁻¹|_{E^c}‖`.
    Expanding,
    /// Certify contraction: the observable is `log‖df|_{E^c}‖`.
    Contracting,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Cu,
    Cs,
    Center(CenterSign),
}

type PointFn = dyn Fn(&Point) -> f64 + Send + Sync;
type BoxFn = dyn Fn(&PhaseBox) -> Result<Interval> + Send + Sync;

/// A continuous observable given by a pointwise function and a box enclosure.
/// The enclosure must contain the pointwise values on every box.
#[derive(Clone)]
pub struct CustomObservable {
    pub name: String,
    point: Arc<PointFn>,
    enclose: Arc<BoxFn>,
}

impl CustomObservable {
    pub fn new(
        name: impl Into<String>,
        point: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        enclose: impl Fn(&PhaseBox) -> Result<Interval> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            point: Arc::new(point),
            enclose: Arc::new(enclose),
        }
    }
}

#[derive(Clone)]
pub enum Observable {
    Lambda,
    Directional { which: Which, splitting: Splitting },
    Custom(CustomObservable),
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Lambda => write!(f, "Lambda"),
            Observable::Directional { which, splitting } => f
                .debug_struct("Directional")
                .field("which", which)
                .field("splitting", splitting)
                .finish(),
            Observable::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

impl Observable {
    pub fn directional(which: Which, splitting: Splitting) -> Self {
        Observable::Directional { which, splitting }
    }

    /// Short name used on the command line and in certificates.
    pub fn kind_name(&self) -> String {
        match self {
            Observable::Lambda => "lambda".into(),
            Observable::Directional { which, .. } => match which {
                Which::Cu => "cu".into(),
                Which::Cs => "cs".into(),
                Which::Center(CenterSign::Expanding) => "center-expanding".into(),
                Which::Center(CenterSign::Contracting) => "center-contracting".into(),
            },
            Observable::Custom(c) => format!("custom:{}", c.name),
        }
    }

    pub fn splitting(&self) -> Option<&Splitting> {
        match self {
            Observable::Directional { splitting, .. } => Some(splitting),
            _ => None,
        }
    }

    pub fn evaluate(&self, system: &MapSystem, x: &Point) -> Result<f64> {
        match self {
            Observable::Lambda => observable_lambda(system, x),
            Observable::Directional { which, splitting } => {
                directional_observable(system, splitting, *which, x)
            }
            Observable::Custom(c) => Ok((c.point)(x)),
        }
    }

    /// Interval containing the observable's values on `b`.
    pub fn enclose(&self, system: &MapSystem, b: &PhaseBox) -> Result<Interval> {
        match self {
            Observable::Lambda => {
                let j = system.jacobian_box(b);
                if j.dim() == 1 {
                    let d = j.get(0, 0).abs();
                    if d.lo() <= 0.0 {
                        return Err(Error::Domain(format!("derivative enclosure {d:?} contains 0")));
                    }
                    Ok(d.log()?.neg())
                } else {
                    j.inv_norm_bound()?.log()
                }
            }
            Observable::Directional { which, splitting } => {
                let (line, sign) = line_and_sign(splitting, *which);
                let theta = splitting.angle_enclosure(system, b, line)?;
                let v = [theta.cos(), theta.sin()];
                let w = system.jacobian_box(b).apply(v);
                let stretch = w[0].sqr().add(&w[1].sqr()).sqrt()?;
                if stretch.lo() <= 0.0 {
                    return Err(Error::Domain(format!(
                        "restricted stretch enclosure {stretch:?} reaches 0"
                    )));
                }
                let l = stretch.log()?;
                Ok(if sign < 0.0 { l.neg() } else { l })
            }
            Observable::Custom(c) => (c.enclose)(b),
        }
    }
}

/// Line a directional observable lives on, and the sign applied to
/// `log(stretch)`: −1 for expansion-type observables, +1 for contraction-type.
fn line_and_sign(splitting: &Splitting, which: Which) -> (Line, f64) {
    match which {
        Which::Cu => (Line::Unstable, -1.0),
        Which::Cs => (Line::Stable, 1.0),
        Which::Center(sign) => (
            splitting.center_line(),
            match sign {
                CenterSign::Expanding => -1.0,
                CenterSign::Contracting => 1.0,
            },
        ),
    }
}

/// `λ(x) = log‖(df_x)⁻¹‖`; `−log|f′(x)|` on the circle.
pub fn observable_lambda(system: &MapSystem, x: &Point) -> Result<f64> {
    let m = system.check_invertible(x)?;
    Ok(if m.dim() == 1 {
        -m.get(0, 0).abs().ln()
    } else {
        m.inv_op_norm().ln()
    })
}

/// Stretch factor `‖df_x e‖` of the unit vector at angle `theta`.
pub fn stretch(system: &MapSystem, x: &Point, theta: f64) -> f64 {
    let w = system.jacobian(x).apply([theta.cos(), theta.sin()]);
    w[0].hypot(w[1])
}

/// `λ^cu`, `λ^cs` or the center observable at `x`.
pub fn directional_observable(
    system: &MapSystem,
    splitting: &Splitting,
    which: Which,
    x: &Point,
) -> Result<f64> {
    if system.tangent_dim() != 2 {
        return Err(Error::Unsupported(format!(
            "directional observables need a 2-dimensional system, {} is 1-dimensional",
            system.id()
        )));
    }
    let (line, sign) = line_and_sign(splitting, which);
    let theta = splitting.angle(system, x, line)?;
    let s = stretch(system, x, theta);
    if s < DET_FLOOR {
        return Err(Error::NonInvertible {
            at: x.to_string(),
            det: s,
        });
    }
    Ok(sign * s.ln())
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Mean of `values` with compensated summation.
pub fn compensated_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut n = 0usize;
    let mut s = CompensatedSum::default();
    for v in values {
        s.add(v);
        n += 1;
    }
    s.value() / n as f64
}

/// Birkhoff sum `Σ_{j<n} φ(fʲx)`.
pub fn birkhoff_sum(system: &MapSystem, phi: &Observable, x: &Point, n: usize) -> Result<f64> {
    let mut p = *x;
    let mut s = CompensatedSum::default();
    for _ in 0..n {
        s.add(phi.evaluate(system, &p)?);
        p = system.map(&p);
    }
    Ok(s.value())
}

/// Birkhoff average `(1/n) Σ_{j<n} φ(fʲx)`.
pub fn birkhoff_average(
    system: &MapSystem,
    phi: &Observable,
    x: &Point,
    n: usize,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("Birkhoff average needs n >= 1".into()));
    }
    let mut p = *x;
    let values = (0..n)
        .map(|_| {
            let v = phi.evaluate(system, &p);
            p = system.map(&p);
            v
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(compensated_mean(values))
}
