//! Python bindings for the `hypercert` certifier and falsifier.
//!
//! Points cross the boundary as a float (circle), an `(x, y)` tuple (torus),
//! or `"p"` / `"q"` (two-point space).

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use pyo3::IntoPyObjectExt;

use ::hypercert::constants::{verify_expansion, Probe};
use ::hypercert::cover::{build_cover, CoverCertificate, CoverConfig, CoverOutcome};
use ::hypercert::document::{from_json, observable_from_name, report_json, to_json};
use ::hypercert::falsify::falsify_total_probability;
use ::hypercert::measure::{lyapunov_exponent, lyapunov_table};
use ::hypercert::observable::{birkhoff_average, Observable};
use ::hypercert::space::{PhaseSpace, Point};
use ::hypercert::splitting::{Line, Splitting, DEFAULT_ITERATIONS};
use ::hypercert::system::{MapSystem, GALLERY};

create_exception!(hypercert, HypercertError, PyException);
create_exception!(hypercert, Inconclusive, HypercertError);

fn err(e: ::hypercert::Error) -> PyErr {
    HypercertError::new_err(e.to_string())
}

fn to_point(space: PhaseSpace, obj: &Bound<'_, PyAny>) -> PyResult<Point> {
    match space {
        PhaseSpace::Circle => Ok(Point::circle(obj.extract::<f64>()?)),
        PhaseSpace::Torus => {
            let (x, y): (f64, f64) = obj.extract()?;
            Ok(Point::torus(x, y))
        }
        PhaseSpace::TwoPoint => match obj.extract::<String>()?.as_str() {
            "p" => Ok(Point::Atom(0)),
            "q" => Ok(Point::Atom(1)),
            other => Err(PyValueError::new_err(format!("expected 'p' or 'q', got {other:?}"))),
        },
    }
}

fn from_point(py: Python<'_>, p: &Point) -> PyResult<Py<PyAny>> {
    match *p {
        Point::Circle(x) => x.into_py_any(py),
        Point::Torus([x, y]) => (x, y).into_py_any(py),
        Point::Atom(0) => "p".into_py_any(py),
        Point::Atom(_) => "q".into_py_any(py),
    }
}

fn observable(system: &MapSystem, name: &str) -> PyResult<Observable> {
    let splitting = match name {
        "lambda" => None,
        _ => Some(Splitting::for_system(system, DEFAULT_ITERATIONS).map_err(err)?),
    };
    observable_from_name(name, splitting).map_err(err)
}

/// A gallery map, e.g. `System("perturbed-doubling a=0.05")`.
#[pyclass(name = "System", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySystem {
    inner: MapSystem,
}

#[pymethods]
impl PySystem {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Self {
            inner: MapSystem::parse(spec).map_err(err)?,
        })
    }

    #[getter]
    fn id(&self) -> &'static str {
        self.inner.id()
    }

    #[getter]
    fn params<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (k, v) in self.inner.params() {
            d.set_item(k, v)?;
        }
        Ok(d)
    }

    /// `fⁿ(x)`.
    #[pyo3(signature = (x, n=1))]
    fn map(&self, py: Python<'_>, x: &Bound<'_, PyAny>, n: usize) -> PyResult<Py<PyAny>> {
        let p = to_point(self.inner.space(), x)?;
        from_point(py, &self.inner.evaluate(&p, n))
    }

    /// Rows of `df_xⁿ`.
    #[pyo3(signature = (x, n=1))]
    fn tangent_map(&self, x: &Bound<'_, PyAny>, n: usize) -> PyResult<Vec<Vec<f64>>> {
        let p = to_point(self.inner.space(), x)?;
        Ok(self.inner.tangent_map(&p, n).entries())
    }

    /// `(1/n) Σ_{j<n} φ(fʲx)` for a named observable.
    #[pyo3(signature = (x, n, observable="lambda"))]
    fn birkhoff_average(&self, x: &Bound<'_, PyAny>, n: usize, observable: &str) -> PyResult<f64> {
        let p = to_point(self.inner.space(), x)?;
        let phi = self::observable(&self.inner, observable)?;
        birkhoff_average(&self.inner, &phi, &p, n).map_err(err)
    }

    /// `(1/n) log(‖df_xⁿ v‖ / ‖v‖)`.
    fn lyapunov_exponent(&self, x: &Bound<'_, PyAny>, v: (f64, f64), n: usize) -> PyResult<f64> {
        let p = to_point(self.inner.space(), x)?;
        lyapunov_exponent(&self.inner, &p, [v.0, v.1], n).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("System({:?})", self.inner.to_string())
    }
}

/// A validated cover certificate.
#[pyclass(name = "Certificate", frozen)]
struct PyCertificate {
    inner: CoverCertificate,
}

#[pymethods]
impl PyCertificate {
    /// Parses and revalidates a certificate document.
    #[staticmethod]
    fn from_json(py: Python<'_>, text: &str) -> PyResult<Self> {
        let inner = py.detach(|| from_json(text)).map_err(err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner).map_err(err)
    }

    #[getter]
    fn system(&self) -> PySystem {
        PySystem {
            inner: self.inner.system,
        }
    }

    #[getter]
    fn observable(&self) -> &str {
        &self.inner.observable
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate
    }

    #[getter]
    fn boxes(&self) -> usize {
        self.inner.entries.len()
    }

    #[getter]
    fn nbar(&self) -> usize {
        self.inner.constants.nbar
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.constants.alpha
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.constants.sigma
    }

    /// The constant `C` in `‖df_xⁿ v‖ ≥ C σⁿ ‖v‖`.
    #[getter]
    fn big_c(&self) -> f64 {
        self.inner.constants.big_c
    }

    /// `N₁(x)`, the smallest return time of a box containing `x`.
    fn return_time(&self, x: &Bound<'_, PyAny>) -> PyResult<usize> {
        let p = to_point(self.inner.system.space(), x)?;
        self.inner.return_time(&p).map_err(err)
    }

    /// Minimum of `‖df_xⁿ v‖ / (C σⁿ)` over random samples.
    #[pyo3(signature = (samples=1000, n_max=60, seed=0))]
    fn verify(&self, py: Python<'_>, samples: usize, n_max: usize, seed: u64) -> PyResult<f64> {
        let splitting = self.inner.splitting.map(|r| r.splitting);
        let probe = match (self.inner.observable.as_str(), splitting) {
            ("lambda", _) => Probe::AllDirections,
            ("cu", Some(s)) => Probe::Expanding { splitting: s, line: Line::Unstable },
            ("cs", Some(s)) => Probe::Contracting { splitting: s, line: Line::Stable },
            ("center-expanding", Some(s)) => Probe::Expanding { splitting: s, line: s.center_line() },
            ("center-contracting", Some(s)) => Probe::Contracting { splitting: s, line: s.center_line() },
            (o, _) => return Err(HypercertError::new_err(format!("cannot verify observable `{o}`"))),
        };
        let c = &self.inner;
        let report = py
            .detach(|| verify_expansion(&c.system, &c.constants, probe, samples, n_max, seed))
            .map_err(err)?;
        Ok(report.min_ratio)
    }

    fn __repr__(&self) -> String {
        format!(
            "Certificate({}, {}, boxes={}, nbar={}, sigma={})",
            self.inner.system,
            self.inner.observable,
            self.inner.entries.len(),
            self.inner.constants.nbar,
            self.inner.constants.sigma
        )
    }
}

/// Builds a cover certificate; raises `Inconclusive` with the report JSON
/// when some region cannot be certified.
#[pyfunction]
#[pyo3(signature = (system, rate, n_max=8, depth_max=20, observable="lambda"))]
fn certify(
    py: Python<'_>,
    system: &PySystem,
    rate: f64,
    n_max: usize,
    depth_max: usize,
    observable: &str,
) -> PyResult<PyCertificate> {
    let sys = system.inner;
    let phi = self::observable(&sys, observable)?;
    let cfg = CoverConfig::new(rate, n_max, depth_max);
    match py.detach(|| build_cover(&sys, &phi, &cfg)).map_err(err)? {
        CoverOutcome::Certified(c) => Ok(PyCertificate { inner: *c }),
        CoverOutcome::Inconclusive(r) => Err(Inconclusive::new_err(report_json(&r))),
    }
}

/// Periodic orbit of period at most `period_max` with nonnegative average,
/// as a dict, or `None`.
#[pyfunction]
#[pyo3(signature = (system, period_max, observable="lambda"))]
fn falsify<'py>(
    py: Python<'py>,
    system: &PySystem,
    period_max: usize,
    observable: &str,
) -> PyResult<Option<Bound<'py, PyDict>>> {
    let sys = system.inner;
    let phi = self::observable(&sys, observable)?;
    let Some(w) = py.detach(|| falsify_total_probability(&sys, &phi, period_max)).map_err(err)? else {
        return Ok(None);
    };
    let d = PyDict::new(py);
    let points = w.points.iter().map(|p| from_point(py, p)).collect::<PyResult<Vec<_>>>()?;
    d.set_item("points", points)?;
    d.set_item("period", w.period)?;
    d.set_item("average", w.average)?;
    d.set_item("residual", w.residual)?;
    Ok(Some(d))
}

/// Rows `(n, average, exponent)` averaged over random orbits.
#[pyfunction]
#[pyo3(signature = (system, orbits=16, length=1000, samples=None, seed=0))]
fn lyapunov(
    py: Python<'_>,
    system: &PySystem,
    orbits: usize,
    length: usize,
    samples: Option<usize>,
    seed: u64,
) -> PyResult<Vec<(usize, f64, f64)>> {
    let samples = samples.unwrap_or(length.min(100));
    let sys = system.inner;
    let rows = py
        .detach(|| lyapunov_table(&sys, orbits, length, samples, seed))
        .map_err(err)?;
    Ok(rows.iter().map(|r| (r.n, r.average, r.exponent)).collect())
}

/// Gallery ids.
#[pyfunction]
fn gallery() -> Vec<&'static str> {
    GALLERY.iter().map(|g| g.id).collect()
}

#[pymodule]
fn hypercert(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<PyCertificate>()?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(falsify, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov, m)?)?;
    m.add_function(wrap_pyfunction!(gallery, m)?)?;
    m.add("HypercertError", m.py().get_type::<HypercertError>())?;
    m.add("Inconclusive", m.py().get_type::<Inconclusive>())?;
    Ok(())
}
