//! Certification and falsification of uniform expansion for smooth maps of
//! the circle and the 2-torus.
//!
//! A cover of the phase space by boxes, each with a return time along which
//! the average of `λ(x) = log‖(df_x)⁻¹‖` is rigorously below `−r`, yields
//! explicit constants `C > 0`, `σ > 1` with `‖df_xⁿ v‖ ≥ Cσⁿ‖v‖`. Conversely a
//! periodic orbit with nonnegative average rules out any such cover.

pub mod cli;
pub mod constants;
pub mod cover;
pub mod document;
pub mod enclosure;
pub mod error;
pub mod falsify;
pub mod hexfloat;
pub mod interval;
pub mod matrix;
pub mod measure;
pub mod observable;
pub mod space;
pub mod splitting;
pub mod system;

pub use constants::{derive_constants, verify_expansion, ExpansionConstants, ExpansionReport, Probe};
pub use cover::{
    build_cover, find_box_time, birkhoff_bound_check, schedule, CoverCertificate, CoverConfig, CoverEntry, CoverOutcome,
    InconclusiveReport, Witness,
};
pub use enclosure::enclose_orbit_average;
pub use error::{Error, Result};
pub use falsify::{
    empirical_measure_diagnostic, eventual_expansion_check, falsify_total_probability, find_periodic_orbits,
    orbit_average, PeriodicOrbit, PeriodicOrbitWitness,
};
pub use interval::{interval_eval, ElementaryOp, Interval};
pub use matrix::{matrix_inv_norm_bound, IMat, Mat};
pub use measure::{integrate, invariance_defect, lyapunov_exponent, EmpiricalMeasure};
pub use observable::{birkhoff_average, observable_lambda, CenterSign, Observable, Which};
pub use space::{PhaseBox, PhaseSpace, Point};
pub use splitting::{certify_hyperbolic, estimate_splitting, HyperbolicOutcome, Line, Splitting};
pub use system::{MapSystem, GALLERY};
