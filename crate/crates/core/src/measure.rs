//! Empirical measures on orbit segments, Birkhoff-limit estimates, and
//! Lyapunov exponents of the derivative cocycle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cover::pool;
use crate::error::{Error, Result};
use crate::matrix::vec_norm;
use crate::observable::{compensated_mean, CompensatedSum, Observable};
use crate::space::Point;
use crate::system::MapSystem;

/// `μ = (1/n) Σ_{j<n} δ_{fʲx}`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    pub system: MapSystem,
    pub base: Point,
    /// The atoms `x, fx, …, f^{n−1}x`, each of mass `1/n`.
    pub atoms: Vec<Point>,
    /// `fⁿx`, the first point past the segment.
    pub end: Point,
}

impl EmpiricalMeasure {
    pub fn new(system: &MapSystem, x: &Point, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("empirical measure needs n >= 1".into()));
        }
        let mut atoms = Vec::with_capacity(n);
        let mut p = *x;
        for _ in 0..n {
            atoms.push(p);
            p = system.map(&p);
        }
        Ok(Self {
            system: *system,
            base: *x,
            atoms,
            end: p,
        })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// `∫ φ dμ`, identical to the Birkhoff average at time `n`.
pub fn integrate(mu: &EmpiricalMeasure, phi: &Observable) -> Result<f64> {
    let vals = mu
        .atoms
        .iter()
        .map(|x| phi.evaluate(&mu.system, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(compensated_mean(vals))
}

/// `|∫ φ∘f dμ − ∫ φ dμ| = |φ(fⁿx) − φ(x)| / n`.
pub fn invariance_defect(mu: &EmpiricalMeasure, phi: &Observable) -> Result<f64> {
    let first = phi.evaluate(&mu.system, &mu.base)?;
    let last = phi.evaluate(&mu.system, &mu.end)?;
    Ok((last - first).abs() / mu.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BirkhoffLimitEstimate {
    pub base: Point,
    /// `running[n − 1]` is the average over the first `n` steps.
    pub running: Vec<f64>,
    /// First time included in the tail.
    pub tail_start: usize,
    /// Minimum of the running averages over the tail.
    pub liminf: f64,
}

/// Running Birkhoff averages up to `horizon` and the minimum over the second
/// half as the liminf estimate.
pub fn birkhoff_limit_estimate(
    system: &MapSystem,
    phi: &Observable,
    x: &Point,
    horizon: usize,
) -> Result<BirkhoffLimitEstimate> {
    let running = running_averages(system, phi, x, horizon)?;
    let tail_start = horizon / 2 + 1;
    let liminf = running[tail_start - 1..]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(BirkhoffLimitEstimate {
        base: *x,
        running,
        tail_start,
        liminf,
    })
}

fn running_averages(system: &MapSystem, phi: &Observable, x: &Point, horizon: usize) -> Result<Vec<f64>> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(horizon);
    let mut s = CompensatedSum::default();
    let mut p = *x;
    for n in 1..=horizon {
        s.add(phi.evaluate(system, &p)?);
        out.push(s.value() / n as f64);
        p = system.map(&p);
    }
    Ok(out)
}

/// `log‖df_xʲ v‖ − log‖v‖` for `j = 1..=n`, renormalizing at each step.
pub fn log_growth(system: &MapSystem, x: &Point, v: [f64; 2], n: usize) -> Result<Vec<f64>> {
    let dim = system.tangent_dim();
    let n0 = vec_norm(v, dim);
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(Error::InvalidParameter("tangent vector must be nonzero".into()));
    }
    let mut w = [v[0] / n0, v[1] / n0];
    let mut p = *x;
    let mut acc = CompensatedSum::default();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        w = system.jacobian(&p).apply(w);
        p = system.map(&p);
        let nw = vec_norm(w, dim);
        acc.add(nw.ln());
        w = [w[0] / nw, w[1] / nw];
        out.push(acc.value());
    }
    Ok(out)
}

/// Per-iterate exponent `(1/n) log(‖df_xⁿ v‖ / ‖v‖)`.
pub fn lyapunov_exponent(system: &MapSystem, x: &Point, v: [f64; 2], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    Ok(log_growth(system, x, v, n)?[n - 1] / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovRow {
    pub n: usize,
    /// Birkhoff average of `λ` at time `n`, averaged over orbits.
    pub average: f64,
    /// `(1/n) log‖dfⁿ v‖`, averaged over orbits.
    pub exponent: f64,
}

/// Sample times `⌈iL/S⌉` for `i = 1..=S`.
pub fn sample_times(length: usize, samples: usize) -> Result<Vec<usize>> {
    if samples == 0 || samples > length {
        return Err(Error::InvalidParameter(format!(
            "samples must be in 1..={length}, got {samples}"
        )));
    }
    Ok((1..=samples).map(|i| (i * length).div_ceil(samples)).collect())
}

/// Running averages of `λ` and exponent estimates along `orbits` random
/// orbits of the given length, sampled at `samples` times.
pub fn lyapunov_table(
    system: &MapSystem,
    orbits: usize,
    length: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<LyapunovRow>> {
    if orbits == 0 {
        return Err(Error::InvalidParameter("orbits must be >= 1".into()));
    }
    let times = sample_times(length, samples)?;
    let space = system.space();
    let per_orbit: Vec<(Vec<f64>, Vec<f64>)> = pool().install(|| {
        (0..orbits)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let x = space.random_point(&mut rng);
                let t: f64 = rng.random_range(0.0..std::f64::consts::PI);
                let avgs = running_averages(system, &Observable::Lambda, &x, length)?;
                let growth = log_growth(system, &x, [t.cos(), t.sin()], length)?;
                Ok((avgs, growth))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(times
        .iter()
        .map(|&n| LyapunovRow {
            n,
            average: compensated_mean(per_orbit.iter().map(|(a, _)| a[n - 1])),
            exponent: compensated_mean(per_orbit.iter().map(|(_, g)| g[n - 1] / n as f64)),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observable::{birkhoff_average, CustomObservable};
    use crate::interval::Interval;
    use std::f64::consts::LN_2;

    fn sys(spec: &str) -> MapSystem {
        MapSystem::parse(spec).unwrap()
    }

    fn constant(c: f64) -> Observable {
        Observable::Custom(CustomObservable::new("const", move |_| c, move |_| Ok(Interval::point(c))))
    }

    #[test]
    fn integrate_examples() {
        let d = sys("doubling");
        let mu = EmpiricalMeasure::new(&d, &Point::circle(1.0 / 3.0), 2).unwrap();
        assert!((integrate(&mu, &Observable::Lambda).unwrap() + LN_2).abs() < 1e-15);
        let p2 = sys("period2-cocycle");
        let mu = EmpiricalMeasure::new(&p2, &Point::Atom(0), 2).unwrap();
        assert!((integrate(&mu, &Observable::Lambda).unwrap() - LN_2).abs() < 1e-15);
        let mu = EmpiricalMeasure::new(&d, &Point::circle(0.3), 17).unwrap();
        assert_eq!(integrate(&mu, &constant(0.25)).unwrap(), 0.25);
    }

    #[test]
    fn integrate_matches_birkhoff() {
        let s = sys("perturbed-doubling a=0.05");
        let x = Point::circle(0.123);
        let mu = EmpiricalMeasure::new(&s, &x, 500).unwrap();
        assert_eq!(
            integrate(&mu, &Observable::Lambda).unwrap(),
            birkhoff_average(&s, &Observable::Lambda, &x, 500).unwrap()
        );
    }

    #[test]
    fn invariance_defect_examples() {
        let d = sys("doubling");
        let mu = EmpiricalMeasure::new(&d, &Point::circle(1.0 / 3.0), 2).unwrap();
        assert_eq!(invariance_defect(&mu, &Observable::Lambda).unwrap(), 0.0);
        let mu = EmpiricalMeasure::new(&d, &Point::circle(0.123), 1000).unwrap();
        assert!(invariance_defect(&mu, &Observable::Lambda).unwrap() <= 2.0 * LN_2 / 1000.0);
        assert_eq!(invariance_defect(&mu, &constant(3.0)).unwrap(), 0.0);
    }

    #[test]
    fn period2_exponent_is_half_log_three_halves() {
        let p2 = sys("period2-cocycle");
        for v in [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]] {
            let e = lyapunov_exponent(&p2, &Point::Atom(0), v, 1000).unwrap();
            assert!((e - 0.5 * 1.5f64.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn limit_estimate_doubling() {
        let e = birkhoff_limit_estimate(&sys("doubling"), &Observable::Lambda, &Point::circle(0.2), 100).unwrap();
        assert_eq!(e.running.len(), 100);
        assert!((e.liminf + LN_2).abs() < 1e-15);
    }

    #[test]
    fn table_has_requested_rows() {
        let rows = lyapunov_table(&sys("cat"), 4, 100, 10, 7).unwrap();
        assert_eq!(rows.len(), 10);
        assert_eq!(rows.last().unwrap().n, 100);
        let top = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((rows.last().unwrap().exponent - top).abs() < 0.05);
        assert!(sample_times(5, 6).is_err());
    }
}
