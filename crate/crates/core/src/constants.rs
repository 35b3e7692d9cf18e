//! Uniform-expansion constants derived from cover data, and an independent
//! numerical probe of the resulting inequality `‖df_xⁿ v‖ ≥ C σⁿ ‖v‖`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::space::Point;
use crate::splitting::{Line, Splitting};
use crate::system::MapSystem;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionConstants {
    /// Largest return time of the cover.
    pub nbar: usize,
    /// Rate constant; the cover certifies averages below `-c/2`.
    pub c: f64,
    /// Certified upper bound of the observable.
    pub alpha: f64,
    pub alpha_plus: f64,
    pub c0: f64,
    pub k: f64,
    pub rho: f64,
    pub big_c: f64,
    pub sigma: f64,
}

/// `α⁺ = max(α, 0)`, `C₀ = α⁺N̄`, `K = e^{C₀}`, `ρ = e^{−c/2}`,
/// `σ = ρ^{−1/N̄}`, `C = e^{−N̄α⁺} ρ / K`.
pub fn derive_constants(nbar: usize, c: f64, alpha: f64) -> Result<ExpansionConstants> {
    if nbar < 1 {
        return Err(Error::InvalidParameter(format!("N̄ must be >= 1, got {nbar}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("c must be > 0, got {c}")));
    }
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("α must be finite, got {alpha}")));
    }
    let n = nbar as f64;
    let alpha_plus = alpha.max(0.0);
    let c0 = alpha_plus * n;
    let k = c0.exp();
    let rho = (-c / 2.0).exp();
    let sigma = rho.powf(-1.0 / n);
    let big_c = (-n * alpha_plus).exp() * rho / k;
    Ok(ExpansionConstants {
        nbar,
        c,
        alpha,
        alpha_plus,
        c0,
        k,
        rho,
        big_c,
        sigma,
    })
}

pub(crate) fn ulps_apart(a: f64, b: f64) -> u64 {
    if a == b {
        return 0;
    }
    if a.is_sign_negative() != b.is_sign_negative() || !a.is_finite() || !b.is_finite() {
        return u64::MAX;
    }
    (a.abs().to_bits() as i64 - b.abs().to_bits() as i64).unsigned_abs()
}

impl ExpansionConstants {
    /// Re-derives every constant from `(N̄, c, α)` and checks agreement to 1 ulp.
    pub fn check_identities(&self) -> Result<()> {
        let fresh = derive_constants(self.nbar, self.c, self.alpha)
            .map_err(|e| Error::Invariant(e.to_string()))?;
        let fields = [
            ("alpha_plus", self.alpha_plus, fresh.alpha_plus),
            ("c0", self.c0, fresh.c0),
            ("K", self.k, fresh.k),
            ("rho", self.rho, fresh.rho),
            ("sigma", self.sigma, fresh.sigma),
            ("C", self.big_c, fresh.big_c),
        ];
        for (name, have, want) in fields {
            if ulps_apart(have, want) > 1 {
                return Err(Error::Invariant(format!(
                    "{name} = {have:e} but the constants formulas give {want:e}"
                )));
            }
        }
        if !(self.sigma > 1.0 && self.big_c > 0.0 && self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Invariant("need σ > 1, C > 0, ρ ∈ (0,1)".into()));
        }
        Ok(())
    }
}

/// What `verify_expansion` measures.
#[derive(Clone, Copy, Debug)]
pub enum Probe {
    /// `‖df_xⁿ v‖ / (Cσⁿ)` for random unit `v`.
    AllDirections,
    /// `‖df_xⁿ v‖ / (Cσⁿ)` for `v` spanning the line.
    Expanding { splitting: Splitting, line: Line },
    /// `(C⁻¹σ⁻ⁿ) / ‖df_xⁿ|_line‖`; at least 1 when the line contracts as
    /// certified.
    Contracting { splitting: Splitting, line: Line },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionReport {
    pub min_ratio: f64,
    pub argmin_point: Point,
    pub argmin_n: usize,
    pub samples: usize,
    pub n_max: usize,
}

/// `log‖df_xʲ v‖` for `j = 1..=n` with renormalization.
fn forward_log_growth(system: &MapSystem, x: &Point, v: [f64; 2], n: usize) -> Vec<f64> {
    let dim = system.tangent_dim();
    let mut out = Vec::with_capacity(n);
    let mut p = *x;
    let n0 = crate::matrix::vec_norm(v, dim);
    let mut w = [v[0] / n0, v[1] / n0];
    let mut acc = 0.0;
    for _ in 0..n {
        w = system.jacobian(&p).apply(w);
        p = system.map(&p);
        let nw = crate::matrix::vec_norm(w, dim);
        acc += nw.ln();
        w = [w[0] / nw, w[1] / nw];
        out.push(acc);
    }
    out
}

/// `log‖df_xⁿ|_line‖` for `n = 1..=n_max`, computed by pulling the line back
/// from `fⁿx` so that errors contract.
fn backward_log_contraction(
    system: &MapSystem,
    splitting: &Splitting,
    line: Line,
    x: &Point,
    n_max: usize,
) -> Result<Vec<f64>> {
    let mut orbit = Vec::with_capacity(n_max + 1);
    let mut p = *x;
    orbit.push(p);
    for _ in 0..n_max {
        p = system.map(&p);
        orbit.push(p);
    }
    let mut inverses = Vec::with_capacity(n_max);
    for q in &orbit[..n_max] {
        inverses.push(
            system
                .check_invertible(q)?
                .inverse()
                .expect("invertible after determinant check"),
        );
    }
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let t = splitting.angle(system, &orbit[n], line)?;
        let mut w = [t.cos(), t.sin()];
        let mut log_len = 0.0;
        for inv in inverses[..n].iter().rev() {
            w = inv.apply(w);
            let nw = w[0].hypot(w[1]);
            log_len += nw.ln();
            w = [w[0] / nw, w[1] / nw];
        }
        // |(dfⁿ)⁻¹ w| = e^{log_len} ⇒ ‖dfⁿ|_line‖ = e^{-log_len}
        out.push(-log_len);
    }
    Ok(out)
}

/// Samples `sample_count` random points (and unit vectors) and all
/// `1 ≤ n ≤ n_max`, reporting the minimum ratio; a sound certificate gives
/// a minimum of at least 1. Uses exact cocycle products only.
pub fn verify_expansion(
    system: &MapSystem,
    consts: &ExpansionConstants,
    probe: Probe,
    sample_count: usize,
    n_max: usize,
    seed: u64,
) -> Result<ExpansionReport> {
    if sample_count == 0 || n_max == 0 {
        return Err(Error::InvalidParameter(
            "sample_count and n_max must be >= 1".into(),
        ));
    }
    let ln_c = consts.big_c.ln();
    let ln_sigma = consts.sigma.ln();
    let space = system.space();
    let dim = system.tangent_dim();
    let per_sample = (0..sample_count)
        .into_par_iter()
        .map(|i| -> Result<(f64, Point, usize)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let x = space.random_point(&mut rng);
            let log_ratios: Vec<f64> = match probe {
                Probe::AllDirections => {
                    let v = if dim == 1 {
                        [if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0]
                    } else {
                        let t = rng.random::<f64>() * std::f64::consts::TAU;
                        [t.cos(), t.sin()]
                    };
                    forward_log_growth(system, &x, v, n_max)
                        .into_iter()
                        .enumerate()
                        .map(|(j, g)| g - (ln_c + (j + 1) as f64 * ln_sigma))
                        .collect()
                }
                Probe::Expanding { splitting, line } => {
                    let t = splitting.angle(system, &x, line)?;
                    forward_log_growth(system, &x, [t.cos(), t.sin()], n_max)
                        .into_iter()
                        .enumerate()
                        .map(|(j, g)| g - (ln_c + (j + 1) as f64 * ln_sigma))
                        .collect()
                }
                Probe::Contracting { splitting, line } => {
                    backward_log_contraction(system, &splitting, line, &x, n_max)?
                        .into_iter()
                        .enumerate()
                        .map(|(j, g)| (-ln_c - (j + 1) as f64 * ln_sigma) - g)
                        .collect()
                }
            };
            let (j, lr) = log_ratios
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::INFINITY), |best, (j, v)| if v < best.1 { (j, v) } else { best });
            Ok((lr, x, j + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let (lr, x, n) = per_sample
        .into_iter()
        .fold((f64::INFINITY, Point::Atom(0), 0), |best, s| {
            if s.0 < best.0 {
                s
            } else {
                best
            }
        });
    Ok(ExpansionReport {
        min_ratio: lr.exp(),
        argmin_point: x,
        argmin_n: n,
        samples: sample_count,
        n_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_constants() {
        let k = derive_constants(1, 1.2, -std::f64::consts::LN_2).unwrap();
        assert_eq!(k.alpha_plus, 0.0);
        assert_eq!(k.c0, 0.0);
        assert_eq!(k.k, 1.0);
        assert!((k.rho - 0.548812).abs() < 1e-6);
        assert!((k.sigma - 1.822119).abs() < 1e-6);
        assert!((k.big_c - 0.548812).abs() < 1e-6);
        k.check_identities().unwrap();
    }

    #[test]
    fn positive_alpha_constants() {
        let k = derive_constants(2, 1.0, 0.3).unwrap();
        assert!((k.c0 - 0.6).abs() < 1e-15);
        assert!((k.k - 0.6f64.exp()).abs() < 1e-15);
        assert!((k.rho - (-0.5f64).exp()).abs() < 1e-15);
        assert!((k.sigma - 1.284025).abs() < 1e-6);
        assert!((k.big_c - (-1.7f64).exp()).abs() < 1e-15);
        assert!((k.big_c - 0.182684).abs() < 1e-6);
    }

    #[test]
    fn zero_alpha_constants() {
        let k = derive_constants(1, 0.7, 0.0).unwrap();
        assert_eq!(k.k, 1.0);
        assert_eq!(k.big_c, k.rho);
        assert!((k.sigma - 1.0 / k.rho).abs() < 1e-15);
    }

    #[test]
    fn invalid_inputs() {
        assert!(derive_constants(0, 1.0, 0.0).is_err());
        assert!(derive_constants(1, 0.0, 0.0).is_err());
        assert!(derive_constants(1, -1.0, 0.0).is_err());
    }

    #[test]
    fn tampered_constant_detected() {
        let mut k = derive_constants(3, 0.4, 0.2).unwrap();
        k.sigma *= 1.0 + 1e-9;
        assert!(k.check_identities().is_err());
    }

    #[test]
    fn sigma_monotone_on_grid() {
        for nbar in 1..6 {
            let mut prev = 1.0;
            for i in 1..20 {
                let s = derive_constants(nbar, 0.1 * i as f64, 0.0).unwrap().sigma;
                assert!(s > prev);
                prev = s;
            }
        }
        for i in 1..20 {
            let c = 0.1 * i as f64;
            let mut prev = f64::INFINITY;
            for nbar in 1..8 {
                let s = derive_constants(nbar, c, 0.0).unwrap().sigma;
                assert!(s < prev);
                prev = s;
            }
        }
    }

    #[test]
    fn doubling_expansion_ratio() {
        let sys = MapSystem::parse("doubling").unwrap();
        let k = derive_constants(1, 1.2, -std::f64::consts::LN_2).unwrap();
        let r = verify_expansion(&sys, &k, Probe::AllDirections, 50, 40, 7).unwrap();
        assert!((r.min_ratio - 2.0).abs() < 1e-9);
        assert_eq!(r.argmin_n, 1);
        assert!(verify_expansion(&sys, &k, Probe::AllDirections, 0, 40, 7).is_err());
    }

    #[test]
    fn cat_unstable_ratio_is_the_eigenvalue() {
        // λ₊ⁿ / (e^{−0.9} e^{0.9n}) is smallest at n = 1, where it equals λ₊.
        let sys = MapSystem::parse("cat").unwrap();
        let splitting = Splitting::exact(&sys).unwrap();
        let alpha = -((3.0 + 5f64.sqrt()) / 2.0).ln();
        let k = derive_constants(1, 1.8, alpha).unwrap();
        let probe = Probe::Expanding { splitting, line: Line::Unstable };
        let r = verify_expansion(&sys, &k, probe, 200, 40, 3).unwrap();
        assert!((r.min_ratio - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-9, "{}", r.min_ratio);
        assert_eq!(r.argmin_n, 1);
    }
}
