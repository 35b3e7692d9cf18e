//! JSON certificate documents.
//!
//! Every real is stored as hexadecimal float text so documents round-trip
//! bit-exactly. Loading re-checks everything a certificate claims: the
//! constants identities, that the boxes tile the phase space, and each box's
//! enclosure at its recorded return time.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::constants::{ulps_apart, ExpansionConstants, ExpansionReport};
use crate::cover::{CoverCertificate, CoverEntry, InconclusiveReport, Provenance, SplittingRecord};
use crate::enclosure::enclose_orbit;
use crate::error::{Error, Result};
use crate::falsify::PeriodicOrbitWitness;
use crate::hexfloat::{self, serde_f64, serde_pair};
use crate::interval::{Interval, ROUNDING_DISCIPLINE};
use crate::observable::{CenterSign, Observable, Which};
use crate::space::{PhaseBox, Point};
use crate::splitting::{Line, Splitting, SplittingKind, SplittingSource};
use crate::system::MapSystem;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateDocument {
    pub schema_version: u32,
    pub system: SystemDoc,
    pub observable: String,
    #[serde(with = "serde_f64")]
    pub rate: f64,
    pub constants: ConstantsDoc,
    pub boxes: Vec<BoxDoc>,
    pub provenance: ProvenanceDoc,
    pub splitting: Option<SplittingDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    pub id: String,
    pub params: Vec<ParamDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamDoc {
    pub name: String,
    #[serde(with = "serde_f64")]
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsDoc {
    pub nbar: usize,
    #[serde(with = "serde_f64")]
    pub c: f64,
    #[serde(with = "serde_f64")]
    pub alpha: f64,
    #[serde(with = "serde_f64")]
    pub alpha_plus: f64,
    #[serde(with = "serde_f64")]
    pub c0: f64,
    #[serde(with = "serde_f64")]
    pub k: f64,
    #[serde(with = "serde_f64")]
    pub rho: f64,
    #[serde(with = "serde_f64")]
    pub big_c: f64,
    #[serde(with = "serde_f64")]
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionDoc {
    Arc {
        #[serde(with = "serde_pair")]
        x: [f64; 2],
    },
    Rect {
        #[serde(with = "serde_pair")]
        x: [f64; 2],
        #[serde(with = "serde_pair")]
        y: [f64; 2],
    },
    Atom {
        index: u8,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDoc {
    pub region: RegionDoc,
    pub n: usize,
    #[serde(with = "serde_f64")]
    pub margin: f64,
    #[serde(with = "serde_f64")]
    pub observable_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvenanceDoc {
    pub tool: String,
    pub rounding: String,
    pub seed: u64,
    pub depth_max: usize,
    pub depth_reached: usize,
    pub n_max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplittingDoc {
    /// `cs-cu`, `center-unstable` or `center-stable`.
    pub kind: String,
    /// `exact` or `estimated`.
    pub source: String,
    pub iterations: Option<usize>,
    #[serde(with = "opt_f64")]
    pub tolerance: Option<f64>,
    #[serde(with = "serde_f64")]
    pub residual: f64,
    pub conditional: bool,
}

mod opt_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_some(&crate::hexfloat::format(*v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| crate::hexfloat::parse(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

fn region_doc(b: &PhaseBox) -> RegionDoc {
    match *b {
        PhaseBox::Arc(i) => RegionDoc::Arc { x: [i.lo(), i.hi()] },
        PhaseBox::Rect([x, y]) => RegionDoc::Rect {
            x: [x.lo(), x.hi()],
            y: [y.lo(), y.hi()],
        },
        PhaseBox::Atom(i) => RegionDoc::Atom { index: i },
    }
}

fn interval(p: [f64; 2]) -> Result<Interval> {
    Interval::try_new(p[0], p[1]).map_err(|e| Error::Invariant(e.to_string()))
}

fn region_box(r: &RegionDoc) -> Result<PhaseBox> {
    Ok(match *r {
        RegionDoc::Arc { x } => PhaseBox::Arc(interval(x)?),
        RegionDoc::Rect { x, y } => PhaseBox::Rect([interval(x)?, interval(y)?]),
        RegionDoc::Atom { index } if index < 2 => PhaseBox::Atom(index),
        RegionDoc::Atom { index } => {
            return Err(Error::Invariant(format!("atom index {index} out of range")))
        }
    })
}

fn splitting_doc(r: &SplittingRecord) -> SplittingDoc {
    let kind = match r.splitting.kind {
        SplittingKind::CsCu => "cs-cu",
        SplittingKind::Scu { center: Line::Unstable } => "center-unstable",
        SplittingKind::Scu { center: Line::Stable } => "center-stable",
    };
    let (source, iterations, tolerance) = match r.splitting.source {
        SplittingSource::Exact => ("exact", None, None),
        SplittingSource::Estimated { iterations, tolerance } => {
            ("estimated", Some(iterations), Some(tolerance))
        }
    };
    SplittingDoc {
        kind: kind.into(),
        source: source.into(),
        iterations,
        tolerance,
        residual: r.residual,
        conditional: r.splitting.is_conditional(),
    }
}

fn splitting_from_doc(d: &SplittingDoc) -> Result<Splitting> {
    let base = match (d.source.as_str(), d.iterations, d.tolerance) {
        ("exact", None, None) => Splitting {
            kind: SplittingKind::CsCu,
            source: SplittingSource::Exact,
        },
        ("estimated", Some(it), Some(tol)) => Splitting::estimated(it, tol),
        _ => return Err(Error::Malformed(format!("bad splitting source `{}`", d.source))),
    };
    let s = match d.kind.as_str() {
        "cs-cu" => base,
        "center-unstable" => base.with_center(Line::Unstable),
        "center-stable" => base.with_center(Line::Stable),
        k => return Err(Error::Malformed(format!("bad splitting kind `{k}`"))),
    };
    if s.is_conditional() != d.conditional {
        return Err(Error::Invariant("splitting conditional flag does not match its source".into()));
    }
    Ok(s)
}

/// Reconstructs a serializable observable from its name.
pub fn observable_from_name(name: &str, splitting: Option<Splitting>) -> Result<Observable> {
    let which = match name {
        "lambda" => return Ok(Observable::Lambda),
        "cu" => Which::Cu,
        "cs" => Which::Cs,
        "center-expanding" => Which::Center(CenterSign::Expanding),
        "center-contracting" => Which::Center(CenterSign::Contracting),
        other => return Err(Error::Malformed(format!("unknown observable `{other}`"))),
    };
    let s = splitting.ok_or_else(|| Error::Malformed(format!("observable `{name}` needs a splitting block")))?;
    Ok(Observable::directional(which, s))
}

impl CertificateDocument {
    pub fn from_certificate(cert: &CoverCertificate) -> Result<Self> {
        if cert.observable.starts_with("custom:") {
            return Err(Error::Unsupported(
                "certificates for custom observables cannot be serialized".into(),
            ));
        }
        let k = &cert.constants;
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            system: SystemDoc {
                id: cert.system.id().into(),
                params: cert
                    .system
                    .params()
                    .into_iter()
                    .map(|(name, value)| ParamDoc { name, value })
                    .collect(),
            },
            observable: cert.observable.clone(),
            rate: cert.rate,
            constants: ConstantsDoc {
                nbar: k.nbar,
                c: k.c,
                alpha: k.alpha,
                alpha_plus: k.alpha_plus,
                c0: k.c0,
                k: k.k,
                rho: k.rho,
                big_c: k.big_c,
                sigma: k.sigma,
            },
            boxes: cert
                .entries
                .iter()
                .map(|e| BoxDoc {
                    region: region_doc(&e.region),
                    n: e.n,
                    margin: e.margin,
                    observable_max: e.observable_max,
                })
                .collect(),
            provenance: ProvenanceDoc {
                tool: cert.provenance.tool.clone(),
                rounding: cert.provenance.rounding.clone(),
                seed: cert.provenance.seed,
                depth_max: cert.provenance.depth_max,
                depth_reached: cert.provenance.depth_reached,
                n_max: cert.provenance.n_max,
            },
            splitting: cert.splitting.as_ref().map(splitting_doc),
        })
    }

    /// Rebuilds the certificate and re-validates every claim in it.
    pub fn into_certificate(self) -> Result<CoverCertificate> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: self.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        let params: Vec<(String, f64)> = self.system.params.iter().map(|p| (p.name.clone(), p.value)).collect();
        let system = MapSystem::from_id(&self.system.id, &params)?;
        if self.provenance.rounding != ROUNDING_DISCIPLINE {
            return Err(Error::Invariant(format!(
                "unknown rounding discipline `{}`",
                self.provenance.rounding
            )));
        }
        let splitting = self.splitting.as_ref().map(splitting_from_doc).transpose()?;
        let phi = observable_from_name(&self.observable, splitting)?;
        let d = &self.constants;
        let constants = ExpansionConstants {
            nbar: d.nbar,
            c: d.c,
            alpha: d.alpha,
            alpha_plus: d.alpha_plus,
            c0: d.c0,
            k: d.k,
            rho: d.rho,
            big_c: d.big_c,
            sigma: d.sigma,
        };
        constants.check_identities()?;
        if !(self.rate > 0.0) || ulps_apart(constants.c, 2.0 * self.rate) > 1 {
            return Err(Error::Invariant(format!(
                "c = {} does not equal 2r for r = {}",
                constants.c, self.rate
            )));
        }
        let entries = self
            .boxes
            .iter()
            .map(|b| {
                Ok(CoverEntry {
                    region: region_box(&b.region)?,
                    n: b.n,
                    margin: b.margin,
                    observable_max: b.observable_max,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        check_entries(&system, &phi, self.rate, &constants, &entries, self.provenance.depth_max)?;
        let splitting = match (splitting, &self.splitting) {
            (Some(s), Some(doc)) => Some(SplittingRecord {
                splitting: s,
                residual: doc.residual,
            }),
            _ => None,
        };
        Ok(CoverCertificate {
            system,
            observable: self.observable,
            rate: self.rate,
            entries,
            constants,
            provenance: Provenance {
                tool: self.provenance.tool,
                rounding: self.provenance.rounding,
                seed: self.provenance.seed,
                depth_max: self.provenance.depth_max,
                depth_reached: self.provenance.depth_reached,
                n_max: self.provenance.n_max,
            },
            splitting,
        })
    }
}

type BoxKey = [u64; 4];

fn box_key(b: &PhaseBox) -> BoxKey {
    let (a, c, d, e) = b.sort_key();
    let tag = match b {
        PhaseBox::Atom(_) => 1u64 << 63,
        _ => 0,
    };
    [a.to_bits() ^ tag, c.to_bits(), d.to_bits(), e.to_bits()]
}

/// True if `b` is a listed box or splits, within `depth` levels, into listed
/// boxes.
fn tiled(b: &PhaseBox, keys: &HashSet<BoxKey>, depth: usize) -> bool {
    if keys.contains(&box_key(b)) {
        return true;
    }
    match (depth, b.bisect()) {
        (0, _) | (_, None) => false,
        (_, Some((l, r))) => tiled(&l, keys, depth - 1) && tiled(&r, keys, depth - 1),
    }
}

fn check_entries(
    system: &MapSystem,
    phi: &Observable,
    rate: f64,
    constants: &ExpansionConstants,
    entries: &[CoverEntry],
    depth_max: usize,
) -> Result<()> {
    if entries.is_empty() {
        return Err(Error::Invariant("certificate has no boxes".into()));
    }
    let space = system.space();
    if let Some(e) = entries.iter().find(|e| e.region.space() != space) {
        return Err(Error::Invariant(format!("box {:?} is not in {space:?}", e.region)));
    }
    let keys: HashSet<BoxKey> = entries.iter().map(|e| box_key(&e.region)).collect();
    if !space.root_boxes().iter().all(|b| tiled(b, &keys, depth_max)) {
        return Err(Error::Invariant("boxes do not cover the phase space".into()));
    }
    let nbar = entries.iter().map(|e| e.n).max().unwrap_or(0);
    if nbar != constants.nbar {
        return Err(Error::Invariant(format!("N̄ = {} but the largest box time is {nbar}", constants.nbar)));
    }
    let alpha = entries
        .iter()
        .map(|e| e.observable_max)
        .fold(f64::NEG_INFINITY, f64::max);
    if alpha.to_bits() != constants.alpha.to_bits() {
        return Err(Error::Invariant(format!("α = {} but the box maxima give {alpha}", constants.alpha)));
    }
    for e in entries {
        if e.n == 0 || !(e.margin > 0.0) {
            return Err(Error::Invariant(format!("box {:?} has invalid time or margin", e.region)));
        }
        let orbit = enclose_orbit(system, &e.region, phi, e.n);
        let avg = orbit
            .average(e.n)
            .ok_or_else(|| Error::Invariant(format!("enclosure fails on box {:?}", e.region)))?;
        let phi_max = orbit.phi_bounds[0].hi();
        if phi_max.to_bits() != e.observable_max.to_bits() {
            return Err(Error::Invariant(format!(
                "box {:?} records observable max {} but recomputation gives {phi_max}",
                e.region, e.observable_max
            )));
        }
        if !(avg.hi() < -rate && e.margin <= -rate - avg.hi()) {
            return Err(Error::Invariant(format!(
                "box {:?}: average enclosure {avg:?} does not certify rate {rate} with margin {}",
                e.region, e.margin
            )));
        }
    }
    Ok(())
}

/// Canonical JSON text of a certificate.
pub fn to_json(cert: &CoverCertificate) -> Result<String> {
    let doc = CertificateDocument::from_certificate(cert)?;
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

/// Parses and re-validates a certificate.
pub fn from_json(text: &str) -> Result<CoverCertificate> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if let Some(v) = value.get("schema_version").and_then(|v| v.as_u64()) {
        if v != SCHEMA_VERSION as u64 {
            return Err(Error::SchemaVersion {
                found: v as u32,
                expected: SCHEMA_VERSION,
            });
        }
    }
    let doc: CertificateDocument = serde_json::from_value(value)?;
    doc.into_certificate()
}

fn point_json(p: &Point) -> serde_json::Value {
    match p {
        Point::Atom(_) => json!(p.to_string()),
        _ => json!(p.coords()),
    }
}

fn region_json(b: &PhaseBox) -> serde_json::Value {
    serde_json::to_value(region_doc(b)).expect("region serializes")
}

/// JSON report for an inconclusive certification.
pub fn report_json(r: &InconclusiveReport) -> String {
    let witnesses: Vec<_> = r
        .witnesses
        .iter()
        .map(|w| {
            json!({
                "region": region_json(&w.region),
                "cells": w.cells,
                "worst_cell": region_json(&w.worst_cell),
                "best_upper": w.blocking.best_upper,
                "best_n": w.blocking.best_n,
                "enclosure": [w.blocking.enclosure.lo(), w.blocking.enclosure.hi()],
                "observable_max": w.blocking.observable_max,
            })
        })
        .collect();
    let v = json!({
        "schema_version": SCHEMA_VERSION,
        "result": "inconclusive",
        "system": r.system.to_string(),
        "observable": r.observable,
        "rate": r.rate,
        "failing_cells": r.failing_cells,
        "depth_reached": r.depth_reached,
        "budget_exhausted": r.budget_exhausted,
        "witnesses": witnesses,
    });
    serde_json::to_string_pretty(&v).expect("report serializes") + "\n"
}

/// JSON for a falsifier witness.
pub fn witness_json(system: &MapSystem, observable: &str, w: &PeriodicOrbitWitness) -> String {
    let v = json!({
        "result": "witness",
        "system": system.to_string(),
        "observable": observable,
        "period": w.period,
        "points": w.points.iter().map(point_json).collect::<Vec<_>>(),
        "average": w.average,
        "average_hex": hexfloat::format(w.average),
        "residual": w.residual,
    });
    serde_json::to_string_pretty(&v).expect("witness serializes") + "\n"
}

/// JSON for a verification run.
pub fn expansion_report_json(r: &ExpansionReport) -> String {
    let v = json!({
        "min_ratio": r.min_ratio,
        "argmin_point": point_json(&r.argmin_point),
        "argmin_n": r.argmin_n,
        "samples": r.samples,
        "n_max": r.n_max,
        "passed": r.min_ratio >= 1.0,
    });
    serde_json::to_string_pretty(&v).expect("report serializes") + "\n"
}
