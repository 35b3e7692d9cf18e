//! Exact textual form of `f64` values: `[-]0x1.<hex>p<exp>` for normal
//! numbers, `[-]0x0.<hex>p-1022` for subnormals, and `inf` / `-inf`.

use crate::error::{Error, Result};

const MANT_BITS: u32 = 52;
const MANT_MASK: u64 = (1 << MANT_BITS) - 1;

pub fn format(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = x.to_bits();
    let biased = ((bits >> MANT_BITS) & 0x7ff) as i32;
    let mant = bits & MANT_MASK;
    let (lead, exp) = if biased == 0 {
        if mant == 0 {
            return format!("{sign}0x0p+0");
        }
        (0, -1022)
    } else {
        (1, biased - 1023)
    };
    let mut digits = format!("{mant:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let frac = if digits.is_empty() {
        String::new()
    } else {
        format!(".{digits}")
    };
    format!("{sign}0x{lead}{frac}p{exp:+}")
}

pub fn parse(s: &str) -> Result<f64> {
    let bad = || Error::Malformed(format!("invalid hex float `{s}`"));
    let (neg, body) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let apply = |v: f64| if neg { -v } else { v };
    match body {
        "inf" => return Ok(apply(f64::INFINITY)),
        "nan" if !neg => return Ok(f64::NAN),
        _ => {}
    }
    let body = body.strip_prefix("0x").ok_or_else(bad)?;
    let (m, e) = body.split_once('p').ok_or_else(bad)?;
    let exp: i32 = e.parse().map_err(|_| bad())?;
    let (lead, frac) = m.split_once('.').unwrap_or((m, ""));
    if frac.len() > 13 || !frac.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(bad());
    }
    let frac_bits = if frac.is_empty() {
        0
    } else {
        u64::from_str_radix(frac, 16).map_err(|_| bad())? << (4 * (13 - frac.len()))
    };
    let bits = match lead {
        "1" => {
            if !(-1022..=1023).contains(&exp) {
                return Err(bad());
            }
            (((exp + 1023) as u64) << MANT_BITS) | frac_bits
        }
        "0" if frac_bits == 0 && exp == 0 => 0,
        "0" if exp == -1022 && frac_bits != 0 => frac_bits,
        _ => return Err(bad()),
    };
    Ok(apply(f64::from_bits(bits)))
}

/// Serde adapter for `f64` fields.
pub mod serde_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `[f64; 2]` interval endpoints.
pub mod serde_pair {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &[f64; 2], s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&super::format(x[0]))?;
        t.serialize_element(&super::format(x[1]))?;
        t.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<[f64; 2], D::Error> {
        let [a, b] = <[String; 2]>::deserialize(d)?;
        Ok([
            super::parse(&a).map_err(serde::de::Error::custom)?,
            super::parse(&b).map_err(serde::de::Error::custom)?,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        assert_eq!(format(1.0), "0x1p+0");
        assert_eq!(format(-2.5), "-0x1.4p+1");
        assert_eq!(format(0.0), "0x0p+0");
        assert_eq!(format(-0.0), "-0x0p+0");
        assert_eq!(format(f64::MIN_POSITIVE / 2.0), "0x0.8p-1022");
        assert_eq!(format(f64::INFINITY), "inf");
        assert_eq!(parse("0x1.8p+1").unwrap(), 3.0);
        assert_eq!(parse("0x1p-1").unwrap(), 0.5);
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "1.0", "0x", "0x2p+0", "0x1.gp+0", "0x1p+2000", "0x1.00000000000000p+0"] {
            assert!(parse(s).is_err(), "{s}");
        }
    }

    proptest! {
        #[test]
        fn round_trip_bits(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(!x.is_nan());
            prop_assert_eq!(parse(&format(x)).unwrap().to_bits(), bits);
        }
    }
}
