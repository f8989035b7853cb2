use core::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A stereoacuity value in seconds of arc, or the "outside limits" sentinel.
///
/// `OutsideLimits` is never folded into a large number: medians skip it and
/// ordinal recodings map it to the top category. In JSON it is a plain number
/// or the string `"OL"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Acuity {
    Arcsec(f64),
    OutsideLimits,
}

impl Acuity {
    pub fn arcsec(self) -> Option<f64> {
        match self {
            Acuity::Arcsec(v) => Some(v),
            Acuity::OutsideLimits => None,
        }
    }

    pub fn is_outside_limits(self) -> bool {
        matches!(self, Acuity::OutsideLimits)
    }
}

impl fmt::Display for Acuity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Acuity::Arcsec(v) => write!(f, "{v}"),
            Acuity::OutsideLimits => f.write_str("OL"),
        }
    }
}

impl core::str::FromStr for Acuity {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("OL") {
            return Ok(Acuity::OutsideLimits);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(Acuity::Arcsec(v)),
            _ => Err(crate::Error::InvalidRecord(alloc::format!(
                "expected non-negative arcsec or OL, got {s:?}"
            ))),
        }
    }
}

impl Serialize for Acuity {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Acuity::Arcsec(v) => serializer.serialize_f64(*v),
            Acuity::OutsideLimits => serializer.serialize_str("OL"),
        }
    }
}

impl<'de> Deserialize<'de> for Acuity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct AcuityVisitor;

        impl Visitor<'_> for AcuityVisitor {
            type Value = Acuity;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative number of arcsec or \"OL\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Acuity, E> {
                if v.is_finite() && v >= 0.0 {
                    Ok(Acuity::Arcsec(v))
                } else {
                    Err(E::custom("arcsec must be finite and non-negative"))
                }
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Acuity, E> {
                Ok(Acuity::Arcsec(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Acuity, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Acuity, E> {
                v.parse().map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self))
            }
        }

        deserializer.deserialize_any(AcuityVisitor)
    }
}
