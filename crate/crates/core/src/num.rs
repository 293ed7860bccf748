//! Serde helpers for decimals written as plain JSON numbers and for
//! floating-point values that may be infinite.

use std::fmt;
use std::str::FromStr;

use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;
use serde::{de, Deserializer, Serializer};

/// Parses a decimal from an `f64` through its shortest round-trip string,
/// so `6394.25` becomes exactly `6394.25`.
pub fn decimal_from_f64(v: f64) -> Option<Decimal> {
    if !v.is_finite() {
        return None;
    }
    let s = format!("{v}");
    Decimal::from_str(&s).or_else(|_| Decimal::from_scientific(&s)).ok()
}

/// `Decimal` <-> JSON number. Integral values are written as integers.
pub mod decimal_number {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Decimal, serializer: S) -> Result<S::Ok, S::Error> {
        let normalized = value.normalize();
        if normalized.scale() == 0 {
            if let Some(i) = normalized.to_i64() {
                return serializer.serialize_i64(i);
            }
            if let Some(u) = normalized.to_u64() {
                return serializer.serialize_u64(u);
            }
        }
        match normalized.to_f64() {
            Some(f) => serializer.serialize_f64(f),
            None => serializer.serialize_str(&normalized.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Decimal, D::Error> {
        deserializer.deserialize_any(DecimalVisitor)
    }
}

/// `Option<Decimal>` <-> JSON number or null.
pub mod opt_decimal_number {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Option<Decimal>, serializer: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(d) => decimal_number::serialize(d, serializer),
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Option<Decimal>, D::Error> {
        struct V;
        impl<'de> de::Visitor<'de> for V {
            type Value = Option<Decimal>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal number or null")
            }
            fn visit_none<E: de::Error>(self) -> Result<Self::Value, E> {
                Ok(None)
            }
            fn visit_unit<E: de::Error>(self) -> Result<Self::Value, E> {
                Ok(None)
            }
            fn visit_some<D2: Deserializer<'de>>(self, d: D2) -> Result<Self::Value, D2::Error> {
                decimal_number::deserialize(d).map(Some)
            }
        }
        deserializer.deserialize_option(V)
    }
}

struct DecimalVisitor;

impl de::Visitor<'_> for DecimalVisitor {
    type Value = Decimal;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a decimal number")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Decimal, E> {
        Ok(Decimal::from(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Decimal, E> {
        Ok(Decimal::from(v))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Decimal, E> {
        decimal_from_f64(v).ok_or_else(|| E::custom(format!("{v} is not a representable decimal")))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Decimal, E> {
        Decimal::from_str(v)
            .or_else(|_| Decimal::from_scientific(v))
            .map_err(E::custom)
    }
}

/// `f64` that may be `+inf`, written as the string `"inf"` when infinite.
pub mod f64_or_inf {
    use super::*;

    pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        if value.is_infinite() && value.is_sign_positive() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(*value)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        deserializer.deserialize_any(InfVisitor)
    }
}

pub(crate) struct InfVisitor;

impl de::Visitor<'_> for InfVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a number or \"inf\"")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
        Ok(v)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
        match v.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
            other => other
                .parse::<f64>()
                .map_err(|_| E::custom(format!("expected a number or \"inf\", got {v:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct Holder {
        #[serde(with = "decimal_number")]
        d: Decimal,
        #[serde(with = "f64_or_inf")]
        f: f64,
    }

    #[test]
    fn decimals_are_exact_through_json() {
        let h: Holder = serde_json::from_str(r#"{"d": 6394.25, "f": "inf"}"#).unwrap();
        assert_eq!(h.d, Decimal::from_str("6394.25").unwrap());
        assert!(h.f.is_infinite());
        assert_eq!(serde_json::to_string(&h).unwrap(), r#"{"d":6394.25,"f":"inf"}"#);

        let big: Holder = serde_json::from_str(r#"{"d": 61670000000, "f": 1.5}"#).unwrap();
        assert_eq!(big.d, Decimal::from(61_670_000_000u64));
        assert_eq!(serde_json::to_string(&big).unwrap(), r#"{"d":61670000000,"f":1.5}"#);
    }

    #[test]
    fn tiny_floats_keep_their_shortest_form() {
        assert_eq!(decimal_from_f64(1e-4).unwrap().to_string(), "0.0001");
        assert_eq!(decimal_from_f64(0.36).unwrap().to_string(), "0.36");
        assert!(decimal_from_f64(f64::NAN).is_none());
    }
}
