//! Serde helpers for extended reals: `+inf` and `-inf` travel as strings,
//! finite values as numbers.

use serde::de::{self, Deserializer, Visitor};
use serde::Serializer;
use std::fmt;

pub fn format(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

pub fn parse(s: &str) -> Option<f64> {
    match s.trim() {
        "+inf" | "inf" | "+Infinity" | "Infinity" => Some(f64::INFINITY),
        "-inf" | "-Infinity" => Some(f64::NEG_INFINITY),
        "nan" | "NaN" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&format(*v))
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    struct V;
    impl Visitor<'_> for V {
        type Value = f64;
        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"+inf\", \"-inf\"")
        }
        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }
        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }
        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            parse(v).ok_or_else(|| E::custom(format!("not an extended real: {v:?}")))
        }
    }
    d.deserialize_any(V)
}

/// Same encoding for a vector.
pub mod vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&Wrap(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw: Vec<Wrap> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|w| w.0).collect())
    }

    #[derive(serde::Serialize, serde::Deserialize)]
    struct Wrap(#[serde(with = "super")] f64);
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct Probe {
        #[serde(with = "super")]
        a: f64,
        #[serde(with = "super::vec")]
        b: Vec<f64>,
    }

    #[test]
    fn round_trip() {
        let p = Probe {
            a: f64::INFINITY,
            b: vec![1.5, f64::NEG_INFINITY],
        };
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"a":"+inf","b":[1.5,"-inf"]}"#);
        assert_eq!(serde_json::from_str::<Probe>(&s).unwrap(), p);
        assert!(serde_json::from_str::<Probe>(r#"{"a":"x","b":[]}"#).is_err());
    }
}
