//! Serde helpers for exponents in `[1, inf]`: JSON numbers or the string `"inf"`.

use serde::{de, Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(v) => Ok(v),
        Raw::Text(t) => parse(&t).map_err(de::Error::custom),
    }
}

/// Parses a number or `inf` / `infinity` (case-insensitive).
pub fn parse(text: &str) -> Result<f64, String> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    t.parse::<f64>().map_err(|e| format!("invalid exponent {text:?}: {e}"))
}

/// `1/p` with `1/inf = 0`.
pub fn recip(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(serde::Serialize, Deserialize)]
    struct Holder {
        #[serde(with = "super")]
        p: f64,
    }

    #[test]
    fn round_trip_infinity() {
        let h: Holder = serde_json::from_str(r#"{"p":"inf"}"#).unwrap();
        assert!(h.p.is_infinite());
        assert_eq!(serde_json::to_string(&h).unwrap(), r#"{"p":"inf"}"#);
        let h: Holder = serde_json::from_str(r#"{"p":2.5}"#).unwrap();
        assert_eq!(h.p, 2.5);
        assert!(parse("two").is_err());
    }
}
