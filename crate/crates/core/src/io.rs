//! File formats: configuration CSV/JSON and the JSON encoding of extended
//! reals.
//!
//! A configuration CSV starts with a comment line carrying the space
//! descriptor as JSON, followed by a header `x0,x1,…` and one row of
//! ambient coordinates per point:
//!
//! ```text
//! # {"kind":"euclidean","dim":2}
//! x0,x1
//! 0.5,1.25
//! ```

use std::fs;
use std::path::Path;

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::space::{BasePoint, SpaceDescriptor, SpaceForm};

/// Serde adapter writing non-finite floats as the strings `"inf"`, `"-inf"`
/// and `"nan"`.
pub mod ext_f64 {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_str("nan")
        } else if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    struct ExtVisitor;

    impl Visitor<'_> for ExtVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
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
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(ExtVisitor)
    }

    /// Same encoding for `Option<f64>`.
    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        #[derive(serde::Serialize, serde::Deserialize)]
        struct Wrap(#[serde(with = "super")] f64);

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(x) => super::serialize(x, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
        }
    }
}

/// Configuration file encodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Chooses the format from the file extension (`.json`, anything else CSV).
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

pub fn config_to_csv(gamma: &Configuration) -> Result<String> {
    let desc = SpaceDescriptor::from(gamma.space().clone());
    let mut out = format!(
        "# {}\n",
        serde_json::to_string(&desc).map_err(|e| Error::Parse(e.to_string()))?
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = (0..gamma.space().ambient_dim()).map(|k| format!("x{k}")).collect();
    w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
    for p in gamma.points() {
        w.write_record(p.coords().iter().map(|c| format!("{c:?}")))
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    out.push_str(&String::from_utf8(body).map_err(|e| Error::Parse(e.to_string()))?);
    Ok(out)
}

pub fn config_from_csv(text: &str) -> Result<Configuration> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let desc = first
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("configuration CSV must start with '# {space descriptor}'".into()))?;
    let desc: SpaceDescriptor =
        serde_json::from_str(desc.trim()).map_err(|e| Error::Parse(format!("space descriptor: {e}")))?;
    let space = SpaceForm::try_from(desc)?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(rest.as_bytes());
    let width = r.headers().map_err(|e| Error::Parse(e.to_string()))?.len();
    if width != space.ambient_dim() {
        return Err(Error::Parse(format!(
            "expected {} coordinate columns, found {width}",
            space.ambient_dim()
        )));
    }
    let mut pts = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let coords = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("row {}: {e}", line + 1)))?;
        pts.push(BasePoint::new(coords));
    }
    Configuration::new(space, pts)
}

pub fn config_to_json(gamma: &Configuration) -> Result<String> {
    serde_json::to_string_pretty(gamma).map_err(|e| Error::Parse(e.to_string()))
}

pub fn config_from_json(text: &str) -> Result<Configuration> {
    let raw: Configuration = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    // re-run validation, deserialization alone does not check the points
    Configuration::new(raw.space().clone(), raw.points().to_vec())
}

pub fn read_configuration(path: &Path) -> Result<Configuration> {
    let text = fs::read_to_string(path)?;
    match Format::from_path(path) {
        Format::Csv => config_from_csv(&text),
        Format::Json => config_from_json(&text),
    }
}

pub fn write_configuration(path: &Path, gamma: &Configuration) -> Result<()> {
    let text = match Format::from_path(path) {
        Format::Csv => config_to_csv(gamma)?,
        Format::Json => config_to_json(gamma)?,
    };
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, Debug)]
    struct Probe {
        #[serde(with = "ext_f64")]
        v: f64,
        #[serde(with = "ext_f64::option", default)]
        o: Option<f64>,
    }

    #[test]
    fn extended_floats_round_trip() {
        for v in [1.5, f64::INFINITY, f64::NEG_INFINITY, 0.0] {
            let s = serde_json::to_string(&Probe { v, o: Some(v) }).unwrap();
            let back: Probe = serde_json::from_str(&s).unwrap();
            assert_eq!(back.v, v);
            assert_eq!(back.o, Some(v));
        }
        let s = serde_json::to_string(&Probe { v: f64::NAN, o: None }).unwrap();
        assert_eq!(s, r#"{"v":"nan","o":null}"#);
        let back: Probe = serde_json::from_str(&s).unwrap();
        assert!(back.v.is_nan() && back.o.is_none());
        assert!(serde_json::from_str::<Probe>(r#"{"v":"big"}"#).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = SpaceForm::hyperbolic2();
        let g = Configuration::from_intrinsic(s, &[vec![0.3, 1.0], vec![1.7, -2.0]]).unwrap();
        let text = config_to_csv(&g).unwrap();
        assert!(text.starts_with("# {\"kind\":\"hyperbolic2\""));
        assert_eq!(config_from_csv(&text).unwrap(), g);
        assert_eq!(config_from_json(&config_to_json(&g).unwrap()).unwrap(), g);
    }

    #[test]
    fn empty_configuration_is_header_only() {
        let g = Configuration::empty(SpaceForm::euclidean(2).unwrap());
        let text = config_to_csv(&g).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(config_from_csv(&text).unwrap().is_empty());
    }

    #[test]
    fn malformed_files_are_parse_errors() {
        assert!(matches!(config_from_csv("x0\n1\n"), Err(Error::Parse(_))));
        let bad = "# {\"kind\":\"euclidean\",\"dim\":1}\nx0\nabc\n";
        assert!(matches!(config_from_csv(bad), Err(Error::Parse(_))));
        let wide = "# {\"kind\":\"euclidean\",\"dim\":1}\nx0,x1\n1,2\n";
        assert!(matches!(config_from_csv(wide), Err(Error::Parse(_))));
        let off = "# {\"kind\":\"sphere2\",\"radius\":1.0}\nx0,x1,x2\n0,0,2\n";
        assert!(matches!(config_from_csv(off), Err(Error::InvalidPoint { .. })));
    }
}
