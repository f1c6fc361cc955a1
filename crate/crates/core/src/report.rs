//! Number rendering shared by every JSON and CSV writer.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// An IEEE double rendered with 17 significant digits.
///
/// `-0` prints as `0`; non-finite values become the strings `"inf"`,
/// `"-inf"` and `"nan"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real(pub f64);

pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.16e}")
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let text = format_real(self.0);
        if self.0.is_finite() {
            RawValue::from_string(text)
                .map_err(serde::ser::Error::custom)?
                .serialize(s)
        } else {
            s.serialize_str(&text)
        }
    }
}

/// Parses what [`format_real`] writes.
pub fn parse_real(text: &str) -> Option<f64> {
    match text {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}
