use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A value carried by an emission: the scalar types a program can
/// produce. Floats render in shortest round-trip form, so `20.0`
/// prints as `20`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarValue {
    Int(i64),
    Float(f64),
    Str(String),
}

impl ScalarValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ScalarValue::Int(v) => Some(*v as f64),
            ScalarValue::Float(v) => Some(*v),
            ScalarValue::Str(_) => None,
        }
    }

    /// Total order within one value type: numeric order for numbers
    /// (floats via `total_cmp`), raw byte order for strings. Mixed
    /// numeric kinds compare as f64; numbers sort before strings.
    pub fn cmp_values(&self, other: &ScalarValue) -> Ordering {
        use ScalarValue::*;
        match (self, other) {
            (Int(a), Int(b)) => a.cmp(b),
            (Float(a), Float(b)) => a.total_cmp(b),
            (Int(a), Float(b)) => (*a as f64).total_cmp(b),
            (Float(a), Int(b)) => a.total_cmp(&(*b as f64)),
            (Str(a), Str(b)) => a.as_bytes().cmp(b.as_bytes()),
            (Str(_), _) => Ordering::Greater,
            (_, Str(_)) => Ordering::Less,
        }
    }

    /// Rendered form used for tie-breaking ("lexicographically smaller
    /// value string") and as the grouping key in `top`.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ScalarValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarValue::Int(v) => write!(f, "{}", v),
            ScalarValue::Float(v) => write!(f, "{}", v),
            ScalarValue::Str(v) => write!(f, "{}", v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whole_floats_render_without_fraction() {
        assert_eq!(ScalarValue::Float(20.0).render(), "20");
        assert_eq!(ScalarValue::Float(7.25).render(), "7.25");
        assert_eq!(ScalarValue::Int(20).render(), "20");
    }

    #[test]
    fn string_order_is_byte_order() {
        let a = ScalarValue::Str("B".into());
        let b = ScalarValue::Str("a".into());
        assert_eq!(a.cmp_values(&b), Ordering::Less); // 'B' (0x42) < 'a' (0x61)
    }
}
