use serde::de::Error as _;
use serde::ser::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use super::PlMap;
use crate::scalar::Portable;

#[derive(Serialize, Deserialize)]
struct Doc {
    breakpoints: Vec<Value>,
    values: Vec<Value>,
}

impl<T: Portable> Serialize for PlMap<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let conv = |v: &[T]| -> Result<Vec<Value>, S::Error> {
            v.iter()
                .map(|r| r.to_json().ok_or_else(|| S::Error::custom(format!("{r:?} is not representable"))))
                .collect()
        };
        Doc { breakpoints: conv(&self.xs)?, values: conv(&self.ys)? }.serialize(s)
    }
}

impl<'de, T: Portable> Deserialize<'de> for PlMap<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = Doc::deserialize(d)?;
        let conv = |v: Vec<Value>| -> Result<Vec<T>, D::Error> {
            v.iter().map(|x| T::from_json(x).ok_or_else(|| D::Error::custom(format!("bad number {x}")))).collect()
        };
        PlMap::from_breakpoints(conv(doc.breakpoints)?, conv(doc.values)?).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::super::family_fb;
    use super::*;
    use crate::scalar::{Rational, Scalar};

    #[test]
    fn float_round_trip() {
        let f = family_fb(0.25).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"breakpoints":[0.0,0.25,0.5],"values":[0.0,0.375,0.5]}"#);
        let back: PlMap<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rational_round_trip() {
        let f = family_fb(Rational::from_ratio(1, 3)).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"breakpoints":[[0,1],[1,3],[1,2]],"values":[[0,1],[1,2],[7,12]]}"#);
        let back: PlMap<Rational> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn invalid_documents_are_rejected() {
        assert!(serde_json::from_str::<PlMap<f64>>(r#"{"breakpoints":[0.0,0.5],"values":[0.5,0.2]}"#).is_err());
        assert!(serde_json::from_str::<PlMap<Rational>>(r#"{"breakpoints":[[0,0]],"values":[[0,1]]}"#).is_err());
        assert!(serde_json::from_str::<PlMap<f64>>(r#"{"breakpoints":[0.0]}"#).is_err());
    }
}
