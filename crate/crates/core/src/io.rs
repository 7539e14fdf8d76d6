//! JSON documents for spaces and measures: `{"k", "P", "rho", "Q", "pi"}`.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::symbolic::{MarkovMeasure, SftSpace};

pub const DEFAULT_RHO: f64 = 2.0;

fn matrix<T>(v: &Value, name: &str, cell: impl Fn(&Value) -> Option<T>) -> Result<Vec<Vec<T>>> {
    let rows = v.as_array().ok_or_else(|| Error::Json(format!("{name:?} must be a matrix")))?;
    rows.iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| Error::Json(format!("{name:?} rows must be arrays")))?
                .iter()
                .map(|c| cell(c).ok_or_else(|| Error::Json(format!("bad entry {c} in {name:?}"))))
                .collect()
        })
        .collect()
}

pub fn space_from_json(doc: &Value) -> Result<SftSpace> {
    let p = doc.get("P").ok_or_else(|| Error::Json("space needs a transition matrix \"P\"".into()))?;
    let p: Vec<Vec<u8>> = matrix(p, "P", |c| c.as_u64().and_then(|n| u8::try_from(n).ok()))?;
    let rho = match doc.get("rho") {
        None => DEFAULT_RHO,
        Some(r) => r.as_f64().ok_or_else(|| Error::Json("\"rho\" must be a number".into()))?,
    };
    let space = SftSpace::new(p, rho)?;
    if let Some(k) = doc.get("k") {
        if k.as_u64() != Some(space.k() as u64) {
            return Err(Error::InvalidSpace(format!("\"k\" = {k} disagrees with a {}x{0} matrix", space.k())));
        }
    }
    Ok(space)
}

/// The measure in the same document, if `"Q"` is present. Without `"pi"` the
/// stationary vector is computed.
pub fn measure_from_json(space: &SftSpace, doc: &Value) -> Result<Option<MarkovMeasure>> {
    let Some(q) = doc.get("Q") else { return Ok(None) };
    let q = matrix(q, "Q", Value::as_f64)?;
    match doc.get("pi") {
        None => MarkovMeasure::from_transition(space, q).map(Some),
        Some(pi) => {
            let pi = pi
                .as_array()
                .ok_or_else(|| Error::Json("\"pi\" must be an array".into()))?
                .iter()
                .map(|c| c.as_f64().ok_or_else(|| Error::Json(format!("bad entry {c} in \"pi\""))))
                .collect::<Result<Vec<f64>>>()?;
            MarkovMeasure::new(space, q, pi).map(Some)
        }
    }
}

pub fn space_to_json(space: &SftSpace, mu: Option<&MarkovMeasure>) -> Value {
    let mut doc = json!({ "k": space.k(), "P": space.transitions(), "rho": space.rho() });
    if let Some(mu) = mu {
        doc["Q"] = json!(mu.transition());
        doc["pi"] = json!(mu.stationary());
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let space = SftSpace::golden_mean();
        let mu = MarkovMeasure::uniform_walk(&space).unwrap();
        let doc = space_to_json(&space, Some(&mu));
        let back = space_from_json(&doc).unwrap();
        assert_eq!(back, space);
        assert_eq!(measure_from_json(&back, &doc).unwrap().unwrap(), mu);
    }

    #[test]
    fn defaults_and_errors() {
        let s = space_from_json(&json!({"P": [[1, 1], [1, 1]]})).unwrap();
        assert_eq!(s.rho(), 2.0);
        assert!(measure_from_json(&s, &json!({"P": [[1, 1], [1, 1]]})).unwrap().is_none());
        let mu = measure_from_json(&s, &json!({"Q": [[0.5, 0.5], [0.5, 0.5]]})).unwrap().unwrap();
        assert!((mu.stationary()[0] - 0.5).abs() < 1e-9);
        assert!(space_from_json(&json!({"k": 3, "P": [[1, 1], [1, 1]]})).is_err());
        assert!(space_from_json(&json!({"P": [[1, 1], [0, 0]]})).is_err());
        assert!(space_from_json(&json!({"rho": 2})).is_err());
    }
}
