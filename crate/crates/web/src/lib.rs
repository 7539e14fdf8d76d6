//! Browser demo over `livsic-core`. Each operation returns a JSON document;
//! the `wasm_bindgen` exports are thin wrappers so everything also runs natively.

use livsic_core::fixtures::dominated_fixed_point_cocycle;
use livsic_core::holonomy::{HolonomyContext, Side};
use livsic_core::lipmaps::{family_fb, metric_report, PlMap};
use livsic_core::scalar::{parse_rational, Rational};
use livsic_core::symbolic::{closing_point, parse_word, verify_closing, SftSpace, SymbolicPoint};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const GRAPH_POINTS: usize = 200;

#[derive(Serialize)]
struct FbMetrics {
    d_inf: f64,
    lip_seminorm_diff: f64,
    d_1: f64,
    d_max: f64,
    /// Exact seminorm of `f_b - f_c` as `p/q`.
    lip_seminorm_exact: String,
    graph_b: Vec<[f64; 2]>,
    graph_c: Vec<[f64; 2]>,
}

fn parse_b(name: &str, s: &str) -> Result<Rational, String> {
    parse_rational(s).ok_or_else(|| format!("{name}: {s:?} is not a rational number"))
}

fn graph(f: &PlMap<f64>) -> Vec<[f64; 2]> {
    (0..=GRAPH_POINTS)
        .map(|i| {
            let p = i as f64 / GRAPH_POINTS as f64;
            [p, f.eval(&p)]
        })
        .collect()
}

/// Distances between two members of the tent family, with sampled graphs.
pub fn fb_metrics_json(b: &str, c: &str) -> Result<String, String> {
    let fb = family_fb(parse_b("b", b)?).map_err(|e| e.to_string())?;
    let fc = family_fb(parse_b("c", c)?).map_err(|e| e.to_string())?;
    let m = metric_report(&fb, &fc);
    let exact = livsic_core::lipmaps::lip_seminorm_diff(&fb, &fc);
    let doc = FbMetrics {
        d_inf: m.d_inf,
        lip_seminorm_diff: m.lip_seminorm_diff,
        d_1: m.d_1,
        d_max: m.d_max,
        lip_seminorm_exact: exact.to_string(),
        graph_b: graph(&fb.to_float()),
        graph_c: graph(&fc.to_float()),
    };
    serde_json::to_string(&doc).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct HolonomyDoc {
    theta: f64,
    target_slope: f64,
    slope: Option<f64>,
    rows: Vec<livsic_core::holonomy::ConvergenceRow>,
}

/// Stable holonomy increments for the fixed-point benchmark at `rho = 2`,
/// `alpha = 1/2`, between `x = 1^-inf . 0^inf` and `0^inf`.
pub fn holonomy_table_json(theta: f64, n_max: usize) -> Result<String, String> {
    let c = dominated_fixed_point_cocycle(2.0, 0.5, theta).map_err(|e| e.to_string())?;
    let ctx = HolonomyContext::new(&c);
    let x = SymbolicPoint::new(vec![1], vec![], vec![0], 0).map_err(|e| e.to_string())?;
    let y = SymbolicPoint::periodic(&[0]);
    let t = ctx.convergence_table(Side::Stable, &x, &y, n_max.clamp(4, 80)).map_err(|e| e.to_string())?;
    let doc = HolonomyDoc { theta: ctx.theta(Side::Stable), target_slope: -ctx.theta(Side::Stable) * 2f64.ln(), slope: t.slope, rows: t.rows };
    serde_json::to_string(&doc).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct ClosingDoc {
    point: String,
    closing_point: Option<String>,
    error: Option<String>,
    loop_gap: Option<u64>,
    /// `(j, observed agreement, required agreement)`.
    rows: Vec<(usize, Option<u64>, Option<u64>)>,
    holds: bool,
}

/// Closes the orbit of the point carrying `word` from coordinate `-len/2` on,
/// over a background of zeros, with loop length `2n`.
pub fn closing_json(space: &str, word: &str, n: usize) -> Result<String, String> {
    let space = match space {
        "golden" => SftSpace::golden_mean(),
        "full2" => SftSpace::full_shift(2),
        s => return Err(format!("unknown space {s:?} (full2 or golden)")),
    };
    let core = parse_word(word).map_err(|e| e.to_string())?;
    let start = -(core.len() as i64 / 2);
    let y = SymbolicPoint::new(vec![0], core, vec![0], start).map_err(|e| e.to_string())?;
    space.check_point(&y).map_err(|e| e.to_string())?;
    let doc = match closing_point(&space, &y, n) {
        Ok(z) => {
            let chk = verify_closing(&y, &z, n);
            ClosingDoc { point: y.to_string(), closing_point: Some(z.to_string()), error: None, loop_gap: chk.loop_gap, rows: chk.rows, holds: chk.holds }
        }
        Err(e) => ClosingDoc { point: y.to_string(), closing_point: None, error: Some(e.to_string()), loop_gap: None, rows: Vec::new(), holds: false },
    };
    serde_json::to_string(&doc).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn fb_metrics(b: &str, c: &str) -> Result<String, JsError> {
    fb_metrics_json(b, c).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn holonomy_table(theta: f64, n_max: usize) -> Result<String, JsError> {
    holonomy_table_json(theta, n_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn closing(space: &str, word: &str, n: usize) -> Result<String, JsError> {
    closing_json(space, word, n).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn fb_metrics_exact_gap() {
        let doc: Value = serde_json::from_str(&fb_metrics_json("1/8", "3/8").unwrap()).unwrap();
        assert_eq!(doc["lip_seminorm_exact"], "1");
        assert!((doc["d_inf"].as_f64().unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(doc["graph_b"].as_array().unwrap().len(), GRAPH_POINTS + 1);
        assert!(fb_metrics_json("1/2", "1/4").is_err());
        assert!(fb_metrics_json("x", "1/4").is_err());
    }

    #[test]
    fn holonomy_slope_near_target() {
        let doc: Value = serde_json::from_str(&holonomy_table_json(0.4, 40).unwrap()).unwrap();
        let (s, t) = (doc["slope"].as_f64().unwrap(), doc["target_slope"].as_f64().unwrap());
        assert!((s / t - 1.0).abs() < 0.15, "{s} vs {t}");
        assert!(holonomy_table_json(0.6, 40).is_err());
    }

    #[test]
    fn closing_reports_rows_or_refusal() {
        let doc: Value = serde_json::from_str(&closing_json("full2", "0110", 3).unwrap()).unwrap();
        assert_eq!(doc["holds"], true);
        assert_eq!(doc["rows"].as_array().unwrap().len(), 7);
        let doc: Value = serde_json::from_str(&closing_json("golden", "1001", 2).unwrap()).unwrap();
        assert!(doc["error"].as_str().is_some(), "{doc}");
        assert!(doc["closing_point"].is_null());
        assert!(closing_json("golden", "11", 2).is_err());
        assert!(closing_json("tri", "0", 2).is_err());
    }
}
