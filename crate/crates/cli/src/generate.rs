//! Fixture files for `livsic gen`: specs plus a runnable `config.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use livsic_core::cocycle::{CocycleSpec, Potential};
use livsic_core::fixtures::{conjugated_pair, corrupted_conjugacy, pl_dominated_cocycle, rotation_cocycle, FIXTURE_KINDS};
use livsic_core::io::{space_from_json, space_to_json};
use livsic_core::lipmaps::family_fb;
use livsic_core::scalar::{parse_rational, Rational, Scalar};
use livsic_core::symbolic::{MarkovMeasure, SftSpace, SymbolicPoint};
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("parameter {name}: {message}")]
    Param { name: String, message: String },
    #[error("writing fixtures: {0}")]
    Io(#[from] std::io::Error),
}

fn param_err(name: &str, message: impl std::fmt::Display) -> GenError {
    GenError::Param { name: name.into(), message: message.to_string() }
}

struct Params<'a>(&'a BTreeMap<String, String>);

impl Params<'_> {
    fn usize(&self, name: &str, default: usize) -> Result<usize, GenError> {
        self.0.get(name).map_or(Ok(default), |v| v.parse().map_err(|e| param_err(name, e)))
    }

    fn f64(&self, name: &str, default: f64) -> Result<f64, GenError> {
        match self.0.get(name) {
            None => Ok(default),
            Some(v) => v.parse().or_else(|_| parse_rational(v).map(|r| r.to_f64()).ok_or_else(|| param_err(name, "not a number"))),
        }
    }

    fn rational(&self, name: &str, default: &str) -> Result<Rational, GenError> {
        let v = self.0.get(name).map_or(default, String::as_str);
        parse_rational(v).ok_or_else(|| param_err(name, format!("{v:?} is not a rational p/q")))
    }

    fn space(&self) -> Result<SftSpace, GenError> {
        let rho = self.f64("rho", 2.0)?;
        let space = match self.0.get("space").map_or("full2", String::as_str) {
            "golden" => SftSpace::golden_mean(),
            s => match s.strip_prefix("full").and_then(|k| k.parse::<usize>().ok()) {
                Some(k) if k >= 2 => SftSpace::full_shift(k),
                _ => return Err(param_err("space", format!("{s:?} is not fullK or golden"))),
            },
        };
        space.with_rho(rho).map_err(|e| param_err("rho", e))
    }

    fn check_known(&self, known: &[&str]) -> Result<(), GenError> {
        match self.0.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(param_err(k, format!("unknown parameter (known: {})", known.join(", ")))),
            None => Ok(()),
        }
    }
}

fn write_json(dir: &Path, name: &str, v: &Value, out: &mut Vec<PathBuf>) -> Result<(), GenError> {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).expect("fixture documents serialize") + "\n")?;
    out.push(p);
    Ok(())
}

fn cocycle_json<T: livsic_core::scalar::Portable>(c: &CocycleSpec<T>, name: &str) -> Result<Value, GenError> {
    c.to_json().map_err(|e| param_err(name, e))
}

/// `R(k/den)` rotations with a drift of decay `kappa` and amplitude `amp`.
fn rotation_with_drift(p: &Params, space: &SftSpace, seed: u64) -> Result<CocycleSpec<Rational>, GenError> {
    let window = p.usize("window", 1)?;
    let den = p.usize("den", 100)? as i64;
    let drift = Potential::symmetric(
        p.rational("kappa", "1/2")?,
        p.rational("amp", "1/20")?,
        (0..space.k()).map(|i| Rational::from_ratio(i as i64, 1)).collect(),
    );
    rotation_cocycle(space.clone(), window, p.f64("alpha", 1.0)?, den, seed, Some(drift)).map_err(|e| param_err("den", e))
}

fn transfer_psi(p: &Params, space: &SftSpace) -> Result<Potential<Rational>, GenError> {
    Ok(Potential::symmetric(
        p.rational("psi_kappa", "1/2")?,
        p.rational("psi_amp", "1/10")?,
        (0..space.k()).map(|i| Rational::from_ratio(i as i64, 1)).collect(),
    ))
}

/// Hölder exponent of `x -> psi(x)` for a potential decaying like `kappa^|i|`.
fn psi_exponent(kappa: f64, rho: f64) -> f64 {
    (-kappa.ln() / rho.ln()).min(1.0)
}

/// Writes the fixture `kind` into `out` and returns the written paths.
pub fn generate(kind: &str, params: &BTreeMap<String, String>, seed: u64, out: &Path) -> Result<Vec<PathBuf>, GenError> {
    let p = Params(params);
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let common = ["space", "rho", "window", "alpha", "den", "kappa", "amp"];
    match kind {
        "rotation-cocycle" => {
            p.check_known(&common)?;
            let space = p.space()?;
            let f = rotation_with_drift(&p, &space, seed)?;
            write_json(out, "space.json", &space_to_json(&space, None), &mut written)?;
            write_json(out, "F.json", &cocycle_json(&f, "F")?, &mut written)?;
            let cfg = json!({"experiment": "holonomy", "space": "space.json", "cocycles": {"F": "F.json"}, "seed": seed});
            write_json(out, "config.json", &cfg, &mut written)?;
        }
        "pl-dominated-cocycle" => {
            p.check_known(&["space", "rho", "window", "alpha", "theta", "pieces"])?;
            let space = p.space()?;
            let f = pl_dominated_cocycle(
                space.clone(),
                p.usize("window", 1)?,
                p.f64("alpha", 1.0)?,
                p.f64("theta", 0.5)?,
                p.usize("pieces", 4)?,
                seed,
            )
            .map_err(|e| param_err("theta", e))?;
            write_json(out, "space.json", &space_to_json(&space, None), &mut written)?;
            write_json(out, "F.json", &cocycle_json(&f, "F")?, &mut written)?;
            let cfg = json!({"experiment": "holonomy", "space": "space.json", "cocycles": {"F": "F.json"}, "seed": seed});
            write_json(out, "config.json", &cfg, &mut written)?;
        }
        "conjugated-pair" => {
            p.check_known(&[&common[..], &["psi_kappa", "psi_amp", "from", "base"]].concat())?;
            let (space, f) = match params.get("from") {
                None => {
                    let space = p.space()?;
                    let f = rotation_with_drift(&p, &space, seed)?;
                    (space, f)
                }
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(|e| param_err("from", e))?;
                    let doc: Value = serde_json::from_str(&text).map_err(|e| param_err("from", e))?;
                    let space = match doc.get("space") {
                        Some(s) => space_from_json(s).map_err(|e| param_err("from", e))?,
                        None => p.space()?,
                    };
                    let spec = doc.get("cocycle").unwrap_or(&doc);
                    (space.clone(), CocycleSpec::<Rational>::from_json(space, spec).map_err(|e| param_err("from", e))?)
                }
            };
            let psi = transfer_psi(&p, &space)?;
            let g = conjugated_pair(&f, &psi).map_err(|e| param_err("from", e))?;
            write_json(out, "space.json", &space_to_json(&space, None), &mut written)?;
            write_json(out, "F.json", &cocycle_json(&f, "F")?, &mut written)?;
            write_json(out, "G.json", &cocycle_json(&g, "G")?, &mut written)?;
            let base = params.get("base").cloned().unwrap_or_else(|| "0".into());
            let cfg = json!({
                "experiment": "livsic-transfer",
                "space": "space.json",
                "cocycles": {"F": "F.json", "G": "G.json"},
                "params": {"f": "F", "g": "G", "base": base, "exponent": psi_exponent(p.rational("psi_kappa", "1/2")?.to_f64(), space.rho())},
                "seed": seed,
            });
            write_json(out, "config.json", &cfg, &mut written)?;
        }
        "corrupted-conjugacy" => {
            p.check_known(&[&common[..], &["psi_kappa", "psi_amp", "count", "depth", "base"]].concat())?;
            let space = p.space()?;
            let f = rotation_with_drift(&p, &space, seed)?;
            let psi = transfer_psi(&p, &space)?;
            let g = conjugated_pair(&f, &psi).map_err(|e| param_err("psi_kappa", e))?;
            let mu = MarkovMeasure::uniform_walk(&space).map_err(|e| param_err("space", e))?;
            let base_word = params.get("base").cloned().unwrap_or_else(|| "0".into());
            let base = livsic_core::symbolic::parse_word(&base_word).map_err(|e| param_err("base", e))?;
            let depth = p.usize("depth", 16)?;
            let phi = corrupted_conjugacy(
                &space,
                &mu,
                psi.to_float(),
                SymbolicPoint::periodic(&base),
                p.usize("count", 10)?,
                depth,
                seed,
            )
            .map_err(|e| param_err("count", e))?;
            write_json(out, "space.json", &space_to_json(&space, Some(&mu)), &mut written)?;
            write_json(out, "F.json", &cocycle_json(&f, "F")?, &mut written)?;
            write_json(out, "G.json", &cocycle_json(&g, "G")?, &mut written)?;
            write_json(out, "conjugacy.json", &phi.to_json().map_err(|e| param_err("count", e))?, &mut written)?;
            let cfg = json!({
                "experiment": "measurable-rigidity",
                "space": "space.json",
                "cocycles": {"F": "F.json", "G": "G.json"},
                "conjugacy": "conjugacy.json",
                "params": {"f": "F", "g": "G", "depth": depth},
                "seed": seed,
            });
            write_json(out, "config.json", &cfg, &mut written)?;
        }
        "fb-family" => {
            p.check_known(&["b"])?;
            let b = params.get("b").map_or("1/4", String::as_str);
            let doc = match parse_rational(b) {
                Some(q) => serde_json::to_value(family_fb(q).map_err(|e| param_err("b", e))?),
                None => {
                    let v: f64 = b.parse().map_err(|_| param_err("b", format!("{b:?} is not a number")))?;
                    serde_json::to_value(family_fb(v).map_err(|e| param_err("b", e))?)
                }
            }
            .map_err(|e| param_err("b", e))?;
            write_json(out, "fb.json", &doc, &mut written)?;
        }
        _ => return Err(param_err("kind", format!("unknown fixture {kind:?} (known: {})", FIXTURE_KINDS.join(", ")))),
    }
    Ok(written)
}
