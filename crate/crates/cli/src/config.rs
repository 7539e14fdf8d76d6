//! Experiment configuration documents.
//!
//! ```json
//! {
//!   "experiment": "livsic-transfer",
//!   "space": {"P": [[1, 1], [1, 1]], "rho": 2},
//!   "cocycles": {"F": "F.json", "G": {"window": 1, "table": {}}},
//!   "conjugacy": "conjugacy.json",
//!   "params": {"f": "F", "g": "G"},
//!   "tolerances": {"tol": 1e-6},
//!   "seed": 7,
//!   "output_dir": "out"
//! }
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use livsic_core::cocycle::CocycleSpec;
use livsic_core::io::{measure_from_json, space_from_json};
use livsic_core::rigidity::MeasurableConjugacy;
use livsic_core::scalar::Rational;
use livsic_core::symbolic::{parse_word, MarkovMeasure, SftSpace, SymbolicPoint};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("config error at {path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError { path: path.into(), message: message.to_string() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    MetricSuite,
    Holonomy,
    LivsicTransfer,
    MeasurableRigidity,
    ClosingLemma,
    Distortion,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::MetricSuite,
        Experiment::Holonomy,
        Experiment::LivsicTransfer,
        Experiment::MeasurableRigidity,
        Experiment::ClosingLemma,
        Experiment::Distortion,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::MetricSuite => "metric-suite",
            Experiment::Holonomy => "holonomy",
            Experiment::LivsicTransfer => "livsic-transfer",
            Experiment::MeasurableRigidity => "measurable-rigidity",
            Experiment::ClosingLemma => "closing-lemma",
            Experiment::Distortion => "distortion",
        }
    }

    pub fn from_id(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.id() == s)
    }

    pub fn summary(self) -> &'static str {
        match self {
            Experiment::MetricSuite => "composition laws of the sup distance and Lipschitz seminorm on random PL maps",
            Experiment::Holonomy => "convergence rate, axioms and displacement bound of stable/unstable holonomies",
            Experiment::LivsicTransfer => "periodic data, transfer map on homoclinic points, s/u agreement, regularity",
            Experiment::MeasurableRigidity => "repair of a corrupted conjugacy by holonomy transport",
            Experiment::ClosingLemma => "shadowing estimate of closing points and inadmissible loops",
            Experiment::Distortion => "growth of Lipschitz constants along forward compositions",
        }
    }

    pub fn default_tolerances(self) -> &'static [(&'static str, f64)] {
        match self {
            Experiment::MetricSuite => &[("tol", 1e-12)],
            Experiment::Holonomy => &[("tol", 1e-6), ("trunc", 1e-8), ("rate", 0.15), ("margin", 2.0)],
            Experiment::LivsicTransfer => &[("tol", 1e-6), ("trunc", 1e-11), ("periodic", 1e-9), ("exponent", 0.1)],
            Experiment::MeasurableRigidity => {
                &[("tol", 1e-6), ("trunc", 1e-10), ("exponent", 0.1), ("k_max", 1e6), ("margin", 4.0)]
            }
            Experiment::ClosingLemma => &[],
            Experiment::Distortion => &[("k_max", 1e6), ("growth", 1e-2)],
        }
    }
}

/// A cocycle as read from the config, with its exact form when every entry
/// was written as an integer, a `[p, q]` pair or a `"p/q"` string.
#[derive(Clone, Debug)]
pub struct LoadedCocycle {
    pub float: CocycleSpec<f64>,
    pub exact: Option<CocycleSpec<Rational>>,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub space: SftSpace,
    pub measure: MarkovMeasure,
    pub cocycles: BTreeMap<String, LoadedCocycle>,
    pub conjugacy: Option<MeasurableConjugacy>,
    pub params: Map<String, Value>,
    pub tolerances: BTreeMap<String, f64>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    resolved: Value,
}

fn read_json(path: &Path, field: &str) -> Result<Value, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(field, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError::new(field, format!("{}: {e}", path.display())))
}

/// Inline documents pass through; strings are paths relative to `base`.
fn resolve(v: &Value, base: &Path, field: &str) -> Result<Value, ConfigError> {
    match v {
        Value::String(p) => read_json(&base.join(p), field),
        Value::Object(_) => Ok(v.clone()),
        _ => Err(ConfigError::new(field, "expected an object or a path string")),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let doc = read_json(path, "config")?;
        Self::from_value(&doc, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn from_value(doc: &Value, base: &Path) -> Result<Self, ConfigError> {
        let obj = doc.as_object().ok_or_else(|| ConfigError::new("config", "expected a JSON object"))?;
        let id = obj
            .get("experiment")
            .and_then(Value::as_str)
            .ok_or_else(|| ConfigError::new("experiment", "missing or not a string"))?;
        let experiment = Experiment::from_id(id).ok_or_else(|| {
            let known: Vec<&str> = Experiment::ALL.iter().map(|e| e.id()).collect();
            ConfigError::new("experiment", format!("unknown experiment {id:?} (known: {})", known.join(", ")))
        })?;

        let space_doc = resolve(obj.get("space").ok_or_else(|| ConfigError::new("space", "missing"))?, base, "space")?;
        let space = space_from_json(&space_doc).map_err(|e| ConfigError::new("space", e))?;
        let measure = match measure_from_json(&space, &space_doc).map_err(|e| ConfigError::new("space.Q", e))? {
            Some(mu) => mu,
            None => MarkovMeasure::uniform_walk(&space).map_err(|e| ConfigError::new("space", e))?,
        };

        let mut cocycles = BTreeMap::new();
        let mut cocycle_docs = Map::new();
        if let Some(cs) = obj.get("cocycles") {
            let cs = cs.as_object().ok_or_else(|| ConfigError::new("cocycles", "expected an object"))?;
            for (name, v) in cs {
                let field = format!("cocycles.{name}");
                let d = resolve(v, base, &field)?;
                let exact = CocycleSpec::<Rational>::from_json(space.clone(), &d).ok();
                let float = match CocycleSpec::<f64>::from_json(space.clone(), &d) {
                    Ok(c) => c,
                    Err(e) => exact.as_ref().map(CocycleSpec::to_float).ok_or_else(|| ConfigError::new(&field, e))?,
                };
                cocycles.insert(name.clone(), LoadedCocycle { float, exact });
                cocycle_docs.insert(name.clone(), d);
            }
        }

        let (conjugacy, conjugacy_doc) = match obj.get("conjugacy") {
            None => (None, Value::Null),
            Some(v) => {
                let d = resolve(v, base, "conjugacy")?;
                let c = MeasurableConjugacy::from_json(&d).map_err(|e| ConfigError::new("conjugacy", e))?;
                (Some(c), d)
            }
        };

        let params = match obj.get("params") {
            None => Map::new(),
            Some(Value::Object(m)) => m.clone(),
            Some(_) => return Err(ConfigError::new("params", "expected an object")),
        };

        let mut tolerances: BTreeMap<String, f64> =
            experiment.default_tolerances().iter().map(|(k, v)| (k.to_string(), *v)).collect();
        if let Some(t) = obj.get("tolerances") {
            let t = t.as_object().ok_or_else(|| ConfigError::new("tolerances", "expected an object"))?;
            for (name, v) in t {
                let v = v.as_f64().ok_or_else(|| ConfigError::new(format!("tolerances.{name}"), "not a number"))?;
                set_tolerance(experiment, &mut tolerances, name, v)?;
            }
        }

        let seed = match obj.get("seed") {
            None => 0,
            Some(s) => s.as_u64().ok_or_else(|| ConfigError::new("seed", "expected a non-negative integer"))?,
        };
        let output_dir = match obj.get("output_dir") {
            None => None,
            Some(Value::String(p)) => Some(base.join(p)),
            Some(_) => return Err(ConfigError::new("output_dir", "expected a path string")),
        };

        let cfg = ExperimentConfig {
            experiment,
            space,
            measure,
            cocycles,
            conjugacy,
            params,
            tolerances,
            seed,
            output_dir,
            resolved: json!({
                "space": space_doc,
                "cocycles": cocycle_docs,
                "conjugacy": conjugacy_doc,
            }),
        };
        cfg.validate_references()?;
        Ok(cfg)
    }

    fn validate_references(&self) -> Result<(), ConfigError> {
        for (key, default) in [("cocycle", "F"), ("f", "F"), ("g", "G")] {
            if self.uses_cocycle_param(key) {
                self.cocycle(key, default)?;
            }
        }
        if self.experiment == Experiment::MeasurableRigidity && self.conjugacy.is_none() {
            return Err(ConfigError::new("conjugacy", "measurable-rigidity needs a conjugacy"));
        }
        Ok(())
    }

    fn uses_cocycle_param(&self, key: &str) -> bool {
        match self.experiment {
            Experiment::Holonomy | Experiment::Distortion => key == "cocycle",
            Experiment::LivsicTransfer | Experiment::MeasurableRigidity => key == "f" || key == "g",
            Experiment::MetricSuite | Experiment::ClosingLemma => false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_output_dir(mut self, dir: PathBuf) -> Self {
        self.output_dir = Some(dir);
        self
    }

    pub fn with_tolerance(mut self, name: &str, value: f64) -> Result<Self, ConfigError> {
        set_tolerance(self.experiment, &mut self.tolerances, name, value)?;
        Ok(self)
    }

    /// SHA-256 over the resolved inputs, parameters, tolerances and seed.
    pub fn digest(&self) -> String {
        let doc = json!({
            "experiment": self.experiment.id(),
            "inputs": self.resolved,
            "params": self.params,
            "tolerances": self.tolerances,
            "seed": self.seed,
        });
        let bytes = serde_json::to_vec(&doc).expect("config documents serialize");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    pub fn cocycle(&self, key: &str, default: &str) -> Result<&LoadedCocycle, ConfigError> {
        let name = self.param_str(key, default)?;
        self.cocycles
            .get(&name)
            .ok_or_else(|| ConfigError::new(format!("params.{key}"), format!("unknown cocycle {name:?}")))
    }

    pub fn param_str(&self, key: &str, default: &str) -> Result<String, ConfigError> {
        match self.params.get(key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(ConfigError::new(format!("params.{key}"), "expected a string")),
        }
    }

    pub fn param_usize(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|n| n as usize)
                .ok_or_else(|| ConfigError::new(format!("params.{key}"), "expected a non-negative integer")),
        }
    }

    pub fn param_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| ConfigError::new(format!("params.{key}"), "expected a number")),
        }
    }

    /// A periodic base point given by its repeating word.
    pub fn param_base(&self, key: &str, default: &str) -> Result<SymbolicPoint, ConfigError> {
        let field = format!("params.{key}");
        let word = parse_word(&self.param_str(key, default)?).map_err(|e| ConfigError::new(&field, e))?;
        if word.is_empty() {
            return Err(ConfigError::new(&field, "empty word"));
        }
        let x0 = SymbolicPoint::periodic(&word);
        self.space.check_point(&x0).map_err(|e| ConfigError::new(&field, e))?;
        Ok(x0)
    }
}

fn set_tolerance(
    experiment: Experiment,
    tolerances: &mut BTreeMap<String, f64>,
    name: &str,
    value: f64,
) -> Result<(), ConfigError> {
    let field = format!("tolerances.{name}");
    if !tolerances.contains_key(name) {
        let known: Vec<&str> = experiment.default_tolerances().iter().map(|t| t.0).collect();
        return Err(ConfigError::new(field, format!("unknown tolerance for {} (known: {})", experiment.id(), known.join(", "))));
    }
    if !(value > 0.0 && value.is_finite()) {
        return Err(ConfigError::new(field, format!("{value} is not a positive number")));
    }
    tolerances.insert(name.to_string(), value);
    Ok(())
}
