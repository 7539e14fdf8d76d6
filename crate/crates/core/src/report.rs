//! Residual checks shared by the verification reports.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub residual: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(id: impl Into<String>, residual: f64, bound: f64) -> Self {
        Check { id: id.into(), residual, bound, pass: residual <= bound }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckTable {
    pub rows: Vec<Check>,
    pub max_residual: f64,
    pub pass: bool,
}

impl CheckTable {
    pub fn new(rows: Vec<Check>) -> Self {
        CheckTable {
            max_residual: rows.iter().map(|r| r.residual).fold(0.0, f64::max),
            pass: rows.iter().all(|r| r.pass),
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,residual,bound,pass\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:e},{:e},{}\n", r.id, r.residual, r.bound, r.pass));
        }
        out
    }
}
