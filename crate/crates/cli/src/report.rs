use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use livsic_core::report::CheckTable;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub residual: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Row {
    pub fn new(name: impl Into<String>, residual: f64, bound: f64) -> Self {
        Row { name: name.into(), residual, bound, pass: residual <= bound }
    }

    /// Largest residual of a module table against a single bound.
    pub fn from_table(name: impl Into<String>, table: &CheckTable, bound: f64) -> Self {
        let mut row = Row::new(name, table.max_residual, bound);
        row.pass &= table.pass;
        row
    }

    /// Counts of violations: passes only at zero.
    pub fn count(name: impl Into<String>, violations: usize) -> Self {
        Row::new(name, violations as f64, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub experiment: String,
    pub inputs_digest: String,
    pub seed: u64,
    pub rows: Vec<Row>,
    pub verdict: String,
    pub wall_clock_s: f64,
}

impl ReportDocument {
    pub fn new(experiment: &str, inputs_digest: String, seed: u64, rows: Vec<Row>, wall_clock_s: f64) -> Self {
        let verdict = if rows.iter().all(|r| r.pass) { "pass" } else { "fail" };
        ReportDocument { experiment: experiment.into(), inputs_digest, seed, rows, verdict: verdict.into(), wall_clock_s }
    }

    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }

    pub fn row(&self, name: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// A CSV table produced by an experiment, stored as `<name>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: ReportDocument,
    pub tables: Vec<Table>,
}

impl Outcome {
    /// Writes `report.json`, `rows.csv` and every table into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let report = dir.join("report.json");
        fs::write(&report, serde_json::to_string_pretty(&self.report)? + "\n")?;
        written.push(report);
        let rows = dir.join("rows.csv");
        let mut w = csv::Writer::from_path(&rows)?;
        for r in &self.report.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        written.push(rows);
        for t in &self.tables {
            let p = dir.join(format!("{}.csv", t.name));
            fs::write(&p, &t.csv)?;
            written.push(p);
        }
        Ok(written)
    }
}

/// Builds a CSV document with a header row.
pub fn csv_table<R: Serialize>(name: &str, records: impl IntoIterator<Item = R>) -> Table {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).expect("records serialize to CSV");
    }
    let bytes = w.into_inner().expect("in-memory CSV writer");
    Table { name: name.into(), csv: String::from_utf8(bytes).expect("CSV is UTF-8") }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_follows_rows() {
        let ok = ReportDocument::new("x", "d".into(), 1, vec![Row::new("a", 0.0, 1e-9), Row::count("b", 0)], 0.0);
        assert!(ok.passed());
        let bad = ReportDocument::new("x", "d".into(), 1, vec![Row::new("a", 0.0, 1e-9), Row::new("c", f64::NAN, 1.0)], 0.0);
        assert!(!bad.passed());
    }

    #[test]
    fn csv_has_header() {
        let t = csv_table("rows", [Row::new("a", 0.5, 1.0)]);
        assert_eq!(t.csv, "name,residual,bound,pass\na,0.5,1.0,true\n");
    }
}
