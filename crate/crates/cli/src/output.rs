//! Report rendering: one JSON document or a CSV table with `#` comment
//! lines carrying the provenance.

use serde::Serialize;
use serde_json::Value;

use crate::config::{Command, SeedSource};
use crate::error::{CliError, Result};

/// A file the run read, identified by content.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputFile {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_source: Option<SeedSource>,
    pub inputs: Vec<InputFile>,
}

impl Provenance {
    pub fn new(config_sha256: String, seed: Option<(u64, SeedSource)>) -> Self {
        Self {
            tool: "fatigue",
            version: env!("CARGO_PKG_VERSION"),
            config_sha256,
            seed: seed.map(|s| s.0),
            seed_source: seed.map(|s| s.1),
            inputs: Vec::new(),
        }
    }
}

/// Rows for the CSV rendering.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest string that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        x.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: Command,
    pub provenance: Provenance,
    pub result: Value,
    pub notes: Vec<String>,
    pub table: Table,
}

impl Report {
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            command: Command,
            provenance: &'a Provenance,
            result: &'a Value,
            notes: &'a [String],
        }
        let doc = Doc { command: self.command, provenance: &self.provenance, result: &self.result, notes: &self.notes };
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        let p = &self.provenance;
        let mut out =
            format!("# {} {} {}\n# config_sha256 {}\n", p.tool, p.version, self.command.name(), p.config_sha256);
        if let (Some(seed), Some(src)) = (p.seed, p.seed_source) {
            let src = serde_json::to_value(src).expect("enum serializes");
            out.push_str(&format!("# seed {seed} ({})\n", src.as_str().unwrap_or("")));
        }
        for i in &p.inputs {
            out.push_str(&format!("# input {} {} sha256 {}\n", i.role, i.path, i.sha256));
        }
        for n in &self.notes {
            out.push_str(&format!("# note {}\n", n.replace('\n', " ")));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::io(format!("csv: {e}"));
        w.write_record(&self.table.header).map_err(fail)?;
        for row in &self.table.rows {
            w.write_record(row).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::io(format!("csv: {e}")))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        Ok(out)
    }
}
