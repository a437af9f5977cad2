//! Tabular reports: CSV is canonical, JSON mirrors it one-to-one.
//!
//! Every row starts with the machine config digest, so rows copied out of
//! a report still identify the machine they were measured on.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::machine::MachineConfig;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_digest: String,
    pub code_version: String,
    pub machine: String,
    pub budget: u32,
    pub n_max: u32,
    pub l_max: u32,
    pub enum_order: String,
}

impl Provenance {
    pub fn of(config: &MachineConfig) -> Provenance {
        Provenance {
            config_digest: format!("{:016x}", config.digest()),
            code_version: CODE_VERSION.to_string(),
            machine: config.version_id.clone(),
            budget: config.budget,
            n_max: config.n_max,
            l_max: config.l_max,
            enum_order: config.enum_order.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub name: String,
    pub provenance: Provenance,
    /// Extra `key = value` facts, rendered as comment lines in CSV.
    pub summary: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Format> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(LabError::InvalidArgument(format!("unknown format {s:?} (csv or json)"))),
        }
    }
}

impl Report {
    pub fn new(name: &str, config: &MachineConfig, columns: &[&str]) -> Report {
        Report {
            name: name.to_string(),
            provenance: Provenance::of(config),
            summary: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width for report {}", self.name);
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> Result<String> {
        let p = &self.provenance;
        let mut out = format!(
            "# report = {}\n# config_digest = {}\n# code_version = {}\n# machine = {} T={} N_max={} L_max={} order={}\n",
            self.name, p.config_digest, p.code_version, p.machine, p.budget, p.n_max, p.l_max, p.enum_order
        );
        for (k, v) in &self.summary {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once("config_digest").chain(self.columns.iter().map(String::as_str));
        w.write_record(header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(std::iter::once(p.config_digest.as_str()).chain(row.iter().map(String::as_str)))
                .map_err(csv_err)?;
        }
        let body = w.into_inner().map_err(|e| LabError::Io(std::io::Error::other(e.to_string())))?;
        out.push_str(&String::from_utf8(body).expect("csv of utf-8 fields"));
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| LabError::Io(std::io::Error::other(e)))?;
        s.push('\n');
        Ok(s)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

fn csv_err(e: csv::Error) -> LabError {
    LabError::Io(std::io::Error::other(e.to_string()))
}

/// Renders a float with fixed precision so reports compare byte for byte.
pub fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_agree() {
        let mut r = Report::new("demo", &MachineConfig::default(), &["x", "c"]);
        r.push(vec!["01".into(), "6".into()]);
        r.push(vec!["a,b".into(), "overflow".into()]);
        r.note("total", 2);
        let csv = r.to_csv().unwrap();
        assert!(csv.contains("config_digest,x,c\n"));
        assert!(csv.contains("\"a,b\",overflow"));
        assert!(csv.contains("# total = 2"));
        let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(json["rows"][1][0], "a,b");
        assert_eq!(json["columns"].as_array().unwrap().len(), 2);
        assert_eq!(r.to_csv().unwrap(), csv);
    }
}
