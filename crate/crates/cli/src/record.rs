use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::CliError;

pub const SCHEMA: &str = "raytrap.result/1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A named table, written as CSV next to the JSON record.
#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, header: &[String]) -> String {
        let mut s = String::new();
        for h in header {
            s.push_str("# ");
            s.push_str(h);
            s.push('\n');
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultRecord {
    pub schema: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub config: Value,
    /// Named results; the full report of the command sits under `report`.
    pub scalars: BTreeMap<String, Value>,
    pub tables: Vec<Table>,
    pub wall_clock_s: f64,
}

impl ResultRecord {
    pub fn new(cfg: &RunConfig, command: &str) -> Self {
        ResultRecord {
            schema: SCHEMA,
            version: VERSION,
            command: command.into(),
            config_digest: cfg.digest(),
            seed: cfg.seed,
            config: serde_json::to_value(cfg).expect("config serializes"),
            scalars: BTreeMap::new(),
            tables: Vec::new(),
            wall_clock_s: 0.0,
        }
    }

    pub fn scalar<T: Serialize>(&mut self, name: &str, v: T) -> &mut Self {
        self.scalars.insert(name.into(), serde_json::to_value(v).expect("scalar serializes"));
        self
    }

    pub fn report<T: Serialize>(&mut self, v: &T) -> &mut Self {
        self.scalar("report", v)
    }

    pub fn table(&mut self, t: Table) -> &mut Self {
        self.tables.push(t);
        self
    }

    /// Pretty JSON on `out`; with an output directory, the same JSON plus
    /// one CSV per table, every file headed by digest and version.
    pub fn emit(&self, out: &mut dyn Write, dir: Option<&PathBuf>) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).expect("record serializes");
        writeln!(out, "{json}")?;
        if let Some(dir) = dir {
            std::fs::create_dir_all(dir)?;
            let stem = self.command.replace(' ', "_");
            std::fs::write(dir.join(format!("{stem}.json")), &json)?;
            let header = [
                format!("raytrap {} {}", self.version, self.command),
                format!("config_digest {}", self.config_digest),
                format!("seed {}", self.seed),
            ];
            for t in &self.tables {
                std::fs::write(dir.join(format!("{stem}_{}.csv", t.name)), t.to_csv(&header))?;
            }
        }
        Ok(())
    }
}
