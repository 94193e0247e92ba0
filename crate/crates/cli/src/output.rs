//! CSV emission with a `#`-prefixed metadata header.
//!
//! The timestamp line is the only part of the output that changes between
//! identical runs. The `# config:` lines form a complete configuration that
//! replays the run.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::RunConfig;
use crate::error::CliError;

pub const TIMESTAMP_PREFIX: &str = "# timestamp: ";
pub const CONFIG_PREFIX: &str = "# config: ";

const UNIT_NOTE: &str = "omega_m, kappa, g0, delta_e and G are 2pi-implied (configured f in Hz means 2*pi*f rad/s); \
gamma_c and Gamma_L are plain rates (s^-1). Table values are in rad/s and s^-1.";

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn flag(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_default()
}

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn render(cfg: &RunConfig, notes: &[String], table: &Table) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut header = vec![
        format!("# optomech {} {}", env!("CARGO_PKG_VERSION"), cfg.command.name()),
        format!("{TIMESTAMP_PREFIX}{secs} (unix seconds; the only line that differs between identical runs)"),
        format!("# seed: {}", cfg.seed),
        format!("# units: {UNIT_NOTE}"),
    ];
    header.extend(notes.iter().map(|n| format!("# note: {n}")));
    header.extend(cfg.defaults.iter().map(|d| format!("# default: {d}")));
    header.extend(cfg.to_toml().lines().map(|l| format!("{CONFIG_PREFIX}{l}")));
    for line in header {
        writeln!(buf, "{line}").map_err(io)?;
    }
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(&table.columns)
        .map_err(|e| CliError::Io(e.to_string()))?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(io),
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}
