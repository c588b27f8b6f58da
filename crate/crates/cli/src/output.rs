//! Deterministic CSV/JSON output with a provenance header on every file.

use serde::Serialize;
use sha2::{Digest, Sha256};

use biphoton_core::{Error, Result};

use std::fs;
use std::path::{Path, PathBuf};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Run provenance embedded in every JSON summary and CSV header.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
}

impl Provenance {
    pub fn for_config_bytes(bytes: &[u8]) -> Provenance {
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        let digest = hasher.finalize();
        Provenance {
            tool: "biphoton",
            version: TOOL_VERSION,
            config_sha256: hex_prefix(&digest, 16),
        }
    }

    pub fn header_comment(&self) -> String {
        format!(
            "# {} v{} config_sha256={}",
            self.tool, self.version, self.config_sha256
        )
    }
}

fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    let mut s = String::with_capacity(chars);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
        if s.len() >= chars {
            break;
        }
    }
    s.truncate(chars);
    s
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Config(format!("{}: {e}", path.display()))
}

/// Writes CSV rows (already formatted as string fields) behind the
/// provenance comment line and a header row.
pub fn write_csv(
    path: &PathBuf,
    provenance: &Provenance,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut buf = Vec::new();
    {
        buf.extend_from_slice(provenance.header_comment().as_bytes());
        buf.push(b'\n');
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)
            .map_err(|e| Error::Config(e.to_string()))?;
        for row in rows {
            w.write_record(&row)
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Config(e.to_string()))?;
    }
    fs::write(path, buf).map_err(io_err(path))?;
    Ok(())
}

/// Serializes a summary struct as pretty JSON.
pub fn write_json<T: Serialize>(path: &PathBuf, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(path, text + "\n").map_err(io_err(path))?;
    Ok(())
}

/// Compact float formatting: shortest representation that round-trips.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}
