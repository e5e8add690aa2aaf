//! Artifact writer: CSV at 17 significant digits, pretty JSON, and a manifest with sha256 digests.

use super::config::Params;
use crate::error::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Shortest round-trip float text is not fixed width; 17 significant digits always round-trip.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    inputs: &'a BTreeMap<String, String>,
    checks: &'a BTreeMap<String, bool>,
    outputs: &'a BTreeMap<String, String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        Ok(Artifacts { dir: dir.to_path_buf(), files: BTreeMap::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.files.insert(name.to_string(), hex(&Sha256::digest(bytes)));
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let mut out = header.join(",");
        out.push('\n');
        for r in rows {
            let cells: Vec<String> = r.iter().map(|&x| num(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        self.write_bytes(name, out.as_bytes())
    }

    /// CSV whose cells are already formatted (mixed text and numbers).
    pub fn csv_text(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut out = header.join(",");
        out.push('\n');
        for r in rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        self.write_bytes(name, out.as_bytes())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes `resolved.cfg` and `manifest.json` (inputs, checks, output digests).
    pub fn finish(mut self, subcommand: &str, params: &Params, checks: &BTreeMap<String, bool>) -> Result<PathBuf> {
        self.write_bytes("resolved.cfg", params.to_text().as_bytes())?;
        let manifest = Manifest {
            tool: "bilab",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            inputs: params.entries(),
            checks,
            outputs: &self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
