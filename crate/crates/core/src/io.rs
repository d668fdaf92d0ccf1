//! CSV tables and the JSON run manifest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::params::{Config, GridSpec, PhysicalParams};

/// Comma-separated table with a header row and 17 significant digits.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// SHA-256 of the canonical TOML rendering.
pub fn config_hash(cfg: &Config) -> String {
    hex::encode(Sha256::digest(cfg.to_toml().as_bytes()))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_hash: String,
    pub params: PhysicalParams,
    pub grid: GridSpec,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
    pub conventions: serde_json::Map<String, serde_json::Value>,
    pub status: String,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, cfg: &Config) -> Self {
        Self {
            subcommand: subcommand.into(),
            config_hash: config_hash(cfg),
            params: cfg.params,
            grid: cfg.grid,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_clock_seconds: 0.0,
            outputs: Vec::new(),
            conventions: serde_json::Map::new(),
            status: "ok".into(),
            error: None,
        }
    }

    pub fn convention(&mut self, key: &str, value: impl Serialize) {
        if let Ok(v) = serde_json::to_value(value) {
            self.conventions.insert(key.into(), v);
        }
    }
}

/// Output directory that records every file written through it.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        write_csv(&self.root.join(name), header, rows)?;
        self.written.push(name.into());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.root.join(name), value)?;
        self.written.push(name.into());
        Ok(())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    /// Write `manifest.json`, listing every output (including itself).
    pub fn finish(&mut self, mut manifest: RunManifest) -> Result<()> {
        self.written.push("manifest.json".into());
        manifest.outputs = self.written.clone();
        write_json(&self.root.join("manifest.json"), &manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let vals = [0.1, -1.0 / 3.0, 6.02214076e23, f64::MIN_POSITIVE];
        write_csv(&path, &["a", "b", "c", "d"], [vals.to_vec()]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("a,b,c,d"));
        let back: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(back, vals);
    }

    #[test]
    fn hash_depends_on_config() {
        let a = Config::default();
        let mut b = a;
        b.params.temperature = 1.0;
        assert_eq!(config_hash(&a), config_hash(&a));
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn manifest_lists_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.csv("x.csv", &["v"], [vec![1.0]]).unwrap();
        out.finish(RunManifest::new("optics", &Config::default())).unwrap();
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["outputs"], serde_json::json!(["x.csv", "manifest.json"]));
    }
}
