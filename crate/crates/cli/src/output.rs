//! Run output directory: every emitted file goes through here so the final
//! manifest lists each one with its content hash.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

pub struct RunWriter {
    dir: PathBuf,
    files: Vec<(String, String)>,
    meta: Vec<(String, String)>,
}

impl RunWriter {
    pub fn new(dir: PathBuf) -> io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(RunWriter {
            dir,
            files: Vec::new(),
            meta: Vec::new(),
        })
    }

    /// Record a key for the manifest header (seed, scenario, sizes, …).
    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn write_file(&mut self, name: &str, contents: &str) -> io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        let hash = Sha256::digest(contents.as_bytes());
        self.files.push((name.to_string(), hex::encode(hash)));
        Ok(())
    }

    /// CSV from a header and row-major string fields.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        let mut out = String::new();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        self.write_file(name, &out)
    }

    /// Write `manifest.txt` and consume the writer.
    pub fn finish(self, command: &str) -> io::Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "command = {command}");
        for (k, v) in &self.meta {
            let _ = writeln!(out, "{k} = {v}");
        }
        for (name, hash) in &self.files {
            let _ = writeln!(out, "file {name} sha256:{hash}");
        }
        fs::write(self.dir.join("manifest.txt"), out)
    }
}

/// Shortest-roundtrip float formatting (byte-stable for identical inputs);
/// extreme magnitudes switch to scientific notation.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v != 0.0 && (a >= 1e16 || a < 1e-4) {
        format!("{v:e}")
    } else if v == v.trunc() {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}
