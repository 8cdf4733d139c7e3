//! CSV and JSON writers.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::manifest::Manifest;

/// Lossless float formatting: 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Builds CSV text from a header and rows of already formatted cells.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub fn manifest_path(path: &Path) -> PathBuf {
    sibling(path, ".manifest.json")
}

pub fn fit_path(path: &Path) -> PathBuf {
    sibling(path, ".fit.json")
}

pub fn partial_path(path: &Path) -> PathBuf {
    sibling(path, ".partial")
}

/// Destination for a command's primary table plus its side files.
pub struct Sink {
    path: Option<PathBuf>,
}

impl Sink {
    pub fn new(path: Option<PathBuf>) -> Self {
        Sink { path }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Writes the table, the manifest and an optional fit report. Without a
    /// path the table goes to stdout and side files are skipped.
    pub fn write(&self, table: &str, manifest: &Manifest, fit: Option<&str>) -> io::Result<()> {
        match &self.path {
            None => io::stdout().lock().write_all(table.as_bytes()),
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir)?;
                }
                fs::write(p, table)?;
                fs::write(manifest_path(p), json(manifest))?;
                if let Some(f) = fit {
                    fs::write(fit_path(p), f)?;
                }
                let _ = fs::remove_file(partial_path(p));
                Ok(())
            }
        }
    }

    /// Leaves a marker recording why the run did not finish.
    pub fn mark_partial(&self, manifest: &Manifest, reason: &str) {
        if let Some(p) = &self.path {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                let _ = fs::create_dir_all(dir);
            }
            let body = serde_json::json!({ "error": reason, "manifest": manifest });
            let _ = fs::write(partial_path(p), json(&body));
        }
    }
}
