//! Output files and run manifests.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Written next to every output file as `<out>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub version: &'static str,
    /// `sha256` of each input file, keyed by path.
    pub inputs: Vec<InputDigest>,
    pub timestamp: String,
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

pub fn digest_file(path: &Path) -> Result<InputDigest> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, inputs: Vec<InputDigest>) -> Self {
        RunManifest {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            seed,
            version: env!("CARGO_PKG_VERSION"),
            inputs,
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Sink for one artifact: a file, or stdout when no path is given.
pub struct Sink {
    path: Option<PathBuf>,
}

impl Sink {
    pub fn new(path: Option<&Path>) -> Self {
        Sink {
            path: path.map(Path::to_path_buf),
        }
    }

    pub fn write(&self, body: &str) -> Result<()> {
        match &self.path {
            Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut out = io::stdout().lock();
                out.write_all(body.as_bytes())?;
                out.flush()?;
                Ok(())
            }
        }
    }

    pub fn write_json<T: Serialize>(&self, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(&s)
    }
}

/// Writes the manifest for `out` if it is a file.
pub fn write_manifest(out: Option<&Path>, manifest: &RunManifest) -> Result<()> {
    if let Some(out) = out {
        let p = manifest_path(out);
        let mut s = serde_json::to_string_pretty(manifest)?;
        s.push('\n');
        fs::write(&p, s).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

/// Decimal with 17 significant digits, enough to round-trip any double.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Minimal CSV builder. Fields here never contain commas or quotes.
pub struct Csv {
    body: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut body = header.join(",");
        body.push('\n');
        Csv { body }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let fields: Vec<String> = fields.into_iter().map(|f| f.as_ref().to_string()).collect();
        self.body.push_str(&fields.join(","));
        self.body.push('\n');
    }

    pub fn finish(self) -> String {
        self.body
    }
}
