//! Artifact emission: CSV with `#` metadata lines and JSON with a `meta`
//! object. Unfinished artifacts carry a `.partial` suffix.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{print_config, RunConfig};

pub const TOOL: &str = "stefan";

/// Real numbers in CSV bodies: 17 significant digits.
pub fn real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn config_hash(config: &RunConfig) -> String {
    let digest = Sha256::digest(print_config(config).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub wall_time_s: f64,
}

/// Writes artifacts into one directory.
pub struct Artifacts {
    dir: PathBuf,
    command: &'static str,
    hash: String,
    seed: u64,
    started: Instant,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path, config: &RunConfig) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: config.command.name(),
            hash: config_hash(config),
            seed: config.seed,
            started: Instant::now(),
            written: Vec::new(),
        })
    }

    pub fn meta(&self) -> Meta {
        Meta {
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config_sha256: self.hash.clone(),
            seed: self.seed,
            wall_time_s: self.started.elapsed().as_secs_f64(),
        }
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn target(&mut self, name: &str, partial: bool) -> PathBuf {
        let file = if partial { format!("{name}.partial") } else { name.to_string() };
        let path = self.dir.join(file);
        if !partial {
            // a complete artifact supersedes an earlier partial one
            let _ = fs::remove_file(self.dir.join(format!("{name}.partial")));
        }
        self.written.push(path.clone());
        path
    }

    /// `header` is the column line; `body` holds the data rows.
    pub fn csv(&mut self, name: &str, header: &[&str], body: &str, partial: bool) -> io::Result<PathBuf> {
        let meta = self.meta();
        let mut text = format!(
            "# tool: {} {}\n# command: {}\n# config_sha256: {}\n# seed: {}\n# wall_time_s: {:.3}\n",
            meta.tool, meta.version, meta.command, meta.config_sha256, meta.seed, meta.wall_time_s
        );
        text.push_str(&header.join(","));
        text.push('\n');
        text.push_str(body);
        let path = self.target(name, partial);
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T, partial: bool) -> io::Result<PathBuf> {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            meta: Meta,
            #[serde(flatten)]
            value: &'a T,
        }
        let text = serde_json::to_string_pretty(&Wrapped {
            meta: self.meta(),
            value,
        })
        .map_err(io::Error::other)?;
        let path = self.target(name, partial);
        fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

/// Data rows of a CSV artifact, without `#` lines and the column header.
pub fn csv_body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| format!("{l}\n"))
        .collect()
}
