//! Byte-stable CSV emission and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ResolvedConfig;

/// 17 significant digits, round-trippable.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Fields that determine the numerical output. Paths and timings are left
/// out so identical inputs hash identically wherever they run.
#[derive(Debug, Serialize)]
pub struct ManifestKey<'a> {
    pub toolkit_version: &'static str,
    pub command: &'a str,
    pub config: &'a ResolvedConfig,
    pub seed: Option<u64>,
    pub n_list: Option<&'a [f64]>,
    pub alpha_list: Option<&'a [f64]>,
}

impl ManifestKey<'_> {
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("manifest key serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

#[derive(Debug, Serialize)]
struct ManifestFile<'a> {
    hash: &'a str,
    #[serde(flatten)]
    key: &'a ManifestKey<'a>,
    config_path: &'a Path,
    output_dir: &'a Path,
    wall_clock_seconds: f64,
    phase_seconds: &'a [(String, f64)],
    files: &'a [String],
    details: &'a serde_json::Value,
}

/// Output directory bound to one manifest.
pub struct RunOutput<'a> {
    pub dir: PathBuf,
    pub hash: String,
    key: ManifestKey<'a>,
    config_path: PathBuf,
    started: Instant,
    phase_started: Instant,
    phases: Vec<(String, f64)>,
    files: Vec<String>,
    pub details: serde_json::Value,
}

impl<'a> RunOutput<'a> {
    pub fn create(dir: &Path, config_path: &Path, key: ManifestKey<'a>) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        let now = Instant::now();
        Ok(Self {
            dir: dir.to_path_buf(),
            hash: key.hash(),
            key,
            config_path: config_path.to_path_buf(),
            started: now,
            phase_started: now,
            phases: Vec::new(),
            files: Vec::new(),
            details: serde_json::Value::Null,
        })
    }

    /// Closes the current timing phase under `name`.
    pub fn phase(&mut self, name: &str) {
        let now = Instant::now();
        self.phases.push((
            name.to_string(),
            now.duration_since(self.phase_started).as_secs_f64(),
        ));
        self.phase_started = now;
    }

    /// Writes `# manifest <hash>`, the header and the rows.
    pub fn csv<I, S>(&mut self, name: &str, header: &str, rows: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut text = String::new();
        writeln!(text, "# manifest {}", self.hash).unwrap();
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(row.as_ref());
            text.push('\n');
        }
        let path = self.dir.join(name);
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let file = ManifestFile {
            hash: &self.hash,
            key: &self.key,
            config_path: &self.config_path,
            output_dir: &self.dir,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            phase_seconds: &self.phases,
            files: &self.files,
            details: &self.details,
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&file)?;
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }
}
