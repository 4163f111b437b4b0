//! Atomic output files, run manifests and versioned JSON envelopes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Major version of every enveloped JSON output.
pub const FORMAT_VERSION: u32 = 1;

/// Write via a sibling temp file and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub format_version: u32,
    pub command: String,
    pub result: T,
}

pub fn envelope<T: Serialize>(command: &str, result: T) -> Envelope<T> {
    Envelope { format_version: FORMAT_VERSION, command: command.to_string(), result }
}

/// Load an enveloped output, rejecting other major versions and commands.
pub fn read_envelope<T: DeserializeOwned>(path: &Path, command: &str) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let version = raw.get("format_version").and_then(|v| v.as_u64());
    if version != Some(FORMAT_VERSION as u64) {
        bail!("{}: unsupported format_version {:?} (expected {FORMAT_VERSION})", path.display(), version);
    }
    let env: Envelope<T> = serde_json::from_value(raw).with_context(|| format!("decoding {}", path.display()))?;
    if env.command != command {
        bail!("{}: holds `{}` output, expected `{command}`", path.display(), env.command);
    }
    Ok(env.result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub format_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    /// Input path → sha256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub started_at_unix: u64,
    pub wall_time_ms: u128,
}

/// Collects inputs and outputs of one command run.
pub struct Run {
    command: String,
    seed: u64,
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    outputs: Vec<PathBuf>,
    started: Instant,
    started_at_unix: u64,
}

impl Run {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            started: Instant::now(),
            started_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Hash every regular file directly inside `dir`.
    pub fn input_dir(&mut self, dir: &Path) -> Result<()> {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("listing {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        files.iter().try_for_each(|f| self.input(f))
    }

    /// Write a primary output atomically, or print it when `path` is None.
    pub fn emit(&mut self, path: Option<&Path>, bytes: &[u8]) -> Result<()> {
        match path {
            Some(p) => {
                write_atomic(p, bytes)?;
                self.outputs.push(p.to_path_buf());
            }
            None => std::io::stdout().write_all(bytes)?,
        }
        Ok(())
    }

    pub fn emit_json<T: Serialize>(&mut self, path: Option<&Path>, value: &T) -> Result<()> {
        self.emit(path, &to_json(value)?)
    }

    /// Manifest beside the first file output (`<out>.manifest.json`); runs
    /// that only print write none.
    pub fn finish(self) -> Result<()> {
        let Some(first) = self.outputs.first() else { return Ok(()) };
        let mut name = first.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        let path = first.with_file_name(name);
        let manifest = RunManifest {
            command: self.command,
            format_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
            started_at_unix: self.started_at_unix,
            wall_time_ms: self.started.elapsed().as_millis(),
        };
        write_atomic(&path, &to_json(&manifest)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_round_trip_and_version_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.json");
        write_atomic(&p, &to_json(&envelope("loo", vec![1, 2])).unwrap()).unwrap();
        let back: Vec<i32> = read_envelope(&p, "loo").unwrap();
        assert_eq!(back, vec![1, 2]);
        assert!(read_envelope::<Vec<i32>>(&p, "hpo").is_err());
        fs::write(&p, r#"{"format_version": 2, "command": "loo", "result": []}"#).unwrap();
        assert!(read_envelope::<Vec<i32>>(&p, "loo").is_err());
    }

    #[test]
    fn sha256_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a");
        fs::write(&p, b"abc").unwrap();
        assert_eq!(sha256_file(&p).unwrap(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
