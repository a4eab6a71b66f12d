// SPDX-License-Identifier: MIT OR Apache-2.0

//! Output directory handling and the provenance record written with every
//! run.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const PROVENANCE_FILE: &str = "provenance.json";

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub library_version: &'static str,
    pub command: String,
    pub config: Value,
    pub config_hash: String,
    pub inputs: Vec<InputDigest>,
    /// Hash over `config_hash` and every input digest.
    pub run_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub outputs: Vec<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> CliResult<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| CliError::io(dir, err)))
        .collect::<CliResult<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else {
            out.push(
                p.strip_prefix(root)
                    .expect("walk stays under root")
                    .to_path_buf(),
            );
        }
    }
    Ok(())
}

/// SHA-256 of a file, or of the sorted `relative-path NUL file-hash` lines of
/// a directory tree.
pub fn digest_path(path: &Path) -> CliResult<String> {
    if path.is_dir() {
        let mut files = Vec::new();
        collect_files(path, path, &mut files)?;
        let mut listing = String::new();
        for rel in files {
            let bytes = fs::read(path.join(&rel)).map_err(|e| CliError::io(path.join(&rel), e))?;
            listing.push_str(&rel.to_string_lossy().replace('\\', "/"));
            listing.push('\0');
            listing.push_str(&sha256_hex(&bytes));
            listing.push('\n');
        }
        Ok(sha256_hex(listing.as_bytes()))
    } else {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(sha256_hex(&bytes))
    }
}

/// One command invocation writing into `dir`.
pub struct Run {
    pub dir: PathBuf,
    command: String,
    config: Value,
    inputs: Vec<InputDigest>,
    seeds: BTreeMap<String, u64>,
    outputs: Vec<String>,
}

impl Run {
    pub fn start(dir: PathBuf, command: &str, config: &impl Serialize) -> CliResult<Self> {
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            dir,
            command: command.into(),
            config: serde_json::to_value(config)?,
            inputs: Vec::new(),
            seeds: BTreeMap::new(),
            outputs: Vec::new(),
        })
    }

    pub fn input(&mut self, role: &str, path: &Path) -> CliResult<()> {
        let sha256 = digest_path(path)?;
        self.inputs.push(InputDigest {
            role: role.into(),
            path: path.to_path_buf(),
            sha256,
        });
        Ok(())
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.into(), value);
    }

    /// Path of a named output inside the run directory, recorded for the
    /// provenance listing.
    pub fn output(&mut self, name: &str) -> PathBuf {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.into());
        }
        self.dir.join(name)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let path = self.output(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    pub fn csv_writer(&mut self, name: &str) -> CliResult<csv::Writer<BufWriter<fs::File>>> {
        let path = self.output(name);
        let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(csv::Writer::from_writer(BufWriter::new(file)))
    }

    pub fn file_writer(&mut self, name: &str) -> CliResult<BufWriter<fs::File>> {
        let path = self.output(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(BufWriter::new(file))
    }

    pub fn provenance(&self) -> CliResult<Provenance> {
        let config_hash = sha256_hex(serde_json::to_string(&self.config)?.as_bytes());
        let mut h = Sha256::new();
        h.update(self.command.as_bytes());
        h.update([0]);
        h.update(config_hash.as_bytes());
        for i in &self.inputs {
            h.update([0]);
            h.update(i.role.as_bytes());
            h.update([0]);
            h.update(i.sha256.as_bytes());
        }
        Ok(Provenance {
            tool: "chronosteer",
            version: env!("CARGO_PKG_VERSION"),
            library_version: chronosteer::VERSION,
            command: self.command.clone(),
            config: self.config.clone(),
            config_hash,
            inputs: self.inputs.clone(),
            run_hash: hex::encode(h.finalize()),
            seeds: self.seeds.clone(),
            outputs: self.outputs.clone(),
        })
    }

    /// Write `provenance.json` and return it.
    pub fn finish(mut self) -> CliResult<Provenance> {
        let prov = self.provenance()?;
        self.write_json(PROVENANCE_FILE, &prov)?;
        Ok(prov)
    }
}
