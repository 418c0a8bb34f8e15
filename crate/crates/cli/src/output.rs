//! Artifact writing. JSON documents carry `config_hash`, `seed` and the full
//! config at the top level; CSV files start with a `#` comment line holding
//! the hash and seed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config_hash: &'a str,
    seed: u64,
    config: &'a RunConfig,
    #[serde(flatten)]
    payload: &'a T,
}

pub struct Output {
    dir: PathBuf,
    config: RunConfig,
    hash: String,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn create(dir: &Path, config: RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))?;
        let hash = config.hash();
        Ok(Self { dir: dir.to_path_buf(), config, hash, written: Vec::new() })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::output(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, payload: &T) -> Result<(), CliError> {
        let doc = Envelope { config_hash: &self.hash, seed: self.config.seed, config: &self.config, payload };
        let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Usage(e.to_string()))?;
        bytes.push(b'\n');
        self.put(name, &bytes)
    }

    /// `body` writes the CSV (header included) after the comment line.
    pub fn csv<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> varcast_core::Result<()>,
    {
        let mut bytes = format!("# config_hash={} seed={}\n", self.hash, self.config.seed).into_bytes();
        body(&mut bytes)?;
        self.put(name, &bytes)
    }
}
