//! Output files: all-or-nothing bundle writes and metadata sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::hex_prefix;
use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Ordered `key = value` metadata written next to an output file as
/// `<file>.meta`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    /// Starts a sidecar describing an output of the given kind.
    pub fn new(kind: &str) -> Self {
        let mut m = Metadata::default();
        m.insert("kind", kind);
        m.insert("version", TOOL_VERSION);
        m
    }

    pub fn insert(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        Metadata { entries }
    }
}

/// Hex SHA-256 prefix of a file's contents, used to tie derived outputs to
/// their inputs.
pub fn content_digest(bytes: &[u8]) -> String {
    hex_prefix(&Sha256::digest(bytes), 16)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta");
    path.with_file_name(name)
}

/// Creates `dir` if needed and checks that files can be created in it.
pub fn ensure_writable_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(format!(".qstderr-probe-{}", std::process::id()));
    fs::write(&probe, b"").map_err(|e| Error::io(dir, e))?;
    let _ = fs::remove_file(&probe);
    Ok(())
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = std::ffi::OsString::from(".");
    name.push(path.file_name().unwrap_or_default());
    name.push(format!(".tmp{}", std::process::id()));
    path.with_file_name(name)
}

/// Writes every `(path, contents)` pair or none of them: contents go to
/// temporary files first and are renamed into place only once all writes
/// succeeded.
pub fn write_bundle(files: &[(PathBuf, Vec<u8>)]) -> Result<()> {
    let mut temps: Vec<PathBuf> = Vec::with_capacity(files.len());
    let cleanup = |temps: &[PathBuf]| {
        for t in temps {
            let _ = fs::remove_file(t);
        }
    };
    for (path, bytes) in files {
        let tmp = temp_path(path);
        if let Err(e) = fs::write(&tmp, bytes) {
            cleanup(&temps);
            let _ = fs::remove_file(&tmp);
            return Err(Error::io(path, e));
        }
        temps.push(tmp);
    }
    for (i, (path, _)) in files.iter().enumerate() {
        if let Err(e) = fs::rename(&temps[i], path) {
            cleanup(&temps[i..]);
            for (done, _) in &files[..i] {
                let _ = fs::remove_file(done);
            }
            return Err(Error::io(path, e));
        }
    }
    Ok(())
}

/// Adds `path` and its metadata sidecar to a bundle.
pub fn with_sidecar(path: PathBuf, contents: Vec<u8>, meta: &Metadata) -> [(PathBuf, Vec<u8>); 2] {
    let side = sidecar_path(&path);
    [(path, contents), (side, meta.render().into_bytes())]
}
