//! Provenance header written into every output file.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::CliError;

/// Inputs that determine a command's deterministic outputs. Wall-clock
/// timestamps are kept out of it so that repeated runs produce identical
/// files; they go to the timing file instead.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunManifest {
    pub command: String,
    /// `(label, path, content hash)`.
    pub inputs: Vec<(String, String, String)>,
    /// Ordered `(key, value)` parameters, seeds included.
    pub params: Vec<(String, String)>,
}

/// Git-style content hash: SHA-256 of `blob <len>\0<bytes>`.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("blob {}\0", bytes.len()).as_bytes());
    hasher.update(bytes);
    hasher.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            ..RunManifest::default()
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    /// Records an input file and the hash of its current contents.
    pub fn input(mut self, label: &str, path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.inputs.push((
            label.to_string(),
            path.display().to_string(),
            blob_hash(&bytes),
        ));
        Ok(self)
    }

    /// `# key: value` lines.
    pub fn header(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# command: {}", self.command);
        for (label, path, hash) in &self.inputs {
            let _ = writeln!(out, "# input.{label}: {path} sha256:{hash}");
        }
        for (k, v) in &self.params {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out
    }

    /// The same entries as a map, for TOML sidecars.
    pub fn entries(&self) -> std::collections::BTreeMap<String, String> {
        let mut map = std::collections::BTreeMap::new();
        map.insert("command".to_string(), self.command.clone());
        for (label, path, hash) in &self.inputs {
            map.insert(format!("input.{label}"), format!("{path} sha256:{hash}"));
        }
        for (k, v) in &self.params {
            map.insert(k.clone(), v.clone());
        }
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_of_empty_input() {
        // sha256 of "blob 0\0"
        assert_eq!(
            blob_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }

    #[test]
    fn header_lists_everything_in_order() {
        let m = RunManifest::new("ifs").param("seed", 3).param("k", 10);
        assert_eq!(m.header(), "# command: ifs\n# seed: 3\n# k: 10\n");
        assert_eq!(m.entries().len(), 3);
    }
}
