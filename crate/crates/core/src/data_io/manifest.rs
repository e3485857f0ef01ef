use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run. Holds no timestamps or host details,
/// so identical runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seeds: BTreeMap<String, u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    /// Preprocessing choices the data does not determine, e.g. whether an
    /// intercept was added.
    pub choices: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>) -> Self {
        RunManifest {
            tool: "shufreg".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seeds: BTreeMap::new(),
            config: serde_json::Value::Null,
            inputs: Vec::new(),
            choices: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn seed(mut self, name: &str, value: u64) -> Self {
        self.seeds.insert(name.into(), value);
        self
    }

    pub fn choice(mut self, name: &str, value: impl ToString) -> Self {
        self.choices.insert(name.into(), value.to_string());
        self
    }

    pub fn with_config<T: Serialize>(mut self, config: &T) -> Self {
        self.config = serde_json::to_value(config).expect("config serializes to JSON");
        self
    }

    pub fn input(mut self, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(self)
    }
}

/// Hex-encoded SHA-256 of a file's bytes.
pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let read = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if read == 0 {
            break;
        }
        hasher.update(&buf[..read]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc.txt");
        std::fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_serializes_deterministically() {
        let m = RunManifest::new("fit")
            .seed("seed", 3)
            .seed("a", 1)
            .choice("intercept", false)
            .with_config(&serde_json::json!({"k": 50}));
        let a = serde_json::to_string(&m).unwrap();
        assert_eq!(a, serde_json::to_string(&m.clone()).unwrap());
        assert!(a.find("\"a\"").unwrap() < a.find("\"seed\"").unwrap());
        let back: RunManifest = serde_json::from_str(&a).unwrap();
        assert_eq!(back, m);
    }
}
