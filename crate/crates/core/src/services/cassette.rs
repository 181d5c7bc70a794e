use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ServiceError;
use crate::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub key: String,
    pub response: Value,
}

/// Directory of recorded service responses.
#[derive(Debug, Clone)]
pub struct Cassette {
    root: PathBuf,
}

impl Cassette {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, service: &str, key: &str) -> PathBuf {
        self.root
            .join(service)
            .join(format!("{}.json", sha256_hex(key)))
    }

    pub fn get(&self, service: &str, key: &str) -> Result<Option<Value>, ServiceError> {
        let path = self.path_for(service, key);
        match fs::read(&path) {
            Ok(bytes) => {
                let entry: CassetteEntry = serde_json::from_slice(&bytes)
                    .map_err(|e| ServiceError::Io(format!("{}: {e}", path.display())))?;
                if entry.key != key {
                    return Err(ServiceError::Io(format!(
                        "{}: key mismatch (hash collision or tampering)",
                        path.display()
                    )));
                }
                Ok(Some(entry.response))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(ServiceError::Io(format!("{}: {e}", path.display()))),
        }
    }

    pub fn put(&self, service: &str, key: &str, response: &Value) -> Result<(), ServiceError> {
        let path = self.path_for(service, key);
        let io = |e: std::io::Error| ServiceError::Io(format!("{}: {e}", path.display()));
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io)?;
        }
        let entry = CassetteEntry {
            key: key.to_string(),
            response: response.clone(),
        };
        let body = serde_json::to_vec(&entry).map_err(|e| ServiceError::Io(e.to_string()))?;
        fs::write(&path, body).map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn put_then_get() {
        let dir = tempfile::tempdir().unwrap();
        let cassette = Cassette::new(dir.path());
        assert_eq!(cassette.get("svc", "k").unwrap(), None);
        cassette.put("svc", "k", &json!({"v": 1})).unwrap();
        assert_eq!(cassette.get("svc", "k").unwrap(), Some(json!({"v": 1})));
        assert_eq!(cassette.get("other", "k").unwrap(), None);
    }
}
