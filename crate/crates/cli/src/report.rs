use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use confex_core::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// Provenance block shared by every report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub generated_at_unix: u64,
    pub inputs: Vec<InputDigest>,
    /// Digest of the data file and attribute tables, in order.
    pub dataset_sha256: String,
    pub config: serde_json::Value,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(hex(&Sha256::digest(&bytes)))
}

pub fn digest(role: &str, path: &Path) -> Result<InputDigest> {
    Ok(InputDigest {
        role: role.to_owned(),
        path: path.display().to_string(),
        sha256: sha256_file(path)?,
    })
}

/// Digest of the data file followed by the attribute tables.
pub fn dataset_digest(data: &Path, attrs: &[PathBuf]) -> Result<(Vec<InputDigest>, String)> {
    let mut inputs = vec![digest("data", data)?];
    for a in attrs {
        inputs.push(digest("attrs", a)?);
    }
    let mut h = Sha256::new();
    for i in &inputs {
        h.update(i.sha256.as_bytes());
        h.update(b"\n");
    }
    Ok((inputs, hex(&h.finalize())))
}

impl Header {
    pub fn new(seed: u64, inputs: Vec<InputDigest>, dataset_sha256: String, config: &impl Serialize) -> Result<Header> {
        Ok(Header {
            tool: "confex".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            generated_at_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            inputs,
            dataset_sha256,
            config: serde_json::to_value(config)?,
        })
    }
}

/// Writes pretty JSON to `out`, or to stdout when `out` is `None`.
pub fn emit(value: &impl Serialize, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
