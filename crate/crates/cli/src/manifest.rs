//! Run manifests: enough to re-run a command and check its outputs.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub tool_version: String,
    /// Subcommand arguments as given, without global flags.
    pub argv: Vec<String>,
    pub seed: u64,
    /// Directory the command ran in; relative input paths resolve here.
    pub cwd: PathBuf,
    pub config: BTreeMap<String, String>,
    /// Input path → SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Path relative to the output directory → SHA-256.
    pub outputs: BTreeMap<String, String>,
    /// Seconds since the Unix epoch. Not part of any compared artifact.
    pub created: u64,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).with_context(|| format!("reading {}", path.display()))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

/// Hash of an output file. A JSON object with a top-level `timestamp` is
/// hashed without that field, so reruns compare equal.
pub fn output_hash(path: &Path) -> Result<String> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if let Ok(serde_json::Value::Object(mut map)) = serde_json::from_str::<serde_json::Value>(&text) {
            if map.remove("timestamp").is_some() {
                let canonical = serde_json::to_string(&map)?;
                return Ok(hex(&Sha256::digest(canonical.as_bytes())));
            }
        }
    }
    sha256_file(path)
}

fn hex(digest: &[u8]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Hashes of `files`, keyed by their path relative to `root`.
pub fn hash_outputs(root: &Path, files: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    files
        .iter()
        .map(|f| {
            let rel = f.strip_prefix(root).unwrap_or(f);
            Ok((rel.to_string_lossy().replace('\\', "/"), output_hash(f)?))
        })
        .collect()
}

pub fn hash_inputs(files: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    files
        .iter()
        .map(|f| Ok((f.to_string_lossy().into_owned(), sha256_file(f)?)))
        .collect()
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let m: Manifest =
            serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
        if m.version != MANIFEST_VERSION {
            return Err(crate::Invalid(format!(
                "manifest version {} is not {MANIFEST_VERSION}",
                m.version
            ))
            .into());
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

/// Outputs whose hash under `root` differs from the manifest, with the
/// reason.
pub fn compare_outputs(manifest: &Manifest, root: &Path) -> Vec<(String, String)> {
    let mut diffs = Vec::new();
    for (rel, want) in &manifest.outputs {
        match output_hash(&root.join(rel)) {
            Ok(got) if &got == want => {}
            Ok(got) => diffs.push((rel.clone(), format!("hash {got} != {want}"))),
            Err(e) => diffs.push((rel.clone(), format!("{e:#}"))),
        }
    }
    diffs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        std::fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let h = hash_outputs(dir.path(), &[p]).unwrap();
        assert_eq!(h.keys().collect::<Vec<_>>(), ["abc"]);
    }

    #[test]
    fn json_timestamps_are_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
        std::fs::write(&a, r#"{"x": 1, "timestamp": 5}"#).unwrap();
        std::fs::write(&b, r#"{"x": 1, "timestamp": 9}"#).unwrap();
        assert_eq!(output_hash(&a).unwrap(), output_hash(&b).unwrap());
        std::fs::write(&b, r#"{"x": 2, "timestamp": 5}"#).unwrap();
        assert_ne!(output_hash(&a).unwrap(), output_hash(&b).unwrap());
    }
}
