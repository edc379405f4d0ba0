//! Content hashes of executable artifacts.

use std::collections::BTreeSet;
use std::fs::File;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::inventory::{FileInventory, MagicKind, SkippedFile};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryArtifact {
    pub path: PathBuf,
    pub size: u64,
    /// Lowercase hex, 64 characters.
    pub sha256: String,
    pub magic: MagicKind,
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut hasher = Sha256::new();
    io::copy(&mut File::open(path)?, &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hashes every binary of an inventory rooted at `repo_root`. Files that can
/// no longer be read are returned as skipped.
pub fn hash_binaries(repo_root: &Path, inventory: &FileInventory) -> (Vec<BinaryArtifact>, Vec<SkippedFile>) {
    let mut artifacts = Vec::new();
    let mut skipped = Vec::new();
    for b in &inventory.binary_files {
        match sha256_file(&repo_root.join(&b.path)) {
            Ok(sha256) => artifacts.push(BinaryArtifact {
                path: b.path.clone(),
                size: b.size,
                sha256,
                magic: b.magic.clone(),
            }),
            Err(e) => skipped.push(SkippedFile {
                path: b.path.clone(),
                reason: format!("unreadable: {e}"),
            }),
        }
    }
    (artifacts, skipped)
}

pub fn unique_hashes<'a>(artifacts: impl IntoIterator<Item = &'a BinaryArtifact>) -> BTreeSet<&'a str> {
    artifacts.into_iter().map(|a| a.sha256.as_str()).collect()
}

pub fn is_sha256(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}
