//! Repository ingestion: CVE identifier recognition, local corpus loading,
//! cleaning, hosting-API harvesting and snapshot diffing.

pub mod clean;
pub mod cve;
pub mod harvest;
pub mod ingest;
pub mod inventory;
pub mod snapshot;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::jsonl;

pub use clean::{clean_corpus, CleanOptions, CleanOutcome, Exclusion, ExclusionReason};
pub use cve::{extract_cve_ids, CveId};
pub use ingest::{ingest_local, IngestOutput};
pub use inventory::{scan_repo_files, FileInventory, ScanLimits};
pub use snapshot::{diff_snapshots, CorpusSnapshot, RepoStatus, SnapshotEntry, TakedownActor};

/// Opaque repository key, unique within a manifest.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RepoId(pub String);

impl fmt::Display for RepoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RepoId {
    fn from(s: &str) -> Self {
        RepoId(s.to_string())
    }
}

/// One proof-of-concept repository.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepoRecord {
    pub repo_id: RepoId,
    pub owner: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default = "undetected")]
    pub primary_language: String,
    #[serde(default)]
    pub stars: u64,
    #[serde(default)]
    pub forks: u64,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub pushed_at: DateTime<Utc>,
    #[serde(default)]
    pub is_fork: bool,
    #[serde(default)]
    pub parent_id: Option<RepoId>,
    #[serde(default)]
    pub cve_ids: BTreeSet<CveId>,
    #[serde(default)]
    pub local_path: Option<String>,
}

fn undetected() -> String {
    crate::lang::UNDETECTED.to_string()
}

impl RepoRecord {
    /// CVE years this repository targets.
    pub fn cve_years(&self) -> BTreeSet<u16> {
        self.cve_ids.iter().map(|c| c.year()).collect()
    }
}

/// Writes records one per line, ordered by `repo_id`.
pub fn write_manifest(path: &Path, records: &[RepoRecord]) -> Result<()> {
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| a.repo_id.cmp(&b.repo_id));
    jsonl::write(path, &sorted)
}

pub fn read_manifest(path: &Path) -> Result<Vec<RepoRecord>> {
    jsonl::read(path)
}

/// Drops forks when only original repositories are wanted.
pub fn originals_only(records: &[RepoRecord]) -> Vec<RepoRecord> {
    records.iter().filter(|r| !r.is_fork).cloned().collect()
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use chrono::TimeZone;

    pub fn record(id: &str, owner: &str, cves: &[&str]) -> RepoRecord {
        let t = Utc.with_ymd_and_hms(2022, 4, 1, 0, 0, 0).unwrap();
        RepoRecord {
            repo_id: RepoId(id.to_string()),
            owner: owner.to_string(),
            name: id.rsplit('/').next().unwrap_or(id).to_string(),
            description: String::new(),
            primary_language: "Python".to_string(),
            stars: 0,
            forks: 0,
            created_at: t,
            updated_at: t,
            pushed_at: t,
            is_fork: false,
            parent_id: None,
            cve_ids: cves.iter().map(|c| c.parse().unwrap()).collect(),
            local_path: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::record;
    use super::*;

    #[test]
    fn manifest_is_sorted_by_repo_id() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.jsonl");
        let recs = vec![
            record("zed/b", "zed", &["CVE-2019-0708"]),
            record("amy/a", "amy", &["CVE-2021-44228"]),
        ];
        write_manifest(&path, &recs).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(back[0].repo_id.0, "amy/a");
        assert_eq!(back[1].repo_id.0, "zed/b");
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().next().unwrap().starts_with("{\"repo_id\":\"amy/a\",\"owner\""));
    }
}
