//! Loads a corpus laid out on disk as `<root>/<owner>/<name>/`.
//!
//! Hosting metadata for the repositories, when available, lives in
//! `<root>/metadata.jsonl` (one [`RepoRecord`] per line). Directories without
//! a metadata line get a synthesized record.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use rayon::prelude::*;

use super::clean::mentions_ioc;
use super::cve::extract_cve_ids;
use super::inventory::{scan_repo_files, FileInventory, ScanLimits};
use super::{RepoId, RepoRecord};
use crate::error::{Error, Result};
use crate::lang::{self, UNDETECTED};
use crate::jsonl;

pub const METADATA_FILE: &str = "metadata.jsonl";

#[derive(Debug, Clone, Default)]
pub struct IngestOutput {
    /// All repositories found, CVE ids populated, ordered by id.
    pub records: Vec<RepoRecord>,
    pub inventories: BTreeMap<RepoId, FileInventory>,
    /// Repositories whose files mention indicators of compromise.
    pub ioc_mentions: BTreeSet<RepoId>,
}

fn read_text(path: &Path) -> Option<String> {
    std::fs::read(path)
        .ok()
        .map(|b| String::from_utf8_lossy(&b).into_owned())
}

fn synthesize(owner: &str, name: &str, rel: &str) -> RepoRecord {
    let epoch = DateTime::<Utc>::UNIX_EPOCH;
    RepoRecord {
        repo_id: RepoId(format!("{owner}/{name}")),
        owner: owner.to_string(),
        name: name.to_string(),
        description: String::new(),
        primary_language: UNDETECTED.to_string(),
        stars: 0,
        forks: 0,
        created_at: epoch,
        updated_at: epoch,
        pushed_at: epoch,
        is_fork: false,
        parent_id: None,
        cve_ids: BTreeSet::new(),
        local_path: Some(rel.to_string()),
    }
}

fn majority_language(inv: &FileInventory) -> Option<String> {
    let mut bytes: BTreeMap<&str, u64> = BTreeMap::new();
    for f in &inv.text_files {
        if lang::is_code(&f.language) {
            *bytes.entry(f.language.as_str()).or_default() += f.size;
        }
    }
    bytes
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
        .map(|(l, _)| l.to_string())
}

/// Enumerates the on-disk corpus, fills in CVE ids from names, descriptions,
/// READMEs and code files, and notes IoC mentions for cleaning.
pub fn ingest_local(root: &Path, limits: &ScanLimits) -> Result<IngestOutput> {
    let entries = std::fs::read_dir(root).map_err(|source| Error::Ingestion {
        path: root.to_path_buf(),
        source,
    })?;

    let mut by_path: BTreeMap<String, RepoRecord> = BTreeMap::new();
    let meta_path = root.join(METADATA_FILE);
    if meta_path.is_file() {
        for mut rec in jsonl::read::<RepoRecord>(&meta_path)? {
            let rel = rec
                .local_path
                .clone()
                .unwrap_or_else(|| format!("{}/{}", rec.owner, rec.name));
            rec.local_path = Some(rel.clone());
            by_path.insert(rel, rec);
        }
    }

    let mut owners: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_dir()).unwrap_or(false))
        .map(|e| e.path())
        .collect();
    owners.sort();
    for owner_dir in owners {
        let owner = owner_dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        if owner.starts_with('.') {
            continue;
        }
        let mut repos: Vec<PathBuf> = std::fs::read_dir(&owner_dir)
            .map_err(|e| Error::io(&owner_dir, e))?
            .filter_map(|e| e.ok())
            .filter(|e| e.file_type().map(|t| t.is_dir()).unwrap_or(false))
            .map(|e| e.path())
            .collect();
        repos.sort();
        for repo_dir in repos {
            let name = repo_dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
            let rel = format!("{owner}/{name}");
            by_path.entry(rel.clone()).or_insert_with(|| synthesize(&owner, &name, &rel));
        }
    }

    let scanned: Vec<(RepoRecord, Option<FileInventory>, bool)> = by_path
        .into_par_iter()
        .map(|(rel, mut rec)| -> Result<_> {
            let dir = root.join(&rel);
            let mut ids = rec.cve_ids.clone();
            ids.extend(extract_cve_ids(&rec.name));
            ids.extend(extract_cve_ids(&rec.description));
            if !dir.is_dir() {
                rec.cve_ids = ids;
                rec.local_path = None;
                return Ok((rec, None, false));
            }
            let inv = scan_repo_files(&dir, limits)?;
            let mut ioc = false;
            for f in &inv.text_files {
                if let Some(text) = read_text(&dir.join(&f.path)) {
                    ids.extend(extract_cve_ids(&text));
                    ioc |= mentions_ioc(&text);
                }
            }
            rec.cve_ids = ids;
            if rec.primary_language == UNDETECTED {
                if let Some(l) = majority_language(&inv) {
                    rec.primary_language = l;
                }
            }
            Ok((rec, Some(inv), ioc))
        })
        .collect::<Result<_>>()?;

    let mut out = IngestOutput::default();
    let mut seen = BTreeSet::new();
    for (rec, inv, ioc) in scanned {
        if !seen.insert(rec.repo_id.clone()) {
            log::warn!("duplicate repo_id {} in corpus; keeping the first", rec.repo_id);
            continue;
        }
        if ioc {
            out.ioc_mentions.insert(rec.repo_id.clone());
        }
        if let Some(inv) = inv {
            out.inventories.insert(rec.repo_id.clone(), inv);
        }
        out.records.push(rec);
    }
    out.records.sort_by(|a, b| a.repo_id.cmp(&b.repo_id));
    Ok(out)
}
