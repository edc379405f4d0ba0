//! Point-in-time availability of corpus repositories and the diff between
//! two such snapshots.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::harvest::{GithubClient, HarvestError};
use super::{RepoId, RepoRecord};
use crate::error::{Error, Result};
use crate::transport::Transport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TakedownActor {
    None,
    Owner,
    Platform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub available: bool,
    /// Frozen at the last known value once the repository disappears.
    pub updated_at: DateTime<Utc>,
    pub pushed_at: DateTime<Utc>,
    pub takedown_actor: TakedownActor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_language: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSnapshot {
    pub taken_at: DateTime<Utc>,
    pub records: BTreeMap<RepoId, SnapshotEntry>,
}

impl CorpusSnapshot {
    /// Snapshot of a manifest as it was harvested.
    pub fn from_records(records: &[RepoRecord], taken_at: DateTime<Utc>) -> Self {
        let records = records
            .iter()
            .map(|r| {
                (
                    r.repo_id.clone(),
                    SnapshotEntry {
                        available: true,
                        updated_at: r.updated_at,
                        pushed_at: r.pushed_at,
                        takedown_actor: TakedownActor::None,
                        description: Some(r.description.clone()),
                        primary_language: Some(r.primary_language.clone()),
                    },
                )
            })
            .collect();
        CorpusSnapshot { taken_at, records }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = serde_json::to_vec_pretty(self)?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

/// Re-queries every repository of a manifest. A 451 answer means the
/// platform blocked the repository; any other miss is attributed to the owner.
pub fn take_snapshot<T: Transport>(
    records: &[RepoRecord],
    client: &GithubClient<T>,
    taken_at: DateTime<Utc>,
) -> Result<CorpusSnapshot, HarvestError> {
    let mut out = BTreeMap::new();
    for r in records {
        let (status, repo) = client.repository(&r.owner, &r.name)?;
        let entry = match repo {
            Some(api) => SnapshotEntry {
                available: true,
                updated_at: api.updated_at,
                pushed_at: api.pushed_at,
                takedown_actor: TakedownActor::None,
                description: Some(api.description.unwrap_or_default()),
                primary_language: Some(api.language.unwrap_or_else(|| crate::lang::UNDETECTED.to_string())),
            },
            None => SnapshotEntry {
                available: false,
                updated_at: r.updated_at,
                pushed_at: r.pushed_at,
                takedown_actor: if status == 451 { TakedownActor::Platform } else { TakedownActor::Owner },
                description: Some(r.description.clone()),
                primary_language: Some(r.primary_language.clone()),
            },
        };
        out.insert(r.repo_id.clone(), entry);
    }
    Ok(CorpusSnapshot { taken_at, records: out })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepoStatus {
    Unchanged,
    Pushed,
    Updated,
    TakenDownByOwner,
    TakenDownByPlatform,
    /// Present only in the newer snapshot.
    Added,
}

impl RepoStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RepoStatus::Unchanged => "Unchanged",
            RepoStatus::Pushed => "Pushed",
            RepoStatus::Updated => "Updated",
            RepoStatus::TakenDownByOwner => "Taken down by owner",
            RepoStatus::TakenDownByPlatform => "Taken down by platform",
            RepoStatus::Added => "Added",
        }
    }
}

fn metadata_changed(old: &SnapshotEntry, new: &SnapshotEntry) -> bool {
    match (
        (&old.description, &old.primary_language),
        (&new.description, &new.primary_language),
    ) {
        ((Some(od), Some(ol)), (Some(nd), Some(nl))) => od != nd || ol != nl,
        // Without recorded metadata, fall back to the update timestamp.
        _ => new.updated_at > old.updated_at,
    }
}

/// Classifies each repository across two snapshots. A push takes precedence
/// over a metadata update.
pub fn diff_snapshots(old: &CorpusSnapshot, new: &CorpusSnapshot) -> BTreeMap<RepoId, RepoStatus> {
    let keys: BTreeSet<&RepoId> = old.records.keys().chain(new.records.keys()).collect();
    keys.into_iter()
        .map(|id| {
            let status = match (old.records.get(id), new.records.get(id)) {
                (_, Some(n)) if !n.available => match n.takedown_actor {
                    TakedownActor::Platform => RepoStatus::TakenDownByPlatform,
                    _ => RepoStatus::TakenDownByOwner,
                },
                (Some(_), None) => RepoStatus::TakenDownByOwner,
                (None, Some(_)) => RepoStatus::Added,
                (Some(o), Some(n)) => {
                    if n.pushed_at > o.pushed_at {
                        RepoStatus::Pushed
                    } else if metadata_changed(o, n) {
                        RepoStatus::Updated
                    } else {
                        RepoStatus::Unchanged
                    }
                }
                (None, None) => unreachable!("key drawn from one of the maps"),
            };
            (id.clone(), status)
        })
        .collect()
}

/// Status counts shaped like a one-year review table.
pub fn status_counts(diff: &BTreeMap<RepoId, RepoStatus>) -> BTreeMap<RepoStatus, usize> {
    let mut out = BTreeMap::new();
    for s in diff.values() {
        *out.entry(*s).or_insert(0) += 1;
    }
    out
}
