use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RepoVerdict;
use crate::corpus::{RepoId, RepoRecord};
use crate::error::{Error, Result};

pub const MALICIOUS: &str = "malicious";
pub const BENIGN: &str = "benign";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub class: String,
    pub metric: String,
    pub value: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnershipStats {
    /// repos-per-user → number of users, over every owner.
    pub all: BTreeMap<usize, usize>,
    /// malicious-repos-per-user → number of users, over owners of at least
    /// one malicious repository.
    pub malicious: BTreeMap<usize, usize>,
    /// Stars and forks per repository, labeled by verdict class.
    pub distribution: Vec<DistributionRow>,
}

fn histogram<'a>(owners: impl Iterator<Item = &'a str>) -> BTreeMap<usize, usize> {
    let mut per_user: BTreeMap<&str, usize> = BTreeMap::new();
    for o in owners {
        *per_user.entry(o).or_default() += 1;
    }
    let mut h = BTreeMap::new();
    for n in per_user.values() {
        *h.entry(*n).or_default() += 1;
    }
    h
}

pub fn malicious_set(verdicts: &[RepoVerdict]) -> BTreeSet<&RepoId> {
    verdicts.iter().filter(|v| v.malicious).map(|v| &v.repo_id).collect()
}

pub fn ownership_stats(corpus: &[RepoRecord], verdicts: &[RepoVerdict]) -> OwnershipStats {
    let bad = malicious_set(verdicts);
    let mut sorted: Vec<&RepoRecord> = corpus.iter().collect();
    sorted.sort_by(|a, b| a.repo_id.cmp(&b.repo_id));
    let mut distribution = Vec::new();
    for r in &sorted {
        let class = if bad.contains(&r.repo_id) { MALICIOUS } else { BENIGN };
        for (metric, value) in [("stars", r.stars), ("forks", r.forks)] {
            distribution.push(DistributionRow {
                class: class.to_string(),
                metric: metric.to_string(),
                value,
            });
        }
    }
    OwnershipStats {
        all: histogram(sorted.iter().map(|r| r.owner.as_str())),
        malicious: histogram(sorted.iter().filter(|r| bad.contains(&r.repo_id)).map(|r| r.owner.as_str())),
        distribution,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossRef {
    pub repo_matches: BTreeSet<RepoId>,
    pub user_matches: BTreeSet<String>,
}

/// Exact joins: on `(name, owner)` for repositories, on owner for users.
pub fn crossref_dataset(corpus: &[RepoRecord], external: &[(String, String)]) -> CrossRef {
    let pairs: BTreeSet<(&str, &str)> = external.iter().map(|(n, o)| (n.as_str(), o.as_str())).collect();
    let owners: BTreeSet<&str> = external.iter().map(|(_, o)| o.as_str()).collect();
    let mut out = CrossRef::default();
    for r in corpus {
        if pairs.contains(&(r.name.as_str(), r.owner.as_str())) {
            out.repo_matches.insert(r.repo_id.clone());
        }
        if owners.contains(r.owner.as_str()) {
            out.user_matches.insert(r.owner.clone());
        }
    }
    out
}

/// Reads `owner,name` rows into `(name, owner)` tuples. Returns the tuples
/// and the number of malformed rows skipped.
pub fn load_external_dataset(path: &Path) -> Result<(Vec<(String, String)>, usize)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut skipped = 0;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        match cols.as_slice() {
            [o, n] if !o.is_empty() && !n.is_empty() && !o.contains(' ') && !n.contains(' ') => {
                rows.push((n.to_string(), o.to_string()))
            }
            _ => skipped += 1,
        }
    }
    // A header row is not data.
    if rows.first().is_some_and(|(n, o)| o == "owner" && n == "name") {
        rows.remove(0);
    }
    Ok((rows, skipped))
}
