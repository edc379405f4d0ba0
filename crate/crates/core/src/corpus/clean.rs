//! Separates proof-of-concept repositories from indicator listings and
//! records that do not reference any CVE.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{RepoId, RepoRecord};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CleanOptions {
    /// Records mentioning IoCs are flagged only above this many distinct CVEs.
    pub ioc_cve_count: usize,
}

impl Default for CleanOptions {
    fn default() -> Self {
        CleanOptions { ioc_cve_count: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExclusionReason {
    NoCve,
    /// Looks like an IoC catalog; queued for human review.
    IocListingReview,
}

/// A review-queue line: the record plus why it was set aside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    #[serde(flatten)]
    pub record: RepoRecord,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, Default)]
pub struct CleanOutcome {
    pub kept: Vec<RepoRecord>,
    pub excluded: Vec<Exclusion>,
}

impl CleanOutcome {
    /// Excluded records awaiting manual review (the IoC-listing ones).
    pub fn review_queue(&self) -> Vec<Exclusion> {
        self.excluded
            .iter()
            .filter(|e| e.reason == ExclusionReason::IocListingReview)
            .cloned()
            .collect()
    }
}

fn ioc_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)indicators?\s+of\s+compromise|\biocs?\b").expect("valid regex"))
}

/// Whether `text` mentions indicators of compromise.
pub fn mentions_ioc(text: &str) -> bool {
    ioc_pattern().is_match(text)
}

/// Partitions `records` into kept and excluded.
///
/// `ioc_mentions` holds the ids of repositories whose files mention IoCs.
pub fn clean_corpus(
    records: Vec<RepoRecord>,
    ioc_mentions: &BTreeSet<RepoId>,
    opts: &CleanOptions,
) -> CleanOutcome {
    let mut out = CleanOutcome::default();
    for record in records {
        let reason = if record.cve_ids.is_empty() {
            Some(ExclusionReason::NoCve)
        } else if ioc_mentions.contains(&record.repo_id) && record.cve_ids.len() > opts.ioc_cve_count {
            Some(ExclusionReason::IocListingReview)
        } else {
            None
        };
        match reason {
            Some(reason) => out.excluded.push(Exclusion { record, reason }),
            None => out.kept.push(record),
        }
    }
    out
}
