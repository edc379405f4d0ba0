//! Threat-intelligence enrichment for IPs and file hashes.

pub mod abuseipdb;
pub mod blocklist;
pub mod cache;
pub mod ratelimit;
pub mod service;
pub mod virustotal;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use blocklist::{load_blocklists, IpSet};
pub use cache::VerdictCache;
pub use ratelimit::RateLimiter;
pub use service::{IntelService, IntelSettings, SourceHealth, SourceMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntelSource {
    Blocklist,
    ScanService,
    ReputationDb,
}

impl IntelSource {
    pub fn label(self) -> &'static str {
        match self {
            IntelSource::Blocklist => "blocklist",
            IntelSource::ScanService => "scan-service",
            IntelSource::ReputationDb => "reputation-db",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictStatus {
    /// The source has a record for the subject.
    Known,
    /// The source answered but has never seen the subject.
    Unknown,
    /// The source could not be reached.
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntelVerdict {
    /// IP literal or lowercase sha256.
    pub subject: String,
    pub source: IntelSource,
    pub status: VerdictStatus,
    pub malicious: bool,
    /// Lowercase, sorted, deduplicated.
    pub labels: Vec<String>,
    pub detection_count: u32,
    pub report_count: u32,
    pub first_seen: Option<DateTime<Utc>>,
    pub last_seen: Option<DateTime<Utc>>,
}

/// Thresholds that turn raw counts into `malicious`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub engine_count: u32,
    pub reputation_count: u32,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            engine_count: 1,
            reputation_count: 1,
        }
    }
}

pub fn normalize_labels<I, S>(labels: I) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out: Vec<String> = labels
        .into_iter()
        .map(|s| s.as_ref().trim().to_lowercase())
        .filter(|s| !s.is_empty())
        .collect();
    out.sort();
    out.dedup();
    out
}

impl IntelVerdict {
    fn empty(subject: &str, source: IntelSource, status: VerdictStatus) -> Self {
        IntelVerdict {
            subject: subject.to_string(),
            source,
            status,
            malicious: false,
            labels: Vec::new(),
            detection_count: 0,
            report_count: 0,
            first_seen: None,
            last_seen: None,
        }
    }

    /// Known to the source, nothing bad recorded.
    pub fn clean(subject: &str, source: IntelSource) -> Self {
        Self::empty(subject, source, VerdictStatus::Known)
    }

    pub fn unknown(subject: &str, source: IntelSource) -> Self {
        Self::empty(subject, source, VerdictStatus::Unknown)
    }

    pub fn unavailable(subject: &str, source: IntelSource) -> Self {
        Self::empty(subject, source, VerdictStatus::Unavailable)
    }

    pub fn blocklist(subject: &str, hit: bool) -> Self {
        let mut v = Self::clean(subject, IntelSource::Blocklist);
        v.malicious = hit;
        v.detection_count = hit as u32;
        v
    }

    /// Sets `malicious` from the counts so that the threshold invariant holds
    /// by construction.
    pub fn decide(mut self, t: Thresholds) -> Self {
        self.labels = normalize_labels(&self.labels);
        self.malicious = match self.source {
            IntelSource::Blocklist => self.detection_count > 0,
            IntelSource::ScanService => self.detection_count >= t.engine_count.max(1),
            IntelSource::ReputationDb => self.report_count >= t.reputation_count.max(1),
        };
        self
    }

    pub fn is_unavailable(&self) -> bool {
        self.status == VerdictStatus::Unavailable
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_normalized() {
        assert_eq!(normalize_labels(["CobaltStrike", " trojan", "cobaltstrike", ""]), vec!["cobaltstrike", "trojan"]);
    }

    #[test]
    fn decide_respects_thresholds() {
        let t = Thresholds {
            engine_count: 3,
            reputation_count: 2,
        };
        let mut v = IntelVerdict::clean("h", IntelSource::ScanService);
        v.detection_count = 2;
        assert!(!v.clone().decide(t).malicious);
        v.detection_count = 3;
        assert!(v.decide(t).malicious);
        let mut r = IntelVerdict::clean("1.1.1.1", IntelSource::ReputationDb);
        r.report_count = 2;
        assert!(r.decide(t).malicious);
    }

    #[test]
    fn source_serializes_kebab() {
        assert_eq!(serde_json::to_string(&IntelSource::ScanService).unwrap(), "\"scan-service\"");
    }
}
