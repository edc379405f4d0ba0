//! Per-repository union of the four heuristics.

use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{binary_annotation, BinaryLabel, PayloadClass, PayloadDecision};
use crate::corpus::{RepoId, RepoRecord};
use crate::extract::{BinaryArtifact, EncodedPayload, Encoding, IpCandidate, IpClass, IpContext};
use crate::intel::{IntelSource, IntelVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Heuristic {
    Ip,
    Binary,
    Hex,
    Base64,
}

impl Heuristic {
    pub const ALL: [Heuristic; 4] = [Heuristic::Ip, Heuristic::Binary, Heuristic::Hex, Heuristic::Base64];

    pub fn label(self) -> &'static str {
        match self {
            Heuristic::Ip => "ip",
            Heuristic::Binary => "binary",
            Heuristic::Hex => "hex",
            Heuristic::Base64 => "base64",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Finding {
    pub heuristic: Heuristic,
    pub file: PathBuf,
    pub offset: Option<usize>,
    /// IP literal, sha256, or the (truncated) encoded text.
    pub indicator: String,
    /// Intel sources whose verdict supports the finding.
    pub sources: Vec<IntelSource>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpEvidence {
    pub candidate: IpCandidate,
    pub verdicts: Vec<IntelVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryEvidence {
    pub artifact: BinaryArtifact,
    pub verdict: IntelVerdict,
    pub label: BinaryLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayloadEvidence {
    pub payload: EncodedPayload,
    pub decision: PayloadDecision,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoVerdict {
    pub repo_id: RepoId,
    pub malicious: bool,
    pub findings: Vec<Finding>,
    /// Payloads that reach outside but are not confirmed malicious.
    pub suspicious: Vec<Finding>,
    pub annotations: Vec<String>,
    pub decided_at: DateTime<Utc>,
}

impl RepoVerdict {
    pub fn heuristics(&self) -> std::collections::BTreeSet<Heuristic> {
        self.findings.iter().map(|f| f.heuristic).collect()
    }

    pub fn fired(&self, h: Heuristic) -> bool {
        self.findings.iter().any(|f| f.heuristic == h)
    }

    pub fn suspicious_fired(&self, h: Heuristic) -> bool {
        self.suspicious.iter().any(|f| f.heuristic == h)
    }
}

fn truncate(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_string()
    } else {
        let mut t: String = s.chars().take(n).collect();
        t.push_str("...");
        t
    }
}

fn malicious_sources(verdicts: &[IntelVerdict]) -> Vec<IntelSource> {
    let mut s: Vec<IntelSource> = verdicts.iter().filter(|v| v.malicious).map(|v| v.source).collect();
    s.sort();
    s.dedup();
    s
}

fn payload_finding(e: &PayloadEvidence, sources: Vec<IntelSource>) -> Finding {
    let p = &e.payload;
    let mut detail = Vec::new();
    if !e.decision.malicious_ips.is_empty() {
        detail.push(format!("malicious ip {}", e.decision.malicious_ips.join(" ")));
    }
    if let Some(m) = &e.decision.exec_match {
        detail.push(format!("exec pattern {m:?}"));
    }
    if detail.is_empty() {
        let ips = super::public_ips(p);
        if !ips.is_empty() {
            detail.push(format!("public ip {}", ips.join(" ")));
        }
        if !p.embedded_urls.is_empty() {
            detail.push(format!("url {}", p.embedded_urls.join(" ")));
        }
    }
    Finding {
        heuristic: match p.encoding {
            Encoding::Hex => Heuristic::Hex,
            Encoding::Base64 => Heuristic::Base64,
        },
        file: p.source_file.clone(),
        offset: Some(p.offset),
        indicator: truncate(&p.raw, 80),
        sources,
        detail: format!("depth {}: {}", p.depth, detail.join("; ")),
    }
}

/// Malicious iff some heuristic produced a confirmed finding.
pub fn aggregate_repo(
    repo: &RepoRecord,
    ips: &[IpEvidence],
    binaries: &[BinaryEvidence],
    payloads: &[PayloadEvidence],
    payload_intel: &std::collections::BTreeMap<String, Vec<IntelVerdict>>,
    decided_at: DateTime<Utc>,
) -> RepoVerdict {
    let mut findings = Vec::new();
    let mut suspicious = Vec::new();
    let mut annotations = Vec::new();

    for e in ips {
        let c = &e.candidate;
        for v in e.verdicts.iter().filter(|v| v.is_unavailable()) {
            annotations.push(format!("{}: {} unavailable", c.literal, v.source.label()));
        }
        if c.context != IpContext::Code || c.classification != IpClass::Public {
            continue;
        }
        let sources = malicious_sources(&e.verdicts);
        if !sources.is_empty() {
            let labels: Vec<String> = e.verdicts.iter().flat_map(|v| v.labels.iter().cloned()).collect();
            findings.push(Finding {
                heuristic: Heuristic::Ip,
                file: c.file.clone(),
                offset: Some(c.offset),
                indicator: c.literal.clone(),
                detail: format!(
                    "flagged by {}{}",
                    sources.iter().map(|s| s.label()).collect::<Vec<_>>().join(", "),
                    if labels.is_empty() { String::new() } else { format!(" ({})", labels.join(", ")) }
                ),
                sources,
            });
        }
    }

    for b in binaries {
        if let Some(a) = binary_annotation(&b.verdict) {
            annotations.push(format!("{}: {a}", b.artifact.path.display()));
        }
        if b.label == BinaryLabel::Malicious {
            findings.push(Finding {
                heuristic: Heuristic::Binary,
                file: b.artifact.path.clone(),
                offset: None,
                indicator: b.artifact.sha256.clone(),
                sources: vec![IntelSource::ScanService],
                detail: format!("{} detections ({})", b.verdict.detection_count, b.verdict.labels.join(", ")),
            });
        }
    }

    for e in payloads {
        match e.decision.class {
            PayloadClass::Benign => {}
            PayloadClass::Suspicious => suspicious.push(payload_finding(e, Vec::new())),
            PayloadClass::Malicious => {
                let mut sources: Vec<IntelSource> = e
                    .decision
                    .malicious_ips
                    .iter()
                    .filter_map(|ip| payload_intel.get(ip))
                    .flat_map(|vs| malicious_sources(vs))
                    .collect();
                sources.sort();
                sources.dedup();
                findings.push(payload_finding(e, sources));
            }
        }
    }

    findings.sort();
    findings.dedup();
    suspicious.sort();
    suspicious.dedup();
    annotations.sort();
    annotations.dedup();
    RepoVerdict {
        repo_id: repo.repo_id.clone(),
        malicious: !findings.is_empty(),
        findings,
        suspicious,
        annotations,
        decided_at,
    }
}
