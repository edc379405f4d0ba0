//! Triage of executables flagged by the scan service.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::Lexicons;
use crate::corpus::CveId;
use crate::intel::{IntelVerdict, VerdictStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinaryLabel {
    Malicious,
    CveRelated,
    Hacktool,
    Clean,
}

impl BinaryLabel {
    pub fn title(self) -> &'static str {
        match self {
            BinaryLabel::Malicious => "Malicious",
            BinaryLabel::CveRelated => "CVE Related",
            BinaryLabel::Hacktool => "Hacktool",
            BinaryLabel::Clean => "Clean",
        }
    }
}

/// A flagged binary is excused when the detection is about the exploit the
/// repository claims to ship, or about a well-known offensive tool. Anything
/// else flagged is malicious.
pub fn classify_binary(report: &IntelVerdict, repo_cves: &BTreeSet<CveId>, lex: &Lexicons) -> BinaryLabel {
    if report.status != VerdictStatus::Known || !report.malicious {
        return BinaryLabel::Clean;
    }
    if report.labels.iter().any(|l| lex.is_cve_related(l, repo_cves)) {
        BinaryLabel::CveRelated
    } else if report.labels.iter().any(|l| lex.is_hacktool(l)) {
        BinaryLabel::Hacktool
    } else {
        BinaryLabel::Malicious
    }
}

/// Annotation for reports whose verdict could not be established.
pub fn binary_annotation(report: &IntelVerdict) -> Option<String> {
    match report.status {
        VerdictStatus::Known => None,
        VerdictStatus::Unknown => Some(format!("{}: unknown to scan service", report.subject)),
        VerdictStatus::Unavailable => Some(format!("{}: scan service unavailable", report.subject)),
    }
}
