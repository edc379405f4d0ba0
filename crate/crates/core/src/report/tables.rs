//! Summary statistics laid out as titled tables, shared by the markdown and
//! CSV renderers.

use super::ScanReport;
use crate::verdict::summary::{CveYearRow, PayloadRow};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    /// File stem for CSV output.
    pub name: &'static str,
    pub title: &'static str,
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub note: Option<String>,
}

fn s(x: impl ToString) -> String {
    x.to_string()
}

fn payload_rows(rows: &[PayloadRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| vec![r.label.clone(), s(r.repos), s(r.containing), s(r.suspicious_or_worse), s(r.malicious)])
        .collect()
}

fn cve_rows(rows: &[CveYearRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.label.clone(),
                s(r.unique_cves),
                r.nvd_percent.clone().unwrap_or_else(|| "-".into()),
                s(r.repos),
                s(r.pocs),
            ]
        })
        .collect()
}

pub fn tables(report: &ScanReport) -> Vec<Table> {
    let st = &report.summary;
    let mut out = Vec::new();

    out.push(Table {
        name: "languages",
        title: "Overview of used programming languages",
        headers: vec!["Programming language", "Count"],
        rows: st.languages.iter().map(|(l, n)| vec![l.clone(), s(n)]).collect(),
        note: None,
    });
    out.push(Table {
        name: "cve_years",
        title: "Overview of the collected data with respect to unique CVE IDs and number of repositories and PoCs",
        headers: vec!["CVE-Year", "# Unique CVEs targeted", "% CVEs assigned by NVD", "# Repos", "# PoCs"],
        rows: cve_rows(&st.cve_years),
        note: None,
    });
    out.push(Table {
        name: "issues",
        title: "Distribution of CVEs by issue",
        headers: vec!["Security issue", "# of CVEs"],
        rows: st.issues.iter().map(|(l, n)| vec![l.clone(), s(n)]).collect(),
        note: None,
    });
    let o = &st.overview;
    out.push(Table {
        name: "cve_relation",
        title: "Overview of repositories and CVEs relation",
        headers: vec!["Item", "Count"],
        rows: vec![
            vec![s("Repos with No CVE-ID"), s(o.repos_without_cve)],
            vec![s("Repos Incl. 1 CVE-ID"), s(o.repos_with_cve)],
            vec![s("CVE-IDs extracted"), s(o.cve_ids_extracted)],
            vec![s("Distinct CVE-IDs"), s(o.distinct_cves)],
        ],
        note: None,
    });
    out.push(Table {
        name: "ips",
        title: "Collection, validation and detection results of malicious IPs through blocklists, VirusTotal, and AbuseIPDB",
        headers: vec!["Year", "Extracted IPs patterns", "Blacklist", "VirusTotal", "Abuse IPDB", "Total malicious IPs"],
        rows: st
            .ips
            .iter()
            .map(|r| vec![r.label.clone(), s(r.extracted), s(r.blocklist), s(r.scan_service), s(r.reputation_db), s(r.malicious)])
            .collect(),
        note: Some("Per-source columns may overlap; the last column counts each address once.".into()),
    });
    let b = &st.binary_labels;
    out.push(Table {
        name: "binary_labels",
        title: "Binary labels based on VirusTotal scan",
        headers: vec!["Label", "# Unique binaries"],
        rows: vec![
            vec![s("Malicious"), s(b.malicious)],
            vec![s("CVE Related"), s(b.cve_related)],
            vec![s("Hacktool"), s(b.hacktool)],
            vec![s("Total"), s(b.total)],
        ],
        note: None,
    });
    out.push(Table {
        name: "binaries",
        title: "Repositories with malicious binaries",
        headers: vec!["Year", "# Binaries", "# Malicious binaries", "# Malicious repos"],
        rows: st
            .binaries
            .iter()
            .map(|r| vec![r.label.clone(), s(r.binaries), s(r.malicious_binaries), s(r.malicious_repos)])
            .collect(),
        note: None,
    });
    out.push(Table {
        name: "hex",
        title: "Results of hexadecimal scan",
        headers: vec!["Year", "# Repos", "# Containing hex", "# Malicious hex", "# Confirmed malicious hex"],
        rows: payload_rows(&st.hex),
        note: Some("\"Malicious hex\" counts the suspicious-or-worse tier (a decoded public IP or URL); \"Confirmed\" requires a malicious IP verdict or an execution pattern.".into()),
    });
    out.push(Table {
        name: "base64",
        title: "Repositories with malicious base64 payloads",
        headers: vec!["Year", "# Repos", "# Containing base64", "# Suspicious base64", "# Malicious repos"],
        rows: payload_rows(&st.base64),
        note: None,
    });
    let total = st.total();
    out.push(Table {
        name: "summary",
        title: "Summary of maliciousness detection",
        headers: vec!["Year", "# Repos", "# Malicious"],
        rows: st.summary.iter().map(|r| vec![r.label.clone(), s(r.repos), s(r.malicious)]).collect(),
        note: Some(format!(
            "Malicious counts use the confirmed tier; {} further repositories have suspicious payloads only.",
            total.suspicious_only
        )),
    });
    out.push(Table {
        name: "ownership",
        title: "Distribution of ownership of malicious repositories",
        headers: vec!["# Malicious repos per user", "# Users"],
        rows: report.ownership.malicious.iter().map(|(k, v)| vec![s(k), s(v)]).collect(),
        note: None,
    });
    out.push(Table {
        name: "ownership_all",
        title: "Distribution of ownership of all repositories",
        headers: vec!["# Repos per user", "# Users"],
        rows: report.ownership.all.iter().map(|(k, v)| vec![s(k), s(v)]).collect(),
        note: None,
    });
    out.push(Table {
        name: "intel_health",
        title: "Threat-intelligence sources",
        headers: vec!["Source", "Mode", "Unavailable subjects"],
        rows: report
            .intel_health
            .iter()
            .map(|h| {
                vec![
                    s(h.source.label()),
                    serde_json::to_value(h.mode).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
                    s(h.unavailable),
                ]
            })
            .collect(),
        note: None,
    });
    out
}
