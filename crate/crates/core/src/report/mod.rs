//! Rendering of scan results: the structured report, summary tables as
//! markdown or CSV, and plot-ready distribution data.

pub mod distributions;
pub mod tables;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::RepoId;
use crate::error::{Error, Result};
use crate::intel::SourceHealth;
use crate::verdict::{CrossRef, OwnershipStats, RepoVerdict, SummaryStats};

pub use distributions::{emit_distributions, quartiles, Quartiles};
pub use tables::{tables, Table};

pub const TOOL: &str = "pocscan";
/// Tier used for the malicious listing and the summary headline.
pub const HEADLINE_TIER: &str = "confirmed";

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_MALICIOUS: i32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRef {
    pub repos: usize,
    /// sha256 of the manifest bytes the scan ran over.
    pub sha256: String,
}

impl ManifestRef {
    pub fn of_bytes(repos: usize, bytes: &[u8]) -> Self {
        ManifestRef {
            repos,
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewSection {
    /// Repositories set aside as possible IoC listings.
    pub ioc_listings: Vec<RepoId>,
    pub no_cve: usize,
    /// Dropped IP candidates by reason.
    pub ip_drops: BTreeMap<String, usize>,
    /// Repositories with suspicious payloads and no confirmed finding.
    pub suspicious_only: Vec<RepoId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanReport {
    pub tool: String,
    pub version: String,
    pub config: serde_json::Value,
    pub manifest: ManifestRef,
    pub headline_tier: String,
    pub malicious_repos: Vec<RepoId>,
    pub verdicts: Vec<RepoVerdict>,
    pub summary: SummaryStats,
    pub ownership: OwnershipStats,
    pub review: ReviewSection,
    pub intel_health: Vec<SourceHealth>,
    #[serde(default)]
    pub crossref: Option<CrossRef>,
}

impl ScanReport {
    /// Assembles a report; verdicts are ordered by repository and the
    /// malicious listing is derived from them.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        config: serde_json::Value,
        manifest: ManifestRef,
        mut verdicts: Vec<RepoVerdict>,
        summary: SummaryStats,
        ownership: OwnershipStats,
        mut review: ReviewSection,
        intel_health: Vec<SourceHealth>,
        crossref: Option<CrossRef>,
    ) -> Self {
        verdicts.sort_by(|a, b| a.repo_id.cmp(&b.repo_id));
        let malicious_repos: Vec<RepoId> = verdicts
            .iter()
            .filter(|v| v.malicious)
            .map(|v| v.repo_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if review.suspicious_only.is_empty() {
            review.suspicious_only = verdicts
                .iter()
                .filter(|v| !v.malicious && !v.suspicious.is_empty())
                .map(|v| v.repo_id.clone())
                .collect();
        }
        review.ioc_listings.sort();
        ScanReport {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            manifest,
            headline_tier: HEADLINE_TIER.to_string(),
            malicious_repos,
            verdicts,
            summary,
            ownership,
            review,
            intel_health,
            crossref,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.malicious_repos.is_empty() {
            EXIT_CLEAN
        } else {
            EXIT_MALICIOUS
        }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Structured,
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "structured" | "json" => Ok(Format::Structured),
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(Error::Usage(format!("unknown report format `{other}` (expected structured, csv or markdown)"))),
        }
    }
}

/// Output files as `(name, bytes)`.
pub fn render(report: &ScanReport, format: Format) -> Result<Vec<(String, Vec<u8>)>> {
    match format {
        Format::Structured => Ok(vec![("report.json".into(), structured(report)?)]),
        Format::Markdown => Ok(vec![("report.md".into(), markdown(report).into_bytes())]),
        Format::Csv => tables(report)
            .iter()
            .map(|t| Ok((format!("{}.csv", t.name), table_csv(t)?)))
            .collect(),
    }
}

/// Keys come out sorted: going through `Value` puts every map in a BTreeMap.
fn structured(report: &ScanReport) -> Result<Vec<u8>> {
    let value = serde_json::to_value(report)?;
    let mut out = serde_json::to_vec_pretty(&value)?;
    out.push(b'\n');
    Ok(out)
}

fn table_csv(t: &Table) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.headers)?;
    for row in &t.rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| Error::io(format!("{}.csv", t.name), e.into_error()))
}

fn md_cell(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

fn md_table(out: &mut String, t: &Table) {
    let _ = writeln!(out, "## {}\n", t.title);
    let _ = writeln!(out, "| {} |", t.headers.join(" | "));
    let _ = writeln!(out, "|{}", t.headers.iter().map(|_| "---|").collect::<String>());
    for row in &t.rows {
        let cells: Vec<String> = row.iter().map(|c| md_cell(c)).collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
    if let Some(note) = &t.note {
        let _ = writeln!(out, "\n{note}");
    }
    out.push('\n');
}

fn markdown(report: &ScanReport) -> String {
    let mut out = String::new();
    let total = report.summary.total();
    let _ = writeln!(out, "# {} {} scan report\n", report.tool, report.version);
    let _ = writeln!(
        out,
        "{} repositories scanned (manifest sha256 `{}`); {} malicious.\n",
        report.manifest.repos, report.manifest.sha256, total.malicious
    );

    out.push_str("## Malicious repositories\n\n");
    if report.malicious_repos.is_empty() {
        out.push_str("None.\n\n");
    }
    let by_id: BTreeMap<&RepoId, &RepoVerdict> = report.verdicts.iter().map(|v| (&v.repo_id, v)).collect();
    for id in &report.malicious_repos {
        let _ = writeln!(out, "- `{id}`");
        if let Some(v) = by_id.get(id) {
            for f in &v.findings {
                let sources: Vec<&str> = f.sources.iter().map(|s| s.label()).collect();
                let _ = writeln!(
                    out,
                    "  - {} `{}` in `{}`{}: {}",
                    f.heuristic.label(),
                    md_cell(&f.indicator),
                    f.file.display(),
                    if sources.is_empty() { String::new() } else { format!(" [{}]", sources.join(", ")) },
                    md_cell(&f.detail)
                );
            }
        }
    }
    out.push('\n');

    for t in tables(report) {
        md_table(&mut out, &t);
    }

    out.push_str("## Review queue\n\n");
    let r = &report.review;
    let _ = writeln!(out, "- Repositories without a CVE id: {}", r.no_cve);
    let _ = writeln!(out, "- Possible IoC listings: {}", r.ioc_listings.len());
    for id in &r.ioc_listings {
        let _ = writeln!(out, "  - `{id}`");
    }
    let _ = writeln!(out, "- Dropped IP candidates:");
    if r.ip_drops.is_empty() {
        let _ = writeln!(out, "  - none");
    }
    for (reason, n) in &r.ip_drops {
        let _ = writeln!(out, "  - {reason}: {n}");
    }
    let _ = writeln!(out, "- Suspicious payloads without confirmation: {}", r.suspicious_only.len());
    for id in &r.suspicious_only {
        let _ = writeln!(out, "  - `{id}`");
    }
    let annotated: Vec<&RepoVerdict> = report.verdicts.iter().filter(|v| !v.annotations.is_empty()).collect();
    if !annotated.is_empty() {
        out.push_str("\n### Source annotations\n\n");
        for v in annotated {
            for a in &v.annotations {
                let _ = writeln!(out, "- `{}`: {}", v.repo_id, md_cell(a));
            }
        }
    }

    if let Some(x) = &report.crossref {
        out.push_str("\n## External dataset cross-reference\n\n");
        let _ = writeln!(out, "- Repository matches: {}", x.repo_matches.len());
        let _ = writeln!(out, "- User matches: {}", x.user_matches.len());
    }

    out.push_str("\n## Configuration\n\n```json\n");
    out.push_str(&serde_json::to_string_pretty(&report.config).unwrap_or_default());
    out.push_str("\n```\n");
    out
}
