//! Corpus-level tables. Every per-year row and the total row are computed by
//! the same function over a subset of repositories, so totals count unique
//! repositories (a repo targeting CVEs of two years appears in both rows but
//! once in the total).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BinaryEvidence, BinaryLabel, Heuristic, IpEvidence, PayloadClass, PayloadEvidence, RepoVerdict};
use crate::corpus::{CveId, RepoRecord};
use crate::error::{Error, Result};
use crate::extract::{Encoding, IpClass, IpContext};
use crate::intel::IntelSource;

/// Everything known about one repository after a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepoAnalysis {
    pub record: RepoRecord,
    pub verdict: RepoVerdict,
    /// Every dotted-quad match, before any filtering.
    pub ip_candidates: usize,
    pub ips: Vec<IpEvidence>,
    pub binaries: Vec<BinaryEvidence>,
    pub payloads: Vec<PayloadEvidence>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryInputs {
    pub nvd_totals: BTreeMap<u16, u64>,
    pub cwe_map: BTreeMap<CveId, String>,
    /// Repositories dropped during cleaning for lack of a CVE id.
    pub excluded_no_cve: usize,
}

pub const TOTAL: &str = "Total";
pub const UNTAGGED: &str = "Untagged";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overview {
    pub repos_without_cve: usize,
    pub repos_with_cve: usize,
    pub cve_ids_extracted: usize,
    pub distinct_cves: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CveYearRow {
    pub label: String,
    pub unique_cves: usize,
    pub nvd_total: Option<u64>,
    /// Omitted when the NVD total for the year is unknown.
    pub nvd_percent: Option<String>,
    pub repos: usize,
    pub pocs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpRow {
    pub label: String,
    pub extracted: usize,
    /// Distinct public addresses in code that were checked.
    pub checked: usize,
    pub blocklist: usize,
    pub scan_service: usize,
    pub reputation_db: usize,
    /// Distinct addresses flagged by at least one source.
    pub malicious: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryLabelCounts {
    pub malicious: usize,
    pub cve_related: usize,
    pub hacktool: usize,
    pub clean: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryRow {
    pub label: String,
    pub binaries: usize,
    pub malicious_binaries: usize,
    pub malicious_repos: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadRow {
    pub label: String,
    pub repos: usize,
    pub containing: usize,
    pub suspicious_or_worse: usize,
    pub malicious: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub repos: usize,
    pub malicious: usize,
    /// Repos with suspicious payloads but no confirmed finding.
    pub suspicious_only: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub overview: Overview,
    /// Sorted by count, descending.
    pub languages: Vec<(String, usize)>,
    /// Distinct targeted CVEs per issue category.
    pub issues: Vec<(String, usize)>,
    pub cve_years: Vec<CveYearRow>,
    pub ips: Vec<IpRow>,
    pub binary_labels: BinaryLabelCounts,
    pub binaries: Vec<BinaryRow>,
    pub hex: Vec<PayloadRow>,
    pub base64: Vec<PayloadRow>,
    pub summary: Vec<SummaryRow>,
    /// Malicious repositories per heuristic over the whole corpus.
    pub heuristic_counts: BTreeMap<Heuristic, usize>,
}

impl SummaryStats {
    pub fn total(&self) -> &SummaryRow {
        self.summary.last().expect("total row always present")
    }
}

/// `num/den` as a percentage with two decimals, rounded half-up.
pub fn format_percent(num: u64, den: u64) -> Option<String> {
    if den == 0 {
        return None;
    }
    let (n, d) = (num as u128 * 10_000, den as u128);
    let bp = (2 * n + d) / (2 * d);
    Some(format!("{}.{:02}%", bp / 100, bp % 100))
}

fn cve_row(label: String, subset: &[&RepoAnalysis], year: Option<u16>, nvd: &BTreeMap<u16, u64>) -> CveYearRow {
    let in_scope = |c: &&CveId| year.is_none_or(|y| c.year() == y);
    let cves: BTreeSet<&CveId> = subset.iter().flat_map(|a| a.record.cve_ids.iter().filter(in_scope)).collect();
    let pocs = subset.iter().map(|a| a.record.cve_ids.iter().filter(in_scope).count()).sum();
    let nvd_total = match year {
        Some(y) => nvd.get(&y).copied(),
        None => {
            let years: BTreeSet<u16> = cves.iter().map(|c| c.year()).collect();
            years.iter().map(|y| nvd.get(y).copied()).sum::<Option<u64>>().filter(|_| !years.is_empty())
        }
    };
    CveYearRow {
        label,
        unique_cves: cves.len(),
        nvd_total,
        nvd_percent: nvd_total.and_then(|t| format_percent(cves.len() as u64, t)),
        repos: subset.len(),
        pocs,
    }
}

fn ip_row(label: String, subset: &[&RepoAnalysis]) -> IpRow {
    let mut checked = BTreeSet::new();
    let mut by_source: BTreeMap<IntelSource, BTreeSet<&str>> = BTreeMap::new();
    let mut any = BTreeSet::new();
    for e in subset.iter().flat_map(|a| &a.ips) {
        let c = &e.candidate;
        if c.context != IpContext::Code || c.classification != IpClass::Public {
            continue;
        }
        checked.insert(c.literal.as_str());
        for v in e.verdicts.iter().filter(|v| v.malicious) {
            by_source.entry(v.source).or_default().insert(c.literal.as_str());
            any.insert(c.literal.as_str());
        }
    }
    let n = |s| by_source.get(&s).map_or(0, BTreeSet::len);
    IpRow {
        label,
        extracted: subset.iter().map(|a| a.ip_candidates).sum(),
        checked: checked.len(),
        blocklist: n(IntelSource::Blocklist),
        scan_service: n(IntelSource::ScanService),
        reputation_db: n(IntelSource::ReputationDb),
        malicious: any.len(),
    }
}

fn binary_row(label: String, subset: &[&RepoAnalysis]) -> BinaryRow {
    let all: Vec<&BinaryEvidence> = subset.iter().flat_map(|a| &a.binaries).collect();
    BinaryRow {
        label,
        binaries: all.len(),
        malicious_binaries: all.iter().filter(|b| b.label == BinaryLabel::Malicious).count(),
        malicious_repos: subset.iter().filter(|a| a.verdict.fired(Heuristic::Binary)).count(),
    }
}

fn payload_row(label: String, subset: &[&RepoAnalysis], enc: Encoding) -> PayloadRow {
    let h = match enc {
        Encoding::Hex => Heuristic::Hex,
        Encoding::Base64 => Heuristic::Base64,
    };
    fn of(a: &RepoAnalysis, enc: Encoding) -> Vec<&PayloadEvidence> {
        a.payloads.iter().filter(|p| p.payload.encoding == enc).collect()
    }
    PayloadRow {
        label,
        repos: subset.len(),
        containing: subset.iter().filter(|a| !of(a, enc).is_empty()).count(),
        suspicious_or_worse: subset
            .iter()
            .filter(|a| of(a, enc).iter().any(|p| p.decision.class >= PayloadClass::Suspicious))
            .count(),
        malicious: subset.iter().filter(|a| a.verdict.fired(h)).count(),
    }
}

fn summary_row(label: String, subset: &[&RepoAnalysis]) -> SummaryRow {
    SummaryRow {
        label,
        repos: subset.len(),
        malicious: subset.iter().filter(|a| a.verdict.malicious).count(),
        suspicious_only: subset
            .iter()
            .filter(|a| !a.verdict.malicious && !a.verdict.suspicious.is_empty())
            .count(),
    }
}

/// One row per CVE year present in the corpus plus a total row.
fn per_year<R>(
    analyses: &[&RepoAnalysis],
    years: &BTreeSet<u16>,
    mut f: impl FnMut(String, &[&RepoAnalysis], Option<u16>) -> R,
) -> Vec<R> {
    let mut rows: Vec<R> = years
        .iter()
        .map(|y| {
            let subset: Vec<&RepoAnalysis> = analyses.iter().copied().filter(|a| a.record.cve_years().contains(y)).collect();
            f(y.to_string(), &subset, Some(*y))
        })
        .collect();
    rows.push(f(TOTAL.to_string(), analyses, None));
    rows
}

pub fn summarize(analyses: &[RepoAnalysis], inputs: &SummaryInputs) -> SummaryStats {
    // Order-independence: everything below iterates in repo_id order.
    let mut sorted: Vec<&RepoAnalysis> = analyses.iter().collect();
    sorted.sort_by(|a, b| a.record.repo_id.cmp(&b.record.repo_id));
    let years: BTreeSet<u16> = sorted.iter().flat_map(|a| a.record.cve_years()).collect();

    let distinct: BTreeSet<&CveId> = sorted.iter().flat_map(|a| &a.record.cve_ids).collect();
    let overview = Overview {
        repos_without_cve: inputs.excluded_no_cve,
        repos_with_cve: sorted.iter().filter(|a| !a.record.cve_ids.is_empty()).count(),
        cve_ids_extracted: sorted.iter().map(|a| a.record.cve_ids.len()).sum(),
        distinct_cves: distinct.len(),
    };

    let mut langs: BTreeMap<String, usize> = BTreeMap::new();
    for a in &sorted {
        *langs.entry(a.record.primary_language.clone()).or_default() += 1;
    }
    let mut languages: Vec<(String, usize)> = langs.into_iter().collect();
    languages.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut issue_map: BTreeMap<String, usize> = BTreeMap::new();
    for c in &distinct {
        let issue = inputs.cwe_map.get(c).cloned().unwrap_or_else(|| UNTAGGED.to_string());
        *issue_map.entry(issue).or_default() += 1;
    }
    let mut issues: Vec<(String, usize)> = issue_map.into_iter().collect();
    issues.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    // A hash can be excused in one repository and not in another; the
    // unique-binary rollup keeps its most severe label.
    let mut per_hash: BTreeMap<&str, BinaryLabel> = BTreeMap::new();
    for b in sorted.iter().flat_map(|a| &a.binaries) {
        per_hash
            .entry(b.artifact.sha256.as_str())
            .and_modify(|l| *l = (*l).min(b.label))
            .or_insert(b.label);
    }
    let count = |l: BinaryLabel| per_hash.values().filter(|x| **x == l).count();
    let binary_labels = BinaryLabelCounts {
        malicious: count(BinaryLabel::Malicious),
        cve_related: count(BinaryLabel::CveRelated),
        hacktool: count(BinaryLabel::Hacktool),
        clean: count(BinaryLabel::Clean),
        total: per_hash.len(),
    };

    let heuristic_counts = Heuristic::ALL
        .iter()
        .map(|h| (*h, sorted.iter().filter(|a| a.verdict.fired(*h)).count()))
        .collect();

    SummaryStats {
        overview,
        languages,
        issues,
        cve_years: per_year(&sorted, &years, |l, s, y| cve_row(l, s, y, &inputs.nvd_totals)),
        ips: per_year(&sorted, &years, |l, s, _| ip_row(l, s)),
        binary_labels,
        binaries: per_year(&sorted, &years, |l, s, _| binary_row(l, s)),
        hex: per_year(&sorted, &years, |l, s, _| payload_row(l, s, Encoding::Hex)),
        base64: per_year(&sorted, &years, |l, s, _| payload_row(l, s, Encoding::Base64)),
        summary: per_year(&sorted, &years, |l, s, _| summary_row(l, s)),
        heuristic_counts,
    }
}

fn csv_rows(path: &Path) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        out.push((i + 1, rec?));
    }
    Ok(out)
}

/// `year,count` rows; a header row is tolerated.
pub fn load_nvd_totals(path: &Path) -> Result<BTreeMap<u16, u64>> {
    let mut out = BTreeMap::new();
    for (line, rec) in csv_rows(path)? {
        let year = rec.get(0).unwrap_or("").trim();
        let count = rec.get(1).unwrap_or("").trim();
        match (year.parse::<u16>(), count.parse::<u64>()) {
            (Ok(y), Ok(c)) => {
                out.insert(y, c);
            }
            _ if line == 1 => {}
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("expected year,count, got {year:?},{count:?}"),
                })
            }
        }
    }
    Ok(out)
}

/// `cve-id,issue-category` rows; a header row is tolerated.
pub fn load_cwe_map(path: &Path) -> Result<BTreeMap<CveId, String>> {
    let mut out = BTreeMap::new();
    for (line, rec) in csv_rows(path)? {
        let id = rec.get(0).unwrap_or("").trim();
        let issue = rec.get(1).unwrap_or("").trim();
        match id.parse::<CveId>() {
            Ok(c) if !issue.is_empty() => {
                out.insert(c, issue.to_string());
            }
            _ if line == 1 => {}
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("expected cve-id,issue, got {id:?},{issue:?}"),
                })
            }
        }
    }
    Ok(out)
}
