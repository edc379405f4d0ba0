//! The scan pipeline: ingest, extract, intel, verdict, report. Each stage
//! reads the previous stage's files from the work directory and writes its
//! own, so any stage can be rerun or resumed on its own.

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use pocscan::corpus::{
    clean_corpus, ingest_local, read_manifest, write_manifest, Exclusion, ExclusionReason, FileInventory, RepoId,
    RepoRecord,
};
use pocscan::corpus::inventory::SkippedFile;
use pocscan::extract::{
    extract_base64_payloads, extract_hex_payloads, extract_ips, filter_public, hash_binaries, BinaryArtifact,
    EncodedPayload, IpCandidate, ReviewEntry,
};
use pocscan::intel::service::Credentials;
use pocscan::intel::{load_blocklists, IntelService, IntelSource, IntelVerdict, IpSet, SourceHealth};
use pocscan::report::{emit_distributions, render, Format, ManifestRef, ReviewSection, ScanReport};
use pocscan::transport::{HttpTransport, OfflineTransport, Transport};
use pocscan::verdict::{
    aggregate_repo, classify_binary, classify_payload, crossref_dataset, load_cwe_map, load_external_dataset,
    load_nvd_totals, ownership_stats, public_ips, summarize, BinaryEvidence, IpEvidence, Lexicons, PayloadEvidence,
    RepoAnalysis, SummaryInputs,
};
use pocscan::{jsonl, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;

pub const MANIFEST: &str = "manifest.jsonl";
pub const REVIEW_QUEUE: &str = "review_queue.jsonl";
pub const INVENTORIES: &str = "inventories.json";
pub const INDICATORS: &str = "indicators.jsonl";
pub const IP_REVIEW: &str = "ip_review.jsonl";
pub const INTEL: &str = "intel.jsonl";
pub const INTEL_HEALTH: &str = "intel_health.json";
pub const INTEL_CACHE: &str = "intel_cache.jsonl";
pub const ANALYSES: &str = "analyses.jsonl";
pub const REPORT: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Extract,
    Intel,
    Verdict,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Ingest, Stage::Extract, Stage::Intel, Stage::Verdict, Stage::Report];

    /// Files whose presence marks the stage as done.
    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &[MANIFEST, REVIEW_QUEUE, INVENTORIES],
            Stage::Extract => &[INDICATORS, IP_REVIEW],
            Stage::Intel => &[INTEL, INTEL_HEALTH],
            Stage::Verdict => &[ANALYSES],
            Stage::Report => &[REPORT],
        }
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ingest" => Ok(Stage::Ingest),
            "extract" => Ok(Stage::Extract),
            "intel" => Ok(Stage::Intel),
            "verdict" => Ok(Stage::Verdict),
            "report" => Ok(Stage::Report),
            other => Err(Error::Usage(format!("unknown stage `{other}`"))),
        }
    }
}

/// Extraction output for one repository.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepoIndicators {
    pub repo_id: RepoId,
    /// Every dotted-quad match before filtering.
    pub ip_candidates: usize,
    /// Candidates that survived filtering.
    pub ips: Vec<IpCandidate>,
    pub binaries: Vec<BinaryArtifact>,
    pub payloads: Vec<EncodedPayload>,
    pub skipped: Vec<SkippedFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpReviewLine {
    pub repo_id: RepoId,
    #[serde(flatten)]
    pub entry: ReviewEntry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubjectKind {
    Ip,
    Hash,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntelEntry {
    pub kind: SubjectKind,
    pub subject: String,
    pub verdicts: Vec<IntelVerdict>,
}

pub struct Pipeline {
    pub config: Config,
    pub work: PathBuf,
    live: Option<Arc<dyn Transport>>,
    creds: Credentials,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(&serde_json::to_value(value)?)?;
    bytes.push(b'\n');
    write_file(path, &bytes)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&read_file(path)?)?)
}

impl Pipeline {
    /// Credentials come from the environment.
    pub fn new(config: Config, work: impl Into<PathBuf>) -> Self {
        Pipeline {
            config,
            work: work.into(),
            live: None,
            creds: Credentials::from_env(),
        }
    }

    /// Replaces the network transport, and the credentials used to decide
    /// whether it is used at all.
    pub fn with_live_transport(mut self, t: Arc<dyn Transport>, creds: Credentials) -> Self {
        self.live = Some(t);
        self.creds = creds;
        self
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.work.join(name)
    }

    fn corpus_root(&self) -> Result<&Path> {
        self.config
            .paths
            .corpus
            .as_deref()
            .ok_or_else(|| Error::Usage("no corpus given (use --corpus or [paths] corpus)".into()))
    }

    fn require(&self, stage: Stage) -> Result<()> {
        for f in stage.outputs() {
            if !self.path(f).is_file() {
                return Err(Error::Usage(format!(
                    "missing {} in {}; run the {:?} stage first",
                    f,
                    self.work.display(),
                    stage
                )));
            }
        }
        Ok(())
    }

    pub fn is_done(&self, stage: Stage) -> bool {
        stage.outputs().iter().all(|f| self.path(f).is_file())
    }

    pub fn run_stage(&self, stage: Stage) -> Result<()> {
        std::fs::create_dir_all(&self.work).map_err(|source| Error::Io {
            path: self.work.clone(),
            source,
        })?;
        log::info!("stage {stage:?}");
        match stage {
            Stage::Ingest => self.ingest(),
            Stage::Extract => self.extract(),
            Stage::Intel => self.intel().map(|_| ()),
            Stage::Verdict => self.verdict(),
            Stage::Report => self.report().map(|_| ()),
        }
    }

    /// Runs every stage. With `resume`, leading stages whose outputs exist
    /// are skipped; everything after the first rerun stage runs again.
    pub fn run(&self, resume: bool) -> Result<ScanReport> {
        let mut rerun = !resume;
        for stage in Stage::ALL {
            if !rerun && self.is_done(stage) {
                log::info!("stage {stage:?} already done");
                continue;
            }
            rerun = true;
            self.run_stage(stage)?;
        }
        self.load_report()
    }

    pub fn load_report(&self) -> Result<ScanReport> {
        ScanReport::from_json(&read_file(&self.path(REPORT))?)
    }

    fn ingest(&self) -> Result<()> {
        let root = self.corpus_root()?;
        let out = ingest_local(root, &self.config.scan_limits())?;
        let cleaned = clean_corpus(out.records, &out.ioc_mentions, &self.config.clean_options());
        let kept: BTreeSet<&RepoId> = cleaned.kept.iter().map(|r| &r.repo_id).collect();
        let inventories: BTreeMap<&RepoId, &FileInventory> =
            out.inventories.iter().filter(|(id, _)| kept.contains(id)).collect();
        let mut excluded = cleaned.excluded.clone();
        excluded.sort_by(|a, b| a.record.repo_id.cmp(&b.record.repo_id));
        write_manifest(&self.path(MANIFEST), &cleaned.kept)?;
        jsonl::write(&self.path(REVIEW_QUEUE), &excluded)?;
        write_json(&self.path(INVENTORIES), &inventories)
    }

    fn manifest(&self) -> Result<Vec<RepoRecord>> {
        self.require(Stage::Ingest)?;
        read_manifest(&self.path(MANIFEST))
    }

    fn extract(&self) -> Result<()> {
        let root = self.corpus_root()?.to_path_buf();
        let records = self.manifest()?;
        let inventories: BTreeMap<RepoId, FileInventory> = read_json(&self.path(INVENTORIES))?;
        let opts = self.config.extract_options();
        let per_repo: Vec<(RepoIndicators, Vec<IpReviewLine>)> = records
            .par_iter()
            .map(|rec| {
                let repo_root = root.join(rec.local_path.as_deref().unwrap_or(&rec.repo_id.0));
                let inv = inventories.get(&rec.repo_id).cloned().unwrap_or_default();
                let mut candidates = Vec::new();
                let mut payloads = Vec::new();
                let mut skipped = inv.skipped.clone();
                for f in &inv.text_files {
                    let bytes = match std::fs::read(repo_root.join(&f.path)) {
                        Ok(b) => b,
                        Err(e) => {
                            skipped.push(SkippedFile {
                                path: f.path.clone(),
                                reason: e.to_string(),
                            });
                            continue;
                        }
                    };
                    let text = String::from_utf8_lossy(&bytes);
                    candidates.extend(extract_ips(&text, &f.path));
                    payloads.extend(extract_hex_payloads(&text, &f.path, &opts));
                    payloads.extend(extract_base64_payloads(&text, &f.path, &opts));
                }
                let (binaries, unreadable) = hash_binaries(&repo_root, &inv);
                skipped.extend(unreadable);
                let filtered = filter_public(&candidates);
                let review = filtered
                    .review
                    .into_iter()
                    .map(|entry| IpReviewLine {
                        repo_id: rec.repo_id.clone(),
                        entry,
                    })
                    .collect();
                let ind = RepoIndicators {
                    repo_id: rec.repo_id.clone(),
                    ip_candidates: candidates.len(),
                    ips: filtered.kept,
                    binaries,
                    payloads,
                    skipped,
                };
                (ind, review)
            })
            .collect();
        let (indicators, reviews): (Vec<RepoIndicators>, Vec<Vec<IpReviewLine>>) = per_repo.into_iter().unzip();
        jsonl::write(&self.path(INDICATORS), &indicators)?;
        jsonl::write(&self.path(IP_REVIEW), &reviews.into_iter().flatten().collect::<Vec<_>>())
    }

    fn indicators(&self) -> Result<Vec<RepoIndicators>> {
        self.require(Stage::Extract)?;
        jsonl::read(&self.path(INDICATORS))
    }

    pub fn intel_service(&self) -> Result<IntelService> {
        let blocklist = match &self.config.paths.blocklists {
            Some(dir) => load_blocklists(dir)?,
            None => IpSet::new("none"),
        };
        let settings = self.config.intel_settings();
        let live: Arc<dyn Transport> = match &self.live {
            Some(t) => t.clone(),
            None if settings.fixture_only => Arc::new(OfflineTransport),
            None => match HttpTransport::new(Duration::from_secs(30)) {
                Ok(t) => Arc::new(t),
                Err(e) => {
                    log::warn!("HTTP client unavailable ({e}); live sources will report unavailable");
                    Arc::new(OfflineTransport)
                }
            },
        };
        Ok(IntelService::new(blocklist, &settings, &self.creds, live))
    }

    /// Queries every distinct IP and binary hash once. Returns the service so
    /// callers can inspect source health.
    pub fn intel(&self) -> Result<IntelService> {
        let root = self.corpus_root()?.to_path_buf();
        let records = self.manifest()?;
        let indicators = self.indicators()?;
        let svc = self.intel_service()?;
        let cache = self.path(INTEL_CACHE);
        if !svc.is_hermetic() && cache.is_file() {
            svc.load_cache(&cache)?;
        }

        let mut ips: BTreeSet<Ipv4Addr> = BTreeSet::new();
        let mut hashes: BTreeMap<String, PathBuf> = BTreeMap::new();
        let roots: BTreeMap<&RepoId, PathBuf> = records
            .iter()
            .map(|r| (&r.repo_id, root.join(r.local_path.as_deref().unwrap_or(&r.repo_id.0))))
            .collect();
        for ind in &indicators {
            ips.extend(ind.ips.iter().map(IpCandidate::addr));
            for p in &ind.payloads {
                ips.extend(public_ips(p).iter().filter_map(|s| s.parse::<Ipv4Addr>().ok()));
            }
            for b in &ind.binaries {
                if let Some(r) = roots.get(&ind.repo_id) {
                    hashes.entry(b.sha256.clone()).or_insert_with(|| r.join(&b.path));
                }
            }
        }
        let ips: Vec<Ipv4Addr> = ips.into_iter().collect();
        let hashes: Vec<(String, PathBuf)> = hashes.into_iter().collect();
        let mut entries: Vec<IntelEntry> = ips
            .par_iter()
            .map(|ip| IntelEntry {
                kind: SubjectKind::Ip,
                subject: ip.to_string(),
                verdicts: svc.check_ip(*ip),
            })
            .collect();
        entries.extend(hashes.par_iter().map(|(sha, path)| IntelEntry {
            kind: SubjectKind::Hash,
            subject: sha.clone(),
            verdicts: vec![svc.check_hash_or_upload(sha, path)],
        }).collect::<Vec<_>>());

        jsonl::write(&self.path(INTEL), &entries)?;
        write_json(&self.path(INTEL_HEALTH), &svc.health())?;
        if !svc.is_hermetic() {
            svc.save_cache(&cache)?;
        }
        Ok(svc)
    }

    fn verdict(&self) -> Result<()> {
        let records = self.manifest()?;
        let indicators: BTreeMap<RepoId, RepoIndicators> =
            self.indicators()?.into_iter().map(|i| (i.repo_id.clone(), i)).collect();
        self.require(Stage::Intel)?;
        let entries: Vec<IntelEntry> = jsonl::read(&self.path(INTEL))?;
        let mut ip_intel: BTreeMap<String, Vec<IntelVerdict>> = BTreeMap::new();
        let mut hash_intel: BTreeMap<String, IntelVerdict> = BTreeMap::new();
        for e in entries {
            match e.kind {
                SubjectKind::Ip => {
                    ip_intel.insert(e.subject, e.verdicts);
                }
                SubjectKind::Hash => {
                    if let Some(v) = e.verdicts.into_iter().next() {
                        hash_intel.insert(e.subject, v);
                    }
                }
            }
        }
        let lex = match &self.config.paths.lexicons {
            Some(dir) => Lexicons::load(dir)?,
            None => Lexicons::default(),
        };
        let decided_at = self.config.decided_at();

        let analyses: Vec<RepoAnalysis> = records
            .par_iter()
            .map(|rec| {
                let ind = indicators.get(&rec.repo_id);
                let ips: Vec<IpEvidence> = ind
                    .map(|i| {
                        i.ips
                            .iter()
                            .map(|c| IpEvidence {
                                candidate: c.clone(),
                                verdicts: ip_intel.get(&c.literal).cloned().unwrap_or_default(),
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                let binaries: Vec<BinaryEvidence> = ind
                    .map(|i| {
                        i.binaries
                            .iter()
                            .map(|a| {
                                let verdict = hash_intel
                                    .get(&a.sha256)
                                    .cloned()
                                    .unwrap_or_else(|| IntelVerdict::unknown(&a.sha256, IntelSource::ScanService));
                                let label = classify_binary(&verdict, &rec.cve_ids, &lex);
                                BinaryEvidence {
                                    artifact: a.clone(),
                                    verdict,
                                    label,
                                }
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                let payloads: Vec<PayloadEvidence> = ind
                    .map(|i| {
                        i.payloads
                            .iter()
                            .map(|p| PayloadEvidence {
                                payload: p.clone(),
                                decision: classify_payload(p, &ip_intel, &lex),
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                let verdict = aggregate_repo(rec, &ips, &binaries, &payloads, &ip_intel, decided_at);
                RepoAnalysis {
                    record: rec.clone(),
                    verdict,
                    ip_candidates: ind.map_or(0, |i| i.ip_candidates),
                    ips,
                    binaries,
                    payloads,
                }
            })
            .collect();
        jsonl::write(&self.path(ANALYSES), &analyses)
    }

    pub fn analyses(&self) -> Result<Vec<RepoAnalysis>> {
        self.require(Stage::Verdict)?;
        jsonl::read(&self.path(ANALYSES))
    }

    pub fn summary_inputs(&self) -> Result<SummaryInputs> {
        self.require(Stage::Ingest)?;
        let excluded: Vec<Exclusion> = jsonl::read(&self.path(REVIEW_QUEUE))?;
        Ok(SummaryInputs {
            nvd_totals: match &self.config.paths.nvd_totals {
                Some(p) => load_nvd_totals(p)?,
                None => BTreeMap::new(),
            },
            cwe_map: match &self.config.paths.cwe_map {
                Some(p) => load_cwe_map(p)?,
                None => BTreeMap::new(),
            },
            excluded_no_cve: excluded.iter().filter(|e| e.reason == ExclusionReason::NoCve).count(),
        })
    }

    /// The report over the persisted analyses, without writing anything.
    pub fn build_report(&self) -> Result<ScanReport> {
        let analyses = self.analyses()?;
        let inputs = self.summary_inputs()?;
        let manifest_bytes = read_file(&self.path(MANIFEST))?;
        let excluded: Vec<Exclusion> = jsonl::read(&self.path(REVIEW_QUEUE))?;
        let ip_review: Vec<IpReviewLine> = jsonl::read(&self.path(IP_REVIEW))?;
        let health: Vec<SourceHealth> = read_json(&self.path(INTEL_HEALTH))?;

        let records: Vec<RepoRecord> = analyses.iter().map(|a| a.record.clone()).collect();
        let verdicts: Vec<_> = analyses.iter().map(|a| a.verdict.clone()).collect();
        let summary = summarize(&analyses, &inputs);
        let ownership = ownership_stats(&records, &verdicts);
        let mut ip_drops: BTreeMap<String, usize> = BTreeMap::new();
        for l in &ip_review {
            *ip_drops.entry(l.entry.reason.clone()).or_default() += 1;
        }
        let review = ReviewSection {
            ioc_listings: excluded
                .iter()
                .filter(|e| e.reason == ExclusionReason::IocListingReview)
                .map(|e| e.record.repo_id.clone())
                .collect(),
            no_cve: inputs.excluded_no_cve,
            ip_drops,
            suspicious_only: Vec::new(),
        };
        let crossref = match &self.config.paths.external_dataset {
            Some(p) => {
                let (rows, skipped) = load_external_dataset(p)?;
                if skipped > 0 {
                    log::warn!("{skipped} malformed rows skipped in {}", p.display());
                }
                Some(crossref_dataset(&records, &rows))
            }
            None => None,
        };
        let report = ScanReport::new(
            self.config.echo(),
            ManifestRef::of_bytes(records.len(), &manifest_bytes),
            verdicts,
            summary,
            ownership,
            review,
            health,
            crossref,
        );
        Ok(report)
    }

    /// Builds the report and writes `report.json`, `report.md`, per-table
    /// CSVs under `tables/` and plot data under `distributions/`.
    pub fn report(&self) -> Result<ScanReport> {
        let report = self.build_report()?;
        let records: Vec<RepoRecord> = self.analyses()?.into_iter().map(|a| a.record).collect();
        for format in [Format::Structured, Format::Markdown] {
            for (name, bytes) in render(&report, format)? {
                write_file(&self.path(&name), &bytes)?;
            }
        }
        for (name, bytes) in render(&report, Format::Csv)? {
            write_file(&self.work.join("tables").join(name), &bytes)?;
        }
        for (name, bytes) in emit_distributions(&records, &report.verdicts, &[])? {
            write_file(&self.work.join("distributions").join(name), &bytes)?;
        }
        Ok(report)
    }
}
