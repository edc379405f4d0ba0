//! Decisions: binary triage, payload tiers, per-repo union and corpus tables.

pub mod binary;
pub mod lexicon;
pub mod ownership;
pub mod payload;
pub mod repo;
pub mod summary;

pub use binary::{binary_annotation, classify_binary, BinaryLabel};
pub use lexicon::Lexicons;
pub use ownership::{crossref_dataset, load_external_dataset, ownership_stats, CrossRef, DistributionRow, OwnershipStats};
pub use payload::{classify_payload, public_ips, PayloadClass, PayloadDecision};
pub use repo::{aggregate_repo, BinaryEvidence, Finding, Heuristic, IpEvidence, PayloadEvidence, RepoVerdict};
pub use summary::{format_percent, load_cwe_map, load_nvd_totals, summarize, RepoAnalysis, SummaryInputs, SummaryStats};
