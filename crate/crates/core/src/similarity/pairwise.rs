use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{family_of, gst_similarity, TokenKind, TokenStream};
use crate::corpus::{RepoId, RepoRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairMode {
    /// Non-fork repositories sharing a language and a CVE; zero scores kept.
    OriginalsOnly,
    /// Each fork against its parent; only positive scores kept.
    ParentFork,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    OriginalOriginal,
    ParentFork,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    #[default]
    Max,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityPair {
    pub repo_a: RepoId,
    pub repo_b: RepoId,
    pub language: String,
    pub score: f64,
    /// Two digits, `1` for a malicious repository: `11`, `10`, `01`, `00`.
    pub category: String,
    pub relation: Relation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairOptions {
    pub mode: PairMode,
    pub min_match_len: usize,
    pub aggregation: Aggregation,
}

impl Default for PairOptions {
    fn default() -> Self {
        PairOptions {
            mode: PairMode::OriginalsOnly,
            min_match_len: 9,
            aggregation: Aggregation::Max,
        }
    }
}

pub fn category(a_malicious: bool, b_malicious: bool) -> String {
    format!("{}{}", a_malicious as u8, b_malicious as u8)
}

/// Compares every file of `a` with every file of `b` in the same language
/// family and folds the file scores.
fn repo_score(a: &[Vec<TokenKind>], b: &[Vec<TokenKind>], opts: &PairOptions) -> f64 {
    let scores: Vec<f64> = a
        .iter()
        .flat_map(|x| b.iter().map(move |y| gst_similarity(x, y, opts.min_match_len)))
        .collect();
    if scores.is_empty() {
        return 0.0;
    }
    match opts.aggregation {
        Aggregation::Max => scores.iter().copied().fold(0.0, f64::max),
        Aggregation::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
    }
}

/// `streams` holds each repository's tokenized files; `malicious` the
/// repositories judged malicious.
pub fn pairwise(
    corpus: &[RepoRecord],
    streams: &BTreeMap<RepoId, Vec<TokenStream>>,
    malicious: &BTreeSet<RepoId>,
    opts: &PairOptions,
) -> Vec<SimilarityPair> {
    let by_id: BTreeMap<&RepoId, &RepoRecord> = corpus.iter().map(|r| (&r.repo_id, r)).collect();
    let files = |id: &RepoId, language: &str| -> Vec<Vec<TokenKind>> {
        let fam = family_of(language);
        streams
            .get(id)
            .map(|v| v.iter().filter(|s| Some(s.family) == fam).map(TokenStream::kinds).collect())
            .unwrap_or_default()
    };

    let mut jobs: Vec<(&RepoRecord, &RepoRecord, Relation)> = Vec::new();
    match opts.mode {
        PairMode::OriginalsOnly => {
            let mut originals: Vec<&RepoRecord> = corpus
                .iter()
                .filter(|r| !r.is_fork && family_of(&r.primary_language).is_some())
                .collect();
            originals.sort_by(|a, b| a.repo_id.cmp(&b.repo_id));
            for (i, a) in originals.iter().enumerate() {
                for b in &originals[i + 1..] {
                    if a.primary_language == b.primary_language && !a.cve_ids.is_disjoint(&b.cve_ids) {
                        jobs.push((a, b, Relation::OriginalOriginal));
                    }
                }
            }
        }
        PairMode::ParentFork => {
            for fork in corpus.iter().filter(|r| r.is_fork) {
                let Some(parent) = fork.parent_id.as_ref().and_then(|p| by_id.get(p)) else {
                    continue;
                };
                if family_of(&parent.primary_language).is_some() {
                    jobs.push((parent, fork, Relation::ParentFork));
                }
            }
        }
    }

    let mut pairs: Vec<SimilarityPair> = jobs
        .par_iter()
        .map(|(a, b, relation)| {
            let language = a.primary_language.clone();
            let score = repo_score(&files(&a.repo_id, &language), &files(&b.repo_id, &language), opts);
            SimilarityPair {
                repo_a: a.repo_id.clone(),
                repo_b: b.repo_id.clone(),
                language,
                score,
                category: category(malicious.contains(&a.repo_id), malicious.contains(&b.repo_id)),
                relation: *relation,
            }
        })
        .filter(|p| opts.mode == PairMode::OriginalsOnly || p.score > 0.0)
        .collect();
    pairs.sort_by(|x, y| (&x.repo_a, &x.repo_b).cmp(&(&y.repo_a, &y.repo_b)));
    pairs
}

/// Scores grouped by category, for the significance test and plotting.
pub fn scores_by_category(pairs: &[SimilarityPair]) -> BTreeMap<String, Vec<f64>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for p in pairs {
        out.entry(p.category.clone()).or_default().push(p.score);
    }
    out
}
