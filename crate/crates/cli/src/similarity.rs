//! Pairwise similarity over a scanned corpus and the tests between score
//! categories.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use pocscan::corpus::{FileInventory, RepoId, RepoRecord};
use pocscan::similarity::{
    family_of, mann_whitney_u, pairwise, scores_by_category, tokenize, Aggregation, MwuResult, PairMode, PairOptions,
    SimilarityPair, TokenStream,
};
use pocscan::Result;
use serde::{Deserialize, Serialize};

/// Category pairs compared by the significance test.
pub const COMPARISONS: [(&str, &str); 3] = [("11", "00"), ("11", "10"), ("10", "00")];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub median_a: f64,
    pub median_b: f64,
    pub test: MwuResult,
}

/// Tokenizes every file whose language the tokenizer supports. Files that
/// fail to read are skipped with a warning.
pub fn token_streams(
    root: &Path,
    records: &[RepoRecord],
    inventories: &BTreeMap<RepoId, FileInventory>,
) -> BTreeMap<RepoId, Vec<TokenStream>> {
    let mut out = BTreeMap::new();
    for r in records {
        let repo_root = root.join(r.local_path.as_deref().unwrap_or(&r.repo_id.0));
        let Some(inv) = inventories.get(&r.repo_id) else { continue };
        let mut streams = Vec::new();
        for f in inv.text_files.iter().filter(|f| family_of(&f.language).is_some()) {
            match tokenize(&repo_root.join(&f.path), &f.language) {
                Ok(mut ts) => {
                    ts.repo = Some(r.repo_id.clone());
                    ts.file = Some(f.path.clone());
                    streams.push(ts);
                }
                Err(e) => log::warn!("{}: {e}", f.path.display()),
            }
        }
        out.insert(r.repo_id.clone(), streams);
    }
    out
}

pub fn all_pairs(
    records: &[RepoRecord],
    streams: &BTreeMap<RepoId, Vec<TokenStream>>,
    malicious: &BTreeSet<RepoId>,
    min_match_len: usize,
    originals_only: bool,
) -> Vec<SimilarityPair> {
    let mut opts = PairOptions {
        mode: PairMode::OriginalsOnly,
        min_match_len,
        aggregation: Aggregation::Max,
    };
    let mut pairs = pairwise(records, streams, malicious, &opts);
    if !originals_only {
        opts.mode = PairMode::ParentFork;
        pairs.extend(pairwise(records, streams, malicious, &opts));
    }
    pairs
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Tests for every comparison whose two categories both have scores.
pub fn compare(pairs: &[SimilarityPair], exact_cap: usize) -> Result<Vec<Comparison>> {
    let by_cat = scores_by_category(pairs);
    let mut out = Vec::new();
    for (a, b) in COMPARISONS {
        let (Some(xs), Some(ys)) = (by_cat.get(a), by_cat.get(b)) else { continue };
        out.push(Comparison {
            a: a.into(),
            b: b.into(),
            median_a: median(xs),
            median_b: median(ys),
            test: mann_whitney_u(xs, ys, exact_cap)?,
        });
    }
    Ok(out)
}
