//! Long-format CSVs for plotting popularity and similarity distributions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::RepoRecord;
use crate::error::{Error, Result};
use crate::similarity::SimilarityPair;
use crate::verdict::{ownership_stats, RepoVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Nearest-rank quartiles: the value at sorted index `ceil(p * n) - 1`.
/// `None` for an empty sample.
pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let rank = |p: f64| v[((p * n as f64).ceil() as usize).clamp(1, n) - 1];
    Some(Quartiles {
        n,
        min: v[0],
        q1: rank(0.25),
        median: rank(0.5),
        q3: rank(0.75),
        max: v[n - 1],
    })
}

fn finish(w: csv::Writer<Vec<u8>>, name: &str) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::io(name, e.into_error()))
}

fn quartile_csv(name: &str, groups: &BTreeMap<(String, String), Vec<f64>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["class", "metric", "n", "min", "q1", "median", "q3", "max"])?;
    for ((class, metric), values) in groups {
        if let Some(q) = quartiles(values) {
            w.write_record([
                class.clone(),
                metric.clone(),
                q.n.to_string(),
                q.min.to_string(),
                q.q1.to_string(),
                q.median.to_string(),
                q.q3.to_string(),
                q.max.to_string(),
            ])?;
        }
    }
    finish(w, name)
}

/// `popularity.csv`, `popularity_quartiles.csv`, `similarity.csv` and
/// `similarity_quartiles.csv`, as `(name, bytes)`.
pub fn emit_distributions(
    corpus: &[RepoRecord],
    verdicts: &[RepoVerdict],
    pairs: &[SimilarityPair],
) -> Result<Vec<(String, Vec<u8>)>> {
    let own = ownership_stats(corpus, verdicts);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["class", "metric", "value"])?;
    let mut pop: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for row in &own.distribution {
        w.write_record([row.class.as_str(), row.metric.as_str(), &row.value.to_string()])?;
        pop.entry((row.class.clone(), row.metric.clone())).or_default().push(row.value as f64);
    }
    let popularity = finish(w, "popularity.csv")?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["class", "metric", "value", "repo_a", "repo_b", "language"])?;
    let mut sim: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for p in pairs {
        w.write_record([
            p.category.as_str(),
            "similarity",
            &p.score.to_string(),
            &p.repo_a.0,
            &p.repo_b.0,
            &p.language,
        ])?;
        sim.entry((p.category.clone(), "similarity".into())).or_default().push(p.score);
    }
    let similarity = finish(w, "similarity.csv")?;

    Ok(vec![
        ("popularity.csv".into(), popularity),
        ("popularity_quartiles.csv".into(), quartile_csv("popularity_quartiles.csv", &pop)?),
        ("similarity.csv".into(), similarity),
        ("similarity_quartiles.csv".into(), quartile_csv("similarity_quartiles.csv", &sim)?),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::record;
    use chrono::{DateTime, Utc};
    use proptest::prelude::*;

    fn file<'a>(files: &'a [(String, Vec<u8>)], name: &str) -> String {
        String::from_utf8(files.iter().find(|(n, _)| n == name).unwrap().1.clone()).unwrap()
    }

    fn verdict(id: &str, malicious: bool) -> RepoVerdict {
        RepoVerdict {
            repo_id: id.into(),
            malicious,
            findings: Vec::new(),
            suspicious: Vec::new(),
            annotations: Vec::new(),
            decided_at: DateTime::<Utc>::UNIX_EPOCH,
        }
    }

    #[test]
    fn mostly_unstarred_corpus_has_zero_upper_quartile() {
        let mut corpus = Vec::new();
        let mut verdicts = Vec::new();
        for i in 0..8 {
            let mut r = record(&format!("u{i}/r"), &format!("u{i}"), &["CVE-2021-0001"]);
            // One in four of each class is popular.
            if i >= 6 {
                r.stars = 40;
                r.forks = 7;
            }
            verdicts.push(verdict(&r.repo_id.0, i % 2 == 1));
            corpus.push(r);
        }
        let files = emit_distributions(&corpus, &verdicts, &[]).unwrap();
        let q = file(&files, "popularity_quartiles.csv");
        for class in ["benign", "malicious"] {
            for metric in ["stars", "forks"] {
                let line = q.lines().find(|l| l.starts_with(&format!("{class},{metric},"))).unwrap();
                let cols: Vec<&str> = line.split(',').collect();
                assert_eq!((cols[5], cols[6]), ("0", "0"), "{line}");
            }
        }
    }

    #[test]
    fn single_repo_one_row_per_metric() {
        let r = record("a/x", "a", &["CVE-2021-0001"]);
        let files = emit_distributions(&[r], &[verdict("a/x", false)], &[]).unwrap();
        assert_eq!(file(&files, "popularity.csv"), "class,metric,value\nbenign,stars,0\nbenign,forks,0\n");
    }

    #[test]
    fn no_pairs_header_only() {
        let files = emit_distributions(&[], &[], &[]).unwrap();
        assert_eq!(file(&files, "similarity.csv"), "class,metric,value,repo_a,repo_b,language\n");
    }

    #[test]
    fn nearest_rank_examples() {
        let q = quartiles(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (1.0, 2.0, 3.0));
        assert!(quartiles(&[]).is_none());
    }

    proptest! {
        #[test]
        fn quartiles_are_ordered_members(v in prop::collection::vec(0u16..100, 1..40)) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            let q = quartiles(&v).unwrap();
            prop_assert!(q.min <= q.q1 && q.q1 <= q.median && q.median <= q.q3 && q.q3 <= q.max);
            for x in [q.q1, q.median, q.q3] {
                prop_assert!(v.contains(&x));
            }
            let below = v.iter().filter(|x| **x <= q.median).count();
            prop_assert!(2 * below >= v.len());
        }
    }
}
