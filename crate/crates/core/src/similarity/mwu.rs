//! Two-sided Mann-Whitney U test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MwuResult {
    pub n_a: usize,
    pub n_b: usize,
    pub u_a: f64,
    pub u_b: f64,
    pub p: f64,
    pub method: TestMethod,
    /// Every observation equal: the test carries no information.
    pub degenerate: bool,
}

pub const DEFAULT_EXACT_CAP: usize = 400;

/// Ranks from 1, ties sharing their mean rank. Returned doubled so that
/// midranks stay integral.
fn doubled_midranks(pooled: &[f64]) -> Vec<u64> {
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    idx.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut e = k;
        while e + 1 < idx.len() && pooled[idx[e + 1]] == pooled[idx[k]] {
            e += 1;
        }
        // Ranks k+1..=e+1 averaged, doubled: (k+1 + e+1).
        let r2 = (k + e + 2) as u64;
        for &i in &idx[k..=e] {
            ranks[i] = r2;
        }
        k = e + 1;
    }
    ranks
}

/// `U_A` counts pairs with `a > b`, ties counting one half.
pub fn u_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for x in a {
        for y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// Exact two-sided p: the share of all ways to pick `n_a` of the pooled
/// observations whose rank sum is at least as far from its mean as the one
/// observed. Counted by dynamic programming over doubled rank sums.
fn exact_p(ranks: &[u64], n_a: usize, observed: u64) -> f64 {
    let total: u64 = ranks.iter().sum();
    let max_sum = ranks.iter().copied().max().unwrap_or(0) as usize * n_a;
    // ways[k][s]: subsets of size k with doubled rank sum s.
    let mut ways = vec![vec![0u128; max_sum + 1]; n_a + 1];
    ways[0][0] = 1;
    for &r in ranks {
        let r = r as usize;
        for k in (1..=n_a).rev() {
            for s in (r..=max_sum).rev() {
                let add = ways[k - 1][s - r];
                if add != 0 {
                    ways[k][s] += add;
                }
            }
        }
    }
    // Twice the mean doubled rank sum is 2 * n_a * total / N; compare
    // |N*s - n_a*total| to stay in integers.
    let n = ranks.len() as i128;
    let center = n_a as i128 * total as i128;
    let dev = |s: u64| (n * s as i128 - center).abs();
    let obs = dev(observed);
    let (mut hit, mut all) = (0u128, 0u128);
    for (s, w) in ways[n_a].iter().enumerate() {
        all += w;
        if dev(s as u64) >= obs {
            hit += w;
        }
    }
    hit as f64 / all as f64
}

fn normal_p(ranks: &[u64], n_a: usize, n_b: usize, u_a: f64) -> f64 {
    let n = (n_a + n_b) as f64;
    let mu = n_a as f64 * n_b as f64 / 2.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_unstable();
    let mut tie_term = 0.0;
    let mut k = 0;
    while k < sorted.len() {
        let e = sorted[k..].iter().take_while(|r| **r == sorted[k]).count();
        let t = e as f64;
        tie_term += t * t * t - t;
        k += e;
    }
    let var = n_a as f64 * n_b as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u_a - mu).abs() - 0.5).max(0.0) / var.sqrt();
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - std.cdf(z))).min(1.0)
}

pub fn mann_whitney_u(a: &[f64], b: &[f64], exact_cap: usize) -> Result<MwuResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Usage("Mann-Whitney U needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::Usage("Mann-Whitney U samples contain NaN".into()));
    }
    let (n_a, n_b) = (a.len(), b.len());
    let u_a = u_statistic(a, b);
    let u_b = (n_a * n_b) as f64 - u_a;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let method = if n_a * n_b <= exact_cap { TestMethod::Exact } else { TestMethod::NormalApprox };
    let degenerate = pooled.iter().all(|x| *x == pooled[0]);
    if degenerate {
        return Ok(MwuResult { n_a, n_b, u_a, u_b, p: 1.0, method, degenerate });
    }
    let ranks = doubled_midranks(&pooled);
    let p = match method {
        TestMethod::Exact => exact_p(&ranks, n_a, ranks[..n_a].iter().sum()),
        TestMethod::NormalApprox => normal_p(&ranks, n_a, n_b, u_a),
    };
    Ok(MwuResult { n_a, n_b, u_a, u_b, p, method, degenerate })
}
