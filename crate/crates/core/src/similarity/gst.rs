//! Greedy string tiling.
//!
//! Each round finds the longest common run of unmarked tokens, then marks
//! every run of exactly that length, scanning `a` then `b` positions in
//! ascending order and skipping runs that overlap a tile placed earlier in
//! the round. Rounds repeat until no run of `min_match_len` remains.
//!
//! Inputs are put in a canonical order (shorter first, then lexicographically
//! smaller) before tiling, so the result does not depend on argument order.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Tile {
    pub a_start: usize,
    pub b_start: usize,
    pub len: usize,
}

fn canonical<T: Ord>(a: &[T], b: &[T]) -> bool {
    match a.len().cmp(&b.len()) {
        Ordering::Less => false,
        Ordering::Greater => true,
        Ordering::Equal => a > b,
    }
}

/// Tiles in the caller's `(a, b)` coordinates, sorted by `a_start`.
pub fn gst_tiles<T: Ord>(a: &[T], b: &[T], min_match_len: usize) -> Vec<Tile> {
    let mml = min_match_len.max(1);
    let swapped = canonical(a, b);
    let (x, y) = if swapped { (b, a) } else { (a, b) };
    let mut tiles = tile_canonical(x, y, mml);
    if swapped {
        for t in &mut tiles {
            std::mem::swap(&mut t.a_start, &mut t.b_start);
        }
    }
    tiles.sort();
    tiles
}

fn tile_canonical<T: Eq>(a: &[T], b: &[T], mml: usize) -> Vec<Tile> {
    let (n, m) = (a.len(), b.len());
    let mut marked_a = vec![false; n];
    let mut marked_b = vec![false; m];
    let mut tiles = Vec::new();
    if n < mml || m < mml {
        return tiles;
    }
    // run[j] holds the run length starting at (i+1, j) while row i is filled.
    let mut next = vec![0usize; m + 1];
    let mut cur = vec![0usize; m + 1];
    loop {
        let mut best = 0;
        let mut found: Vec<(usize, usize)> = Vec::new();
        next.iter_mut().for_each(|v| *v = 0);
        for i in (0..n).rev() {
            cur[m] = 0;
            for j in (0..m).rev() {
                cur[j] = if !marked_a[i] && !marked_b[j] && a[i] == b[j] { next[j + 1] + 1 } else { 0 };
                let r = cur[j];
                if r >= mml && r >= best {
                    if r > best {
                        best = r;
                        found.clear();
                    }
                    found.push((i, j));
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        if best < mml {
            break;
        }
        found.sort_unstable();
        for (i, j) in found {
            let free = (i..i + best).all(|k| !marked_a[k]) && (j..j + best).all(|k| !marked_b[k]);
            if free {
                marked_a[i..i + best].iter_mut().for_each(|v| *v = true);
                marked_b[j..j + best].iter_mut().for_each(|v| *v = true);
                tiles.push(Tile {
                    a_start: i,
                    b_start: j,
                    len: best,
                });
            }
        }
    }
    tiles
}

/// `200 * covered / (|a| + |b|)`, in `[0, 100]`.
pub fn gst_similarity<T: Ord>(a: &[T], b: &[T], min_match_len: usize) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let covered: usize = gst_tiles(a, b, min_match_len).iter().map(|t| t.len).sum();
    200.0 * covered as f64 / (a.len() + b.len()) as f64
}
