//! Netset/ipset blocklists: one address or CIDR per line, `#` comments.

use std::collections::BTreeSet;
use std::net::Ipv4Addr;
use std::path::Path;

use chrono::{DateTime, Utc};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct IpSet {
    /// Normalized `(network, prefix)` entries.
    entries: BTreeSet<(u32, u8)>,
    /// Merged, sorted, inclusive ranges for membership tests.
    ranges: Vec<(u32, u32)>,
    pub source_name: String,
    pub loaded_at: DateTime<Utc>,
    pub skipped_lines: usize,
}

fn mask(prefix: u8) -> u32 {
    if prefix == 0 {
        0
    } else {
        u32::MAX << (32 - prefix as u32)
    }
}

/// Parses `a.b.c.d` or `a.b.c.d/n`, clearing host bits.
pub fn parse_entry(s: &str) -> Option<(u32, u8)> {
    let (addr, prefix) = match s.split_once('/') {
        Some((a, p)) => (a, p.parse::<u8>().ok().filter(|p| *p <= 32)?),
        None => (s, 32),
    };
    let addr: Ipv4Addr = addr.parse().ok()?;
    Some((u32::from(addr) & mask(prefix), prefix))
}

impl IpSet {
    pub fn new(source_name: impl Into<String>) -> Self {
        IpSet {
            entries: BTreeSet::new(),
            ranges: Vec::new(),
            source_name: source_name.into(),
            loaded_at: Utc::now(),
            skipped_lines: 0,
        }
    }

    pub fn from_entries(source_name: &str, entries: impl IntoIterator<Item = (u32, u8)>) -> Self {
        let mut set = IpSet::new(source_name);
        set.entries.extend(entries);
        set.rebuild();
        set
    }

    fn rebuild(&mut self) {
        let mut ranges: Vec<(u32, u32)> = self.entries.iter().map(|(n, p)| (*n, *n | !mask(*p))).collect();
        ranges.sort_unstable();
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(ranges.len());
        for (lo, hi) in ranges {
            match merged.last_mut() {
                Some(last) if lo <= last.1.saturating_add(1) => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        self.ranges = merged;
    }

    /// Adds the lines of one netset file; returns how many were malformed.
    pub fn extend_from_text(&mut self, text: &str) -> usize {
        let mut skipped = 0;
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match parse_entry(line) {
                Some(e) => {
                    self.entries.insert(e);
                }
                None => skipped += 1,
            }
        }
        self.skipped_lines += skipped;
        self.rebuild();
        skipped
    }

    pub fn contains(&self, ip: Ipv4Addr) -> bool {
        let x = u32::from(ip);
        let idx = self.ranges.partition_point(|(lo, _)| *lo <= x);
        idx > 0 && self.ranges[idx - 1].1 >= x
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (Ipv4Addr, u8)> + '_ {
        self.entries.iter().map(|(n, p)| (Ipv4Addr::from(*n), *p))
    }
}

/// Union of every regular file in `dir`, read in name order.
pub fn load_blocklists(dir: &Path) -> Result<IpSet> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::Config(format!("blocklist directory {}: {e}", dir.display())))?;
    let mut files: Vec<_> = rd
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    let mut set = IpSet::new(dir.display().to_string());
    for f in files {
        let text = std::fs::read(&f).map_err(|e| Error::io(&f, e))?;
        let skipped = set.extend_from_text(&String::from_utf8_lossy(&text));
        if skipped > 0 {
            log::warn!("{}: skipped {skipped} malformed lines", f.display());
        }
    }
    Ok(set)
}
