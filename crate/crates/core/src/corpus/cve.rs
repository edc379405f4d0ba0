//! CVE identifiers and their recognition in free text.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Longest sequence number accepted. MITRE has no fixed upper bound but
/// nothing beyond seven digits has ever been assigned.
const MAX_NUMBER_DIGITS: usize = 7;

/// A CVE identifier in canonical `CVE-<year>-<number>` form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CveId {
    year: u16,
    number: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid CVE identifier: {0:?}")]
pub struct InvalidCveId(pub String);

impl CveId {
    pub fn new(year: u16, number: u32) -> Result<Self, InvalidCveId> {
        if !(1999..=2099).contains(&year) || number >= 10u32.pow(MAX_NUMBER_DIGITS as u32) {
            return Err(InvalidCveId(format!("CVE-{year}-{number}")));
        }
        Ok(CveId { year, number })
    }

    pub fn year(&self) -> u16 {
        self.year
    }

    pub fn number(&self) -> u32 {
        self.number
    }

    /// The keyword variants searched for when harvesting this identifier.
    pub fn search_variants(&self) -> Vec<String> {
        let (y, n) = (self.year, self.number);
        vec![
            format!("CVE-{y}-{n:04}"),
            format!("CVE {y}-{n:04}"),
            format!("CVE-{y} {n:04}"),
            format!("CVE {y} {n:04}"),
            format!("CVE:{y}-{n:04}"),
        ]
    }

    fn from_parts(year: &str, number: &str) -> Option<Self> {
        if number.len() < 4 || number.len() > MAX_NUMBER_DIGITS {
            return None;
        }
        let year: u16 = year.parse().ok()?;
        let number: u32 = number.parse().ok()?;
        CveId::new(year, number).ok()
    }
}

impl fmt::Display for CveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CVE-{}-{:04}", self.year, self.number)
    }
}

impl FromStr for CveId {
    type Err = InvalidCveId;

    /// Parses the canonical form only (case-insensitive).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || InvalidCveId(s.to_string());
        let mut parts = s.trim().splitn(3, '-');
        let prefix = parts.next().ok_or_else(err)?;
        let year = parts.next().ok_or_else(err)?;
        let number = parts.next().ok_or_else(err)?;
        if !prefix.eq_ignore_ascii_case("CVE")
            || year.len() != 4
            || !year.bytes().all(|b| b.is_ascii_digit())
            || !number.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        CveId::from_parts(year, number).ok_or_else(err)
    }
}

impl Serialize for CveId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CveId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn cve_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // The leading group stands in for a word boundary that also treats `_`
    // as a separator, since repository names often read `poc_CVE-...`.
    RE.get_or_init(|| {
        Regex::new(r"(?i)(?:^|[^a-z0-9])cve[-: \t_]([0-9]{4})[- \t_]([0-9]+)").expect("valid regex")
    })
}

/// Returns every distinct CVE identifier mentioned in `text`, normalized to
/// canonical form.
///
/// Recognizes `CVE-YEAR-ID` and the separator variants `CVE YEAR-ID`,
/// `CVE-YEAR ID`, `CVE YEAR ID` and `CVE:YEAR-ID`, case-insensitively.
pub fn extract_cve_ids(text: &str) -> BTreeSet<CveId> {
    cve_pattern()
        .captures_iter(text)
        .filter_map(|caps| CveId::from_parts(&caps[1], &caps[2]))
        .collect()
}
