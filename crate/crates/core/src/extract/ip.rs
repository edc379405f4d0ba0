//! IPv4 literal extraction, address classification and public filtering.

use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::context::{ContextMap, IpContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IpClass {
    Public,
    Private,
    Reserved,
    /// Public address that only appears in a comment or help text.
    ExcludedContext,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpCandidate {
    pub literal: String,
    pub file: PathBuf,
    pub offset: usize,
    pub context: IpContext,
    pub classification: IpClass,
}

impl IpCandidate {
    pub fn addr(&self) -> Ipv4Addr {
        parse_octets(&self.literal).expect("candidate literals are valid by construction")
    }
}

/// RFC 1918 private blocks.
pub const PRIVATE_RANGES: [(Ipv4Addr, u8); 3] = [
    (Ipv4Addr::new(10, 0, 0, 0), 8),
    (Ipv4Addr::new(172, 16, 0, 0), 12),
    (Ipv4Addr::new(192, 168, 0, 0), 16),
];

/// Special-purpose blocks that never host a reachable server: this-network,
/// shared address space, loopback, link-local, IETF protocol assignments,
/// documentation, benchmarking, multicast and the reserved/broadcast block.
pub const RESERVED_RANGES: [(Ipv4Addr, u8); 11] = [
    (Ipv4Addr::new(0, 0, 0, 0), 8),
    (Ipv4Addr::new(100, 64, 0, 0), 10),
    (Ipv4Addr::new(127, 0, 0, 0), 8),
    (Ipv4Addr::new(169, 254, 0, 0), 16),
    (Ipv4Addr::new(192, 0, 0, 0), 24),
    (Ipv4Addr::new(192, 0, 2, 0), 24),
    (Ipv4Addr::new(198, 18, 0, 0), 15),
    (Ipv4Addr::new(198, 51, 100, 0), 24),
    (Ipv4Addr::new(203, 0, 113, 0), 24),
    (Ipv4Addr::new(224, 0, 0, 0), 4),
    (Ipv4Addr::new(240, 0, 0, 0), 4),
];

pub(crate) fn in_cidr(addr: Ipv4Addr, net: Ipv4Addr, prefix: u8) -> bool {
    let mask = if prefix == 0 { 0 } else { u32::MAX << (32 - prefix as u32) };
    u32::from(addr) & mask == u32::from(net) & mask
}

/// Address-only classification; context is applied separately.
pub fn classify_addr(addr: Ipv4Addr) -> IpClass {
    if PRIVATE_RANGES.iter().any(|(n, p)| in_cidr(addr, *n, *p)) {
        IpClass::Private
    } else if RESERVED_RANGES.iter().any(|(n, p)| in_cidr(addr, *n, *p)) {
        IpClass::Reserved
    } else {
        IpClass::Public
    }
}

fn ip_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let octet = "(?:25[0-5]|2[0-4][0-9]|[01]?[0-9][0-9]?)";
        Regex::new(&format!(r"{octet}(?:\.{octet}){{3}}")).expect("valid regex")
    })
}

fn parse_octets(literal: &str) -> Option<Ipv4Addr> {
    let mut octets = [0u8; 4];
    let mut parts = literal.split('.');
    for o in octets.iter_mut() {
        *o = parts.next()?.parse().ok()?;
    }
    if parts.next().is_some() {
        return None;
    }
    Some(Ipv4Addr::from(octets))
}

/// Dotted quads in `text` as `(offset, literal)`.
///
/// A match must be exactly four octets: the byte before it may not be a digit
/// or a dot, nor the byte after it a digit, and a dot after it only counts as
/// a boundary when no digit follows (sentence punctuation).
pub(crate) fn scan_dotted_quads(text: &str) -> Vec<(usize, &str)> {
    let bytes = text.as_bytes();
    ip_pattern()
        .find_iter(text)
        .filter(|m| {
            let before_ok = m.start() == 0 || !matches!(bytes[m.start() - 1], b'0'..=b'9' | b'.');
            let after_ok = match bytes.get(m.end()) {
                None => true,
                Some(b'0'..=b'9') => false,
                Some(b'.') => !matches!(bytes.get(m.end() + 1), Some(b'0'..=b'9')),
                Some(_) => true,
            };
            before_ok && after_ok
        })
        .map(|m| (m.start(), m.as_str()))
        .collect()
}

/// Extracts IPv4 candidates from a file's (lossily decoded) content.
pub fn extract_ips(content: &str, file: &Path) -> Vec<IpCandidate> {
    let ctx = ContextMap::build(content, file);
    scan_dotted_quads(content)
        .into_iter()
        .map(|(offset, literal)| {
            let context = ctx.context_at(offset);
            let addr_class = classify_addr(parse_octets(literal).expect("pattern guarantees octets"));
            let classification = match (addr_class, context) {
                (IpClass::Public, IpContext::Comment | IpContext::Doc) => IpClass::ExcludedContext,
                (c, _) => c,
            };
            IpCandidate {
                literal: literal.to_string(),
                file: file.to_path_buf(),
                offset,
                context,
                classification,
            }
        })
        .collect()
}

/// IPs found inside decoded payload text.
pub(crate) fn extract_payload_ips(text: &str, file: &Path) -> Vec<IpCandidate> {
    scan_dotted_quads(text)
        .into_iter()
        .map(|(offset, literal)| IpCandidate {
            literal: literal.to_string(),
            file: file.to_path_buf(),
            offset,
            context: IpContext::DecodedPayload,
            classification: classify_addr(parse_octets(literal).expect("pattern guarantees octets")),
        })
        .collect()
}

/// A dropped candidate recorded for manual review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewEntry {
    pub file: PathBuf,
    pub offset: usize,
    pub literal: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterOutcome {
    pub kept: Vec<IpCandidate>,
    pub review: Vec<ReviewEntry>,
}

/// Keeps public addresses used in code or decoded payloads; everything else
/// goes to the review sidecar with the reason it was dropped.
pub fn filter_public(candidates: &[IpCandidate]) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for c in candidates {
        let reason = match (c.classification, c.context) {
            (IpClass::Private, _) => Some("private"),
            (IpClass::Reserved, _) => Some("reserved"),
            (_, IpContext::Comment) => Some("comment-context"),
            (_, IpContext::Doc) => Some("doc-context"),
            (IpClass::ExcludedContext, _) => Some("excluded-context"),
            (IpClass::Public, IpContext::Code | IpContext::DecodedPayload) => None,
        };
        match reason {
            None => out.kept.push(c.clone()),
            Some(r) => out.review.push(ReviewEntry {
                file: c.file.clone(),
                offset: c.offset,
                literal: c.literal.clone(),
                reason: r.to_string(),
            }),
        }
    }
    out
}
