//! Hex-escape and base64 payload extraction with recursive decoding.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::ip::{extract_payload_ips, IpCandidate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Hex,
    Base64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedPayload {
    pub encoding: Encoding,
    pub source_file: PathBuf,
    /// Byte offset of the (first) match in the text it was found in.
    pub offset: usize,
    pub raw: String,
    #[serde(with = "hex")]
    pub decoded: Vec<u8>,
    pub printable: bool,
    pub depth: u32,
    /// A trailing unpaired hex digit was discarded.
    #[serde(default)]
    pub odd_nibble_dropped: bool,
    pub embedded_ips: Vec<IpCandidate>,
    pub embedded_urls: Vec<String>,
}

impl EncodedPayload {
    pub fn decoded_text(&self) -> String {
        String::from_utf8_lossy(&self.decoded).into_owned()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub base64_min_len: usize,
    pub max_depth: u32,
    /// Fraction of printable bytes at or above which a payload is text.
    pub printable_ratio: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            base64_min_len: 20,
            max_depth: 3,
            printable_ratio: 0.9,
        }
    }
}

fn hex_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\\x([0-9A-Fa-f]+)").expect("valid regex"))
}

fn base64_run() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[A-Za-z0-9+/]+={0,2}").expect("valid regex"))
}

fn base64_shape() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(?:[A-Za-z0-9+/]{4})*(?:[A-Za-z0-9+/]{4}|[A-Za-z0-9+/]{3}=|[A-Za-z0-9+/]{2}==)$")
            .expect("valid regex")
    })
}

fn url_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"(?i)\b(?:https?|ftps?)://[^\s'"<>`]+"#).expect("valid regex"))
}

pub(crate) fn extract_urls(text: &str) -> Vec<String> {
    url_pattern()
        .find_iter(text)
        .map(|m| m.as_str().trim_end_matches(['.', ',', ';', ')', ']', '}']).to_string())
        .collect()
}

pub fn is_printable(bytes: &[u8], ratio: f64) -> bool {
    if bytes.is_empty() {
        return false;
    }
    let good = bytes
        .iter()
        .filter(|b| matches!(b, 0x20..=0x7e | b'\t' | b'\n' | b'\r'))
        .count();
    good as f64 >= ratio * bytes.len() as f64
}

fn make_payload(
    encoding: Encoding,
    file: &Path,
    offset: usize,
    raw: String,
    decoded: Vec<u8>,
    depth: u32,
    odd_nibble_dropped: bool,
    opts: &ExtractOptions,
) -> EncodedPayload {
    let text = String::from_utf8_lossy(&decoded);
    EncodedPayload {
        encoding,
        source_file: file.to_path_buf(),
        offset,
        printable: is_printable(&decoded, opts.printable_ratio),
        embedded_ips: extract_payload_ips(&text, file),
        embedded_urls: extract_urls(&text),
        raw,
        decoded,
        depth,
        odd_nibble_dropped,
    }
}

/// All `\x` escapes of one text concatenated in order and decoded as a
/// single payload.
fn hex_at_depth(content: &str, file: &Path, depth: u32, opts: &ExtractOptions) -> Option<EncodedPayload> {
    let mut raw = String::new();
    let mut digits = String::new();
    let mut first = None;
    for caps in hex_pattern().captures_iter(content) {
        let m = caps.get(0).expect("whole match");
        first.get_or_insert(m.start());
        raw.push_str(m.as_str());
        digits.push_str(&caps[1]);
    }
    let offset = first?;
    let odd = digits.len() % 2 == 1;
    if odd {
        log::warn!("{}: odd number of hex digits, dropping trailing nibble", file.display());
        digits.pop();
    }
    let decoded = hex::decode(&digits).expect("even-length run of hex digits");
    Some(make_payload(Encoding::Hex, file, offset, raw, decoded, depth, odd, opts))
}

fn base64_at_depth(content: &str, file: &Path, depth: u32, opts: &ExtractOptions) -> Vec<EncodedPayload> {
    base64_run()
        .find_iter(content)
        .filter(|m| m.len() >= opts.base64_min_len && base64_shape().is_match(m.as_str()))
        .filter_map(|m| {
            let decoded = STANDARD.decode(m.as_str()).ok()?;
            Some(make_payload(Encoding::Base64, file, m.start(), m.as_str().to_string(), decoded, depth, false, opts))
        })
        .collect()
}

/// Appends `payload` and everything nested inside it, depth-first.
fn expand(payload: EncodedPayload, opts: &ExtractOptions, out: &mut Vec<EncodedPayload>) {
    let nested = if payload.depth < opts.max_depth && payload.printable {
        let text = payload.decoded_text();
        let next = payload.depth + 1;
        let mut children: Vec<EncodedPayload> = hex_at_depth(&text, &payload.source_file, next, opts)
            .into_iter()
            .chain(base64_at_depth(&text, &payload.source_file, next, opts))
            .collect();
        children.sort_by_key(|p| p.offset);
        children
    } else {
        Vec::new()
    };
    out.push(payload);
    for child in nested {
        expand(child, opts, out);
    }
}

/// The concatenated `\x..` escapes of a file, followed by anything nested
/// inside the decoded text.
pub fn extract_hex_payloads(content: &str, file: &Path, opts: &ExtractOptions) -> Vec<EncodedPayload> {
    let mut out = Vec::new();
    if let Some(p) = hex_at_depth(content, file, 1, opts) {
        expand(p, opts, &mut out);
    }
    out
}

/// Base64 runs of at least `base64_min_len` characters that decode under the
/// strict standard alphabet, each followed by what is nested inside it.
pub fn extract_base64_payloads(content: &str, file: &Path, opts: &ExtractOptions) -> Vec<EncodedPayload> {
    let mut out = Vec::new();
    for p in base64_at_depth(content, file, 1, opts) {
        expand(p, opts, &mut out);
    }
    out
}
