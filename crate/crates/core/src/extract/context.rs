//! Line heuristics deciding whether an offset sits in code, a comment or
//! help/usage text.

use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::lang;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IpContext {
    Code,
    Comment,
    Doc,
    DecodedPayload,
}

#[derive(Debug, Clone)]
struct Line {
    start: usize,
    end: usize,
    doc: bool,
    comment_from: Option<usize>,
    blocks: Vec<(usize, usize)>,
}

/// Per-line context of one file.
#[derive(Debug, Clone)]
pub struct ContextMap {
    lines: Vec<Line>,
    all_doc: bool,
}

fn doc_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)usage:|example|e\.g\.|--help|(?:^|[\s'\x22\[])-h(?:$|[\s,\]'\x22|])").expect("valid regex")
    })
}

fn inline_comment(line: &str, prefixes: &[&str]) -> Option<usize> {
    let bytes = line.as_bytes();
    for prefix in prefixes {
        if !matches!(*prefix, "#" | "//") {
            continue;
        }
        let mut from = 0;
        while let Some(i) = line[from..].find(prefix) {
            let at = from + i;
            let prev = if at == 0 { None } else { Some(bytes[at - 1]) };
            let ok = match *prefix {
                "//" => prev.map_or(true, |p| p != b':' && p != b'/'),
                _ => prev.map_or(true, |p| p.is_ascii_whitespace()),
            };
            if ok {
                return Some(at);
            }
            from = at + prefix.len();
        }
    }
    None
}

impl ContextMap {
    pub fn build(content: &str, file: &Path) -> Self {
        let language = lang::guess_language(file);
        if lang::is_prose(language) {
            return ContextMap { lines: Vec::new(), all_doc: true };
        }
        let prefixes = lang::comment_prefixes(language);
        let block_comments = lang::has_block_comments(language);
        let triple_quotes = matches!(language, "Python" | lang::UNDETECTED);

        let mut lines = Vec::new();
        let mut in_block = false;
        let mut in_triple = false;
        let mut triple_is_doc = false;
        let mut usage_block = false;
        let mut start = 0;
        for raw in content.split_inclusive('\n') {
            let end = start + raw.len();
            let text = raw.trim_end_matches(['\n', '\r']);
            let trimmed = text.trim_start();
            let lower_trim = trimmed.to_ascii_lowercase();

            // Block comment spans on this line.
            let mut blocks = Vec::new();
            if block_comments {
                let mut pos = 0;
                let mut span_start = if in_block { Some(0) } else { None };
                while pos < text.len() {
                    if in_block {
                        match text[pos..].find("*/") {
                            Some(i) => {
                                blocks.push((start + span_start.unwrap_or(0), start + pos + i + 2));
                                in_block = false;
                                pos += i + 2;
                                span_start = None;
                            }
                            None => {
                                blocks.push((start + span_start.unwrap_or(0), end));
                                break;
                            }
                        }
                    } else {
                        match text[pos..].find("/*") {
                            Some(i) if text[..pos + i].rfind("//").map_or(true, |c| text[..c].ends_with(':')) => {
                                in_block = true;
                                span_start = Some(pos + i);
                                pos += i + 2;
                            }
                            _ => break,
                        }
                    }
                }
            }

            let comment_from = if prefixes.iter().any(|p| lower_trim.starts_with(p)) {
                Some(start)
            } else {
                inline_comment(text, prefixes).map(|i| start + i)
            };

            let marker = doc_marker().is_match(text);
            let was_in_triple = in_triple;
            if triple_quotes {
                let quotes = text.matches("\"\"\"").count() + text.matches("'''").count();
                if quotes % 2 == 1 {
                    in_triple = !in_triple;
                    if in_triple {
                        triple_is_doc = marker;
                    }
                }
            }
            if trimmed.is_empty() {
                usage_block = false;
            }
            let continuing = usage_block && matches!(trimmed.as_bytes().first(), Some(b'-' | b'[' | b'<'));
            let doc = marker || continuing || (was_in_triple && triple_is_doc);
            if marker && lower_trim.contains("usage:") {
                usage_block = true;
            } else if !continuing && !marker {
                usage_block = false;
            }
            if in_triple && marker {
                triple_is_doc = true;
            }

            lines.push(Line { start, end, doc, comment_from, blocks });
            start = end;
        }
        ContextMap { lines, all_doc: false }
    }

    pub fn context_at(&self, offset: usize) -> IpContext {
        if self.all_doc {
            return IpContext::Doc;
        }
        let idx = self.lines.partition_point(|l| l.end <= offset);
        let Some(line) = self.lines.get(idx) else {
            return IpContext::Code;
        };
        debug_assert!(line.start <= offset);
        if line.blocks.iter().any(|(s, e)| (*s..*e).contains(&offset)) {
            return IpContext::Comment;
        }
        if line.comment_from.is_some_and(|c| c <= offset) {
            return IpContext::Comment;
        }
        if line.doc {
            IpContext::Doc
        } else {
            IpContext::Code
        }
    }
}
