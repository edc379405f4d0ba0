//! Language-family lexers producing normalized token streams. Identifiers
//! collapse to IDENT and literals to LIT, so renamed variables and changed
//! constants do not hide copied structure.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::RepoId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    CFamily,
    Python,
    Shell,
    JavaFamily,
}

pub fn family_of(language: &str) -> Option<Family> {
    match language {
        "C" | "C++" | "C#" | "Go" | "JavaScript" | "TypeScript" | "Rust" | "PHP" => Some(Family::CFamily),
        "Python" | "Ruby" => Some(Family::Python),
        "Shell" => Some(Family::Shell),
        "Java" | "Kotlin" | "Scala" | "Groovy" => Some(Family::JavaFamily),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum TokenKind {
    Ident,
    Lit,
    Keyword(&'static str),
    Punct(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    /// 1-based line of the first character.
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenStream {
    pub language: String,
    pub family: Family,
    pub tokens: Vec<Token>,
    pub repo: Option<RepoId>,
    pub file: Option<PathBuf>,
}

impl TokenStream {
    pub fn kinds(&self) -> Vec<TokenKind> {
        self.tokens.iter().map(|t| t.kind).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

const C_KEYWORDS: &[&str] = &[
    "auto", "break", "case", "catch", "char", "class", "const", "continue", "default", "defer", "delete", "do",
    "double", "else", "enum", "export", "extern", "false", "float", "fn", "for", "func", "function", "go", "goto",
    "if", "impl", "import", "int", "let", "long", "match", "mut", "namespace", "new", "null", "nullptr", "package",
    "private", "protected", "pub", "public", "return", "short", "signed", "sizeof", "static", "struct", "switch",
    "this", "throw", "true", "try", "typedef", "union", "unsigned", "use", "using", "var", "void", "volatile",
    "while", "echo", "include", "require",
];

const JAVA_KEYWORDS: &[&str] = &[
    "abstract", "boolean", "break", "byte", "case", "catch", "char", "class", "continue", "def", "default", "do",
    "double", "else", "enum", "extends", "false", "final", "finally", "float", "for", "fun", "if", "implements",
    "import", "instanceof", "int", "interface", "long", "new", "null", "object", "override", "package", "private",
    "protected", "public", "return", "short", "static", "super", "switch", "synchronized", "this", "throw",
    "throws", "true", "try", "val", "var", "void", "when", "while",
];

const PY_KEYWORDS: &[&str] = &[
    "and", "as", "assert", "async", "await", "begin", "break", "class", "continue", "def", "del", "do", "elif",
    "else", "elsif", "end", "except", "False", "finally", "for", "from", "global", "if", "import", "in", "is",
    "lambda", "module", "nil", "None", "nonlocal", "not", "or", "pass", "raise", "require", "rescue", "return",
    "self", "True", "try", "unless", "until", "while", "with", "yield",
];

const SH_KEYWORDS: &[&str] = &[
    "case", "do", "done", "elif", "else", "esac", "export", "fi", "for", "function", "if", "in", "local",
    "return", "select", "then", "until", "while",
];

const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", "...", "===", "!==", "**=", "//=", "->", "=>", "::", "==", "!=", "<=", ">=", "&&", "||",
    "<<", ">>", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "++", "--", "**", ":=",
];

const SINGLE: &[&str] = &[
    "!", "\"", "#", "$", "%", "&", "'", "(", ")", "*", "+", ",", "-", ".", "/", ":", ";", "<", "=", ">", "?", "@",
    "[", "\\", "]", "^", "`", "{", "|", "}", "~",
];

const OTHER: &str = "other";

fn keywords(f: Family) -> &'static [&'static str] {
    match f {
        Family::CFamily => C_KEYWORDS,
        Family::JavaFamily => JAVA_KEYWORDS,
        Family::Python => PY_KEYWORDS,
        Family::Shell => SH_KEYWORDS,
    }
}

fn line_comment(f: Family) -> &'static [&'static str] {
    match f {
        Family::CFamily | Family::JavaFamily => &["//"],
        Family::Python | Family::Shell => &["#"],
    }
}

struct Lexer<'a> {
    s: &'a [u8],
    i: usize,
    line: u32,
    family: Family,
    out: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn peek(&self, k: usize) -> Option<u8> {
        self.s.get(self.i + k).copied()
    }

    fn starts(&self, p: &str) -> bool {
        self.s[self.i..].starts_with(p.as_bytes())
    }

    fn bump(&mut self, n: usize) {
        for _ in 0..n {
            if self.i < self.s.len() {
                if self.s[self.i] == b'\n' {
                    self.line += 1;
                }
                self.i += 1;
            }
        }
    }

    fn push(&mut self, kind: TokenKind, line: u32) {
        self.out.push(Token { kind, line });
    }

    fn skip_to_eol(&mut self) {
        while let Some(c) = self.peek(0) {
            if c == b'\n' {
                break;
            }
            self.bump(1);
        }
    }

    /// Consumes a quoted literal starting at the opening quote.
    fn string(&mut self, quote: &[u8]) {
        let line = self.line;
        self.bump(quote.len());
        // Single quotes in shell have no escapes.
        let escapes = !(self.family == Family::Shell && quote == b"'");
        while self.i < self.s.len() {
            if escapes && self.s[self.i] == b'\\' {
                self.bump(2);
                continue;
            }
            if self.s[self.i..].starts_with(quote) {
                self.bump(quote.len());
                break;
            }
            // Unterminated single-line strings end at the newline.
            if quote.len() == 1 && quote[0] != b'`' && self.s[self.i] == b'\n' && self.family != Family::Shell {
                break;
            }
            self.bump(1);
        }
        self.push(TokenKind::Lit, line);
    }

    fn run(mut self) -> Vec<Token> {
        let kw = keywords(self.family);
        while let Some(c) = self.peek(0) {
            let line = self.line;
            if c.is_ascii_whitespace() {
                self.bump(1);
                continue;
            }
            if line_comment(self.family).iter().any(|p| self.starts(p)) {
                // `$#` and `${#x}` in shell are not comments.
                let prev = self.i.checked_sub(1).map(|j| self.s[j]);
                if self.family != Family::Shell || prev.is_none_or(|p| p.is_ascii_whitespace() || p == b';') {
                    self.skip_to_eol();
                    continue;
                }
            }
            if matches!(self.family, Family::CFamily | Family::JavaFamily) && self.starts("/*") {
                self.bump(2);
                while self.i < self.s.len() && !self.starts("*/") {
                    self.bump(1);
                }
                self.bump(2);
                continue;
            }
            if self.family == Family::Python && (self.starts("\"\"\"") || self.starts("'''")) {
                let q = if self.starts("\"\"\"") { b"\"\"\"" } else { b"'''" };
                self.string(q);
                continue;
            }
            if c == b'"' || c == b'\'' || (c == b'`' && self.family != Family::Python) {
                // Rust/Java char literals and lifetimes both start with '.
                self.string(&[c]);
                continue;
            }
            if c.is_ascii_digit() {
                while self.peek(0).is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_' || c == b'.') {
                    self.bump(1);
                }
                self.push(TokenKind::Lit, line);
                continue;
            }
            if c.is_ascii_alphabetic() || c == b'_' || c >= 0x80 {
                let start = self.i;
                while self.peek(0).is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_' || c >= 0x80) {
                    self.bump(1);
                }
                let word = std::str::from_utf8(&self.s[start..self.i]).unwrap_or("");
                // String prefixes such as r"..", b'..', f"..".
                if self.family == Family::Python
                    && word.len() <= 2
                    && word.chars().all(|ch| "rbfuRBFU".contains(ch))
                    && matches!(self.peek(0), Some(b'"') | Some(b'\''))
                {
                    let q = self.peek(0).unwrap();
                    if self.s[self.i..].starts_with(&[q, q, q]) {
                        self.string(&[q, q, q]);
                    } else {
                        self.string(&[q]);
                    }
                    if let Some(t) = self.out.last_mut() {
                        t.line = line;
                    }
                    continue;
                }
                match kw.iter().find(|k| **k == word) {
                    Some(k) => self.push(TokenKind::Keyword(k), line),
                    None => self.push(TokenKind::Ident, line),
                }
                continue;
            }
            if self.family == Family::Shell && c == b'$' && self.peek(1).is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
                self.bump(1);
                while self.peek(0).is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
                    self.bump(1);
                }
                self.push(TokenKind::Ident, line);
                continue;
            }
            if let Some(op) = OPERATORS.iter().find(|op| self.starts(op)) {
                self.bump(op.len());
                self.push(TokenKind::Punct(op), line);
                continue;
            }
            let p = SINGLE.iter().find(|p| p.as_bytes()[0] == c).copied().unwrap_or(OTHER);
            self.bump(1);
            self.push(TokenKind::Punct(p), line);
        }
        self.out
    }
}

pub fn tokenize_str(src: &str, language: &str) -> Result<TokenStream> {
    let family = family_of(language).ok_or_else(|| Error::UnsupportedLanguage(language.to_string()))?;
    let tokens = Lexer {
        s: src.as_bytes(),
        i: 0,
        line: 1,
        family,
        out: Vec::new(),
    }
    .run();
    Ok(TokenStream {
        language: language.to_string(),
        family,
        tokens,
        repo: None,
        file: None,
    })
}

pub fn tokenize(file: &Path, language: &str) -> Result<TokenStream> {
    let bytes = std::fs::read(file).map_err(|e| Error::io(file, e))?;
    let mut ts = tokenize_str(&String::from_utf8_lossy(&bytes), language)?;
    ts.file = Some(file.to_path_buf());
    Ok(ts)
}
