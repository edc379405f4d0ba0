//! File-extension based language guesses shared by the extractors and the
//! tokenizers.

use std::path::Path;

/// Label used when no language can be inferred.
pub const UNDETECTED: &str = "Undetected";

pub fn guess_language(path: &Path) -> &'static str {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "py" | "pyw" => "Python",
        "c" | "h" => "C",
        "cpp" | "cc" | "cxx" | "hpp" | "hh" => "C++",
        "cs" => "C#",
        "java" => "Java",
        "kt" | "kts" => "Kotlin",
        "scala" => "Scala",
        "groovy" => "Groovy",
        "js" | "mjs" | "cjs" => "JavaScript",
        "ts" => "TypeScript",
        "go" => "Go",
        "rs" => "Rust",
        "php" => "PHP",
        "rb" => "Ruby",
        "pl" | "pm" => "Perl",
        "sh" | "bash" | "zsh" => "Shell",
        "ps1" | "psm1" => "PowerShell",
        "bat" | "cmd" => "Batchfile",
        "vbs" => "VBScript",
        "lua" => "Lua",
        "sql" => "SQL",
        "asm" | "s" => "Assembly",
        "html" | "htm" => "HTML",
        "xml" => "XML",
        "json" => "JSON",
        "yml" | "yaml" => "YAML",
        "md" | "markdown" => "Markdown",
        "txt" | "rst" => "Text",
        _ => {
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if name.eq_ignore_ascii_case("readme") || name.eq_ignore_ascii_case("license") {
                "Text"
            } else {
                UNDETECTED
            }
        }
    }
}

/// Prose files whose every line is documentation rather than code.
pub fn is_prose(language: &str) -> bool {
    matches!(language, "Markdown" | "Text")
}

/// Languages that count towards a repository's primary language.
pub fn is_code(language: &str) -> bool {
    !matches!(
        language,
        "Markdown" | "Text" | "HTML" | "XML" | "JSON" | "YAML" | UNDETECTED
    )
}

/// Line-comment prefixes recognized for a language.
pub fn comment_prefixes(language: &str) -> &'static [&'static str] {
    match language {
        "Python" | "Ruby" | "Perl" | "Shell" | "PowerShell" | "YAML" => &["#"],
        "C" | "C++" | "C#" | "Java" | "Kotlin" | "Scala" | "Groovy" | "JavaScript" | "TypeScript"
        | "Go" | "Rust" => &["//"],
        "PHP" => &["//", "#"],
        "Lua" | "SQL" => &["--"],
        "Assembly" => &[";", "#", "//"],
        "Batchfile" => &["::", "rem "],
        "VBScript" => &["'", "rem "],
        _ => &["#", "//", ";", "--"],
    }
}

/// Whether the language supports `/* ... */` block comments.
pub fn has_block_comments(language: &str) -> bool {
    matches!(
        language,
        "C" | "C++"
            | "C#"
            | "Java"
            | "Kotlin"
            | "Scala"
            | "Groovy"
            | "JavaScript"
            | "TypeScript"
            | "Go"
            | "Rust"
            | "PHP"
            | "SQL"
            | UNDETECTED
    )
}
