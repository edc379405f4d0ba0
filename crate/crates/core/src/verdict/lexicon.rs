//! Word lists behind the binary and payload decisions. Built-in defaults can
//! be extended from files in a lexicon directory:
//!
//! * `hacktools.txt`: one tool name per line
//! * `exec_patterns.txt`: one case-insensitive substring per line
//! * `cve_families.csv`: `family,cve-id` rows mapping exploit family names

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CveId;
use crate::error::{Error, Result};

const HACKTOOLS: &[&str] = &[
    "netcat", "ncat", "rubeus", "powersploit", "ysoserial", "mimikatz", "psexec", "sharphound", "kekeo",
];

const EXEC_PATTERNS: &[&str] = &[
    "/bin/sh",
    "/bin/bash",
    "bash -i",
    "/dev/tcp/",
    "| sh",
    "|sh",
    "| bash",
    "|bash",
    "curl ",
    "wget ",
    "chmod +x",
    "nc -e",
    "powershell",
    "-encodedcommand",
    "invoke-expression",
    "iex(",
    "downloadstring",
    "downloadfile",
    "cmd.exe",
    "os.system",
    "subprocess",
    "exec(",
    "eval(",
    "certutil",
];

const CVE_FAMILIES: &[(&str, &str)] = &[
    ("bluekeep", "CVE-2019-0708"),
    ("eternalblue", "CVE-2017-0144"),
    ("log4shell", "CVE-2021-44228"),
    ("zerologon", "CVE-2020-1472"),
    ("printnightmare", "CVE-2021-34527"),
    ("proxylogon", "CVE-2021-26855"),
    ("proxyshell", "CVE-2021-34473"),
    ("dirtycow", "CVE-2016-5195"),
    ("smbghost", "CVE-2020-0796"),
    ("pwnkit", "CVE-2021-4034"),
    ("hivenightmare", "CVE-2021-36934"),
    ("follina", "CVE-2022-30190"),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicons {
    pub hacktools: BTreeSet<String>,
    pub exec_patterns: BTreeSet<String>,
    pub cve_families: BTreeMap<String, BTreeSet<CveId>>,
}

impl Default for Lexicons {
    fn default() -> Self {
        let mut cve_families: BTreeMap<String, BTreeSet<CveId>> = BTreeMap::new();
        for (f, c) in CVE_FAMILIES {
            cve_families.entry(f.to_string()).or_default().insert(c.parse().expect("valid built-in id"));
        }
        Lexicons {
            hacktools: HACKTOOLS.iter().map(|s| s.to_string()).collect(),
            exec_patterns: EXEC_PATTERNS.iter().map(|s| s.to_string()).collect(),
            cve_families,
        }
    }
}

fn words(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

impl Lexicons {
    /// Defaults extended with whatever files exist in `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        let mut lex = Lexicons::default();
        let p = dir.join("hacktools.txt");
        if p.exists() {
            lex.hacktools.extend(words(&p)?);
        }
        let p = dir.join("exec_patterns.txt");
        if p.exists() {
            lex.exec_patterns.extend(words(&p)?);
        }
        let p = dir.join("cve_families.csv");
        if p.exists() {
            for (i, line) in words(&p)?.into_iter().enumerate() {
                let parsed = line
                    .split_once(',')
                    .and_then(|(f, c)| Some((f.trim().to_string(), c.trim().parse::<CveId>().ok()?)));
                match parsed {
                    Some((f, c)) => {
                        lex.cve_families.entry(f).or_default().insert(c);
                    }
                    None => {
                        return Err(Error::Parse {
                            path: p.clone(),
                            line: i + 1,
                            message: format!("expected family,cve-id, got {line:?}"),
                        })
                    }
                }
            }
        }
        Ok(lex)
    }

    /// Splits a label on anything that is not a letter or digit.
    fn tokens(label: &str) -> impl Iterator<Item = &str> {
        label.split(|c: char| !c.is_ascii_alphanumeric()).filter(|t| !t.is_empty())
    }

    pub fn is_hacktool(&self, label: &str) -> bool {
        let label = label.to_lowercase();
        self.hacktools.contains(&label) || Self::tokens(&label).any(|t| self.hacktools.contains(t))
    }

    /// True when the label names one of `cves`, either directly
    /// (`exploit.cve-2019-0708`, `CVE_2019_0708`) or via a family name.
    pub fn is_cve_related(&self, label: &str, cves: &BTreeSet<CveId>) -> bool {
        let label = label.to_lowercase();
        if crate::corpus::extract_cve_ids(&label).iter().any(|c| cves.contains(c)) {
            return true;
        }
        let related = Self::tokens(&label)
            .filter_map(|t| self.cve_families.get(t))
            .any(|set| set.iter().any(|c| cves.contains(c)));
        related
    }

    /// First execution pattern found in `text`, if any.
    pub fn exec_match(&self, text: &str) -> Option<&str> {
        let lower = text.to_lowercase();
        self.exec_patterns.iter().find(|p| lower.contains(p.as_str())).map(String::as_str)
    }
}
