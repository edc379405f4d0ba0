//! Scanner configuration, read from TOML. Relative paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use pocscan::corpus::{CleanOptions, ScanLimits};
use pocscan::extract::ExtractOptions;
use pocscan::intel::{IntelSettings, Thresholds as IntelThresholds};
use pocscan::{Error, Result};
use serde::{Deserialize, Serialize};

/// Where a corpus keeps its own configuration and support data, when it
/// carries any. Hidden so ingestion does not take it for an owner directory.
pub const CORPUS_CONFIG: &str = ".pocscan/config.toml";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    /// Directory of netset files.
    pub blocklists: Option<PathBuf>,
    /// Recorded intel responses, `<dir>/<source>/<subject>.json`.
    pub fixtures: Option<PathBuf>,
    /// Directory with `hacktools.txt`, `exec_patterns.txt`, `cve_families.csv`.
    pub lexicons: Option<PathBuf>,
    pub nvd_totals: Option<PathBuf>,
    pub cwe_map: Option<PathBuf>,
    pub external_dataset: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub engine_count: u32,
    pub reputation_count: u32,
    pub base64_min_len: usize,
    pub max_depth: u32,
    pub min_match_len: usize,
    pub exact_test_cap: usize,
    pub ioc_cve_count: usize,
    pub cache_ttl_days: u32,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            engine_count: 1,
            reputation_count: 1,
            base64_min_len: 20,
            max_depth: 3,
            min_match_len: 9,
            exact_test_cap: pocscan::similarity::DEFAULT_EXACT_CAP,
            ioc_cve_count: 20,
            cache_ttl_days: 30,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Modes {
    pub originals_only: bool,
    pub upload_enabled: bool,
    pub fixture_only: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Timestamp stamped on verdicts. Left unset, live scans use the clock
    /// and fixture-only scans the Unix epoch.
    pub as_of: Option<DateTime<Utc>>,
    pub paths: Paths,
    pub thresholds: Thresholds,
    pub modes: Modes,
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl Config {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut c: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let p = &mut c.paths;
        for slot in [
            &mut p.corpus,
            &mut p.blocklists,
            &mut p.fixtures,
            &mut p.lexicons,
            &mut p.nvd_totals,
            &mut p.cwe_map,
            &mut p.external_dataset,
        ] {
            resolve(base, slot);
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// An explicit file, else the corpus' own config, else defaults.
    pub fn discover(explicit: Option<&Path>, corpus: Option<&Path>) -> Result<Self> {
        if let Some(p) = explicit {
            return Self::load(p);
        }
        if let Some(root) = corpus {
            let p = root.join(CORPUS_CONFIG);
            if p.is_file() {
                return Self::load(&p);
            }
        }
        Ok(Config::default())
    }

    pub fn decided_at(&self) -> DateTime<Utc> {
        match self.as_of {
            Some(t) => t,
            None if self.modes.fixture_only => DateTime::<Utc>::UNIX_EPOCH,
            None => Utc::now(),
        }
    }

    pub fn extract_options(&self) -> ExtractOptions {
        ExtractOptions {
            base64_min_len: self.thresholds.base64_min_len,
            max_depth: self.thresholds.max_depth,
            ..ExtractOptions::default()
        }
    }

    pub fn clean_options(&self) -> CleanOptions {
        CleanOptions {
            ioc_cve_count: self.thresholds.ioc_cve_count,
        }
    }

    pub fn scan_limits(&self) -> ScanLimits {
        ScanLimits::default()
    }

    pub fn intel_settings(&self) -> IntelSettings {
        IntelSettings {
            thresholds: IntelThresholds {
                engine_count: self.thresholds.engine_count,
                reputation_count: self.thresholds.reputation_count,
            },
            cache_ttl_days: self.thresholds.cache_ttl_days,
            fixture_only: self.modes.fixture_only,
            upload_enabled: self.modes.upload_enabled,
            fixtures_dir: self.paths.fixtures.clone(),
            ..IntelSettings::default()
        }
    }

    /// The configuration as embedded in reports. Paths are shown relative to
    /// the corpus so that reports do not depend on where it is checked out.
    pub fn echo(&self) -> serde_json::Value {
        let mut c = self.clone();
        let root = c.paths.corpus.clone();
        let p = &mut c.paths;
        for slot in [
            &mut p.corpus,
            &mut p.blocklists,
            &mut p.fixtures,
            &mut p.lexicons,
            &mut p.nvd_totals,
            &mut p.cwe_map,
            &mut p.external_dataset,
        ] {
            if let (Some(path), Some(root)) = (slot.as_mut(), root.as_ref()) {
                *path = match path.strip_prefix(root) {
                    Ok(rel) if rel.as_os_str().is_empty() => PathBuf::from("."),
                    Ok(rel) => rel.to_path_buf(),
                    Err(_) => path.clone(),
                };
            }
        }
        serde_json::to_value(&c).unwrap_or(serde_json::Value::Null)
    }
}
