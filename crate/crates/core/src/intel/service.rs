//! Front door to all intel sources: mode selection, caching and health.

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::Utc;
use serde::{Deserialize, Serialize};

use super::abuseipdb::ReputationClient;
use super::virustotal::ScanServiceClient;
use super::{IntelSource, IntelVerdict, IpSet, RateLimiter, Thresholds, VerdictCache};
use crate::error::Result;
use crate::transport::{FixtureTransport, OfflineTransport, Transport};

pub const SCAN_SERVICE_KEY_VARS: [&str; 2] = ["VIRUSTOTAL_API_KEY", "VT_API_KEY"];
pub const REPUTATION_KEY_VAR: &str = "ABUSEIPDB_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceMode {
    Local,
    Live,
    Fixture,
    Offline,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceHealth {
    pub source: IntelSource,
    pub mode: SourceMode,
    /// Distinct subjects this source could not answer for.
    pub unavailable: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntelSettings {
    pub thresholds: Thresholds,
    pub cache_ttl_days: u32,
    pub fixture_only: bool,
    pub upload_enabled: bool,
    pub fixtures_dir: Option<PathBuf>,
    /// Requests per minute.
    pub scan_service_rate: usize,
    pub reputation_rate: usize,
}

impl Default for IntelSettings {
    fn default() -> Self {
        IntelSettings {
            thresholds: Thresholds::default(),
            cache_ttl_days: 30,
            fixture_only: false,
            upload_enabled: false,
            fixtures_dir: None,
            scan_service_rate: 4,
            reputation_rate: 60,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Credentials {
    pub scan_service: Option<String>,
    pub reputation: Option<String>,
}

impl Credentials {
    pub fn from_env() -> Self {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        Credentials {
            scan_service: SCAN_SERVICE_KEY_VARS.iter().find_map(|k| var(k)),
            reputation: var(REPUTATION_KEY_VAR),
        }
    }
}

type DynTransport = Arc<dyn Transport>;

pub struct IntelService {
    blocklist: IpSet,
    scan: ScanServiceClient<DynTransport>,
    reputation: ReputationClient<DynTransport>,
    modes: BTreeMap<IntelSource, SourceMode>,
    cache: VerdictCache,
    unavailable: Mutex<BTreeMap<IntelSource, BTreeSet<String>>>,
}

fn hermetic(settings: &IntelSettings) -> (DynTransport, SourceMode) {
    match &settings.fixtures_dir {
        Some(d) => (Arc::new(FixtureTransport::new(d)), SourceMode::Fixture),
        None => (Arc::new(OfflineTransport), SourceMode::Offline),
    }
}

impl IntelService {
    /// Picks a transport per source. `fixture_only` or a missing credential
    /// selects recorded fixtures; `live` is never called in that case.
    pub fn new(blocklist: IpSet, settings: &IntelSettings, creds: &Credentials, live: DynTransport) -> Self {
        let pick = |key: &Option<String>, name: &str| -> (DynTransport, SourceMode, Option<String>) {
            if settings.fixture_only {
                let (t, m) = hermetic(settings);
                return (t, m, None);
            }
            match key {
                Some(k) => (live.clone(), SourceMode::Live, Some(k.clone())),
                None => {
                    log::warn!("no credentials for {name}; falling back to recorded fixtures");
                    let (t, m) = hermetic(settings);
                    (t, m, None)
                }
            }
        };
        let (st, sm, sk) = pick(&creds.scan_service, "scan service");
        let (rt, rm, rk) = pick(&creds.reputation, "reputation db");
        Self::with_transports(blocklist, settings, (st, sm, sk), (rt, rm, rk))
    }

    pub fn with_transports(
        blocklist: IpSet,
        settings: &IntelSettings,
        scan: (DynTransport, SourceMode, Option<String>),
        reputation: (DynTransport, SourceMode, Option<String>),
    ) -> Self {
        let minute = Duration::from_secs(60);
        let mut scan_client = ScanServiceClient::new(
            scan.0,
            scan.2,
            RateLimiter::new(settings.scan_service_rate.max(1), minute),
            settings.thresholds,
        );
        scan_client.upload_enabled = settings.upload_enabled && scan.1 == SourceMode::Live;
        let rep_client = ReputationClient::new(
            reputation.0,
            reputation.2,
            RateLimiter::new(settings.reputation_rate.max(1), minute),
            settings.thresholds,
        );
        let modes = BTreeMap::from([
            (IntelSource::Blocklist, SourceMode::Local),
            (IntelSource::ScanService, scan.1),
            (IntelSource::ReputationDb, reputation.1),
        ]);
        // Recorded evidence never expires.
        let any_live = modes.values().any(|m| *m == SourceMode::Live);
        let ttl = any_live.then(|| chrono::Duration::days(settings.cache_ttl_days as i64));
        IntelService {
            blocklist,
            scan: scan_client,
            reputation: rep_client,
            modes,
            cache: VerdictCache::new(ttl),
            unavailable: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn blocklist(&self) -> &IpSet {
        &self.blocklist
    }

    pub fn mode(&self, source: IntelSource) -> SourceMode {
        self.modes[&source]
    }

    /// True when no source can reach the network.
    pub fn is_hermetic(&self) -> bool {
        !self.modes.values().any(|m| *m == SourceMode::Live)
    }

    fn cached(&self, subject: &str, source: IntelSource, fetch: impl FnOnce() -> IntelVerdict) -> IntelVerdict {
        if let Some(v) = self.cache.get(subject, source, Utc::now()) {
            return v;
        }
        let v = fetch();
        if v.is_unavailable() {
            self.unavailable
                .lock()
                .expect("health lock")
                .entry(source)
                .or_default()
                .insert(subject.to_string());
        }
        self.cache.put(&v, Utc::now());
        v
    }

    /// Blocklist, scan-service and reputation-db verdicts, in that order.
    pub fn check_ip(&self, ip: Ipv4Addr) -> Vec<IntelVerdict> {
        let s = ip.to_string();
        vec![
            IntelVerdict::blocklist(&s, self.blocklist.contains(ip)),
            self.cached(&s, IntelSource::ScanService, || self.scan.check_ip(&s)),
            self.cached(&s, IntelSource::ReputationDb, || self.reputation.check_ip(&s)),
        ]
    }

    pub fn check_hash(&self, sha256: &str) -> IntelVerdict {
        let h = sha256.to_ascii_lowercase();
        self.cached(&h, IntelSource::ScanService, || self.scan.check_hash(&h))
    }

    /// Like `check_hash`, but submits unknown files when uploads are enabled.
    /// The verdict stays unknown until the analysis completes.
    pub fn check_hash_or_upload(&self, sha256: &str, file: &Path) -> IntelVerdict {
        let v = self.check_hash(sha256);
        if v.status == super::VerdictStatus::Unknown && self.scan.upload_enabled {
            if let Ok(bytes) = std::fs::read(file) {
                let name = file.file_name().and_then(|n| n.to_str()).unwrap_or("sample");
                if let Some(id) = self.scan.upload(sha256, name, &bytes) {
                    log::info!("uploaded {sha256} as analysis {id}");
                }
            }
        }
        v
    }

    pub fn health(&self) -> Vec<SourceHealth> {
        let un = self.unavailable.lock().expect("health lock");
        self.modes
            .iter()
            .map(|(s, m)| SourceHealth {
                source: *s,
                mode: *m,
                unavailable: un.get(s).map_or(0, BTreeSet::len),
            })
            .collect()
    }

    pub fn load_cache(&self, path: &Path) -> Result<()> {
        self.cache.load(path)
    }

    pub fn save_cache(&self, path: &Path) -> Result<()> {
        self.cache.save(path)
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }
}
