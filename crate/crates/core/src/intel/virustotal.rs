//! Scan-service client speaking the VirusTotal v3 API.

use chrono::{DateTime, TimeZone, Utc};
use serde::Deserialize;
use std::collections::BTreeMap;

use super::{IntelSource, IntelVerdict, RateLimiter, Thresholds};
use crate::transport::{Method, Request, Transport};

pub const SOURCE: &str = "virustotal";
const API_BASE: &str = "https://www.virustotal.com/api/v3";

#[derive(Debug, Default, Deserialize)]
struct Envelope {
    #[serde(default)]
    data: Option<Data>,
}

#[derive(Debug, Default, Deserialize)]
struct Data {
    #[serde(default)]
    attributes: Attributes,
}

#[derive(Debug, Default, Deserialize)]
struct Attributes {
    #[serde(default)]
    last_analysis_stats: Stats,
    #[serde(default)]
    last_analysis_results: BTreeMap<String, EngineResult>,
    #[serde(default)]
    popular_threat_classification: Option<ThreatClassification>,
    #[serde(default)]
    first_submission_date: Option<i64>,
    #[serde(default)]
    last_analysis_date: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
struct Stats {
    #[serde(default)]
    malicious: u32,
}

#[derive(Debug, Default, Deserialize)]
struct EngineResult {
    #[serde(default)]
    category: String,
    #[serde(default)]
    result: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
struct ThreatClassification {
    #[serde(default)]
    suggested_threat_label: Option<String>,
    #[serde(default)]
    popular_threat_category: Vec<Valued>,
    #[serde(default)]
    popular_threat_name: Vec<Valued>,
}

#[derive(Debug, Default, Deserialize)]
struct Valued {
    value: String,
}

fn ts(secs: Option<i64>) -> Option<DateTime<Utc>> {
    Utc.timestamp_opt(secs?, 0).single()
}

/// Turns a response body into a verdict. Shared by live and fixture modes.
pub fn parse_report(subject: &str, body: &[u8], t: Thresholds) -> Option<IntelVerdict> {
    let env: Envelope = serde_json::from_slice(body).ok()?;
    let attrs = env.data?.attributes;
    let mut labels: Vec<String> = attrs
        .last_analysis_results
        .values()
        .filter(|r| r.category == "malicious")
        .filter_map(|r| r.result.clone())
        .collect();
    if let Some(c) = attrs.popular_threat_classification {
        labels.extend(c.suggested_threat_label);
        labels.extend(c.popular_threat_category.into_iter().map(|v| v.value));
        labels.extend(c.popular_threat_name.into_iter().map(|v| v.value));
    }
    let mut v = IntelVerdict::clean(subject, IntelSource::ScanService);
    v.labels = labels;
    v.detection_count = attrs.last_analysis_stats.malicious;
    v.first_seen = ts(attrs.first_submission_date);
    v.last_seen = ts(attrs.last_analysis_date);
    Some(v.decide(t))
}

pub struct ScanServiceClient<T> {
    transport: T,
    api_key: Option<String>,
    limiter: RateLimiter,
    thresholds: Thresholds,
    pub upload_enabled: bool,
}

impl<T: Transport> ScanServiceClient<T> {
    pub fn new(transport: T, api_key: Option<String>, limiter: RateLimiter, thresholds: Thresholds) -> Self {
        ScanServiceClient {
            transport,
            api_key,
            limiter,
            thresholds,
            upload_enabled: false,
        }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    fn lookup(&self, subject: &str, path: String) -> IntelVerdict {
        let mut req = Request::get(SOURCE, subject, format!("{API_BASE}/{path}"));
        if let Some(k) = &self.api_key {
            req = req.header("x-apikey", k);
        }
        if self.transport.is_network() {
            self.limiter.acquire();
        }
        match self.transport.send(&req) {
            Ok(r) if r.is_success() => parse_report(subject, &r.body, self.thresholds).unwrap_or_else(|| {
                log::warn!("{SOURCE}: malformed response for {subject}");
                IntelVerdict::unavailable(subject, IntelSource::ScanService)
            }),
            Ok(r) if r.status == 404 => IntelVerdict::unknown(subject, IntelSource::ScanService),
            Ok(r) => {
                log::warn!("{SOURCE}: status {} for {subject}", r.status);
                IntelVerdict::unavailable(subject, IntelSource::ScanService)
            }
            Err(e) => {
                log::warn!("{SOURCE}: {e}");
                IntelVerdict::unavailable(subject, IntelSource::ScanService)
            }
        }
    }

    pub fn check_ip(&self, ip: &str) -> IntelVerdict {
        self.lookup(ip, format!("ip_addresses/{ip}"))
    }

    pub fn check_hash(&self, sha256: &str) -> IntelVerdict {
        self.lookup(sha256, format!("files/{sha256}"))
    }

    /// Submits a file for analysis. Returns the analysis id, or `None` when
    /// uploads are disabled or the submission failed. The resulting report
    /// becomes visible to later `check_hash` calls.
    pub fn upload(&self, sha256: &str, file_name: &str, bytes: &[u8]) -> Option<String> {
        if !self.upload_enabled {
            return None;
        }
        let boundary = format!("----pocscan{sha256}");
        let mut body = format!(
            "--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"{file_name}\"\r\nContent-Type: application/octet-stream\r\n\r\n"
        )
        .into_bytes();
        body.extend_from_slice(bytes);
        body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
        let mut req = Request::get(SOURCE, sha256, format!("{API_BASE}/files"))
            .header("Content-Type", &format!("multipart/form-data; boundary={boundary}"));
        req.method = Method::Post;
        req.body = Some(body);
        if let Some(k) = &self.api_key {
            req = req.header("x-apikey", k);
        }
        if self.transport.is_network() {
            self.limiter.acquire();
        }
        let resp = self.transport.send(&req).ok().filter(|r| r.is_success())?;
        let v: serde_json::Value = serde_json::from_slice(&resp.body).ok()?;
        v.pointer("/data/id").and_then(|id| id.as_str()).map(str::to_string)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intel::VerdictStatus;
    use crate::transport::{FixtureTransport, RecordingTransport};
    use std::time::Duration;

    const COBALT: &str = r#"{"data":{"id":"x","type":"file","attributes":{
        "last_analysis_stats":{"malicious":45,"undetected":20},
        "last_analysis_results":{"EngA":{"category":"malicious","result":"CobaltStrike"},"EngB":{"category":"undetected","result":null}},
        "popular_threat_classification":{"popular_threat_category":[{"value":"Trojan"}],"popular_threat_name":[{"value":"cobaltstrike"}]},
        "first_submission_date":1600000000}}}"#;

    fn client(dir: &std::path::Path) -> ScanServiceClient<RecordingTransport<FixtureTransport>> {
        ScanServiceClient::new(
            RecordingTransport::new(FixtureTransport::new(dir)),
            None,
            RateLimiter::new(4, Duration::from_secs(60)),
            Thresholds::default(),
        )
    }

    #[test]
    fn known_malicious_hash() {
        let v = parse_report("h", COBALT.as_bytes(), Thresholds::default()).unwrap();
        assert!(v.malicious);
        assert_eq!(v.detection_count, 45);
        assert_eq!(v.labels, vec!["cobaltstrike", "trojan"]);
        assert_eq!(v.first_seen.unwrap().timestamp(), 1600000000);
    }

    #[test]
    fn zero_detections_is_clean() {
        let body = br#"{"data":{"attributes":{"last_analysis_stats":{"malicious":0}}}}"#;
        let v = parse_report("h", body, Thresholds::default()).unwrap();
        assert!(!v.malicious);
        assert_eq!(v.status, VerdictStatus::Known);
    }

    #[test]
    fn unknown_hash_and_no_upload() {
        let dir = tempfile::tempdir().unwrap();
        let c = client(dir.path());
        let h = "ab".repeat(32);
        let v = c.check_hash(&h);
        assert_eq!(v.status, VerdictStatus::Unknown);
        assert!(!v.malicious);
        assert_eq!(c.upload(&h, "x.exe", b"MZ"), None);
        // Upload disabled means nothing was sent for it.
        assert_eq!(c.transport().calls(), 1);
    }

    #[test]
    fn fixture_served_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let f = FixtureTransport::new(dir.path());
        let path = f.path_for(SOURCE, "1.2.3.4");
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, COBALT).unwrap();
        let v = client(dir.path()).check_ip("1.2.3.4");
        assert!(v.malicious);
        assert_eq!(v.subject, "1.2.3.4");
    }
}
