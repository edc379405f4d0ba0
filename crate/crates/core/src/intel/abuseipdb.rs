//! Reputation-db client speaking the AbuseIPDB v2 API.

use chrono::{DateTime, Utc};
use serde::Deserialize;

use super::{IntelSource, IntelVerdict, RateLimiter, Thresholds};
use crate::transport::{Request, Transport};

pub const SOURCE: &str = "abuseipdb";
const API_BASE: &str = "https://api.abuseipdb.com/api/v2";

#[derive(Debug, Deserialize)]
struct Envelope {
    data: Data,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Data {
    #[serde(default)]
    total_reports: u32,
    #[serde(default)]
    last_reported_at: Option<DateTime<Utc>>,
    #[serde(default)]
    usage_type: Option<String>,
    #[serde(default)]
    is_tor: bool,
}

pub fn parse_report(subject: &str, body: &[u8], t: Thresholds) -> Option<IntelVerdict> {
    let env: Envelope = serde_json::from_slice(body).ok()?;
    let mut v = IntelVerdict::clean(subject, IntelSource::ReputationDb);
    v.report_count = env.data.total_reports;
    v.last_seen = env.data.last_reported_at;
    v.labels.extend(env.data.usage_type);
    if env.data.is_tor {
        v.labels.push("tor".into());
    }
    Some(v.decide(t))
}

pub struct ReputationClient<T> {
    transport: T,
    api_key: Option<String>,
    limiter: RateLimiter,
    thresholds: Thresholds,
    /// Lookback window sent with each query.
    pub max_age_days: u32,
}

impl<T: Transport> ReputationClient<T> {
    pub fn new(transport: T, api_key: Option<String>, limiter: RateLimiter, thresholds: Thresholds) -> Self {
        ReputationClient {
            transport,
            api_key,
            limiter,
            thresholds,
            max_age_days: 365,
        }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn check_ip(&self, ip: &str) -> IntelVerdict {
        let url = format!("{API_BASE}/check?ipAddress={ip}&maxAgeInDays={}", self.max_age_days);
        let mut req = Request::get(SOURCE, ip, url).header("Accept", "application/json");
        if let Some(k) = &self.api_key {
            req = req.header("Key", k);
        }
        if self.transport.is_network() {
            self.limiter.acquire();
        }
        match self.transport.send(&req) {
            Ok(r) if r.is_success() => parse_report(ip, &r.body, self.thresholds).unwrap_or_else(|| {
                log::warn!("{SOURCE}: malformed response for {ip}");
                IntelVerdict::unavailable(ip, IntelSource::ReputationDb)
            }),
            Ok(r) if r.status == 404 => IntelVerdict::unknown(ip, IntelSource::ReputationDb),
            Ok(r) => {
                log::warn!("{SOURCE}: status {} for {ip}", r.status);
                IntelVerdict::unavailable(ip, IntelSource::ReputationDb)
            }
            Err(e) => {
                log::warn!("{SOURCE}: {e}");
                IntelVerdict::unavailable(ip, IntelSource::ReputationDb)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intel::VerdictStatus;
    use crate::transport::OfflineTransport;
    use std::time::Duration;

    #[test]
    fn twelve_reports_is_malicious() {
        let body = br#"{"data":{"ipAddress":"54.184.20.69","abuseConfidenceScore":7,"totalReports":12,
            "lastReportedAt":"2017-06-01T10:00:00+00:00","usageType":"Data Center/Web Hosting/Transit"}}"#;
        let v = parse_report("54.184.20.69", body, Thresholds::default()).unwrap();
        assert!(v.malicious);
        assert_eq!(v.report_count, 12);
        assert_eq!(v.labels, vec!["data center/web hosting/transit"]);
    }

    #[test]
    fn no_reports_is_clean() {
        let v = parse_report("8.8.8.8", br#"{"data":{"totalReports":0}}"#, Thresholds::default()).unwrap();
        assert!(!v.malicious);
    }

    #[test]
    fn outage_is_unavailable_not_clean() {
        let c = ReputationClient::new(OfflineTransport, None, RateLimiter::new(1, Duration::from_secs(1)), Thresholds::default());
        let v = c.check_ip("8.8.8.8");
        assert_eq!(v.status, VerdictStatus::Unavailable);
    }
}
