//! Repository search against the GitHub REST API (or recordings of it).

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::Deserialize;
use thiserror::Error;

use super::cve::{extract_cve_ids, CveId};
use super::{RepoId, RepoRecord};
use crate::lang::UNDETECTED;
use crate::transport::{Request, Response, Transport};

pub const SOURCE: &str = "github";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HarvestError {
    /// Transport failure or server error; the same call may succeed later.
    #[error("retriable failure querying {subject}: {message}")]
    Retriable { subject: String, message: String },
    #[error("rate limited; retry after {retry_after_secs}s")]
    RateLimited { retry_after_secs: u64 },
    #[error("unexpected status {status} for {subject}")]
    Unexpected { subject: String, status: u16 },
    #[error("malformed response for {subject}: {message}")]
    Malformed { subject: String, message: String },
}

#[derive(Debug, Deserialize)]
struct SearchPage {
    #[serde(default)]
    items: Vec<ApiRepo>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct ApiOwner {
    login: String,
}

#[derive(Debug, Deserialize)]
pub(crate) struct ApiParent {
    id: u64,
}

#[derive(Debug, Deserialize)]
pub(crate) struct ApiRepo {
    id: u64,
    name: String,
    owner: ApiOwner,
    #[serde(default)]
    pub(crate) description: Option<String>,
    #[serde(default)]
    pub(crate) language: Option<String>,
    #[serde(default)]
    stargazers_count: u64,
    #[serde(default)]
    forks_count: u64,
    created_at: DateTime<Utc>,
    pub(crate) updated_at: DateTime<Utc>,
    pub(crate) pushed_at: DateTime<Utc>,
    #[serde(default)]
    fork: bool,
    #[serde(default)]
    parent: Option<ApiParent>,
}

impl ApiRepo {
    fn into_record(self) -> RepoRecord {
        let description = self.description.unwrap_or_default();
        let mut cve_ids = extract_cve_ids(&self.name);
        cve_ids.extend(extract_cve_ids(&description));
        RepoRecord {
            repo_id: RepoId(self.id.to_string()),
            owner: self.owner.login,
            name: self.name,
            description,
            primary_language: self.language.unwrap_or_else(|| UNDETECTED.to_string()),
            stars: self.stargazers_count,
            forks: self.forks_count,
            created_at: self.created_at,
            updated_at: self.updated_at,
            pushed_at: self.pushed_at,
            is_fork: self.fork,
            parent_id: if self.fork { self.parent.map(|p| RepoId(p.id.to_string())) } else { None },
            cve_ids,
            local_path: None,
        }
    }
}

/// Hosting-API client. Works identically over the network or over a
/// [`FixtureTransport`](crate::transport::FixtureTransport).
pub struct GithubClient<T> {
    transport: T,
    token: Option<String>,
    api_base: String,
    pub per_page: u32,
    pub max_pages: u32,
}

impl<T: Transport> GithubClient<T> {
    pub fn new(transport: T, token: Option<String>) -> Self {
        GithubClient {
            transport,
            token,
            api_base: "https://api.github.com".into(),
            per_page: 100,
            max_pages: 10,
        }
    }

    fn request(&self, subject: &str, path: &str, params: &[(&str, String)]) -> Request {
        let base = format!("{}/{}", self.api_base, path);
        let url = reqwest::Url::parse_with_params(&base, params)
            .map(|u| u.to_string())
            .unwrap_or(base);
        let mut req = Request::get(SOURCE, subject, url)
            .header("Accept", "application/vnd.github+json")
            .header("X-GitHub-Api-Version", "2022-11-28");
        if let Some(tok) = &self.token {
            req = req.header("Authorization", &format!("Bearer {tok}"));
        }
        req
    }

    fn send(&self, req: &Request) -> Result<Response, HarvestError> {
        let resp = self.transport.send(req).map_err(|e| HarvestError::Retriable {
            subject: req.subject.clone(),
            message: e.to_string(),
        })?;
        let limited = resp.status == 429
            || (resp.status == 403 && resp.headers.get("x-ratelimit-remaining").map(String::as_str) == Some("0"));
        if limited {
            let retry_after_secs = resp
                .headers
                .get("retry-after")
                .and_then(|v| v.parse().ok())
                .or_else(|| {
                    let reset: i64 = resp.headers.get("x-ratelimit-reset")?.parse().ok()?;
                    Some((reset - Utc::now().timestamp()).max(0) as u64)
                })
                .unwrap_or(60);
            return Err(HarvestError::RateLimited { retry_after_secs });
        }
        if resp.status >= 500 {
            return Err(HarvestError::Retriable {
                subject: req.subject.clone(),
                message: format!("server status {}", resp.status),
            });
        }
        Ok(resp)
    }

    /// One page of repository search results. A query with no recording
    /// (404) yields an empty page.
    pub fn search_page(&self, query: &str, page: u32) -> Result<Vec<RepoRecord>, HarvestError> {
        let q = format!("{query} in:name,description");
        let subject = format!("q={q}&per_page={}&page={page}", self.per_page);
        let req = self.request(
            &subject,
            "search/repositories",
            &[("q", q.clone()), ("per_page", self.per_page.to_string()), ("page", page.to_string())],
        );
        let resp = self.send(&req)?;
        match resp.status {
            404 | 422 => return Ok(Vec::new()),
            s if !(200..300).contains(&s) => return Err(HarvestError::Unexpected { subject, status: s }),
            _ => {}
        }
        let page: SearchPage = serde_json::from_slice(&resp.body).map_err(|e| HarvestError::Malformed {
            subject: subject.clone(),
            message: e.to_string(),
        })?;
        Ok(page.items.into_iter().map(ApiRepo::into_record).collect())
    }

    /// Full repository object, `None` when it no longer exists. The HTTP
    /// status is returned alongside so callers can tell takedown kinds apart.
    pub(crate) fn repository(&self, owner: &str, name: &str) -> Result<(u16, Option<ApiRepo>), HarvestError> {
        let subject = format!("repos/{owner}/{name}");
        let req = self.request(&subject, &subject, &[]);
        let resp = self.send(&req)?;
        if !resp.is_success() {
            return Ok((resp.status, None));
        }
        let repo = serde_json::from_slice(&resp.body).map_err(|e| HarvestError::Malformed {
            subject,
            message: e.to_string(),
        })?;
        Ok((resp.status, Some(repo)))
    }

    fn parent_of(&self, rec: &RepoRecord) -> Result<Option<RepoId>, HarvestError> {
        let (_, repo) = self.repository(&rec.owner, &rec.name)?;
        Ok(repo.and_then(|r| r.parent).map(|p| RepoId(p.id.to_string())))
    }
}

/// Searches every keyword variant of every CVE id and returns the
/// deduplicated repositories, forks included.
///
/// All queries are issued twice and the results merged, since the search
/// API is known to omit results nondeterministically.
pub fn harvest<T: Transport>(keywords: &[CveId], client: &GithubClient<T>) -> Result<Vec<RepoRecord>, HarvestError> {
    let mut found: BTreeMap<RepoId, RepoRecord> = BTreeMap::new();
    for _pass in 0..2 {
        for id in keywords {
            for variant in id.search_variants() {
                for page in 1..=client.max_pages {
                    let items = client.search_page(&variant, page)?;
                    let n = items.len();
                    for rec in items {
                        found.entry(rec.repo_id.clone()).or_insert(rec);
                    }
                    if n < client.per_page as usize {
                        break;
                    }
                }
            }
        }
    }
    for rec in found.values_mut() {
        if rec.is_fork && rec.parent_id.is_none() {
            rec.parent_id = client.parent_of(rec)?;
        }
    }
    Ok(found.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::{FixtureTransport, RecordingTransport, TransportError};
    use std::fs;
    use std::path::Path;

    fn item(id: u64, owner: &str, name: &str, fork: bool) -> serde_json::Value {
        serde_json::json!({
            "id": id, "name": name, "owner": {"login": owner},
            "description": "Log4Shell PoC", "language": "Java",
            "stargazers_count": id, "forks_count": 0, "fork": fork,
            "created_at": "2021-12-10T00:00:00Z", "updated_at": "2021-12-12T00:00:00Z",
            "pushed_at": "2021-12-11T00:00:00Z"
        })
    }

    fn write(dir: &Path, subject: &str, body: serde_json::Value) {
        let t = FixtureTransport::new(dir);
        let p = t.path_for(SOURCE, subject);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, serde_json::to_vec(&body).unwrap()).unwrap();
    }

    fn search_subject(variant: &str) -> String {
        format!("q={variant} in:name,description&per_page=100&page=1")
    }

    // Three recorded search responses over overlapping repositories:
    // canonical -> {A, B}, spaced -> {B, C}, colon -> {A, C}. C is a fork of A.
    fn log4shell_fixtures(dir: &Path) {
        let a = item(1, "alice", "CVE-2021-44228-poc", false);
        let b = item(2, "bob", "log4j-rce", false);
        let c = item(3, "carol", "CVE-2021-44228-poc", true);
        write(dir, &search_subject("CVE-2021-44228"), serde_json::json!({"items": [a, b]}));
        write(dir, &search_subject("CVE 2021 44228"), serde_json::json!({"items": [b, c]}));
        write(dir, &search_subject("CVE:2021-44228"), serde_json::json!({"items": [a, c]}));
        let mut full_c = item(3, "carol", "CVE-2021-44228-poc", true);
        full_c["parent"] = serde_json::json!({"id": 1});
        write(dir, "repos/carol/CVE-2021-44228-poc", full_c);
    }

    #[test]
    fn harvests_three_records_from_fixtures() {
        let dir = tempfile::tempdir().unwrap();
        log4shell_fixtures(dir.path());
        let client = GithubClient::new(FixtureTransport::new(dir.path()), None);
        let id: CveId = "CVE-2021-44228".parse().unwrap();
        let recs = harvest(&[id], &client).unwrap();
        let ids: Vec<_> = recs.iter().map(|r| r.repo_id.0.as_str()).collect();
        assert_eq!(ids, ["1", "2", "3"]);
        assert_eq!(recs[2].parent_id, Some(RepoId("1".into())));
        assert!(recs[2].is_fork);
        assert_eq!(recs[0].parent_id, None);
        // "log4j-rce" with a description lacking the id carries no CVE.
        assert!(recs[1].cve_ids.is_empty());
        assert_eq!(recs[0].cve_ids.iter().next().unwrap().to_string(), "CVE-2021-44228");
    }

    #[test]
    fn harvest_is_idempotent_and_requeries() {
        let dir = tempfile::tempdir().unwrap();
        log4shell_fixtures(dir.path());
        let transport = RecordingTransport::new(FixtureTransport::new(dir.path()));
        let client = GithubClient::new(transport, None);
        let id: CveId = "CVE-2021-44228".parse().unwrap();
        let first = harvest(&[id], &client).unwrap();
        let searches = client.transport.calls();
        // 5 variants, two passes, one page each, plus one parent lookup.
        assert_eq!(searches, 11);
        let second = harvest(&[id], &client).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn empty_keywords_empty_result() {
        let client = GithubClient::new(crate::transport::OfflineTransport, None);
        assert!(harvest(&[], &client).unwrap().is_empty());
    }

    struct Canned(Result<Response, TransportError>);
    impl Transport for Canned {
        fn send(&self, _: &Request) -> Result<Response, TransportError> {
            self.0.clone()
        }
        fn is_network(&self) -> bool {
            false
        }
    }

    #[test]
    fn rate_limit_and_transport_errors() {
        let id: CveId = "CVE-2021-44228".parse().unwrap();
        let mut limited = Response::new(403, Vec::new());
        limited.headers.insert("x-ratelimit-remaining".into(), "0".into());
        limited.headers.insert("retry-after".into(), "30".into());
        let client = GithubClient::new(Canned(Ok(limited)), None);
        assert_eq!(harvest(&[id], &client), Err(HarvestError::RateLimited { retry_after_secs: 30 }));

        let client = GithubClient::new(Canned(Err(TransportError::Network("reset".into()))), None);
        assert!(matches!(harvest(&[id], &client), Err(HarvestError::Retriable { .. })));

        let client = GithubClient::new(Canned(Ok(Response::new(502, Vec::new()))), None);
        assert!(matches!(harvest(&[id], &client), Err(HarvestError::Retriable { .. })));
    }
}
