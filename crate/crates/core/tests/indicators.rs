use std::net::Ipv4Addr;
use std::path::Path;
use std::sync::Arc;

use pocscan::corpus::{ingest_local, ScanLimits};
use pocscan::extract::{extract_base64_payloads, extract_ips, filter_public, ExtractOptions};
use pocscan::intel::service::Credentials;
use pocscan::intel::{IntelService, IntelSettings, IpSet, VerdictStatus};
use pocscan::transport::{RecordingTransport, Request, Response, Transport, TransportError};

const POC: &str = r#"# CVE-2021-41773 path traversal check
# example: python poc.py 192.168.1.10
import requests, base64
C2 = "45.9.148.3"
LAN = "10.1.2.3"
cb = base64.b64decode("aHR0cDovLzQ1LjkuMTQ4LjMvYS5zaA==")
"#;

#[test]
fn ingest_then_extract() {
    let root = tempfile::tempdir().unwrap();
    let repo = root.path().join("zed/CVE-2021-41773-poc");
    std::fs::create_dir_all(&repo).unwrap();
    std::fs::write(repo.join("poc.py"), POC).unwrap();

    let out = ingest_local(root.path(), &ScanLimits::default()).unwrap();
    assert_eq!(out.records.len(), 1);
    let r = &out.records[0];
    assert_eq!(r.repo_id.0, "zed/CVE-2021-41773-poc");
    assert_eq!(r.primary_language, "Python");
    assert_eq!(r.cve_ids.iter().map(|c| c.to_string()).collect::<Vec<_>>(), ["CVE-2021-41773"]);

    let candidates = extract_ips(POC, Path::new("poc.py"));
    assert_eq!(candidates.len(), 3);
    let kept = filter_public(&candidates);
    let literals: Vec<&str> = kept.kept.iter().map(|c| c.literal.as_str()).collect();
    assert_eq!(literals, ["45.9.148.3"]);
    let reasons: Vec<&str> = kept.review.iter().map(|e| e.reason.as_str()).collect();
    assert_eq!(reasons, ["private", "private"]);

    let payloads = extract_base64_payloads(POC, Path::new("poc.py"), &ExtractOptions::default());
    assert_eq!(payloads.len(), 1);
    assert_eq!(payloads[0].embedded_urls, ["http://45.9.148.3/a.sh"]);

    let mut bl = IpSet::new("test");
    assert_eq!(bl.extend_from_text("# comment\n45.9.148.0/24\n1.1.1.1\nnot-an-ip\n"), 1);
    assert_eq!(bl.len(), 2);
    assert!(bl.contains(Ipv4Addr::new(45, 9, 148, 3)));
    assert!(!bl.contains(Ipv4Addr::new(45, 9, 149, 3)));
}

struct NotFound;

impl Transport for NotFound {
    fn send(&self, _req: &Request) -> Result<Response, TransportError> {
        Ok(Response::new(404, Vec::new()))
    }

    fn is_network(&self) -> bool {
        true
    }
}

#[test]
fn unknown_binary_is_not_uploaded_by_default() {
    let net = Arc::new(RecordingTransport::new(NotFound));
    let creds = Credentials {
        scan_service: Some("k".into()),
        reputation: Some("k".into()),
    };
    let svc = IntelService::new(IpSet::new("empty"), &IntelSettings::default(), &creds, net.clone());
    let file = tempfile::NamedTempFile::new().unwrap();
    let v = svc.check_hash_or_upload(&"0".repeat(64), file.path());
    assert_eq!(v.status, VerdictStatus::Unknown);
    assert_eq!(net.calls(), 1, "only the lookup may be sent");
}
