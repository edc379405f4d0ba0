use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use chrono::{TimeZone, Utc};
use pocscan::corpus::{read_manifest, CorpusSnapshot};
use pocscan::intel::service::Credentials;
use pocscan::transport::{RecordingTransport, Request, Response, Transport, TransportError};
use pocscan_cli::pipeline::{MANIFEST, REPORT};
use pocscan_cli::{Config, Pipeline, Stage};

fn seeded() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/seeded")
}

fn config(fixture_only: bool) -> Config {
    let root = seeded();
    let mut c = Config::discover(None, Some(&root)).unwrap();
    c.paths.corpus = Some(root);
    c.modes.fixture_only = fixture_only;
    c
}

/// Stands in for the internet: claims to be a network transport and fails.
struct FakeNetwork;

impl Transport for FakeNetwork {
    fn send(&self, _req: &Request) -> Result<Response, TransportError> {
        Ok(Response::new(500, Vec::new()))
    }

    fn is_network(&self) -> bool {
        true
    }
}

fn keys() -> Credentials {
    Credentials {
        scan_service: Some("vt-key".into()),
        reputation: Some("abuse-key".into()),
    }
}

fn malicious(p: &Pipeline) -> Vec<String> {
    p.load_report().unwrap().malicious_repos.iter().map(|r| r.0.clone()).collect()
}

#[test]
fn fixture_only_sends_nothing_even_with_keys() {
    let work = tempfile::tempdir().unwrap();
    let net = Arc::new(RecordingTransport::new(FakeNetwork));
    let p = Pipeline::new(config(true), work.path()).with_live_transport(net.clone(), keys());
    let report = p.run(false).unwrap();
    assert_eq!(net.calls(), 0, "{:?}", net.requests());
    assert_eq!(report.malicious_repos.len(), 4);
}

#[test]
fn missing_keys_fall_back_to_fixtures() {
    let work = tempfile::tempdir().unwrap();
    let net = Arc::new(RecordingTransport::new(FakeNetwork));
    let p = Pipeline::new(config(false), work.path()).with_live_transport(net.clone(), Credentials::default());
    p.run(false).unwrap();
    assert_eq!(net.calls(), 0);
    assert_eq!(malicious(&p).len(), 4);
    // Nothing learned offline is cached as if it came from the services.
    assert!(!p.path(pocscan_cli::pipeline::INTEL_CACHE).exists());
}

#[test]
fn staged_run_matches_full_run() {
    let full = tempfile::tempdir().unwrap();
    let staged = tempfile::tempdir().unwrap();
    Pipeline::new(config(true), full.path()).run(false).unwrap();
    let p = Pipeline::new(config(true), staged.path());
    for s in Stage::ALL {
        p.run_stage(s).unwrap();
    }
    let a = std::fs::read(full.path().join(REPORT)).unwrap();
    let b = std::fs::read(staged.path().join(REPORT)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn later_stage_needs_earlier_outputs() {
    let work = tempfile::tempdir().unwrap();
    let p = Pipeline::new(config(true), work.path());
    assert!(p.run_stage(Stage::Verdict).is_err());
}

#[test]
fn resume_skips_finished_stages() {
    let work = tempfile::tempdir().unwrap();
    let p = Pipeline::new(config(true), work.path());
    p.run(false).unwrap();
    let before = std::fs::read(p.path(REPORT)).unwrap();
    let manifest_time = std::fs::metadata(p.path(MANIFEST)).unwrap().modified().unwrap();
    std::fs::remove_file(p.path(REPORT)).unwrap();
    std::thread::sleep(std::time::Duration::from_millis(20));
    p.run(true).unwrap();
    assert_eq!(std::fs::read(p.path(REPORT)).unwrap(), before);
    assert_eq!(std::fs::metadata(p.path(MANIFEST)).unwrap().modified().unwrap(), manifest_time);
}

fn pocscan(args: &[&str], work: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pocscan"))
        .arg("--work")
        .arg(work)
        .args(args)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn empty_corpus_exits_clean() {
    let corpus = tempfile::tempdir().unwrap();
    let work = tempfile::tempdir().unwrap();
    let (code, out) = pocscan(&["scan", "--fixture-only", "--corpus", corpus.path().to_str().unwrap()], work.path());
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("scanned 0 repositories: 0 malicious"), "{out}");
}

#[test]
fn usage_errors_exit_one() {
    let work = tempfile::tempdir().unwrap();
    assert_eq!(pocscan(&["no-such-command"], work.path()).0, 1);
    assert_eq!(pocscan(&["report", "--format", "pdf"], work.path()).0, 1);
    assert_eq!(pocscan(&["--help"], work.path()).0, 0);
}

#[test]
fn report_command_rerenders_saved_report() {
    let work = tempfile::tempdir().unwrap();
    Pipeline::new(config(true), work.path()).run(false).unwrap();
    let (code, md) = pocscan(&["report", "--format", "markdown"], work.path());
    assert_eq!(code, 2);
    assert_eq!(md.as_bytes(), std::fs::read(work.path().join("report.md")).unwrap());
}

#[test]
fn identical_snapshots_are_unchanged() {
    let work = tempfile::tempdir().unwrap();
    let p = Pipeline::new(config(true), work.path());
    p.run_stage(Stage::Ingest).unwrap();
    let records = read_manifest(&p.path(MANIFEST)).unwrap();
    let snap = CorpusSnapshot::from_records(&records, Utc.with_ymd_and_hms(2022, 6, 1, 0, 0, 0).unwrap());
    let (a, b) = (work.path().join("a.json"), work.path().join("b.json"));
    snap.save(&a).unwrap();
    snap.save(&b).unwrap();
    let (code, out) = pocscan(&["diff", a.to_str().unwrap(), b.to_str().unwrap()], work.path());
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 12);
    assert!(out.lines().all(|l| l.ends_with("\tUnchanged")), "{out}");
}
