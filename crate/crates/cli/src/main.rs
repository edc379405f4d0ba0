use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use pocscan::corpus::harvest::GithubClient;
use pocscan::corpus::snapshot::status_counts;
use pocscan::corpus::{diff_snapshots, extract_cve_ids, CorpusSnapshot, FileInventory, RepoId};
use pocscan::report::{emit_distributions, render, Format, ScanReport, EXIT_CLEAN, EXIT_ERROR};
use pocscan::transport::{FixtureTransport, HttpTransport, OfflineTransport, Transport};
use pocscan::{Error, Result};
use pocscan_cli::pipeline::{INVENTORIES, REPORT};
use pocscan_cli::similarity::{all_pairs, compare, token_streams};
use pocscan_cli::{Config, Pipeline, Stage};

const GITHUB_TOKEN_VAR: &str = "GITHUB_TOKEN";

#[derive(Parser)]
#[command(name = "pocscan", version, about = "Scan CVE proof-of-concept repositories for malicious indicators")]
struct Cli {
    /// Config file (TOML). Defaults to <corpus>/.pocscan/config.toml when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for intermediate and output files.
    #[arg(long, global = true, default_value = "pocscan-work")]
    work: PathBuf,
    /// More logging (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate and clean a local corpus.
    Ingest {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Search the hosting API for PoC repositories, or snapshot a manifest.
    Harvest {
        /// CVE ids to search for.
        #[arg(long = "cve")]
        cves: Vec<String>,
        /// File with CVE ids anywhere in its text.
        #[arg(long)]
        cve_file: Option<PathBuf>,
        /// Re-query the repositories of this manifest instead of searching.
        #[arg(long)]
        snapshot_of: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        fixture_only: bool,
        /// Recorded API responses.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Full pipeline: ingest, extract, intel, verdict, report.
    Scan {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Use recorded intel only; never touch the network.
        #[arg(long)]
        fixture_only: bool,
        /// Skip stages whose outputs already exist.
        #[arg(long)]
        resume: bool,
        /// Run only this stage (ingest, extract, intel, verdict, report).
        #[arg(long)]
        stage: Option<String>,
    },
    /// Threat-intelligence operations.
    Intel {
        #[command(subcommand)]
        command: IntelCommand,
    },
    /// Pairwise code similarity and the tests between categories.
    Similarity {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip parent/fork pairs.
        #[arg(long)]
        originals_only: bool,
    },
    /// Summary tables and distribution data from a finished scan.
    Stats {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a saved report.
    Report {
        /// Defaults to report.json in the work directory.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "markdown")]
        format: String,
        /// Output directory; single-file formats go to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two corpus snapshots.
    Diff { old: PathBuf, new: PathBuf },
}

#[derive(Subcommand)]
enum IntelCommand {
    /// Query every indicator of the corpus and persist verdicts and cache.
    Sync {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        fixture_only: bool,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_out(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(&path, bytes).map_err(io_err(&path))
}

fn load_config(cli: &Cli, corpus: Option<&PathBuf>, fixture_only: bool) -> Result<Config> {
    let root = corpus.cloned();
    let mut config = Config::discover(cli.config.as_deref(), root.as_deref())?;
    if let Some(r) = root {
        config.paths.corpus = Some(r);
    }
    config.modes.fixture_only |= fixture_only;
    Ok(config)
}

fn print_scan(report: &ScanReport, work: &Path) {
    let total = report.summary.total();
    println!("scanned {} repositories: {} malicious", total.repos, total.malicious);
    for id in &report.malicious_repos {
        println!("malicious\t{id}");
    }
    for h in &report.intel_health {
        if h.unavailable > 0 {
            eprintln!("warning: {} unavailable for {} subjects", h.source.label(), h.unavailable);
        }
    }
    println!("report: {}", work.join(REPORT).display());
}

fn scan(cli: &Cli, corpus: Option<&PathBuf>, fixture_only: bool, resume: bool, stage: Option<&str>) -> Result<i32> {
    let config = load_config(cli, corpus, fixture_only)?;
    let p = Pipeline::new(config, &cli.work);
    if let Some(s) = stage {
        let s: Stage = s.parse()?;
        p.run_stage(s)?;
        if s != Stage::Report {
            return Ok(EXIT_CLEAN);
        }
        let report = p.load_report()?;
        print_scan(&report, &cli.work);
        return Ok(report.exit_code());
    }
    let report = p.run(resume)?;
    print_scan(&report, &cli.work);
    Ok(report.exit_code())
}

fn harvest_cmd(
    cves: &[String],
    cve_file: Option<&Path>,
    snapshot_of: Option<&Path>,
    out: &Path,
    fixture_only: bool,
    fixtures: Option<&Path>,
) -> Result<i32> {
    let token = std::env::var(GITHUB_TOKEN_VAR).ok().filter(|t| !t.is_empty());
    let transport: Arc<dyn Transport> = match (&token, fixture_only) {
        (Some(_), false) => Arc::new(HttpTransport::new(Duration::from_secs(30)).map_err(|e| Error::Config(e.to_string()))?),
        _ => {
            if !fixture_only {
                log::warn!("{GITHUB_TOKEN_VAR} is not set; using recorded fixtures instead of the network");
                eprintln!("WARNING: {GITHUB_TOKEN_VAR} is not set; harvesting from recorded fixtures only");
            }
            match fixtures {
                Some(d) => Arc::new(FixtureTransport::new(d)),
                None => Arc::new(OfflineTransport),
            }
        }
    };
    let client = GithubClient::new(transport, if fixture_only { None } else { token });
    if let Some(manifest) = snapshot_of {
        let records = pocscan::corpus::read_manifest(manifest)?;
        let snap = pocscan::corpus::snapshot::take_snapshot(&records, &client, chrono::Utc::now())?;
        snap.save(out)?;
        println!("snapshot of {} repositories written to {}", snap.records.len(), out.display());
        return Ok(EXIT_CLEAN);
    }
    let mut ids: BTreeSet<_> = cves.iter().flat_map(|c| extract_cve_ids(c)).collect();
    if let Some(f) = cve_file {
        ids.extend(extract_cve_ids(&std::fs::read_to_string(f).map_err(io_err(f))?));
    }
    if ids.is_empty() {
        return Err(Error::Usage("no CVE ids given (use --cve or --cve-file)".into()));
    }
    let ids: Vec<_> = ids.into_iter().collect();
    let records = pocscan::corpus::harvest::harvest(&ids, &client)?;
    pocscan::jsonl::write(out, &records)?;
    println!("{} repositories written to {}", records.len(), out.display());
    Ok(EXIT_CLEAN)
}

fn similarity_cmd(cli: &Cli, corpus: Option<&PathBuf>, out: Option<&PathBuf>, originals_only: bool) -> Result<i32> {
    let config = load_config(cli, corpus, false)?;
    let root = config
        .paths
        .corpus
        .clone()
        .ok_or_else(|| Error::Usage("no corpus given (use --corpus)".into()))?;
    let p = Pipeline::new(config.clone(), &cli.work);
    let analyses = p.analyses()?;
    let inv_path = cli.work.join(INVENTORIES);
    let inventories: BTreeMap<RepoId, FileInventory> =
        serde_json::from_slice(&std::fs::read(&inv_path).map_err(io_err(&inv_path))?)?;
    let records: Vec<_> = analyses.iter().map(|a| a.record.clone()).collect();
    let verdicts: Vec<_> = analyses.iter().map(|a| a.verdict.clone()).collect();
    let malicious: BTreeSet<RepoId> = verdicts.iter().filter(|v| v.malicious).map(|v| v.repo_id.clone()).collect();
    let streams = token_streams(&root, &records, &inventories);
    let pairs = all_pairs(
        &records,
        &streams,
        &malicious,
        config.thresholds.min_match_len,
        originals_only || config.modes.originals_only,
    );
    let out = out.cloned().unwrap_or_else(|| cli.work.join("similarity"));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["repo_a", "repo_b", "language", "relation", "category", "score"])?;
    for pair in &pairs {
        let relation = serde_json::to_value(pair.relation)?;
        w.write_record([
            pair.repo_a.0.as_str(),
            pair.repo_b.0.as_str(),
            pair.language.as_str(),
            relation.as_str().unwrap_or_default(),
            pair.category.as_str(),
            &pair.score.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: out.join("pairs.csv"),
        source: e.into_error(),
    })?;
    write_out(&out, "pairs.csv", &bytes)?;
    for (cat, scores) in pocscan::similarity::scores_by_category(&pairs) {
        let text: String = scores.iter().map(|s| format!("{s}\n")).collect();
        write_out(&out, &format!("samples/{cat}.txt"), text.as_bytes())?;
    }
    let comparisons = compare(&pairs, config.thresholds.exact_test_cap)?;
    let mut json = serde_json::to_vec_pretty(&serde_json::to_value(&comparisons)?)?;
    json.push(b'\n');
    write_out(&out, "mwu.json", &json)?;
    for (name, bytes) in emit_distributions(&records, &verdicts, &pairs)? {
        write_out(&out, &name, &bytes)?;
    }
    println!("{} pairs", pairs.len());
    for c in &comparisons {
        println!(
            "{} vs {}: median {:.2} vs {:.2}, U={} p={:.4} ({:?})",
            c.a, c.b, c.median_a, c.median_b, c.test.u_a, c.test.p, c.test.method
        );
    }
    Ok(EXIT_CLEAN)
}

fn stats_cmd(cli: &Cli, out: Option<&PathBuf>) -> Result<i32> {
    let config = load_config(cli, None, false)?;
    let p = Pipeline::new(config, &cli.work);
    let report = p.build_report()?;
    let out = out.cloned().unwrap_or_else(|| cli.work.join("stats"));
    for (name, bytes) in render(&report, Format::Csv)? {
        write_out(&out, &name, &bytes)?;
    }
    let records: Vec<_> = p.analyses()?.into_iter().map(|a| a.record).collect();
    for (name, bytes) in emit_distributions(&records, &report.verdicts, &[])? {
        write_out(&out, &name, &bytes)?;
    }
    for t in pocscan::report::tables(&report) {
        println!("{}", t.title);
        println!("  {}", t.headers.join(" | "));
        for row in &t.rows {
            println!("  {}", row.join(" | "));
        }
        println!();
    }
    Ok(EXIT_CLEAN)
}

fn report_cmd(cli: &Cli, input: Option<&PathBuf>, format: &str, out: Option<&PathBuf>) -> Result<i32> {
    let format: Format = format.parse()?;
    let input = input.cloned().unwrap_or_else(|| cli.work.join(REPORT));
    let report = ScanReport::from_json(&std::fs::read(&input).map_err(io_err(&input))?)?;
    let files = render(&report, format)?;
    match out {
        Some(dir) => {
            for (name, bytes) in &files {
                write_out(dir, name, bytes)?;
            }
        }
        None if files.len() == 1 => {
            std::io::stdout().write_all(&files[0].1).map_err(io_err(Path::new("<stdout>")))?;
        }
        None => return Err(Error::Usage("csv output needs --out".into())),
    }
    Ok(report.exit_code())
}

fn diff_cmd(old: &Path, new: &Path) -> Result<i32> {
    let diff = diff_snapshots(&CorpusSnapshot::load(old)?, &CorpusSnapshot::load(new)?);
    for (id, status) in &diff {
        println!("{id}\t{}", status.label());
    }
    for (status, n) in status_counts(&diff) {
        eprintln!("{}: {n}", status.label());
    }
    Ok(EXIT_CLEAN)
}

fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Ingest { corpus } => {
            let config = load_config(cli, corpus.as_ref(), false)?;
            Pipeline::new(config, &cli.work).run_stage(Stage::Ingest)?;
            Ok(EXIT_CLEAN)
        }
        Command::Harvest {
            cves,
            cve_file,
            snapshot_of,
            out,
            fixture_only,
            fixtures,
        } => harvest_cmd(cves, cve_file.as_deref(), snapshot_of.as_deref(), out, *fixture_only, fixtures.as_deref()),
        Command::Scan {
            corpus,
            fixture_only,
            resume,
            stage,
        } => scan(cli, corpus.as_ref(), *fixture_only, *resume, stage.as_deref()),
        Command::Intel {
            command: IntelCommand::Sync { corpus, fixture_only },
        } => {
            let config = load_config(cli, corpus.as_ref(), *fixture_only)?;
            let p = Pipeline::new(config, &cli.work);
            for s in [Stage::Ingest, Stage::Extract] {
                if !p.is_done(s) {
                    p.run_stage(s)?;
                }
            }
            let svc = p.intel()?;
            for h in svc.health() {
                println!("{}\t{:?}\t{} unavailable", h.source.label(), h.mode, h.unavailable);
            }
            Ok(EXIT_CLEAN)
        }
        Command::Similarity {
            corpus,
            out,
            originals_only,
        } => similarity_cmd(cli, corpus.as_ref(), out.as_ref(), *originals_only),
        Command::Stats { out } => stats_cmd(cli, out.as_ref()),
        Command::Report { input, format, out } => report_cmd(cli, input.as_ref(), format, out.as_ref()),
        Command::Diff { old, new } => diff_cmd(old, new),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Exit code 2 is reserved for malicious findings.
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { EXIT_CLEAN as u8 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
