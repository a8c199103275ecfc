//! `gwroot` command-line front end.
//!
//! Machine-readable output goes to stdout (or `--out`), diagnostics to stderr.
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration
//! error, 3 sampling or runtime error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gwroot::estimator::{candidates, conditional_correctness_exact, estimate_root};
use gwroot::montecarlo::{self, TrialReport};
use gwroot::oracle::{self, Probability};
use gwroot::tree::{FreeTreeJson, RootedTreeJson};
use gwroot::verify::{self, VerifyOptions};
use gwroot::{distribution, rng, Error, FreeTree, OffspringDistribution, RootedTree, TreeSampler};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "gwroot", version, about = "Root estimation for conditional Galton-Watson trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Sample conditional trees; one JSON line per tree with its free projection.
    Sample {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, alias = "trials", default_value_t = 1)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the root of a free tree.
    Estimate {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force posterior over all roots of a free tree.
    Posterior {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        dist: PathBuf,
        /// Compute in log space, allowing large trees.
        #[arg(long)]
        log: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite (or `all`).
    Verify {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trees in the structural corpus.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Largest tree size in the structural corpus.
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical versus predicted correctness for the classical families.
    Table1 {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A single trial report.
    Run {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Degree and W statistics.
    Stats {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a campaign file: JSON lines (or CSV) of trial reports.
    Campaign {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Verification(String),
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_)
            | Error::CriticalityViolated { .. }
            | Error::Degenerate
            | Error::InvalidSequence(_)
            | Error::InvalidTree(_)
            | Error::NodeOutOfRange { .. }
            | Error::TooLarge { .. }
            | Error::Config(_)
            | Error::Json(_)
            | Error::Io(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_dist(path: &Path) -> CliResult<OffspringDistribution> {
    Ok(distribution::from_config(&read_json(path)?)?)
}

/// Free-tree JSON, or rooted JSON whose root is then forgotten.
fn load_tree(path: &Path) -> CliResult<FreeTree> {
    let value = read_json(path)?;
    let bad = |e: serde_json::Error| Failure::Usage(format!("{}: {e}", path.display()));
    if value.get("parent").is_some() {
        let json: RootedTreeJson = serde_json::from_value(value).map_err(bad)?;
        Ok(RootedTree::from_json(&json)?.forget_root())
    } else {
        let json: FreeTreeJson = serde_json::from_value(value).map_err(bad)?;
        Ok(FreeTree::from_json(&json)?)
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::Runtime(e.to_string()))
        }
    }
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serialisable")
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Sample { dist, n, count, seed, out } => {
            let dist = load_dist(&dist)?;
            dist.check_feasible(n)?;
            let sampler = TreeSampler::new(&dist);
            let mut rng = rng::seeded(seed);
            let mut text = String::new();
            for _ in 0..count {
                let tree = sampler.sample_conditional_tree(n, &mut rng)?;
                let line = json!({"rooted": tree.to_json(), "free": tree.forget_root().to_json()});
                text.push_str(&line.to_string());
                text.push('\n');
            }
            emit(out.as_deref(), &text)
        }
        Command::Estimate { tree, dist, seed, out } => {
            let f = load_tree(&tree)?;
            let dist = load_dist(&dist)?;
            let est = estimate_root(&f, &dist, &mut rng::seeded(seed))?;
            let mut value = to_value(&est);
            value["p_correct"] = match conditional_correctness_exact(&f, &dist)? {
                Some(exact) => Probability::Exact(exact).to_json(),
                None => json!(est.conditional_correctness),
            };
            emit(out.as_deref(), &pretty(&value))
        }
        Command::Posterior { tree, dist, log, out } => {
            let f = load_tree(&tree)?;
            let dist = load_dist(&dist)?;
            let posterior = if log {
                oracle::root_posterior_log(&f, &dist)?.into_iter().map(Probability::Float).collect()
            } else {
                oracle::root_posterior(&f, &dist)?
            };
            let omega = candidates(&f, &dist)?.nodes;
            let p_correct = posterior[omega[0]].clone();
            emit(out.as_deref(), &pretty(&oracle::posterior_report(&posterior, &omega, &p_correct)))
        }
        Command::Verify { suite, seed, trials, n, out } => {
            let opts = VerifyOptions { seed, trees: trials, max_n: n, ..VerifyOptions::default() };
            let names: Vec<&str> = if suite == "all" { verify::SUITES.to_vec() } else { vec![suite.as_str()] };
            let mut reports = Vec::new();
            for name in names {
                let report = verify::run_suite(name, &opts)?;
                eprintln!("{}: {} ({} cases, {} failures)", report.suite, if report.passed { "pass" } else { "FAIL" }, report.cases, report.failures);
                reports.push(report);
            }
            emit(out.as_deref(), &pretty(&to_value(&reports)))?;
            match reports.iter().find(|r| !r.passed) {
                Some(r) => Err(Failure::Verification(format!(
                    "suite {} failed: {}",
                    r.suite,
                    r.first_failure.as_deref().unwrap_or("")
                ))),
                None => Ok(()),
            }
        }
        Command::Table1 { n, trials, seed, format, out } => {
            let rows = montecarlo::table1(n, trials, seed)?;
            let text = match format {
                Format::Csv => montecarlo::table_csv(&rows)?,
                Format::Json => pretty(&to_value(&rows)),
            };
            emit(out.as_deref(), &text)
        }
        Command::Run { dist, n, trials, seed, format, out } => {
            let dist = load_dist(&dist)?;
            let report = montecarlo::run_trials(&dist, n, trials, seed)?;
            emit(out.as_deref(), &format_reports(&[report], format)?)
        }
        Command::Stats { dist, n, trials, seed, out } => {
            let dist = load_dist(&dist)?;
            let report = montecarlo::statistic_suite(&dist, n, trials, seed)?;
            emit(out.as_deref(), &pretty(&to_value(&report)))
        }
        Command::Campaign { config, format, out } => {
            let entries = montecarlo::parse_campaign(&read_json(&config)?)?;
            let results = montecarlo::run_campaign(&entries)?;
            let failed: Vec<String> = results
                .iter()
                .filter(|r| !r.passed())
                .map(|r| format!("{} n={}", r.report.dist, r.report.n))
                .collect();
            let text = match format {
                Format::Json => montecarlo::to_json_lines(&results)?,
                Format::Csv => {
                    let reports: Vec<TrialReport> = results.into_iter().map(|r| r.report).collect();
                    montecarlo::reports_csv(&reports)?
                }
            };
            emit(out.as_deref(), &text)?;
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Verification(format!("campaign checks failed: {}", failed.join(", "))))
            }
        }
    }
}

fn format_reports(reports: &[TrialReport], format: Format) -> CliResult<String> {
    Ok(match format {
        Format::Json => montecarlo::to_json_lines(reports)?,
        Format::Csv => montecarlo::reports_csv(reports)?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
