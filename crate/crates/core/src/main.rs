use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use leviflat_core::report::{run, RunConfig, Status};
use leviflat_core::scenarios::resolve;
use leviflat_core::suites::catalogue;
use leviflat_core::{Error, Result};

/// Checks the identities of the Levi-flat deformation calculus on a scenario.
#[derive(Parser, Debug)]
#[command(name = "leviflat", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run identity suites (the default when no subcommand is given).
    Run(RunArgs),
    /// List identity ids with the formula each one checks.
    List,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Built-in scenario name or path to a scenario TOML file.
    #[arg(long, env = "LEVIFLAT_SCENARIO", default_value = "t3_flat")]
    scenario: String,
    /// Comma-separated identity globs or suite names, or `all`.
    #[arg(long, env = "LEVIFLAT_SUITE", default_value = "all")]
    suite: String,
    #[arg(long, env = "LEVIFLAT_SEED", default_value_t = 42)]
    seed: u64,
    /// Samples per identity.
    #[arg(long, env = "LEVIFLAT_POINTS", default_value_t = 20)]
    points: usize,
    /// Tolerance overrides `id=value[,id=value...]`; may be repeated.
    #[arg(long = "tol", env = "LEVIFLAT_TOL", value_name = "ID=VALUE", value_delimiter = ',')]
    tol: Vec<String>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, env = "LEVIFLAT_REPORT")]
    report: Option<PathBuf>,
    /// List identity ids with the formula each one checks, then exit.
    #[arg(long)]
    list: bool,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, env = "LEVIFLAT_JOBS")]
    jobs: Option<usize>,
}

fn parse_tols(items: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for it in items {
        let (id, v) = it
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--tol expects id=value, got '{it}'")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Config(format!("--tol value '{v}' is not a number")))?;
        out.insert(id.trim().to_string(), v);
    }
    Ok(out)
}

fn list() {
    let mut out = std::io::stdout().lock();
    for i in catalogue() {
        // A closed pipe (e.g. `| head`) just ends the listing.
        if writeln!(out, "{:<28} {:<12} {}", i.id, i.suite, i.anchor).is_err() {
            return;
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let cli = match cli.command {
        Some(Command::List) => {
            list();
            return Ok(true);
        }
        Some(Command::Run(args)) => args,
        None => cli.run,
    };
    if cli.list {
        list();
        return Ok(true);
    }
    let sc = resolve(&cli.scenario)?;
    let cfg = RunConfig {
        scenario: cli.scenario.clone(),
        suite: cli.suite.clone(),
        seed: cli.seed,
        points: cli.points,
        tol: parse_tols(&cli.tol)?,
        jobs: cli.jobs,
    };
    let report = run(&sc, &cfg)?;
    let json = report.to_json();
    match &cli.report {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }
    for r in &report.identities {
        let tag = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skip",
        };
        let val = r.max_rel.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
        eprintln!("{tag:4} {:<28} {val:>10}  tol {:.1e}", r.id, r.tolerance);
    }
    let s = &report.summary;
    eprintln!("{} passed, {} failed, {} skipped", s.passed, s.failed, s.skipped);
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
