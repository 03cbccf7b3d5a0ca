use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use vickrey_bandit::harness::acceptance::run_criteria;
use vickrey_bandit::harness::csv_io::{read_records, write_log};
use vickrey_bandit::harness::stats::{fit_regret_slope, Summary};
use vickrey_bandit::harness::{run_all, HarnessError, ReplicationSummary, RunConfig, RunOptions};

#[derive(Parser)]
#[command(name = "vickrey-bandit", version, about = "Simulate bidding strategies in repeated second-price auctions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configuration's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (VICKREY_BANDIT_THREADS takes precedence).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured replications; writes the round log as CSV and
    /// prints a JSON summary.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Round log destination; stdout summary only when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat the configuration over several horizons and fit the regret
    /// growth exponent.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated horizons.
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<u64>,
        /// CSV of `horizon,n,mean,stderr,median`; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance criteria and print one line per criterion.
    Accept {
        /// Criterion numbers to run (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Summarize a round log: per-round regret mean, standard error and
    /// median across replications.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, HarnessError> {
    let text = std::fs::read_to_string(&common.config)?;
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, HarnessError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    regret: Summary,
    replications: Vec<&'a ReplicationSummary>,
}

fn simulate(common: &Common, out: Option<&Path>) -> Result<(), HarnessError> {
    let cfg = load_config(common)?;
    let log = run_all(
        &cfg,
        &RunOptions {
            record_rounds: out.is_some(),
            threads: common.threads,
        },
    )?;
    if let Some(path) = out {
        write_log(&log, BufWriter::new(File::create(path)?))?;
    }
    let summary = SimulateSummary {
        regret: log.regret_summary(),
        replications: log.replications.iter().map(|r| &r.summary).collect(),
    };
    let text = serde_json::to_string_pretty(&summary).map_err(|e| HarnessError::Config(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn sweep(common: &Common, horizons: &[u64], out: Option<&Path>) -> Result<(), HarnessError> {
    let base = load_config(common)?;
    let mut w = csv::Writer::from_writer(output(out)?);
    w.write_record(["horizon", "n", "mean", "stderr", "median"])?;
    let mut series = Vec::new();
    for &horizon in horizons {
        let cfg = RunConfig { horizon, ..base.clone() };
        let s = run_all(
            &cfg,
            &RunOptions {
                record_rounds: false,
                threads: common.threads,
            },
        )?
        .regret_summary();
        w.write_record([
            horizon.to_string(),
            s.n.to_string(),
            format!("{:.16e}", s.mean),
            format!("{:.16e}", s.stderr),
            format!("{:.16e}", s.median),
        ])?;
        series.push((horizon, s.mean));
    }
    w.flush()?;
    match fit_regret_slope(&series) {
        Ok(fit) => eprintln!("slope {:.4} (se {:.4}), intercept {:.4}", fit.slope, fit.slope_stderr, fit.intercept),
        Err(e) => eprintln!("no slope fit: {e}"),
    }
    Ok(())
}

fn report(input: &Path, out: Option<&Path>) -> Result<(), HarnessError> {
    let records = read_records(File::open(input)?)?;
    let mut by_t: std::collections::BTreeMap<u64, Vec<f64>> = std::collections::BTreeMap::new();
    for r in &records {
        by_t.entry(r.t).or_default().push(r.cum_regret);
    }
    let mut w = csv::Writer::from_writer(output(out)?);
    w.write_record(["t", "n", "mean", "stderr", "median"])?;
    for (t, xs) in by_t {
        let s = Summary::of(&xs);
        w.write_record([
            t.to_string(),
            s.n.to_string(),
            format!("{:.16e}", s.mean),
            format!("{:.16e}", s.stderr),
            format!("{:.16e}", s.median),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Simulate { common, out } => simulate(&common, out.as_deref()).map(|_| true),
        Command::Sweep { common, horizons, out } => sweep(&common, &horizons, out.as_deref()).map(|_| true),
        Command::Report { input, out } => report(&input, out.as_deref()).map(|_| true),
        Command::Accept { criteria, threads } => {
            let mut all = true;
            for id in if criteria.is_empty() { (1..=8).collect() } else { criteria } {
                let r = run_criteria(&[id], threads)?;
                for line in r {
                    println!("{line}");
                    all &= line.passed;
                }
            }
            Ok(all)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error\t{}\t{}", e.code(), e);
            ExitCode::from(2)
        }
    }
}
