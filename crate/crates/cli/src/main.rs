//! `foliq`: run criterion suites on foliated quaternionic models.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use foliq_core::models::Expect;
use foliq_core::suite::{self, RunConfig, CHECKS, STRUCTURAL};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "foliq", version, about = "Verify transversal quaternionic structures on sampled models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run checks on a model and report verdicts.
    Check(CheckArgs),
    /// List the registered checks.
    ListChecks,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Text,
    Json,
}

#[derive(clap::Args)]
struct CheckArgs {
    /// Model spec, e.g. `flat,p=1,q=2`, `flat(1,1)`, `s7_sasakian`, `perturbed,kind=twist`.
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated check ids, or `all`.
    #[arg(long, value_delimiter = ',')]
    checks: Option<Vec<String>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Expected verdict override `id=pass|fail|na`; repeatable.
    #[arg(long = "expect", value_name = "ID=VERDICT")]
    expect: Vec<String>,
    /// Worker threads for sampling.
    #[arg(long)]
    threads: Option<usize>,
    /// TOML file with the same fields; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model: Option<String>,
    checks: Option<Vec<String>>,
    samples: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
    format: Option<Format>,
    threads: Option<usize>,
    #[serde(default)]
    expect: BTreeMap<String, Expect>,
}

fn build_config(args: CheckArgs) -> Result<(RunConfig, Format), String> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))?
        }
        None => FileConfig::default(),
    };
    let d = RunConfig::default();
    let mut expect = file.expect;
    for kv in &args.expect {
        let (id, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("--expect {kv:?} is not id=verdict"))?;
        let v: Expect = v.trim().parse().map_err(|e| format!("{e}"))?;
        expect.insert(id.trim().to_string(), v);
    }
    let cfg = RunConfig {
        model: args.model.or(file.model).unwrap_or(d.model),
        checks: args.checks.or(file.checks).unwrap_or(d.checks),
        samples: args.samples.or(file.samples).unwrap_or(d.samples),
        tol: args.tol.or(file.tol).unwrap_or(d.tol),
        seed: args.seed.or(file.seed).unwrap_or(d.seed),
        threads: args.threads.or(file.threads),
        expect,
    };
    Ok((cfg, args.format.or(file.format).unwrap_or(Format::Text)))
}

fn list_checks() {
    for c in CHECKS {
        println!("{:<28} {:<34} {}", c.id, c.anchor, c.summary);
    }
    for (id, note) in STRUCTURAL {
        println!("{:<28} {:<34} {}", id, "structural", note);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListChecks => {
            list_checks();
            ExitCode::SUCCESS
        }
        Command::Check(args) => {
            let (cfg, format) = match build_config(args) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let start = std::time::Instant::now();
            let report = match suite::run(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match format {
                Format::Text => print!("{}", report.to_text()),
                Format::Json => println!("{}", report.to_json()),
            }
            eprintln!("elapsed {:.3} s", start.elapsed().as_secs_f64());
            if report.all_met() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
