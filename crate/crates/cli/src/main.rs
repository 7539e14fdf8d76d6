use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use livsic_cli::{generate, run, ConfigError, Experiment, ExperimentConfig, RunError};

#[derive(Parser)]
#[command(name = "livsic", version, about = "Verification campaigns for circle cocycles over shifts of finite type")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tolerance override, repeatable.
        #[arg(long = "tol", value_name = "NAME=VALUE", value_parser = parse_assignment)]
        tol: Vec<(String, String)>,
    },
    /// Write a fixture (specs plus a runnable config.json).
    Gen {
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_assignment)]
        param: Vec<(String, String)>,
    },
    /// List the experiments and their default tolerances.
    ListExperiments,
}

fn parse_assignment(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected NAME=VALUE, got {s:?}"))
}

fn configure(
    config: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
    tol: Vec<(String, String)>,
) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(o) = out {
        cfg = cfg.with_output_dir(o);
    }
    for (name, v) in tol {
        let value: f64 = v.parse().map_err(|_| ConfigError::new(format!("tolerances.{name}"), format!("{v:?} is not a number")))?;
        cfg = cfg.with_tolerance(&name, value)?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::ListExperiments => {
            for e in Experiment::ALL {
                let tols: Vec<String> = e.default_tolerances().iter().map(|(k, v)| format!("{k}={v:e}")).collect();
                println!("{:<20} {}", e.id(), e.summary());
                if !tols.is_empty() {
                    println!("{:<20} tolerances: {}", "", tols.join(" "));
                }
            }
            ExitCode::SUCCESS
        }
        Command::Gen { kind, seed, out, param } => {
            let params: BTreeMap<String, String> = param.into_iter().collect();
            match generate(&kind, &params, seed, &out) {
                Ok(files) => {
                    for f in files {
                        println!("{}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Run { config, seed, out, tol } => {
            let cfg = match configure(config, seed, out, tol) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let outcome = match run(&cfg) {
                Ok(o) => o,
                Err(RunError::Config(e)) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let r = &outcome.report;
            for row in &r.rows {
                let mark = if row.pass { "PASS" } else { "FAIL" };
                println!("{mark}  {:<75} residual {:>11.3e}  bound {:>11.3e}", row.name, row.residual, row.bound);
            }
            println!("{}: {} ({:.2} s, inputs {})", r.experiment, r.verdict, r.wall_clock_s, &r.inputs_digest[..12]);
            if let Some(dir) = &cfg.output_dir {
                if let Err(e) = outcome.write(dir) {
                    eprintln!("error: writing outputs to {}: {e}", dir.display());
                    return ExitCode::from(1);
                }
            }
            if r.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
