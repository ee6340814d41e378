//! Batch front door for strand simulations: parse a JSON config, run the
//! requested mode, emit CSV trajectories and a JSON report.
//!
//! Exit codes: 0 success, 2 config error, 3 validation error, 4 numerical
//! blow-up, 5 identity-verification failure.

mod config;
mod run;

use std::path::PathBuf;
use std::process::exit;

use config::{Mode, RunConfig};

const USAGE: &str =
    "usage: strand --config <path> [--mode <mode>] [--seed <n>] [--out <dir>] [--quiet]

modes: simulate-unreduced | simulate-reduced | compare | verify-identities | convergence
  --config <path>   JSON run configuration (required)
  --mode <mode>     override the config's mode
  --seed <n>        override the config's seed
  --out <dir>       override the config's output directory
  --quiet           suppress progress lines";

struct CliArgs {
    config_path: PathBuf,
    mode: Option<Mode>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    quiet: bool,
}

fn parse_args(args: &[String]) -> Result<CliArgs, String> {
    let mut config_path: Option<PathBuf> = None;
    let mut mode = None;
    let mut seed = None;
    let mut out = None;
    let mut quiet = false;
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--config" => {
                let v = it.next().ok_or("--config needs a path")?;
                config_path = Some(PathBuf::from(v));
            }
            "--mode" => {
                let v = it.next().ok_or("--mode needs a value")?;
                mode = Some(v.parse::<Mode>()?);
            }
            "--seed" => {
                let v = it.next().ok_or("--seed needs a value")?;
                seed = Some(v.parse::<u64>().map_err(|e| format!("--seed: {e}"))?);
            }
            "--out" => {
                let v = it.next().ok_or("--out needs a directory")?;
                out = Some(PathBuf::from(v));
            }
            "--quiet" => quiet = true,
            "--help" | "-h" => return Err(String::new()),
            other => return Err(format!("unknown argument '{other}'")),
        }
    }
    Ok(CliArgs {
        config_path: config_path.ok_or("--config is required")?,
        mode,
        seed,
        out,
        quiet,
    })
}

fn main() {
    let raw: Vec<String> = std::env::args().skip(1).collect();
    let args = match parse_args(&raw) {
        Ok(a) => a,
        Err(msg) => {
            if msg.is_empty() {
                println!("{USAGE}");
                exit(0);
            }
            eprintln!("error: {msg}\n{USAGE}");
            exit(2);
        }
    };

    let text = match std::fs::read_to_string(&args.config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config_path.display());
            exit(2);
        }
    };
    let mut config = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: config: {e}");
            exit(2);
        }
    };
    if let Some(mode) = args.mode {
        config.mode = mode;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out_dir = args
        .out
        .unwrap_or_else(|| PathBuf::from(&config.outputs.directory));

    match run::run(&config, &out_dir, args.quiet) {
        Ok(()) => exit(0),
        Err(e) => {
            eprintln!("error: {}", e.message());
            exit(e.exit_code());
        }
    }
}
