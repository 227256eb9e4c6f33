use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sflow::commands::{self, BoundArgs};
use sflow::CliError;

#[derive(Parser)]
#[command(name = "sflow", version, about = "Straight-line interpolant experiments")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Exit with code 4 when the no-go certificate is violated.
    #[arg(long, global = true)]
    fail_on_violation: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Resolve the interpolant and write its parameters.
    Build,
    /// Write sample paths.
    Sample,
    /// Residuals, flow checks and a straightness verdict.
    Diagnose,
    /// Integrate the closed-form flow from launch points.
    Flow,
    /// Reproduce the data behind figure 1, 2 or 3.
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        which: u8,
    },
    /// Concentration fit, no-go zone and impossibility certificate.
    Nogo,
    /// Crossing-probability bound for given class constants.
    Bound {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        gap: f64,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        frostman_c: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let out = cli.out.as_path();
    let load = || commands::load_config(cli.config.as_deref(), cli.seed);
    match cli.cmd {
        Cmd::Build => commands::build(&load()?, out),
        Cmd::Sample => commands::sample(&load()?, out),
        Cmd::Diagnose => commands::diagnose(&load()?, out),
        Cmd::Flow => commands::flow(&load()?, out),
        Cmd::Figure { which } => {
            let cfg = match &cli.config {
                Some(_) => load()?,
                None => commands::figure_config(which, cli.seed.unwrap_or(0))?,
            };
            commands::figure(which, &cfg, out)
        }
        Cmd::Nogo => commands::nogo(&load()?, out, cli.fail_on_violation),
        Cmd::Bound { epsilon, gap, a, alpha, beta, frostman_c, gamma } => {
            commands::bound(BoundArgs { epsilon, gap, a, alpha, beta, frostman_c, gamma }, out)
        }
    }
}

fn headline(v: &serde_json::Value) -> String {
    if let Some(s) = v.get("verdict").and_then(|x| x.as_str()) {
        return format!("verdict: {s}");
    }
    if let Some(s) = v.pointer("/certificate/verdict").and_then(|x| x.as_str()) {
        return format!("certificate: {s}");
    }
    "ok".to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    match run(cli) {
        Ok(v) => {
            println!("{} (outputs in {})", headline(&v), out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
