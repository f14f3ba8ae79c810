use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use penflow::applications::build_canonical;
use penflow::io::{prepare, run_experiment, ExperimentConfig, EXIT_ERROR, EXIT_OK, EXIT_VALIDATION};
use penflow::oracle::{active_set_solve, high_precision_reference};

#[derive(Parser)]
#[command(name = "penflow", version, about = "Penalty-regulated splitting dynamics experiments")]
struct Cli {
    /// Directory for artifacts (default: current directory).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Replace the seed in the config.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate, integrate and write artifacts.
    Run { config: PathBuf },
    /// Check the schedule against the mode's hypotheses; prints the report.
    Validate { config: PathBuf },
    /// Print the solution certificate of a canonical instance.
    Oracle { instance: String },
}

fn load(path: &Path, seed: Option<u64>) -> penflow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> penflow::Result<i32> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config, cli.seed_override)?;
            let out = cli.out_dir.unwrap_or_else(|| PathBuf::from("."));
            let report = run_experiment(&cfg, &out)?;
            if let Some(e) = &report.error {
                eprintln!("penflow: {e}");
            }
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(report.exit_code)
        }
        Command::Validate { config } => {
            let cfg = load(&config, cli.seed_override)?;
            let prep = prepare(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&prep.validation).expect("report serializes"));
            Ok(if prep.validation.overall { EXIT_OK } else { EXIT_VALIDATION })
        }
        Command::Oracle { instance } => {
            let prob = build_canonical(&instance)?;
            let cert = active_set_solve(&prob)?;
            let reference = high_precision_reference(&prob, &vec![0.0; prob.dim()], 1e-12)?;
            if let Some(d) = cert.distance_to_set(&reference) {
                eprintln!("extragradient reference at distance {d:.3e} from the certified set");
            }
            println!("{}", cert.to_json());
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("penflow: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
