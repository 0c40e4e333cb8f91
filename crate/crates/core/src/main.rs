use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use thinfilm::harness::output::{write_atomic, write_json};
use thinfilm::harness::run::{sweep_csv, EXIT_ASSERTION, EXIT_CONFIG, EXIT_OK};
use thinfilm::harness::{self, ExperimentConfig, SweepParameter};
use thinfilm::Error;

#[derive(Parser)]
#[command(name = "thinfilm", version, about = "Doubly degenerate thin-film flow experiments")]
struct Cli {
    /// Output directory (overrides the config's [output] dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of state snapshots to write.
    #[arg(long, global = true)]
    snapshots: Option<usize>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one experiment. CONFIG is a file or `preset:<name>`.
    Run { config: String },
    /// Run one experiment per parameter value.
    Sweep {
        config: String,
        /// alpha, epsilon, n_cells or sigma.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
    },
    /// Compare runs at decreasing regularisation.
    SigmaStudy {
        config: String,
        /// Comma-separated, strictly decreasing.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        sigmas: Vec<f64>,
    },
    /// Run the invariant suite at small grid sizes.
    Selfcheck,
}

fn load(cli: &Cli, source: &str) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(source)?;
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(n) = cli.snapshots {
        cfg.output.snapshots = n;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<i32, Error> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(cli, config)?;
            let summary = harness::run(&cfg)?;
            if !cli.quiet {
                eprintln!(
                    "{}: {:?}, regime {:?}, fitted {:.6}, theory {:.6}; wrote {}",
                    cfg.preset.as_deref().unwrap_or("run"),
                    summary.termination,
                    summary.fit.regime,
                    summary.fit.fitted_exponent_or_rate,
                    summary.fit.theoretical_value,
                    cfg.output.dir.display()
                );
            }
            if !summary.failures.is_empty() {
                println!("{}", serde_json::json!({ "failures": summary.failures }));
            }
            Ok(summary.exit_code())
        }
        Command::Sweep { config, param, values } => {
            let cfg = load(cli, config)?;
            let parameter: SweepParameter = param.parse()?;
            if values.is_empty() {
                return Err(Error::Config("--values is empty".into()));
            }
            let rows = harness::sweep(&cfg, parameter, values, true);
            write_atomic(&cfg.output.dir.join("sweep.csv"), &sweep_csv(&rows)?)?;
            write_json(&cfg.output.dir.join("sweep.json"), &rows)?;
            if !cli.quiet {
                for r in &rows {
                    eprintln!(
                        "{param}={}: {} {:?} fitted {:?} theory {:?} {}",
                        r.value, r.status, r.regime, r.fitted_exponent_or_rate, r.theoretical_value, r.message
                    );
                }
            }
            Ok(if rows.iter().all(|r| r.status == "ok") {
                EXIT_OK
            } else {
                EXIT_ASSERTION
            })
        }
        Command::SigmaStudy { config, sigmas } => {
            let cfg = load(cli, config)?;
            let study = harness::sigma_study(&cfg, sigmas)?;
            write_json(&cfg.output.dir.join("sigma_study.json"), &study)?;
            if !cli.quiet {
                eprintln!("distances {:?}", study.distances);
            }
            if let Some(w) = &study.warning {
                eprintln!("warning: {w}");
            }
            Ok(EXIT_OK)
        }
        Command::Selfcheck => {
            let report = harness::selfcheck();
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serialises")
            );
            Ok(if report.passed { EXIT_OK } else { EXIT_ASSERTION })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
