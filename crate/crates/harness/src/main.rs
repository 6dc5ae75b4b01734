use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dswkb_harness::{emit, load_config, run, OutputFormat, SuiteName};

#[derive(Parser)]
#[command(name = "dswkb", version, about = "Semiclassical sweeps for the difference Schrödinger equation with a pole")]
struct Cli {
    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured suites over the h sweep and emit a report.
    Run {
        config: PathBuf,
        /// Overrides the format given in the config.
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
        /// Output file; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the (suite, h) grid.
        #[arg(long, default_value_t = std::thread::available_parallelism().map_or(1, |n| n.get()))]
        jobs: usize,
    },
    /// Parse and validate a config, including the regularity check.
    CheckConfig { config: PathBuf },
    /// List the available suites.
    ListSuites,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match cli.command {
        Command::ListSuites => {
            for s in SuiteName::ALL {
                println!("{:<24}{}", s.as_str(), s.describe());
            }
            ExitCode::SUCCESS
        }
        Command::CheckConfig { config } => match load_config(&config) {
            Ok(c) => {
                println!(
                    "ok: {} h values, {} suites, min |Im p| = {:.3e} at {}",
                    c.h_list.len(),
                    c.suites.len(),
                    c.regularity.im_p_margin,
                    c.regularity.margin_at
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run { config, format, out, jobs } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let report = run(&cfg, jobs);
            if let Err(e) = emit(&report, format.unwrap_or(cfg.format), out.as_deref()) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            for s in &report.suites {
                eprintln!("{} {}", if s.pass { "PASS" } else { "FAIL" }, s.suite);
            }
            ExitCode::from(report.exit_code() as u8)
        }
    }
}
