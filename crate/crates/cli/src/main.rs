//! `noonmetry` command-line front end.
//!
//! Every subcommand takes a JSON configuration (`--config`), an optional seed
//! override (`--seed`) and an output directory (`--out`). Failures exit with
//! a nonzero status and a one-line JSON error on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use noonmetry::io::{run, Invocation, Subcommand};
use noonmetry::Error;

#[derive(Debug, Parser)]
#[command(name = "noonmetry", version, about = "Two-photon phase/visibility estimation and HB Fisher scaling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// RNG seed, overriding any seed in the configuration.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, ClapSubcommand)]
enum Command {
    /// Draw a counts file from the two-photon model.
    Simulate(Common),
    /// Joint Bayesian estimate of phase and visibility from a counts file.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Counts CSV, overriding `counts` in the configuration.
        #[arg(long, value_name = "PATH")]
        counts: Option<PathBuf>,
    },
    /// Tabulate Fisher information, bounds and correlation against phase.
    FisherScan(Common),
    /// Optimized effective information and trade-off for HB probes.
    HbScaling(Common),
    /// Simulated calibration sweep with linear fits.
    Calibrate(Common),
    /// Null distribution of the covariance test statistic.
    LrtCalibrate(Common),
}

fn emit_error(kind: &str, message: &str, line: Option<usize>) {
    let mut obj = serde_json::json!({ "error": kind, "message": message });
    if let Some(line) = line {
        obj["line"] = line.into();
    }
    eprintln!("{obj}");
}

fn invocation(cmd: Command) -> Result<Invocation, Error> {
    let (subcommand, common, counts) = match cmd {
        Command::Simulate(c) => (Subcommand::Simulate, c, None),
        Command::Estimate { common, counts } => (Subcommand::Estimate, common, counts),
        Command::FisherScan(c) => (Subcommand::FisherScan, c, None),
        Command::HbScaling(c) => (Subcommand::HbScaling, c, None),
        Command::Calibrate(c) => (Subcommand::Calibrate, c, None),
        Command::LrtCalibrate(c) => (Subcommand::LrtCalibrate, c, None),
    };
    let config = common.config.map(std::fs::read_to_string).transpose()?;
    Ok(Invocation {
        subcommand,
        config,
        seed: common.seed,
        out_dir: common.out,
        counts,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            emit_error("usage", e.render().to_string().trim(), None);
            return ExitCode::from(2);
        }
    };
    match invocation(cli.command).and_then(|inv| run(&inv)) {
        Ok(manifest) => {
            for out in &manifest.outputs {
                println!("{}  {}", out.sha256, out.file);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let line = match &e {
                Error::Parse { line, .. } => Some(*line),
                _ => None,
            };
            emit_error(e.kind(), &e.to_string(), line);
            ExitCode::FAILURE
        }
    }
}
