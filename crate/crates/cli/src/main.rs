use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ifb_cli::alpha_curve::{alpha_curve, write_alpha_curve};
use ifb_cli::compare::compare;
use ifb_cli::{run_experiment, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "ifb", version, about = "Inertial splitting experiments on TV imaging problems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment and write its trace, images and summary.
    Run {
        config: PathBuf,
        /// Override a key, e.g. `--set solver.alpha=0.3`.
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
    },
    /// Emit the extrapolation bound as two-column data.
    AlphaCurve {
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run two configurations on the same problem instance.
    Compare {
        config_a: PathBuf,
        config_b: PathBuf,
        /// Override applied to both configurations.
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
    },
}

fn execute(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Run { config, set } => {
            let cfg = ExperimentConfig::load(&config, &set)?;
            let out = run_experiment(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&out.summary)?);
        }
        Cmd::AlphaCurve { eps, grid, out } => {
            let rows = alpha_curve(eps, grid)?;
            match out {
                Some(path) => write_alpha_curve(&rows, std::io::BufWriter::new(std::fs::File::create(path)?))?,
                None => write_alpha_curve(&rows, std::io::stdout().lock())?,
            }
        }
        Cmd::Compare { config_a, config_b, set } => {
            let a = ExperimentConfig::load(&config_a, &set)?;
            let b = ExperimentConfig::load(&config_b, &set)?;
            let (cmp, _, _) = compare(&a, &b)?;
            println!("{}", serde_json::to_string_pretty(&cmp)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
