use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use frameless_bell::experiment::{MeasurementPath, SettingPolicy};
use frameless_bell::rotations::parse_seed;
use frameless_bell_cli::{run, Command, Format, RunConfig, DEFAULT_TRIALS, OUT_DIR_ENV};

/// Exact and sampled checks of a Bell test that needs no shared reference frame.
#[derive(Parser, Debug)]
#[command(name = "frameless-bell", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Run the exact verification suite.
    Verify,
    /// Run Monte Carlo trials and write the trial log and statistics.
    Sample,
    /// Decide whether a local hidden-variable model fits the predictions.
    LhvAudit,
    /// Everything above in one report.
    Report,
}

#[derive(Args, Debug)]
struct Opts {
    /// Number of Monte Carlo trials.
    #[arg(long, global = true, default_value_t = DEFAULT_TRIALS)]
    trials: u64,
    /// Root seed, decimal or 0x-prefixed hex.
    #[arg(long, global = true, default_value = "0", value_parser = seed)]
    seed: u64,
    /// uniform, cycle, or fixed:XY with X, Y in {F, G}.
    #[arg(long, global = true, default_value = "uniform", value_parser = policy)]
    policy: SettingPolicy,
    /// Reuse one rotation per side and setting for every trial.
    #[arg(long, global = true)]
    fixed_rotations: bool,
    /// Sample from the measurements directly or via single-qubit readouts.
    #[arg(long, global = true, value_enum, default_value_t = Measurement::Pvm)]
    measurement: Measurement,
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "frameless-bell-out")]
    out: PathBuf,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Leave one named constraint out of the audit.
    #[arg(long, global = true)]
    drop_constraint: Option<String>,
    /// Also report the largest Hardy fraction hidden variables allow.
    #[arg(long, global = true)]
    max_hardy: bool,
    /// Replace every threshold of the exact suite.
    #[arg(long, global = true)]
    max_deviation: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Measurement {
    Pvm,
    Protocol,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Json,
    Csv,
    Text,
}

fn seed(s: &str) -> Result<u64, String> {
    parse_seed(s).map_err(|e| e.to_string())
}

fn policy(s: &str) -> Result<SettingPolicy, String> {
    s.parse()
        .map_err(|e: frameless_bell::experiment::ExperimentError| e.to_string())
}

fn config(cli: Cli) -> RunConfig {
    let command = match cli.command {
        Cmd::Verify => Command::Verify,
        Cmd::Sample => Command::Sample,
        Cmd::LhvAudit => Command::LhvAudit,
        Cmd::Report => Command::Report,
    };
    let o = cli.opts;
    RunConfig {
        command,
        trials: o.trials,
        root_seed: o.seed,
        policy: o.policy,
        fixed_rotations: o.fixed_rotations,
        measurement: match o.measurement {
            Measurement::Pvm => MeasurementPath::Pvm,
            Measurement::Protocol => MeasurementPath::Protocol,
        },
        output_dir: o.out,
        format: match o.format {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
            FormatArg::Text => Format::Text,
        },
        drop_constraint: o.drop_constraint,
        max_hardy: o.max_hardy,
        max_deviation: o.max_deviation,
    }
}

fn main() -> ExitCode {
    let cfg = config(Cli::parse());
    match run(&cfg) {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.report.as_bytes());
            if let Some(f) = &out.failure {
                eprintln!("check failed: {f}");
            }
            out.exit_code()
        }
        Err(e) => {
            eprintln!("frameless-bell: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
