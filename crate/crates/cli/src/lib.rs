//! Command implementations for the `frameless-bell` binary.
//!
//! Each `cmd_*` function takes a validated [`RunConfig`], writes its files
//! under the output directory, and returns the rendered report together with
//! the process exit status.

mod commands;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use frameless_bell::experiment::{MeasurementPath, RunOptions, SettingPolicy};
use frameless_bell::lhv::{quantum_constraints, HARDY};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use commands::{cmd_lhv_audit, cmd_report, cmd_sample, cmd_verify};
pub use report::{Check, Format, Table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable consulted when `--out` is not given.
pub const OUT_DIR_ENV: &str = "FRAMELESS_BELL_OUT";

pub const DEFAULT_TRIALS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    Sample,
    LhvAudit,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Sample => "sample",
            Command::LhvAudit => "lhv-audit",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub trials: u64,
    pub root_seed: u64,
    pub policy: SettingPolicy,
    pub fixed_rotations: bool,
    pub measurement: MeasurementPath,
    pub output_dir: PathBuf,
    pub format: Format,
    pub drop_constraint: Option<String>,
    pub max_hardy: bool,
    /// Replaces every per-check threshold of the exact suite when set.
    pub max_deviation: Option<f64>,
}

impl RunConfig {
    pub fn new(command: Command, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            command,
            trials: DEFAULT_TRIALS,
            root_seed: 0,
            policy: SettingPolicy::Uniform,
            fixed_rotations: false,
            measurement: MeasurementPath::Pvm,
            output_dir: output_dir.into(),
            format: Format::Text,
            drop_constraint: None,
            max_hardy: false,
            max_deviation: None,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.trials == 0 {
            return Err(CliError::Usage("--trials must be at least 1".into()));
        }
        if let Some(t) = self.max_deviation {
            if !(t.is_finite() && t >= 0.0) {
                return Err(CliError::Usage(format!(
                    "--max-deviation must be a nonnegative number, got {t}"
                )));
            }
        }
        if let Some(name) = &self.drop_constraint {
            if !quantum_constraints().iter().any(|c| &c.name == name) {
                let names: Vec<String> = quantum_constraints().into_iter().map(|c| c.name).collect();
                return Err(CliError::Usage(format!(
                    "unknown constraint {name:?}; expected one of {}",
                    names.join(", ")
                )));
            }
            if self.max_hardy && name == HARDY {
                return Err(CliError::Usage(
                    "--max-hardy already leaves out the hardy constraint".into(),
                ));
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(CliError::Usage("output directory must not be empty".into()));
        }
        Ok(())
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            policy: self.policy,
            fixed_rotations: self.fixed_rotations,
            path: self.measurement,
        }
    }

    /// SHA-256 over every setting that affects results. The command, output
    /// directory and format are left out so identical runs hash identically
    /// wherever they write.
    pub fn config_hash(&self) -> String {
        let canonical = json!({
            "trials": self.trials,
            "root_seed": self.root_seed,
            "policy": self.policy.to_string(),
            "fixed_rotations": self.fixed_rotations,
            "measurement": measurement_name(self.measurement),
            "drop_constraint": self.drop_constraint,
            "max_hardy": self.max_hardy,
            "max_deviation": self.max_deviation,
        });
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }

    pub fn metadata(&self) -> serde_json::Value {
        json!({
            "version": VERSION,
            "command": self.command.name(),
            "root_seed": self.root_seed,
            "trials": self.trials,
            "policy": self.policy.to_string(),
            "fixed_rotations": self.fixed_rotations,
            "measurement": measurement_name(self.measurement),
            "config_hash": self.config_hash(),
        })
    }

    /// `key=value` metadata lines for text and CSV outputs.
    pub fn metadata_lines(&self) -> Vec<String> {
        vec![
            format!("frameless-bell {VERSION}"),
            format!("root_seed={}", self.root_seed),
            format!("trials={}", self.trials),
            format!("policy={}", self.policy),
            format!("fixed_rotations={}", self.fixed_rotations),
            format!("measurement={}", measurement_name(self.measurement)),
            format!("config_hash={}", self.config_hash()),
        ]
    }
}

pub fn measurement_name(path: MeasurementPath) -> &'static str {
    match path {
        MeasurementPath::Pvm => "pvm",
        MeasurementPath::Protocol => "protocol",
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    /// 0 success, 1 check failure.
    pub status: u8,
    pub report: String,
    /// First failing check, if any.
    pub failure: Option<String>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.status)
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Verify => cmd_verify(cfg),
        Command::Sample => cmd_sample(cfg),
        Command::LhvAudit => cmd_lhv_audit(cfg),
        Command::Report => cmd_report(cfg),
    }
}
