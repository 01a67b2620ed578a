//! Config-driven front end for the `nilflow` library.

pub mod commands;
pub mod config;
pub mod error;

use std::fs;
use std::path::Path;

pub use commands::{run, Command, Outputs};
pub use config::ExperimentConfig;
pub use error::CliError;

/// Writes `report.csv`, `certificate.json` and `sidecar.json` into `dir`.
pub fn write_outputs(dir: &Path, out: &Outputs) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.csv"), &out.report)?;
    let mut cert = serde_json::to_string_pretty(&out.certificate).expect("certificate serializes");
    cert.push('\n');
    fs::write(dir.join("certificate.json"), cert)?;
    fs::write(dir.join("sidecar.json"), out.sidecar.to_json())?;
    Ok(())
}

/// Loads the config, applies the seed override, runs and writes outputs.
/// Returns the exit code.
pub fn execute(cmd: Command, config: &Path, out_dir: &Path, seed: Option<u64>) -> Result<(i32, String), CliError> {
    let text = fs::read_to_string(config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out = run(cmd, cfg)?;
    write_outputs(out_dir, &out)?;
    Ok((out.exit_code, out.summary))
}
