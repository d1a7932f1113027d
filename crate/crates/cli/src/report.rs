use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Self-describing record of one run.
///
/// `config_echo` is the fully resolved configuration; passing the report
/// back through `--config` repeats the run exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub wall_time_ms: u64,
    pub config_echo: Value,
    pub results: Value,
}

impl RunReport {
    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Loads a configuration from either a bare config file or a full report.
pub fn load_config<C: DeserializeOwned>(path: &Path, command: &str) -> CliResult<C> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)?;
    let config = match value.get("config_echo") {
        Some(echo) => {
            let cmd = value.get("command").and_then(Value::as_str).unwrap_or_default();
            if cmd != command {
                return Err(CliError::Usage(format!("config was written by `{cmd}`, not `{command}`")));
            }
            echo.clone()
        }
        None => value,
    };
    serde_json::from_value(config).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}
