//! Config-file loading and flag/file/default resolution.
//!
//! Values resolve with flags winning over the config file, and the config
//! file winning over built-in defaults. The config file comes from `--config`
//! or, failing that, the `ABF_DEFAULT_CONFIG` environment variable. The
//! resolved manifest is echoed to stderr by every command so no run is ever
//! ambiguous about its inputs.

use std::path::Path;

use serde::Deserialize;

use crate::CliError;

/// Optional overrides read from a TOML config file. Field names match the
/// corresponding command-line flags.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub steps: Option<u64>,
    pub keys: Option<u64>,
    pub update_rate: Option<f64>,
    pub query_rate: Option<f64>,
    pub distractor_rate: Option<f64>,
    pub stages: Option<u64>,
    pub seed: Option<u64>,
    pub vocab: Option<u64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub budget: Option<usize>,
    pub k: Option<usize>,
    pub dimension: Option<usize>,
    pub policy: Option<String>,
    pub policies: Option<Vec<String>>,
}

pub fn load_file_config(explicit: Option<&Path>) -> Result<FileConfig, CliError> {
    let path = match explicit {
        Some(path) => Some(path.to_path_buf()),
        None => std::env::var_os("ABF_DEFAULT_CONFIG").map(Into::into),
    };
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Data(format!("invalid config {}: {e}", path.display())))
}

/// Flag beats file beats default.
pub fn resolve<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_file_beats_default() {
        assert_eq!(resolve(Some(1), Some(2), 3), 1);
        assert_eq!(resolve(None, Some(2), 3), 2);
        assert_eq!(resolve::<u64>(None, None, 3), 3);
    }

    #[test]
    fn parses_partial_config() {
        let config: FileConfig = toml::from_str("steps = 100\nalpha = 0.5\n").unwrap();
        assert_eq!(config.steps, Some(100));
        assert_eq!(config.alpha, Some(0.5));
        assert_eq!(config.k, None);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("bogus = 1\n").is_err());
    }
}
