//! Run configuration: a flat TOML file of `key = value` lines, overridden by
//! command-line flags. The merged result is written as
//! `effective_config.toml` into every output directory.
//!
//! Keys (all optional):
//!
//! | key                 | default        |
//! |---------------------|----------------|
//! | manifest            |                |
//! | bundle              |                |
//! | out                 |                |
//! | split               | "test"         |
//! | methods             | all classical  |
//! | seed                | 42             |
//! | grid_size           | 33             |
//! | grid_min, grid_max  | 0.01, 0.99     |
//! | max_dist            | 0.0075         |
//! | epochs              | 30             |
//! | batch_size          | 4              |
//! | lr                  | 0.001          |
//! | checkpoint_interval | 0 (off)        |
//! | lambda              | 0.0001         |
//! | tol                 | 0.0001         |
//! | max_epochs          | 200            |
//! | n_per_class         | 2000           |
//! | postprocess         | false          |
//! | min_component       | 5              |
//! | binary              | false          |
//! | n_images            | 4              |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub bundle: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub split: String,
    pub methods: Vec<String>,
    pub seed: u64,
    pub grid_size: usize,
    pub grid_min: f64,
    pub grid_max: f64,
    pub max_dist: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub checkpoint_interval: usize,
    pub lambda: f64,
    pub tol: f64,
    pub max_epochs: usize,
    pub n_per_class: usize,
    pub postprocess: bool,
    pub min_component: usize,
    pub binary: bool,
    pub n_images: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: None,
            bundle: None,
            out: None,
            split: "test".into(),
            methods: ["sobel", "prewitt", "roberts", "log", "zerocross", "canny"]
                .map(String::from)
                .to_vec(),
            seed: 42,
            grid_size: 33,
            grid_min: 0.01,
            grid_max: 0.99,
            max_dist: 0.0075,
            epochs: 30,
            batch_size: 4,
            lr: 1e-3,
            checkpoint_interval: 0,
            lambda: 1e-4,
            tol: 1e-4,
            max_epochs: 200,
            n_per_class: 2000,
            postprocess: false,
            min_component: 5,
            binary: false,
            n_images: 4,
        }
    }
}

impl RunConfig {
    /// Defaults, then the file at `path` if given.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }

    pub fn require<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a PathBuf, CliError> {
        value
            .as_ref()
            .ok_or_else(|| CliError::Usage(format!("missing required setting '{key}' (flag --{key} or config key)")))
    }

    /// Write the merged configuration into `dir`.
    pub fn echo(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
        let text = toml::to_string(self).map_err(|e| CliError::Internal(e.to_string()))?;
        let path = dir.join("effective_config.toml");
        std::fs::write(&path, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
    }
}

/// Replace `$target` with `$value` when the flag was given.
macro_rules! apply {
    ($cfg:ident, $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $field { $cfg.$field = v.into(); })+
    };
}
pub(crate) use apply;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_and_unknown_keys() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("run.toml");
        std::fs::write(&p, "seed = 7\nmethods = [\"sobel\"]\nlr = 0.01\n").unwrap();
        let c = RunConfig::load(Some(&p)).unwrap();
        assert_eq!((c.seed, c.lr, c.epochs), (7, 0.01, 30));
        assert_eq!(c.methods, vec!["sobel"]);
        std::fs::write(&p, "colour = 1\n").unwrap();
        assert!(matches!(RunConfig::load(Some(&p)), Err(CliError::Usage(_))));
    }

    #[test]
    fn echo_round_trips() {
        let d = tempfile::tempdir().unwrap();
        let c = RunConfig {
            manifest: Some("m.json".into()),
            ..RunConfig::default()
        };
        c.echo(d.path()).unwrap();
        let back = RunConfig::load(Some(&d.path().join("effective_config.toml"))).unwrap();
        assert_eq!(back, c);
    }
}
