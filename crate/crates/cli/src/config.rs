//! Config files: a flat table of flag defaults in TOML or JSON.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::commands::Failure;
use crate::inputs::Source;
use crate::{CanonKind, MethodArg};

/// Flag defaults read from `--config`. Command-line flags win over these;
/// string-valued inputs may also be written inline as tables.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub tol: Option<f64>,
    pub output: Option<PathBuf>,
    pub input: Option<serde_json::Value>,
    pub kind: Option<CanonKind>,
    pub target: Option<serde_json::Value>,
    pub profile: Option<serde_json::Value>,
    pub time: Option<f64>,
    pub schedule: Option<serde_json::Value>,
    pub max_step: Option<f64>,
    pub method: Option<MethodArg>,
    pub step_tol: Option<f64>,
    pub threshold: Option<f64>,
    pub start: Option<f64>,
    pub end: Option<f64>,
    pub samples: Option<usize>,
    /// Directory that relative paths in the file are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::validation(format!("cannot read config {}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let mut config: FileConfig = if is_toml {
            toml::from_str(&text)
                .map_err(|e| Failure::validation(format!("config {}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text)
                .map_err(|e| Failure::validation(format!("config {}: {e}", path.display())))?
        };
        config.base_dir = path.parent().map(Path::to_path_buf);
        if let Some(out) = &config.output {
            if out.is_relative() {
                config.output = config.base_dir.as_ref().map(|b| b.join(out));
            }
        }
        Ok(config)
    }

    /// The command-line value if given, else the config value.
    pub fn pick_input(
        &self,
        name: &str,
        flag: Option<String>,
        from_file: &Option<serde_json::Value>,
    ) -> Result<Source, Failure> {
        self.pick_optional(flag, from_file)
            .ok_or_else(|| Failure::validation(format!("missing --{name}")))
    }

    pub fn pick_optional(&self, flag: Option<String>, from_file: &Option<serde_json::Value>) -> Option<Source> {
        match (flag, from_file) {
            (Some(s), _) => Some(Source::Arg(s)),
            (None, Some(v)) => Some(Source::Config {
                value: v.clone(),
                base: self.base_dir.clone(),
            }),
            (None, None) => None,
        }
    }
}
