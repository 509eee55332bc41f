//! TOML run configuration; command-line flags override file values.

use std::path::{Path, PathBuf};

use ccreport::affect::{PairwiseCorrection, SalienceConfig, SalienceMode};
use ccreport::reportgen::{ComparisonRule, Locale, SectionToggles};
use ccreport::Error;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub locale: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub norms: Option<PathBuf>,
    pub affect_norms: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub rule: Option<ComparisonRule>,
    pub sections: Option<SectionToggles>,
    pub affect: AffectConfig,
    pub llm: LlmConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffectConfig {
    pub mode: Option<SalienceMode>,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub pairwise_correction: Option<PairwiseCorrection>,
}

impl AffectConfig {
    pub fn salience(&self) -> SalienceConfig {
        let d = SalienceConfig::default();
        SalienceConfig {
            alpha: self.alpha.unwrap_or(d.alpha),
            mode: self.mode.unwrap_or(d.mode),
            tau: self.tau.unwrap_or(d.tau),
            pairwise_correction: self.pairwise_correction.unwrap_or(d.pairwise_correction),
        }
    }
}

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_MODEL: &str = "gpt-4";
pub const DEFAULT_KEY_ENV: &str = "CCREPORT_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub enabled: bool,
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_s: u64,
    pub max_retries: u32,
    /// Replays a recorded response instead of calling the service.
    pub replay: Option<PathBuf>,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            enabled: false,
            endpoint: DEFAULT_ENDPOINT.into(),
            model: DEFAULT_MODEL.into(),
            api_key_env: DEFAULT_KEY_ENV.into(),
            timeout_s: 120,
            max_retries: 3,
            replay: None,
        }
    }
}

pub fn load(path: &Path) -> Result<FileConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn parse_locale(code: &str) -> Result<Locale, Error> {
    Locale::parse(code).ok_or_else(|| Error::Config(format!("unknown locale `{code}`")))
}
