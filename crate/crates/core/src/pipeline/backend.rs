// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::prompts::Prompt;
use super::Meaning;
use crate::model::ProcessModel;
use crate::patterns::PatternId;

pub const ENV_ENDPOINT: &str = "CPMR_LLM_ENDPOINT";
pub const ENV_MODEL: &str = "CPMR_LLM_MODEL";
pub const ENV_API_KEY: &str = "CPMR_LLM_API_KEY";
pub const ENV_TIMEOUT_SECS: &str = "CPMR_LLM_TIMEOUT_SECS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Identify,
    Derive,
    Apply,
    /// Single-shot apply of the raw wording.
    Baseline,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Identify => "identify",
            Stage::Derive => "derive",
            Stage::Apply => "apply",
            Stage::Baseline => "baseline",
        }
    }
}

/// Structured view of what a prompt was built from. Language-model backends
/// only read `prompt`; the offline backend only reads `context`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageContext {
    pub wording: Option<String>,
    pub catalog: Vec<PatternId>,
    pub pattern: Option<PatternId>,
    pub model: Option<ProcessModel>,
    pub meaning: Option<Meaning>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageRequest {
    pub stage: Stage,
    pub prompt: Prompt,
    pub context: StageContext,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
}

/// A redesign backend. Handles are shared between concurrent runs.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &StageRequest) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Llm,
    Mock,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "llm" => Ok(BackendKind::Llm),
            "mock" => Ok(BackendKind::Mock),
            other => Err(format!("unknown backend '{other}' (expected llm or mock)")),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Llm => "llm",
            BackendKind::Mock => "mock",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("llm backend needs an endpoint (set {ENV_ENDPOINT})")]
    MissingEndpoint,
    #[error("llm backend needs a model id (set {ENV_MODEL})")]
    MissingModel,
    #[error("invalid {ENV_TIMEOUT_SECS}: {0}")]
    BadTimeout(String),
}

impl BackendConfig {
    pub fn mock() -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            endpoint: None,
            model: None,
            api_key_env: ENV_API_KEY.to_string(),
            temperature: 0.0,
            timeout: Duration::from_secs(60),
        }
    }

    pub fn llm(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        BackendConfig { kind: BackendKind::Llm, endpoint: Some(endpoint.into()), model: Some(model.into()), ..Self::mock() }
    }

    /// Reads the `CPMR_LLM_*` variables through `lookup`.
    pub fn from_lookup(kind: BackendKind, lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut config = BackendConfig { kind, ..Self::mock() };
        config.endpoint = lookup(ENV_ENDPOINT).filter(|s| !s.trim().is_empty());
        config.model = lookup(ENV_MODEL).filter(|s| !s.trim().is_empty());
        if let Some(secs) = lookup(ENV_TIMEOUT_SECS) {
            let secs: u64 = secs.trim().parse().map_err(|_| ConfigError::BadTimeout(secs.clone()))?;
            config.timeout = Duration::from_secs(secs);
        }
        config.check()?;
        Ok(config)
    }

    pub fn from_env(kind: BackendKind) -> Result<Self, ConfigError> {
        Self::from_lookup(kind, |name| std::env::var(name).ok())
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if self.kind == BackendKind::Llm {
            if self.endpoint.is_none() {
                return Err(ConfigError::MissingEndpoint);
            }
            if self.model.is_none() {
                return Err(ConfigError::MissingModel);
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Box<dyn Backend>, ConfigError> {
        self.check()?;
        Ok(match self.kind {
            BackendKind::Mock => Box::new(super::mock::MockBackend::new()),
            BackendKind::Llm => Box::new(super::llm::LlmBackend::new(self.clone())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn llm_requires_endpoint_and_model() {
        let env = |pairs: &'static [(&'static str, &'static str)]| {
            move |k: &str| pairs.iter().find(|(n, _)| *n == k).map(|(_, v)| v.to_string())
        };
        assert_eq!(BackendConfig::from_lookup(BackendKind::Llm, env(&[])), Err(ConfigError::MissingEndpoint));
        assert_eq!(
            BackendConfig::from_lookup(BackendKind::Llm, env(&[(ENV_ENDPOINT, "http://x")])),
            Err(ConfigError::MissingModel)
        );
        let config = BackendConfig::from_lookup(
            BackendKind::Llm,
            env(&[(ENV_ENDPOINT, "http://x"), (ENV_MODEL, "m"), (ENV_TIMEOUT_SECS, "5")]),
        )
        .unwrap();
        assert_eq!(config.timeout, Duration::from_secs(5));
        assert_eq!(config.temperature, 0.0);
        assert!(BackendConfig::from_lookup(BackendKind::Mock, env(&[])).is_ok());
        assert!(matches!(
            BackendConfig::from_lookup(BackendKind::Mock, env(&[(ENV_TIMEOUT_SECS, "soon")])),
            Err(ConfigError::BadTimeout(_))
        ));
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("MOCK".parse::<BackendKind>(), Ok(BackendKind::Mock));
        assert!("gpt".parse::<BackendKind>().is_err());
    }
}
