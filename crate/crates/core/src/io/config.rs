//! Run configuration: TOML with strict validation, unknown keys rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::field::JitterPolicy;
use crate::inference::{FitConfig, NoiseMode};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "noiseless")]
    Noiseless,
    #[serde(rename = "noisy-one-delta")]
    NoisyOneDelta,
    #[serde(rename = "noisy-multi-delta")]
    NoisyMultiDelta,
}

impl Mode {
    pub fn noise_mode(self) -> NoiseMode {
        match self {
            Mode::Noiseless => NoiseMode::Noiseless,
            Mode::NoisyOneDelta => NoiseMode::OneDelta,
            Mode::NoisyMultiDelta => NoiseMode::MultiDelta,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Noiseless => "noiseless",
            Mode::NoisyOneDelta => "noisy-one-delta",
            Mode::NoisyMultiDelta => "noisy-multi-delta",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "noiseless" => Ok(Mode::Noiseless),
            "noisy-one-delta" => Ok(Mode::NoisyOneDelta),
            "noisy-multi-delta" => Ok(Mode::NoisyMultiDelta),
            other => Err(format!(
                "unknown mode `{other}` (expected noiseless, noisy-one-delta or noisy-multi-delta)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_evals: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let base = FitConfig::default();
        Self {
            restarts: base.restarts,
            max_evals: base.max_evals,
            seed: base.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JitterConfig {
    pub initial: f64,
    pub max: f64,
}

impl Default for JitterConfig {
    fn default() -> Self {
        let policy = JitterPolicy::default();
        Self {
            initial: policy.initial,
            max: policy.cap,
        }
    }
}

impl JitterConfig {
    pub fn policy(&self) -> JitterPolicy {
        JitterPolicy {
            initial: self.initial,
            cap: self.max,
        }
    }
}

/// Everything a fit/predict run needs, validated before any computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Mode,
    /// Polynomial mean coefficients, constant term first; empty = zero mean.
    pub mean: Vec<f64>,
    /// Default prediction grid, `lo:hi:count`.
    pub grid: String,
    /// Derivative orders to predict by default.
    pub orders: Vec<usize>,
    pub optimizer: OptimizerConfig,
    pub jitter: JitterConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Noiseless,
            mean: Vec::new(),
            grid: "0:1:201".to_string(),
            orders: vec![0, 1, 2],
            optimizer: OptimizerConfig::default(),
            jitter: JitterConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.optimizer.restarts == 0 {
            return Err(CliError::validation("optimizer.restarts must be positive"));
        }
        if self.optimizer.max_evals == 0 {
            return Err(CliError::validation("optimizer.max_evals must be positive"));
        }
        if !(self.jitter.initial.is_finite() && self.jitter.initial > 0.0) {
            return Err(CliError::validation("jitter.initial must be positive"));
        }
        if !(self.jitter.max.is_finite() && self.jitter.max >= self.jitter.initial) {
            return Err(CliError::validation(
                "jitter.max must be at least jitter.initial",
            ));
        }
        super::parse_grid_spec(&self.grid)?;
        if !self.mean.iter().all(|c| c.is_finite()) {
            return Err(CliError::validation("mean coefficients must be finite"));
        }
        Ok(())
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            restarts: self.optimizer.restarts,
            max_evals: self.optimizer.max_evals,
            seed: self.optimizer.seed,
            jitter: self.jitter.policy(),
            ..FitConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_a_full_config() {
        let text = r#"
mode = "noisy-multi-delta"
mean = [0.0, 1.0]
grid = "0:2:101"
orders = [0, 1]

[optimizer]
restarts = 4
max_evals = 500
seed = 9

[jitter]
initial = 1e-10
max = 1e-5
"#;
        let config: RunConfig = toml::from_str(text).unwrap();
        config.validate().unwrap();
        assert_eq!(config.mode, Mode::NoisyMultiDelta);
        assert_eq!(config.optimizer.restarts, 4);
        assert_eq!(config.jitter.policy().cap, 1e-5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "mode = \"noiseless\"\nbogus = 1\n";
        assert!(toml::from_str::<RunConfig>(text).is_err());
        let nested = "[optimizer]\nrestartz = 3\n";
        assert!(toml::from_str::<RunConfig>(nested).is_err());
    }

    #[test]
    fn bad_values_fail_validation() {
        let config = RunConfig {
            optimizer: OptimizerConfig {
                restarts: 0,
                ..OptimizerConfig::default()
            },
            ..RunConfig::default()
        };
        assert!(config.validate().is_err());

        let config = RunConfig {
            grid: "0:1".into(),
            ..RunConfig::default()
        };
        assert!(config.validate().is_err());
    }
}
