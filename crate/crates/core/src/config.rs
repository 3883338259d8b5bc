//! Agent configuration and the universal parameter-decay schedule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simworld::RewardConfig;

/// One decay step of the recurrence `x <- rate * (final - x) + x`.
///
/// Repeated application moves `x` monotonically toward `final`; `rate` must
/// lie in `[0, 1]` (enforced when a configuration is loaded).
pub fn decay_step(x: f64, rate: f64, final_value: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&rate), "decay rate out of range");
    rate * (final_value - x) + x
}

/// Init/rate/final triple for one decaying parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub init: f64,
    pub rate: f64,
    #[serde(rename = "final")]
    pub final_value: f64,
}

impl Schedule {
    pub const fn new(init: f64, rate: f64, final_value: f64) -> Self {
        Self {
            init,
            rate,
            final_value,
        }
    }

    /// Advances a current value one step along this schedule.
    pub fn step(&self, x: f64) -> f64 {
        decay_step(x, self.rate, self.final_value)
    }

    fn validate(&self, name: &str, errors: &mut Vec<ConfigError>) {
        if !self.rate.is_finite() || !(0.0..=1.0).contains(&self.rate) {
            errors.push(ConfigError::invalid(
                format!("{name}.rate"),
                format!("must be in [0, 1], got {}", self.rate),
            ));
        }
        if !self.init.is_finite() {
            errors.push(ConfigError::invalid(format!("{name}.init"), "must be finite"));
        }
        if !self.final_value.is_finite() {
            errors.push(ConfigError::invalid(format!("{name}.final"), "must be finite"));
        }
    }
}

/// Current values of the three decaying parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleState {
    pub alpha: f64,
    pub tau: f64,
    pub rho: f64,
}

impl ScheduleState {
    /// Initial values from a configuration.
    pub fn initial(cfg: &AgentConfig) -> Self {
        Self {
            alpha: cfg.alpha.init,
            tau: cfg.tau.init,
            rho: cfg.rho.init,
        }
    }

    /// Advances all three parameters by one decision step.
    pub fn advance(&mut self, cfg: &AgentConfig) {
        self.alpha = cfg.alpha.step(self.alpha);
        self.tau = cfg.tau.step(self.tau);
        self.rho = cfg.rho.step(self.rho);
    }
}

/// Full agent configuration with defaults matching the reference settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    /// Forgetting factor of the TD target.
    pub gamma: f64,
    /// Lower TD-error threshold (bad decision).
    pub t_lower: f64,
    /// Upper TD-error threshold (good decision).
    pub t_upper: f64,
    /// Total number of training decision steps.
    pub t_max: u32,
    /// Reward coefficients and target speed.
    pub reward: RewardConfig,
    /// Learning-rate schedule.
    pub alpha: Schedule,
    /// Exploration-temperature schedule.
    pub tau: Schedule,
    /// Similarity-threshold schedule.
    pub rho: Schedule,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            t_lower: -10.0,
            t_upper: -5.0,
            t_max: 4500,
            reward: RewardConfig::default(),
            alpha: Schedule::new(0.99, 1e-5, 0.01),
            tau: Schedule::new(0.5, 7e-3, 0.99),
            rho: Schedule::new(0.1, 3e-7, 0.01),
        }
    }
}

impl AgentConfig {
    /// Checks every invariant, reporting the first offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        if !self.gamma.is_finite() || !(0.0..1.0).contains(&self.gamma) {
            errors.push(ConfigError::invalid(
                "gamma",
                format!("must be in [0, 1), got {}", self.gamma),
            ));
        }
        if !(self.t_lower < self.t_upper) {
            errors.push(ConfigError::invalid(
                "t_lower",
                format!(
                    "must be strictly below t_upper ({} >= {})",
                    self.t_lower, self.t_upper
                ),
            ));
        }
        if self.t_max == 0 {
            errors.push(ConfigError::invalid("t_max", "must be positive"));
        }
        self.reward.validate(&mut errors);
        self.alpha.validate("alpha", &mut errors);
        self.tau.validate("tau", &mut errors);
        self.rho.validate("rho", &mut errors);
        for (name, value) in [
            ("alpha.init", self.alpha.init),
            ("alpha.final", self.alpha.final_value),
            ("tau.init", self.tau.init),
            ("tau.final", self.tau.final_value),
        ] {
            if !(0.0..=1.0).contains(&value) {
                errors.push(ConfigError::invalid(
                    name,
                    format!("must be in [0, 1], got {value}"),
                ));
            }
        }
        for (name, value) in [("rho.init", self.rho.init), ("rho.final", self.rho.final_value)] {
            if !(value > 0.0) {
                errors.push(ConfigError::invalid(
                    name,
                    format!("must be positive, got {value}"),
                ));
            }
        }
        match errors.into_iter().next() {
            None => Ok(()),
            Some(first) => Err(first),
        }
    }

    /// Serializes the configuration back to its document form.
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Parses and validates a configuration document. Missing fields default.
pub fn load_config(document: &str) -> Result<AgentConfig, ConfigError> {
    let cfg: AgentConfig = toml::from_str(document)?;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
