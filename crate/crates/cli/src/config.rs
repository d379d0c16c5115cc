//! Run configuration: one TOML file, then command-line overrides.

use std::path::Path;

use cpdual_core::crossed::Theta;
use cpdual_core::exec::Execution;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    #[value(alias = "markdown")]
    #[serde(alias = "markdown")]
    Md,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// For identities that hold exactly in the truncation.
    pub exact: f64,
    /// For floating-point residuals.
    pub float: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Truncation {
    /// Fock-space level `L`.
    pub fock_level: usize,
    /// Level for the explicit Kasparov-module model, capped by `fock_level`.
    pub kp_level: usize,
    /// Graded window `N_max`.
    pub window: usize,
    /// Fourier modes `M`.
    pub modes: usize,
    /// Rotation angle as a fraction of a full turn, e.g. `"0.3"`.
    pub theta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Asymptotics {
    pub k_max: usize,
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tolerances: Tolerances,
    pub truncation: Truncation,
    pub asymptotics: Asymptotics,
    pub format: Format,
    /// Base seed for random-graph suites.
    pub seed: u64,
    pub random_graphs: usize,
    pub execution: Execution,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { exact: 0.0, float: 1e-8 }
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { fock_level: 6, kp_level: 4, window: 64, modes: 8, theta: "0.3".into() }
    }
}

impl Default for Asymptotics {
    fn default() -> Self {
        Asymptotics { k_max: 3, n_max: 32 }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tolerances: Tolerances::default(),
            truncation: Truncation::default(),
            asymptotics: Asymptotics::default(),
            format: Format::Json,
            seed: 1000,
            random_graphs: 50,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn theta(&self) -> Result<Theta, ConfigError> {
        Theta::from_turns_str(&self.truncation.theta).map_err(|_| ConfigError::Invalid(format!("theta `{}`", self.truncation.theta)))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        let t = &self.tolerances;
        if !(t.exact >= 0.0 && t.exact.is_finite()) {
            return bad("exact tolerance must be finite and non-negative");
        }
        if !(t.float > 0.0 && t.float.is_finite()) {
            return bad("float tolerance must be positive");
        }
        let tr = &self.truncation;
        if tr.fock_level < 3 || tr.kp_level < 2 {
            return bad("fock_level must be at least 3 and kp_level at least 2");
        }
        if tr.window < 4 || tr.modes == 0 {
            return bad("window must be at least 4 and modes positive");
        }
        let a = &self.asymptotics;
        if a.k_max == 0 || a.n_max < 8 || a.n_max <= a.k_max {
            return bad("need k_max >= 1 and n_max >= max(8, k_max + 1)");
        }
        if self.random_graphs == 0 {
            return bad("random_graphs must be positive");
        }
        self.theta()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.truncation.theta = "0.125".into();
        c.format = Format::Md;
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), c.to_toml());
    }

    #[test]
    fn partial_files_and_limits() {
        let c = RunConfig::from_toml("seed = 7\n[truncation]\nwindow = 16\n").unwrap();
        assert_eq!((c.seed, c.truncation.window, c.truncation.modes), (7, 16, 8));
        assert!(RunConfig::from_toml("[truncation]\nwindow = 0\n").is_err());
        assert!(RunConfig::from_toml("[tolerances]\nfloat = -1.0\n").is_err());
        assert!(RunConfig::from_toml("bogus = 1\n").is_err());
        assert!(RunConfig::from_toml("[truncation]\ntheta = \"x\"\n").is_err());
    }
}
