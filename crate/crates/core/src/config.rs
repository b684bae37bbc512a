//! Run configuration, read from TOML. Every section and key is optional;
//! missing values take the defaults of the owning module.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::features::FeatureOptions;
use crate::forest::ForestParams;
use crate::range::PipelineOptions;
use crate::sim::{RadarConfig, ScenarioRanges};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationOptions {
    pub n_per_class: usize,
    pub seed: u64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            n_per_class: 90,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationOptions {
    pub folds: usize,
    pub seed: u64,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        Self { folds: 10, seed: 7 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub radar: RadarConfig,
    pub scenarios: ScenarioRanges,
    pub simulation: SimulationOptions,
    pub pipeline: PipelineOptions,
    pub features: FeatureOptions,
    pub forest: ForestParams,
    pub evaluation: EvaluationOptions,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::MaxFeatures;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn defaults_match_modules() {
        let c = RunConfig::default();
        assert_eq!(c.forest.n_estimators, 90);
        assert_eq!(c.forest.min_samples_split, 2);
        assert_eq!(c.forest.max_features, MaxFeatures::Sqrt);
        assert_eq!(c.evaluation.folds, 10);
        assert_eq!(c.simulation.n_per_class, 90);
        assert_eq!((c.pipeline.r_min, c.pipeline.r_max), (0.3, 0.8));
        assert_eq!(c.features.threshold, 0.04);
        assert_eq!(c.radar.carrier_freq, 60e9);
    }

    #[test]
    fn partial_override_and_echo() {
        let c =
            RunConfig::from_toml("[forest]\nn_estimators = 5\n[radar]\nsnr_db = 30.0\n").unwrap();
        assert_eq!(c.forest.n_estimators, 5);
        assert_eq!(c.radar.snr_db, 30.0);
        assert_eq!(c.radar.bandwidth, 4e9);
        let echoed = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(echoed, c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[forest]\ntrees = 5\n").is_err());
    }
}
