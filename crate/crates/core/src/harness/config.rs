use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ambiguity::AmbiguityModel;
use crate::differencing::FilterPolicy;
use crate::error::{Error, Result};
use crate::estimator::SolverConfig;
use crate::geometry::LayoutConfig;
use crate::measurement::{NoiseModel, Wavelength};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// Every link is LOS.
    #[serde(rename = "los")]
    LosOnly,
    #[serde(rename = "losnlos")]
    LosNlos,
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "los" => Ok(Scenario::LosOnly),
            "losnlos" | "los-nlos" | "los_nlos" => Ok(Scenario::LosNlos),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Full description of a Monte-Carlo campaign.
///
/// Loaded from TOML; every field is optional and falls back to its default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub layout: LayoutConfig,
    pub noise: NoiseModel,
    pub ambiguity: AmbiguityModel,
    pub solver: SolverConfig,
    pub wavelength: Wavelength,
    pub filter: FilterPolicy,
    pub n_drops: usize,
    pub ues_per_drop: usize,
    pub scenario: Scenario,
    pub master_seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            layout: LayoutConfig::default(),
            noise: NoiseModel::default(),
            ambiguity: AmbiguityModel::default(),
            solver: SolverConfig::default(),
            wavelength: Wavelength::default(),
            filter: FilterPolicy::all_links(),
            n_drops: 100,
            ues_per_drop: 100,
            scenario: Scenario::LosNlos,
            master_seed: 1,
        }
    }
}

impl CampaignConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: CampaignConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        if !self.noise.is_valid() {
            return Err(Error::Config("noise parameters must be finite and non-negative".into()));
        }
        if !self.ambiguity.is_valid() {
            return Err(Error::Config(format!(
                "ambiguity model needs 0 <= zeta <= 1 and eta >= 1, got zeta {} eta {}",
                self.ambiguity.zeta, self.ambiguity.eta
            )));
        }
        if !self.solver.is_valid() {
            return Err(Error::Config("solver needs epsilon > 0 and max_iterations >= 1".into()));
        }
        if !self.wavelength.is_valid() {
            return Err(Error::Config("carrier frequency must be positive".into()));
        }
        if self.filter.max_links < 3 {
            return Err(Error::Config("filter.max_links must keep at least 3 neighbors".into()));
        }
        if self.n_drops == 0 || self.ues_per_drop == 0 {
            return Err(Error::Config("n_drops and ues_per_drop must be positive".into()));
        }
        if self.n_drops.saturating_mul(self.ues_per_drop) < 100 {
            return Err(Error::Config(format!(
                "{} drops x {} UEs is below the 100 UEs needed for percentile reporting",
                self.n_drops, self.ues_per_drop
            )));
        }
        Ok(())
    }

    /// Noise model with the scenario applied.
    pub fn effective_noise(&self) -> NoiseModel {
        NoiseModel {
            nlos_enabled: self.scenario == Scenario::LosNlos,
            ..self.noise
        }
    }
}
