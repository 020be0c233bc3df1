//! Parameter sweeps and noise calibration on top of [`run_campaign`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::campaign::run_campaign;
use super::config::CampaignConfig;
use super::stats::{Metric, Percentiles, UeCounts};

/// A scalar knob of [`CampaignConfig`] that sweeps and calibration can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parameter {
    Zeta,
    SigmaLos,
    SigmaNlos,
    NlosExcessMean,
}

impl Parameter {
    pub fn name(self) -> &'static str {
        match self {
            Parameter::Zeta => "zeta",
            Parameter::SigmaLos => "sigma_los",
            Parameter::SigmaNlos => "sigma_nlos",
            Parameter::NlosExcessMean => "nlos_excess_mean",
        }
    }

    pub fn get(self, config: &CampaignConfig) -> f64 {
        match self {
            Parameter::Zeta => config.ambiguity.zeta,
            Parameter::SigmaLos => config.noise.sigma_los,
            Parameter::SigmaNlos => config.noise.sigma_nlos,
            Parameter::NlosExcessMean => config.noise.nlos_excess_mean,
        }
    }

    pub fn set(self, config: &mut CampaignConfig, value: f64) {
        match self {
            Parameter::Zeta => config.ambiguity.zeta = value,
            Parameter::SigmaLos => config.noise.sigma_los = value,
            Parameter::SigmaNlos => config.noise.sigma_nlos = value,
            Parameter::NlosExcessMean => config.noise.nlos_excess_mean = value,
        }
    }
}

impl std::str::FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zeta" => Ok(Parameter::Zeta),
            "sigma" | "sigma_los" => Ok(Parameter::SigmaLos),
            "sigma_nlos" => Ok(Parameter::SigmaNlos),
            "nlos_excess" | "nlos_excess_mean" => Ok(Parameter::NlosExcessMean),
            other => Err(Error::Config(format!("unknown parameter '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub percentiles: BTreeMap<String, Percentiles>,
    pub empirical_zeta: f64,
    pub counts: UeCounts,
}

/// Runs one campaign per value of `parameter`, everything else held fixed.
pub fn sweep(base: &CampaignConfig, parameter: Parameter, values: &[f64]) -> Result<Vec<SweepPoint>> {
    values
        .iter()
        .map(|&value| {
            let mut config = base.clone();
            parameter.set(&mut config, value);
            let stats = run_campaign(&config)?;
            Ok(SweepPoint {
                value,
                percentiles: stats.percentiles.clone(),
                empirical_zeta: stats.ambiguity_tally.empirical_zeta(),
                counts: stats.counts,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub parameter: Parameter,
    pub value: f64,
    pub target: f64,
    /// p90 of |DD phase error| at `value`, radians.
    pub achieved: f64,
    pub evaluations: usize,
}

fn phase_p90(config: &CampaignConfig) -> Result<f64> {
    run_campaign(config)?.percentile(Metric::DdPhase, 0.9)
}

/// Bisects `parameter` inside `[lo, hi]` until the 90th-percentile
/// double-differenced phase error is within `tolerance` (relative) of `target`.
///
/// The phase error is assumed non-decreasing in the parameter; common random
/// numbers across evaluations make that hold exactly for the noise scales.
pub fn calibrate(
    base: &CampaignConfig,
    parameter: Parameter,
    target: f64,
    (mut lo, mut hi): (f64, f64),
    tolerance: f64,
    max_evaluations: usize,
) -> Result<Calibration> {
    if !(target > 0.0 && lo < hi && tolerance > 0.0) {
        return Err(Error::Config("calibration needs target > 0, lo < hi and tolerance > 0".into()));
    }
    let eval = |v: f64| {
        let mut c = base.clone();
        parameter.set(&mut c, v);
        phase_p90(&c)
    };
    let f_lo = eval(lo)?;
    let f_hi = eval(hi)?;
    let mut evaluations = 2;
    if !(f_lo <= target && target <= f_hi) {
        return Err(Error::Config(format!(
            "target {target} not bracketed: {} in [{lo}, {hi}] gives [{f_lo:.4}, {f_hi:.4}]",
            parameter.name()
        )));
    }
    let mut best = if (f_lo - target).abs() < (f_hi - target).abs() { (lo, f_lo) } else { (hi, f_hi) };
    while evaluations < max_evaluations && (best.1 - target).abs() > tolerance * target {
        let mid = 0.5 * (lo + hi);
        let f = eval(mid)?;
        evaluations += 1;
        if (f - target).abs() < (best.1 - target).abs() {
            best = (mid, f);
        }
        if f < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Calibration { parameter, value: best.0, target, achieved: best.1, evaluations })
}
