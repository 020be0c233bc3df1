//! Carrier-phase observable synthesis.
//!
//! A link between gNB `i` and UE `m` produces, in meters,
//!
//! ```text
//! (λ/2π)·φ + λ·N = d + c·(b_m − b_i) + ν
//! ```
//!
//! The stored phase `phi` carries everything except the integer cycle count
//! `N = floor(d/λ)`, which is kept separately. Ideal ambiguity resolution is
//! then exactly the act of adding `λ·N` back.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{distance, GnbId, GnbNode, UeId, UeNode};
use crate::SPEED_OF_LIGHT;

/// Carrier wavelength, derived from the carrier frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wavelength {
    /// Hz.
    pub carrier_frequency: f64,
}

impl Default for Wavelength {
    fn default() -> Self {
        Self { carrier_frequency: 3.5e9 }
    }
}

impl Wavelength {
    pub fn from_frequency(carrier_frequency: f64) -> Self {
        Self { carrier_frequency }
    }

    /// Meters.
    pub fn lambda(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    pub fn is_valid(&self) -> bool {
        self.carrier_frequency.is_finite() && self.carrier_frequency > 0.0
    }
}

/// Parametric stand-in for the propagation channel.
///
/// Every link draws a LOS state, a Gaussian phase error with standard
/// deviation `sigma_los` or `sigma_nlos` (radians) and, on NLOS links, an
/// exponentially distributed excess path with mean `nlos_excess_mean` meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub sigma_los: f64,
    pub sigma_nlos: f64,
    pub nlos_excess_mean: f64,
    pub los_probability_k: f64,
    pub nlos_enabled: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma_los: DEFAULT_SIGMA_LOS,
            sigma_nlos: DEFAULT_SIGMA_NLOS,
            nlos_excess_mean: DEFAULT_NLOS_EXCESS_MEAN,
            los_probability_k: 78.0,
            nlos_enabled: true,
        }
    }
}

/// Per-link LOS phase noise (rad). A double difference sums four links, so
/// its 90th-percentile magnitude is `1.645 · 2σ ≈ 1.4` rad.
pub const DEFAULT_SIGMA_LOS: f64 = 0.4256;
/// NLOS pair fitted with `calibrate` on the default LOS/NLOS campaign so the
/// 90th-percentile DD phase error is 3.4 rad.
pub const DEFAULT_SIGMA_NLOS: f64 = 1.305;
pub const DEFAULT_NLOS_EXCESS_MEAN: f64 = 0.005;

impl NoiseModel {
    /// Noise-free model: every link is LOS with zero error.
    pub fn noiseless() -> Self {
        Self {
            sigma_los: 0.0,
            sigma_nlos: 0.0,
            nlos_excess_mean: 0.0,
            los_probability_k: 78.0,
            nlos_enabled: false,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.sigma_los, self.sigma_nlos, self.nlos_excess_mean, self.los_probability_k]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseMeasurement {
    pub gnb_id: GnbId,
    pub ue_id: UeId,
    /// Observable with the integer cycles removed, radians.
    pub phi: f64,
    pub true_distance: f64,
    pub los: bool,
    /// Integer cycle count used for resolution; `floor(d/λ)` unless corrupted.
    pub integer_ambiguity: i64,
    /// Cycles added by a wrong fixing, zero for a correct one.
    pub ambiguity_error: i64,
    /// Additive range error ν, meters.
    pub noise: f64,
    pub ue_clock_bias: f64,
    pub gnb_clock_bias: f64,
}

impl PhaseMeasurement {
    /// `(λ/2π)·φ`, meters.
    pub fn fractional_meters(&self, lambda: f64) -> f64 {
        lambda * self.phi / TAU
    }

    /// Phase with the stored cycle count restored, radians.
    pub fn resolved_phase(&self) -> f64 {
        self.phi + TAU * self.integer_ambiguity as f64
    }

    /// Clock contribution `c·(b_m − b_i)`, meters.
    pub fn clock_term(&self) -> f64 {
        SPEED_OF_LIGHT * (self.ue_clock_bias - self.gnb_clock_bias)
    }

    pub fn is_corrupted(&self) -> bool {
        self.ambiguity_error != 0
    }
}

/// All links measured by one UE.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub ue_id: UeId,
    pub serving_gnb_id: GnbId,
    pub measurements: Vec<PhaseMeasurement>,
}

impl MeasurementSet {
    pub fn get(&self, gnb_id: GnbId) -> Option<&PhaseMeasurement> {
        self.measurements.iter().find(|m| m.gnb_id == gnb_id)
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }
}

/// Unwrapped phase of a path of length `d`, radians.
pub fn true_phase(d: f64, wavelength: &Wavelength) -> f64 {
    TAU * d / wavelength.lambda()
}

/// Range equivalent of a phase error, meters.
pub fn phase_error_to_distance(phase_error: f64, wavelength: &Wavelength) -> f64 {
    wavelength.lambda() * phase_error / TAU
}

/// Inverse of [`phase_error_to_distance`].
pub fn distance_to_phase(meters: f64, wavelength: &Wavelength) -> f64 {
    TAU * meters / wavelength.lambda()
}

/// Draws the LOS state of a link with horizontal length `d2d`.
///
/// `P(LOS) = exp(−d2d / k)`. One uniform is consumed even when NLOS is
/// disabled so that both scenarios see the same downstream draws.
pub fn los_state<R: Rng + ?Sized>(d2d: f64, model: &NoiseModel, rng: &mut R) -> bool {
    let u: f64 = rng.random();
    if !model.nlos_enabled {
        return true;
    }
    let p = if model.los_probability_k > 0.0 {
        (-d2d / model.los_probability_k).exp()
    } else if d2d == 0.0 {
        1.0
    } else {
        0.0
    };
    u < p
}

/// Synthesizes one link observable.
///
/// Draw order is fixed (LOS uniform, Gaussian, exponential) regardless of
/// the resulting state.
pub fn synthesize_measurement<R: Rng + ?Sized>(
    gnb: &GnbNode,
    ue: &UeNode,
    wavelength: &Wavelength,
    model: &NoiseModel,
    rng: &mut R,
) -> PhaseMeasurement {
    let lambda = wavelength.lambda();
    let d = distance(&gnb.position, &ue.position);
    let los = los_state(gnb.position.horizontal_distance(&ue.position), model, rng);
    let gauss: f64 = StandardNormal.sample(rng);
    let excess: f64 = Exp1.sample(rng);

    let sigma = if los { model.sigma_los } else { model.sigma_nlos };
    let mut noise = lambda * sigma * gauss / TAU;
    if !los {
        noise += model.nlos_excess_mean * excess;
    }

    let integer_ambiguity = (d / lambda).floor() as i64;
    let clock = SPEED_OF_LIGHT * (ue.clock_bias - gnb.clock_bias);
    let fractional = d + clock + noise - lambda * integer_ambiguity as f64;

    PhaseMeasurement {
        gnb_id: gnb.id,
        ue_id: ue.id,
        phi: TAU * fractional / lambda,
        true_distance: d,
        los,
        integer_ambiguity,
        ambiguity_error: 0,
        noise,
        ue_clock_bias: ue.clock_bias,
        gnb_clock_bias: gnb.clock_bias,
    }
}

/// Measures every gNB from one UE.
pub fn measure_all<R: Rng + ?Sized>(
    ue: &UeNode,
    gnbs: &[GnbNode],
    wavelength: &Wavelength,
    model: &NoiseModel,
    rng: &mut R,
) -> MeasurementSet {
    MeasurementSet {
        ue_id: ue.id,
        serving_gnb_id: ue.serving_gnb,
        measurements: gnbs
            .iter()
            .map(|g| synthesize_measurement(g, ue, wavelength, model, rng))
            .collect(),
    }
}
