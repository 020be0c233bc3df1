//! Integer-ambiguity resolution and the wrong-fixing error model.
//!
//! A link is fixed wrongly with probability `zeta`. The error is drawn
//! uniformly from `{−N_t, …, N_t} \ {0}` cycles, with `N_t` either `η·N_e`
//! (the cycle count scaled by η) or `η` itself, depending on
//! [`MagnitudeMode`].

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::measurement::PhaseMeasurement;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MagnitudeMode {
    /// `N_t = η·N_e`, with `N_e` the link's true cycle count.
    CyclesTimesNe,
    /// `N_t = η` cycles.
    CyclesTimesEta,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmbiguityModel {
    pub zeta: f64,
    pub eta: u32,
    pub magnitude_mode: MagnitudeMode,
}

impl Default for AmbiguityModel {
    fn default() -> Self {
        Self {
            zeta: 0.0,
            eta: 3,
            magnitude_mode: MagnitudeMode::CyclesTimesEta,
        }
    }
}

impl AmbiguityModel {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.zeta) && self.eta >= 1
    }

    /// Bound `N_t` of the error support for a link with `n_e` true cycles.
    /// Never below one so the support is non-empty.
    pub fn error_bound(&self, n_e: i64) -> i64 {
        let eta = i64::from(self.eta);
        let bound = match self.magnitude_mode {
            MagnitudeMode::CyclesTimesNe => eta.saturating_mul(n_e.abs()),
            MagnitudeMode::CyclesTimesEta => eta,
        };
        bound.max(1)
    }
}

/// Observable with the stored cycle count restored, meters.
pub fn resolve_ideal(m: &PhaseMeasurement, lambda: f64) -> f64 {
    lambda * m.phi / TAU + lambda * m.integer_ambiguity as f64
}

/// Applies the wrong-fixing model to one link.
///
/// Two uniforms are drawn per call whatever the outcome, so runs that differ
/// only in `zeta` corrupt nested sets of links.
pub fn inject_ambiguity_error<R: Rng + ?Sized>(
    m: &PhaseMeasurement,
    model: &AmbiguityModel,
    rng: &mut R,
) -> PhaseMeasurement {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    if u >= model.zeta {
        return *m;
    }
    let bound = model.error_bound(m.integer_ambiguity - m.ambiguity_error);
    let k = ((v * (2 * bound) as f64) as i64).min(2 * bound - 1);
    let e = if k < bound { k - bound } else { k - bound + 1 };
    PhaseMeasurement {
        integer_ambiguity: m.integer_ambiguity + e,
        ambiguity_error: m.ambiguity_error + e,
        ..*m
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityOutcome {
    /// T: links collected.
    pub total_links: u64,
    /// E: links with a wrong fixing.
    pub corrupted_links: u64,
    /// Cycle error of every corrupted link, in tally order.
    pub corrupted_errors: Vec<i64>,
}

impl AmbiguityOutcome {
    /// ζ̂ = E/T, zero for an empty tally.
    pub fn empirical_zeta(&self) -> f64 {
        if self.total_links == 0 {
            0.0
        } else {
            self.corrupted_links as f64 / self.total_links as f64
        }
    }

    pub fn merge(&mut self, other: &AmbiguityOutcome) {
        self.total_links += other.total_links;
        self.corrupted_links += other.corrupted_links;
        self.corrupted_errors.extend_from_slice(&other.corrupted_errors);
    }
}

pub fn tally<'a, I>(links: I) -> AmbiguityOutcome
where
    I: IntoIterator<Item = &'a PhaseMeasurement>,
{
    let mut out = AmbiguityOutcome::default();
    for m in links {
        out.total_links += 1;
        if m.is_corrupted() {
            out.corrupted_links += 1;
            out.corrupted_errors.push(m.ambiguity_error);
        }
    }
    out
}
