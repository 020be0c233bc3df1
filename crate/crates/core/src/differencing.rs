//! Single and double differencing of carrier-phase observables.
//!
//! Single differences (neighbor minus serving gNB at one UE) cancel the UE
//! clock. Differencing a target UE's single differences against those of a
//! reference UE at a known position then cancels both gNB clocks, leaving
//! pure range-difference geometry plus noise.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GnbId, GnbNode, Position3D, UeId};
use crate::measurement::MeasurementSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleDiff {
    pub ue_id: UeId,
    pub neighbor_gnb_id: GnbId,
    pub serving_gnb_id: GnbId,
    /// `φ_i − φ_j` on resolved phases, radians.
    pub value: f64,
    /// `d_i − d_j` from true geometry, meters.
    pub true_delta_distance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleDiff {
    pub target_ue_id: UeId,
    pub reference_ue_id: UeId,
    pub neighbor_gnb_id: GnbId,
    pub serving_gnb_id: GnbId,
    /// `Δφ_m − Δφ_n`, radians.
    pub value: f64,
    /// Reference UE range difference `Δd_n`, known from fixed positions.
    pub reference_delta_distance: f64,
    /// `Δd_m − Δd_n` from true geometry; simulation truth, not used by the solver.
    pub true_value_meters: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleDiffSet {
    pub target_ue_id: UeId,
    pub serving_gnb_id: GnbId,
    pub reference_ue_id: UeId,
    pub diffs: Vec<DoubleDiff>,
    pub gnb_positions: BTreeMap<GnbId, Position3D>,
}

impl DoubleDiffSet {
    pub fn serving_position(&self) -> Option<Position3D> {
        self.gnb_positions.get(&self.serving_gnb_id).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterPolicy {
    pub los_only: bool,
    /// Maximum number of neighbor links kept besides the serving link.
    pub max_links: usize,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        Self { los_only: true, max_links: 8 }
    }
}

impl FilterPolicy {
    /// Keeps every link; campaigns use this unless configured otherwise.
    pub fn all_links() -> Self {
        Self { los_only: false, max_links: 1024 }
    }
}

/// Single differences against the set's own serving gNB.
pub fn single_difference(set: &MeasurementSet) -> Result<Vec<SingleDiff>> {
    single_difference_against(set, set.serving_gnb_id)
}

/// Single differences against an arbitrary pivot gNB.
///
/// Reference UEs are differenced against the target UE's serving gNB, which
/// need not be their own.
pub fn single_difference_against(set: &MeasurementSet, serving: GnbId) -> Result<Vec<SingleDiff>> {
    let pivot = set.get(serving).ok_or_else(|| {
        Error::MissingMeasurement(format!("UE {} has no measurement of gNB {serving}", set.ue_id))
    })?;
    let pivot_phase = pivot.resolved_phase();
    Ok(set
        .measurements
        .iter()
        .filter(|m| m.gnb_id != serving)
        .map(|m| SingleDiff {
            ue_id: set.ue_id,
            neighbor_gnb_id: m.gnb_id,
            serving_gnb_id: serving,
            value: m.resolved_phase() - pivot_phase,
            true_delta_distance: m.true_distance - pivot.true_distance,
        })
        .collect())
}

/// Double differences over the neighbors common to both lists.
///
/// Diffs follow the order of `target`. Needs at least three common neighbors.
pub fn double_difference(
    target: &[SingleDiff],
    reference: &[SingleDiff],
    gnbs: &[GnbNode],
) -> Result<DoubleDiffSet> {
    let (first_t, first_r) = match (target.first(), reference.first()) {
        (Some(t), Some(r)) => (t, r),
        _ => {
            return Err(Error::InsufficientGeometry(
                "double differencing needs non-empty single-difference lists".into(),
            ))
        }
    };
    let serving = first_t.serving_gnb_id;
    if target.iter().chain(reference).any(|s| s.serving_gnb_id != serving) {
        return Err(Error::InsufficientGeometry(
            "target and reference single differences use different pivot gNBs".into(),
        ));
    }

    let by_neighbor: BTreeMap<GnbId, &SingleDiff> =
        reference.iter().map(|s| (s.neighbor_gnb_id, s)).collect();
    let diffs: Vec<DoubleDiff> = target
        .iter()
        .filter_map(|t| {
            by_neighbor.get(&t.neighbor_gnb_id).map(|r| DoubleDiff {
                target_ue_id: t.ue_id,
                reference_ue_id: r.ue_id,
                neighbor_gnb_id: t.neighbor_gnb_id,
                serving_gnb_id: serving,
                value: t.value - r.value,
                reference_delta_distance: r.true_delta_distance,
                true_value_meters: t.true_delta_distance - r.true_delta_distance,
            })
        })
        .collect();
    if diffs.len() < 3 {
        return Err(Error::InsufficientGeometry(format!(
            "only {} common neighbor gNBs, need 3",
            diffs.len()
        )));
    }

    let mut gnb_positions = BTreeMap::new();
    for id in diffs.iter().map(|d| d.neighbor_gnb_id).chain(std::iter::once(serving)) {
        let g = gnbs.iter().find(|g| g.id == id).ok_or_else(|| {
            Error::MissingMeasurement(format!("gNB {id} not present in deployment"))
        })?;
        gnb_positions.insert(id, g.position);
    }

    Ok(DoubleDiffSet {
        target_ue_id: first_t.ue_id,
        serving_gnb_id: serving,
        reference_ue_id: first_r.ue_id,
        diffs,
        gnb_positions,
    })
}

/// Keeps the serving link plus at most `max_links` neighbors.
///
/// Neighbors are ranked LOS first, then by distance, then by gNB id. The
/// output lists the serving link first, then neighbors in rank order.
pub fn filter_measurements(set: &MeasurementSet, policy: &FilterPolicy) -> Result<MeasurementSet> {
    let serving = set.get(set.serving_gnb_id).ok_or_else(|| {
        Error::MissingMeasurement(format!("UE {} has no serving measurement", set.ue_id))
    })?;
    let mut neighbors: Vec<_> = set
        .measurements
        .iter()
        .filter(|m| m.gnb_id != set.serving_gnb_id && (m.los || !policy.los_only))
        .collect();
    neighbors.sort_by(|a, b| {
        b.los
            .cmp(&a.los)
            .then(a.true_distance.total_cmp(&b.true_distance))
            .then(a.gnb_id.cmp(&b.gnb_id))
    });
    neighbors.truncate(policy.max_links);

    let mut measurements = Vec::with_capacity(neighbors.len() + 1);
    measurements.push(*serving);
    measurements.extend(neighbors.into_iter().copied());
    if measurements.len() < 4 {
        return Err(Error::InsufficientGeometry(format!(
            "UE {} keeps only {} links after filtering, need 4",
            set.ue_id,
            measurements.len()
        )));
    }
    Ok(MeasurementSet {
        ue_id: set.ue_id,
        serving_gnb_id: set.serving_gnb_id,
        measurements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_layout, LayoutConfig, UeKind, UeNode};
    use crate::measurement::{measure_all, NoiseModel, PhaseMeasurement, Wavelength};
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::TAU;

    fn meas(gnb_id: GnbId, los: bool, d: f64) -> PhaseMeasurement {
        PhaseMeasurement {
            gnb_id,
            ue_id: 0,
            phi: 1.0,
            true_distance: d,
            los,
            integer_ambiguity: 0,
            ambiguity_error: 0,
            noise: 0.0,
            ue_clock_bias: 0.0,
            gnb_clock_bias: 0.0,
        }
    }

    fn scene(seed: u64) -> (crate::geometry::Deployment, Wavelength) {
        (generate_layout(&LayoutConfig::default(), 5, seed).unwrap(), Wavelength::default())
    }

    fn with_ue_bias(ue: &UeNode, bias: f64) -> UeNode {
        UeNode { clock_bias: bias, ..*ue }
    }

    #[test]
    fn identical_measurements_give_zero_single_diffs() {
        let set = MeasurementSet {
            ue_id: 0,
            serving_gnb_id: 2,
            measurements: (0..6).map(|i| meas(i, true, 10.0)).collect(),
        };
        let sd = single_difference(&set).unwrap();
        assert_eq!(sd.len(), 5);
        assert!(sd.iter().all(|s| s.value == 0.0 && s.neighbor_gnb_id != 2));
    }

    #[test]
    fn missing_serving_is_an_error() {
        let set = MeasurementSet {
            ue_id: 0,
            serving_gnb_id: 9,
            measurements: (0..6).map(|i| meas(i, true, 10.0)).collect(),
        };
        assert!(matches!(single_difference(&set), Err(Error::MissingMeasurement(_))));
        assert!(filter_measurements(&set, &FilterPolicy::default()).is_err());
    }

    #[test]
    fn noiseless_single_diff_keeps_only_gnb_clock_terms() {
        let (d, w) = scene(1);
        let ue = d.target_ues[0];
        let set = measure_all(&ue, &d.gnbs, &w, &NoiseModel::noiseless(), &mut rng::seeded(0));
        for s in single_difference(&set).unwrap() {
            let gi = d.gnb(s.neighbor_gnb_id).unwrap();
            let gj = d.gnb(s.serving_gnb_id).unwrap();
            let expected = s.true_delta_distance + crate::SPEED_OF_LIGHT * (gj.clock_bias - gi.clock_bias);
            assert!((w.lambda() * s.value / TAU - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn single_diff_independent_of_ue_clock() {
        let (d, w) = scene(2);
        let ue = d.target_ues[1];
        let a = single_difference(&measure_all(&ue, &d.gnbs, &w, &NoiseModel::default(), &mut rng::seeded(5))).unwrap();
        let b = single_difference(&measure_all(&with_ue_bias(&ue, ue.clock_bias + 5e-6), &d.gnbs, &w, &NoiseModel::default(), &mut rng::seeded(5))).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((w.lambda() * (x.value - y.value) / TAU).abs() < 1e-9);
        }
    }

    fn dd_for(d: &crate::geometry::Deployment, w: &Wavelength, model: &NoiseModel, target: &UeNode, reference: &UeNode, seed: u64) -> DoubleDiffSet {
        let t = measure_all(target, &d.gnbs, w, model, &mut rng::seeded(seed));
        let r = measure_all(reference, &d.gnbs, w, model, &mut rng::seeded(seed + 1));
        let serving = target.serving_gnb;
        double_difference(
            &single_difference_against(&t, serving).unwrap(),
            &single_difference_against(&r, serving).unwrap(),
            &d.gnbs,
        )
        .unwrap()
    }

    #[test]
    fn noiseless_double_diff_is_pure_geometry() {
        let (d, w) = scene(3);
        let target = d.target_ues[2];
        let reference = d.reference_ues[0];
        let set = dd_for(&d, &w, &NoiseModel::noiseless(), &target, &reference, 9);
        assert_eq!(set.diffs.len(), d.gnbs.len() - 1);
        assert_eq!(set.gnb_positions.len(), d.gnbs.len());
        for dd in &set.diffs {
            assert!((w.lambda() * dd.value / TAU - dd.true_value_meters).abs() < 1e-9);
            assert_ne!(dd.neighbor_gnb_id, set.serving_gnb_id);
        }
    }

    #[test]
    fn double_diff_of_identical_lists_is_zero() {
        let (d, w) = scene(4);
        let t = measure_all(&d.target_ues[0], &d.gnbs, &w, &NoiseModel::default(), &mut rng::seeded(1));
        let sd = single_difference(&t).unwrap();
        let set = double_difference(&sd, &sd, &d.gnbs).unwrap();
        assert!(set.diffs.iter().all(|x| x.value == 0.0));
    }

    #[test]
    fn gnb_clock_perturbation_leaves_double_diffs_unchanged() {
        let (mut d, w) = scene(5);
        let target = d.target_ues[3];
        let reference = d.reference_ues[1];
        let base = dd_for(&d, &w, &NoiseModel::default(), &target, &reference, 21);
        d.gnbs[4].clock_bias += 10e-6;
        let moved = dd_for(&d, &w, &NoiseModel::default(), &target, &reference, 21);
        for (a, b) in base.diffs.iter().zip(&moved.diffs) {
            assert!((w.lambda() * (a.value - b.value) / TAU).abs() < 1e-9);
        }
    }

    #[test]
    fn swapping_target_and_reference_negates() {
        let (d, w) = scene(6);
        let serving = d.target_ues[0].serving_gnb;
        let t = single_difference_against(&measure_all(&d.target_ues[0], &d.gnbs, &w, &NoiseModel::default(), &mut rng::seeded(1)), serving).unwrap();
        let r = single_difference_against(&measure_all(&d.reference_ues[0], &d.gnbs, &w, &NoiseModel::default(), &mut rng::seeded(2)), serving).unwrap();
        let a = double_difference(&t, &r, &d.gnbs).unwrap();
        let b = double_difference(&r, &t, &d.gnbs).unwrap();
        for (x, y) in a.diffs.iter().zip(&b.diffs) {
            assert_eq!(x.value, -y.value);
        }
    }

    #[test]
    fn too_few_common_neighbors() {
        let (d, w) = scene(7);
        let serving = d.target_ues[0].serving_gnb;
        let t = single_difference_against(&measure_all(&d.target_ues[0], &d.gnbs, &w, &NoiseModel::default(), &mut rng::seeded(1)), serving).unwrap();
        let r = single_difference_against(&measure_all(&d.reference_ues[0], &d.gnbs, &w, &NoiseModel::default(), &mut rng::seeded(2)), serving).unwrap();
        assert!(matches!(double_difference(&t[..2], &r, &d.gnbs), Err(Error::InsufficientGeometry(_))));
        assert!(double_difference(&t[..3], &r, &d.gnbs).is_ok());
    }

    #[test]
    fn filter_identity_and_los_count() {
        let set = MeasurementSet {
            ue_id: 0,
            serving_gnb_id: 0,
            measurements: (0..10).map(|i| meas(i, i < 6, 10.0 + i as f64)).collect(),
        };
        let all = filter_measurements(&set, &FilterPolicy { los_only: false, max_links: 20 }).unwrap();
        assert_eq!(all, set);
        let los = filter_measurements(&set, &FilterPolicy { los_only: true, max_links: 20 }).unwrap();
        assert_eq!(los.len(), 6);
        assert!(los.measurements.iter().all(|m| m.los));

        let few = MeasurementSet {
            ue_id: 0,
            serving_gnb_id: 0,
            measurements: (0..10).map(|i| meas(i, i < 3, 10.0)).collect(),
        };
        assert!(matches!(
            filter_measurements(&few, &FilterPolicy::default()),
            Err(Error::InsufficientGeometry(_))
        ));
    }

    proptest! {
        #[test]
        fn filter_matches_sort_and_truncate_oracle(
            links in prop::collection::vec((any::<bool>(), 1.0f64..200.0), 4..20),
            serving_idx in 0usize..4,
            los_only in any::<bool>(),
            max_links in 3usize..12,
        ) {
            let set = MeasurementSet {
                ue_id: 0,
                serving_gnb_id: serving_idx as GnbId,
                measurements: links.iter().enumerate().map(|(i, &(los, d))| meas(i as GnbId, los, d)).collect(),
            };
            let policy = FilterPolicy { los_only, max_links };

            // Oracle: LOS neighbors by distance, then NLOS neighbors by distance.
            let mut los_n: Vec<(f64, GnbId)> = Vec::new();
            let mut nlos_n: Vec<(f64, GnbId)> = Vec::new();
            for m in &set.measurements {
                if m.gnb_id == set.serving_gnb_id { continue; }
                if m.los { los_n.push((m.true_distance, m.gnb_id)); } else if !los_only { nlos_n.push((m.true_distance, m.gnb_id)); }
            }
            los_n.sort_by(|a, b| a.partial_cmp(b).unwrap());
            nlos_n.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut expected: Vec<GnbId> = vec![set.serving_gnb_id];
            expected.extend(los_n.iter().chain(&nlos_n).take(max_links).map(|x| x.1));

            match filter_measurements(&set, &policy) {
                Ok(out) => {
                    let got: Vec<GnbId> = out.measurements.iter().map(|m| m.gnb_id).collect();
                    prop_assert_eq!(got, expected);
                }
                Err(_) => prop_assert!(expected.len() < 4),
            }
        }

        #[test]
        fn clock_bias_cancellation(seed in any::<u64>()) {
            let (mut d, w) = scene(seed % 1000);
            let mut r = rng::seeded(seed);
            for g in &mut d.gnbs { g.clock_bias = r.random_range(-1e-3..1e-3); }
            let target = UeNode { clock_bias: r.random_range(-1e-3..1e-3), ..d.target_ues[0] };
            let reference = UeNode { clock_bias: r.random_range(-1e-3..1e-3), kind: UeKind::Reference, ..d.reference_ues[0] };
            let set = dd_for(&d, &w, &NoiseModel::noiseless(), &target, &reference, seed);
            for dd in &set.diffs {
                prop_assert!((w.lambda() * dd.value / TAU - dd.true_value_meters).abs() < 1e-9);
            }
        }
    }
}
