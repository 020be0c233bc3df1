//! Seeded Monte-Carlo campaign: layout, measurements, differencing,
//! ambiguity corruption and solve for every drop.

use std::f64::consts::TAU;

use crate::ambiguity::{inject_ambiguity_error, tally, AmbiguityOutcome};
use crate::differencing::{double_difference, filter_measurements, single_difference, single_difference_against};
use crate::error::{Error, Result};
use crate::estimator::solve;
use crate::geometry::{generate_layout, Hull2D};
use crate::measurement::{measure_all, MeasurementSet};
use crate::rng::{self, StreamKind};

use super::config::CampaignConfig;
use super::stats::{PhaseSample, RunStatistics, UeCounts, UeSample};

/// UE index reserved for the layout stream of a drop.
const LAYOUT_STREAM: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    #[default]
    Parallel,
}

#[derive(Debug, Default)]
struct DropOutcome {
    ue_samples: Vec<UeSample>,
    phase_samples: Vec<PhaseSample>,
    tally: AmbiguityOutcome,
    counts: UeCounts,
}

fn corrupt(set: &mut MeasurementSet, config: &CampaignConfig, drop: u64, ue_index: u64) {
    let mut r = rng::stream(config.master_seed, drop, ue_index, StreamKind::Ambiguity);
    for m in &mut set.measurements {
        *m = inject_ambiguity_error(m, &config.ambiguity, &mut r);
    }
}

fn run_drop(config: &CampaignConfig, drop: u64) -> Result<DropOutcome> {
    let seed = rng::child_seed(config.master_seed, drop, LAYOUT_STREAM);
    let deployment = generate_layout(&config.layout, config.ues_per_drop, seed)?;
    let hull = Hull2D::from_gnbs(&deployment.gnbs)?;
    let noise = config.effective_noise();
    let wavelength = config.wavelength;
    let lambda = wavelength.lambda();

    let mut out = DropOutcome::default();

    let mut reference_sets = Vec::with_capacity(deployment.reference_ues.len());
    for ue in &deployment.reference_ues {
        let idx = u64::from(ue.id);
        let mut r = rng::stream(config.master_seed, drop, idx, StreamKind::Measurement);
        let mut set = measure_all(ue, &deployment.gnbs, &wavelength, &noise, &mut r);
        corrupt(&mut set, config, drop, idx);
        out.tally.merge(&tally(&set.measurements));
        reference_sets.push(set);
    }

    for ue in &deployment.target_ues {
        out.counts.total += 1;
        if !hull.contains(ue.position.x, ue.position.y) {
            out.counts.out_of_hull += 1;
            continue;
        }
        let idx = u64::from(ue.id);
        let mut r = rng::stream(config.master_seed, drop, idx, StreamKind::Measurement);
        let mut raw = measure_all(ue, &deployment.gnbs, &wavelength, &noise, &mut r);
        corrupt(&mut raw, config, drop, idx);
        out.tally.merge(&tally(&raw.measurements));

        let serving = deployment
            .gnb(ue.serving_gnb)
            .ok_or_else(|| Error::MissingMeasurement(format!("serving gNB {} missing", ue.serving_gnb)))?;
        let reference = deployment
            .nearest_reference(serving)
            .ok_or_else(|| Error::Config("deployment has no reference UE".into()))?;
        let reference_set = reference_sets
            .iter()
            .find(|s| s.ue_id == reference.id)
            .expect("every reference UE was measured");

        let dd = filter_measurements(&raw, &config.filter).and_then(|filtered| {
            let target_sd = single_difference(&filtered)?;
            let reference_sd = single_difference_against(reference_set, ue.serving_gnb)?;
            double_difference(&target_sd, &reference_sd, &deployment.gnbs)
        });
        let dd = match dd {
            Ok(dd) => dd,
            Err(_) => {
                out.counts.insufficient_geometry += 1;
                continue;
            }
        };

        match solve(&dd, lambda, &config.solver) {
            Err(_) => out.counts.solver_failures += 1,
            Ok(res) if !res.converged => out.counts.not_converged += 1,
            Ok(res) => {
                out.counts.converged += 1;
                let e = res.with_truth(&ue.position).errors.unwrap_or_default();
                out.ue_samples.push(UeSample {
                    drop,
                    ue_id: ue.id,
                    horizontal: e.horizontal,
                    vertical: e.vertical,
                    error_3d: e.error_3d,
                    iterations: res.iterations,
                });
                out.phase_samples.extend(dd.diffs.iter().map(|d| PhaseSample {
                    drop,
                    ue_id: ue.id,
                    gnb_id: d.neighbor_gnb_id,
                    value: (d.value - TAU * d.true_value_meters / lambda).abs(),
                }));
            }
        }
    }
    Ok(out)
}

#[cfg(feature = "parallel")]
fn run_drops(config: &CampaignConfig, execution: Execution) -> Result<Vec<DropOutcome>> {
    use rayon::prelude::*;
    let n = config.n_drops as u64;
    match execution {
        Execution::Parallel => (0..n).into_par_iter().map(|d| run_drop(config, d)).collect(),
        Execution::Sequential => (0..n).map(|d| run_drop(config, d)).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_drops(config: &CampaignConfig, _execution: Execution) -> Result<Vec<DropOutcome>> {
    (0..config.n_drops as u64).map(|d| run_drop(config, d)).collect()
}

pub fn run_campaign(config: &CampaignConfig) -> Result<RunStatistics> {
    run_campaign_with(config, Execution::default())
}

/// Runs every drop and pools the results in drop order, so the output does
/// not depend on `execution`.
pub fn run_campaign_with(config: &CampaignConfig, execution: Execution) -> Result<RunStatistics> {
    config.validate()?;
    let drops = run_drops(config, execution)?;

    let mut ue_samples = Vec::new();
    let mut phase_samples = Vec::new();
    let mut ambiguity = AmbiguityOutcome::default();
    let mut counts = UeCounts::default();
    for d in drops {
        ue_samples.extend(d.ue_samples);
        phase_samples.extend(d.phase_samples);
        ambiguity.merge(&d.tally);
        counts.merge(&d.counts);
    }
    Ok(RunStatistics::assemble(config.clone(), ue_samples, phase_samples, ambiguity, counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{Metric, Scenario};
    use crate::measurement::NoiseModel;

    fn small(seed: u64) -> CampaignConfig {
        CampaignConfig { n_drops: 4, ues_per_drop: 40, master_seed: seed, ..Default::default() }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let cfg = small(3);
        let a = run_campaign_with(&cfg, Execution::Sequential).unwrap();
        let b = run_campaign_with(&cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn seeds_change_results() {
        assert_ne!(run_campaign(&small(1)).unwrap().ue_samples, run_campaign(&small(2)).unwrap().ue_samples);
    }

    #[test]
    fn counts_are_consistent() {
        let s = run_campaign(&small(4)).unwrap();
        let c = s.counts;
        assert_eq!(c.total, 160);
        assert_eq!(c.total, c.out_of_hull + c.insufficient_geometry + c.solver_failures + c.not_converged + c.converged);
        assert_eq!(s.ue_samples.len() as u64, c.converged);
        assert!(c.out_of_hull > 0 && c.converged > 0);
        // 18 links per target UE in the hull plus 4 x 18 reference links per drop.
        let in_hull = c.total - c.out_of_hull;
        assert_eq!(s.ambiguity_tally.total_links, 18 * in_hull + 4 * 18 * 4);
    }

    #[test]
    fn noiseless_campaign_is_exact() {
        let cfg = CampaignConfig { noise: NoiseModel::noiseless(), scenario: Scenario::LosOnly, ..small(5) };
        let s = run_campaign(&cfg).unwrap();
        assert!(s.percentile(Metric::Error3d, 0.9).unwrap() <= 10.0 * cfg.solver.epsilon);
        assert!(s.percentile(Metric::DdPhase, 1.0).unwrap() < 1e-6);
    }

    #[test]
    fn zero_zeta_matches_ideal_resolution_run() {
        let base = small(6);
        let ideal = run_campaign(&base).unwrap();
        let mut z = base.clone();
        z.ambiguity.eta = 23;
        let zero = run_campaign(&z).unwrap();
        assert_eq!(ideal.ue_samples, zero.ue_samples);
        assert_eq!(ideal.phase_samples, zero.phase_samples);
        assert_eq!(zero.ambiguity_tally.corrupted_links, 0);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = CampaignConfig { n_drops: 0, ..Default::default() };
        assert!(matches!(run_campaign(&cfg), Err(Error::Config(_))));
    }
}
