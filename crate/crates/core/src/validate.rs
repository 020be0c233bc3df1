//! Quick property suite over small random instances.
//!
//! Backs the `validate` CLI subcommand; the full-size checks live in the
//! acceptance tests.

use std::f64::consts::TAU;

use rand::Rng;
use serde::Serialize;

use crate::differencing::{double_difference, single_difference_against};
use crate::estimator::{design_row, solve, SolverConfig};
use crate::geometry::{distance, generate_layout, in_convex_hull, Deployment, LayoutConfig, Position3D, UeNode};
use crate::harness::{run_campaign, CampaignConfig, Metric, Scenario};
use crate::measurement::{measure_all, NoiseModel, Wavelength};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

fn noiseless_dd(d: &Deployment, ue: &UeNode, seed: u64) -> crate::Result<crate::differencing::DoubleDiffSet> {
    let w = Wavelength::default();
    let model = NoiseModel::noiseless();
    let serving = d.gnb(ue.serving_gnb).expect("serving gNB is in the deployment");
    let reference = d.nearest_reference(serving).expect("layout has reference UEs");
    let t = measure_all(ue, &d.gnbs, &w, &model, &mut rng::seeded(seed));
    let r = measure_all(reference, &d.gnbs, &w, &model, &mut rng::seeded(seed));
    double_difference(
        &single_difference_against(&t, ue.serving_gnb)?,
        &single_difference_against(&r, ue.serving_gnb)?,
        &d.gnbs,
    )
}

fn clock_bias_cancellation(seed: u64) -> Check {
    let lambda = Wavelength::default().lambda();
    let mut r = rng::seeded(seed);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let mut d = generate_layout(&LayoutConfig::default(), 2, seed.wrapping_add(i)).expect("default layout");
        for g in &mut d.gnbs {
            g.clock_bias = r.random_range(-1e-3..1e-3);
        }
        for ue in d.target_ues.iter_mut().chain(d.reference_ues.iter_mut()) {
            ue.clock_bias = r.random_range(-1e-3..1e-3);
        }
        let ue = d.target_ues[0];
        match noiseless_dd(&d, &ue, i) {
            Ok(set) => {
                for diff in &set.diffs {
                    worst = worst.max((lambda * diff.value / TAU - diff.true_value_meters).abs());
                }
            }
            Err(e) => return Check::new("clock_bias_cancellation", false, e.to_string()),
        }
    }
    Check::new("clock_bias_cancellation", worst <= 1e-9, format!("max |DD − ∇Δd| = {worst:.3e} m"))
}

fn gradient(seed: u64) -> Check {
    let mut r = rng::seeded(seed);
    let mut pt = || Position3D::new(r.random_range(0.0..300.0), r.random_range(0.0..150.0), r.random_range(0.0..10.0));
    let h = 1e-4;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (x, gi, gs) = (pt(), pt(), pt());
        let Ok(row) = design_row(&x, &gi, &gs) else { continue };
        let f = |p: Position3D| distance(&p, &gi) - distance(&p, &gs);
        let fd = [
            (f(x.offset(h, 0.0, 0.0)) - f(x.offset(-h, 0.0, 0.0))) / (2.0 * h),
            (f(x.offset(0.0, h, 0.0)) - f(x.offset(0.0, -h, 0.0))) / (2.0 * h),
            (f(x.offset(0.0, 0.0, h)) - f(x.offset(0.0, 0.0, -h))) / (2.0 * h),
        ];
        for k in 0..3 {
            worst = worst.max((row[k] - fd[k]).abs() / fd[k].abs().max(1e-3));
        }
    }
    Check::new("design_row_gradient", worst <= 1e-6, format!("max relative deviation {worst:.3e}"))
}

fn noiseless_recovery(seed: u64) -> Check {
    let cfg = SolverConfig::default();
    let lambda = Wavelength::default().lambda();
    let (mut ok, mut total) = (0usize, 0usize);
    for i in 0..10 {
        let d = generate_layout(&LayoutConfig::default(), 20, seed.wrapping_add(i)).expect("default layout");
        for ue in &d.target_ues {
            if !in_convex_hull(&ue.position, &d.gnbs).unwrap_or(false) {
                continue;
            }
            total += 1;
            if let Ok(res) = noiseless_dd(&d, ue, i).and_then(|s| solve(&s, lambda, &cfg)) {
                if res.converged && distance(&res.estimate, &ue.position) <= 10.0 * cfg.epsilon {
                    ok += 1;
                }
            }
        }
    }
    let passed = total > 0 && ok as f64 >= 0.99 * total as f64;
    Check::new("noiseless_recovery", passed, format!("{ok}/{total} UEs within 10·ε"))
}

fn small_campaign(seed: u64) -> CampaignConfig {
    CampaignConfig { n_drops: 4, ues_per_drop: 50, master_seed: seed, ..Default::default() }
}

fn determinism(seed: u64) -> Check {
    let cfg = small_campaign(seed);
    match (run_campaign(&cfg), run_campaign(&cfg)) {
        (Ok(a), Ok(b)) => Check::new("determinism", a == b, format!("{} samples", a.ue_samples.len())),
        (Err(e), _) | (_, Err(e)) => Check::new("determinism", false, e.to_string()),
    }
}

fn percentile_monotonicity(seed: u64) -> Check {
    match run_campaign(&small_campaign(seed)) {
        Ok(s) => {
            let bad: Vec<_> = s
                .percentiles
                .iter()
                .filter(|(_, p)| !(p.p50 <= p.p67 && p.p67 <= p.p80 && p.p80 <= p.p90))
                .map(|(k, _)| k.clone())
                .collect();
            Check::new("percentile_monotonicity", bad.is_empty() && !s.percentiles.is_empty(), format!("violations: {bad:?}"))
        }
        Err(e) => Check::new("percentile_monotonicity", false, e.to_string()),
    }
}

fn scenario_ordering(seed: u64) -> Check {
    let los = CampaignConfig { scenario: Scenario::LosOnly, ..small_campaign(seed) };
    let mixed = CampaignConfig { scenario: Scenario::LosNlos, ..small_campaign(seed) };
    match (run_campaign(&los), run_campaign(&mixed)) {
        (Ok(a), Ok(b)) => {
            let (pa, pb) = (a.percentile(Metric::DdPhase, 0.9), b.percentile(Metric::DdPhase, 0.9));
            match (pa, pb) {
                (Ok(pa), Ok(pb)) => Check::new("scenario_ordering", pa <= pb, format!("p90 DD phase {pa:.3} (LOS) vs {pb:.3} rad")),
                _ => Check::new("scenario_ordering", false, "no phase samples".into()),
            }
        }
        (Err(e), _) | (_, Err(e)) => Check::new("scenario_ordering", false, e.to_string()),
    }
}

/// Runs every check; all are quick (well under a second in release builds).
pub fn run_all(seed: u64) -> Vec<Check> {
    vec![
        clock_bias_cancellation(seed),
        gradient(seed),
        noiseless_recovery(seed),
        determinism(seed),
        percentile_monotonicity(seed),
        scenario_ordering(seed),
    ]
}
