//! Campaign-level statistical invariants.

use super::{run_campaign, CampaignConfig, Metric, Scenario};
use crate::measurement::NoiseModel;

fn los(sigma: f64, drops: usize) -> CampaignConfig {
    CampaignConfig {
        n_drops: drops,
        scenario: Scenario::LosOnly,
        noise: NoiseModel { sigma_los: sigma, ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn median_error_grows_with_phase_noise() {
    let mut prev = -1.0;
    for sigma in [0.0, 0.1, 0.2, 0.4] {
        let p50 = run_campaign(&los(sigma, 500)).unwrap().percentile(Metric::Error3d, 0.5).unwrap();
        assert!(p50 >= prev, "sigma {sigma}: {p50} < {prev}");
        prev = p50;
    }
}

#[test]
fn nlos_does_not_reduce_phase_error() {
    let base = CampaignConfig { n_drops: 20, ..Default::default() };
    let a = run_campaign(&CampaignConfig { scenario: Scenario::LosOnly, ..base.clone() }).unwrap();
    let b = run_campaign(&CampaignConfig { scenario: Scenario::LosNlos, ..base }).unwrap();
    assert!(a.phase_samples.len() >= 1000);
    assert!(a.percentile(Metric::DdPhase, 0.9).unwrap() <= b.percentile(Metric::DdPhase, 0.9).unwrap());
}

#[test]
fn errors_non_decreasing_in_zeta() {
    for eta in [3, 23] {
        let mut prev = (0.0, 0.0);
        for zeta in [0.0, 1e-3, 1e-2] {
            let mut cfg = CampaignConfig { n_drops: 50, master_seed: 11, ..Default::default() };
            cfg.ambiguity.zeta = zeta;
            cfg.ambiguity.eta = eta;
            let s = run_campaign(&cfg).unwrap();
            let cur = (s.percentile(Metric::Horizontal, 0.9).unwrap(), s.percentile(Metric::Vertical, 0.9).unwrap());
            assert!(cur.0 >= prev.0 && cur.1 >= prev.1, "eta {eta} zeta {zeta}: {cur:?} after {prev:?}");
            prev = cur;
        }
    }
}

#[test]
fn toml_file_drives_campaign() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    let cfg = CampaignConfig { n_drops: 3, ues_per_drop: 40, master_seed: 8, ..Default::default() };
    std::fs::write(&path, cfg.to_toml_string().unwrap()).unwrap();
    let loaded = CampaignConfig::load(&path).unwrap();
    assert_eq!(run_campaign(&loaded).unwrap(), run_campaign(&cfg).unwrap());
}

#[test]
fn excluded_ues_are_reported() {
    let s = run_campaign(&CampaignConfig { n_drops: 5, ..Default::default() }).unwrap();
    assert_eq!(s.excluded_ues, s.counts.total - s.counts.converged);
    // The hull spans x in [25, 275] and y in [25, 125]: 5/9 of the hall area.
    let inside = 1.0 - s.counts.out_of_hull as f64 / s.counts.total as f64;
    assert!((inside - 5.0 / 9.0).abs() < 0.03, "{inside}");
}

#[test]
fn shipped_config_matches_defaults() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/campaign.toml");
    assert_eq!(CampaignConfig::load(path).unwrap(), CampaignConfig::default());
}
