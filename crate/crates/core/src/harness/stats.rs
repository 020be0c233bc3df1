use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ambiguity::AmbiguityOutcome;
use crate::error::{Error, Result};
use crate::geometry::{GnbId, UeId};

use super::config::CampaignConfig;

/// Reported error metrics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    Horizontal,
    Vertical,
    Error3d,
    /// |double-differenced phase error|, radians.
    DdPhase,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Horizontal, Metric::Vertical, Metric::Error3d, Metric::DdPhase];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Horizontal => "horizontal",
            Metric::Vertical => "vertical",
            Metric::Error3d => "error_3d",
            Metric::DdPhase => "dd_phase",
        }
    }
}

/// Percentile levels reported for every metric.
pub const REPORTED_LEVELS: [f64; 4] = [0.50, 0.67, 0.80, 0.90];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p50: f64,
    pub p67: f64,
    pub p80: f64,
    pub p90: f64,
}

impl Percentiles {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let sorted = sorted_copy(samples)?;
        let at = |p| interpolate_sorted(&sorted, p);
        Ok(Self { p50: at(0.50), p67: at(0.67), p80: at(0.80), p90: at(0.90) })
    }
}

fn sorted_copy(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn interpolate_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Empirical quantile with linear interpolation between order statistics:
/// position `h = (n − 1)·p` on the ascending samples.
pub fn percentile(samples: &[f64], p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("percentile level {p} outside [0, 1]")));
    }
    Ok(interpolate_sorted(&sorted_copy(samples)?, p))
}

/// Per-UE position errors, meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UeSample {
    pub drop: u64,
    pub ue_id: UeId,
    pub horizontal: f64,
    pub vertical: f64,
    pub error_3d: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSample {
    pub drop: u64,
    pub ue_id: UeId,
    pub gnb_id: GnbId,
    /// Radians, absolute.
    pub value: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UeCounts {
    pub total: u64,
    pub out_of_hull: u64,
    pub insufficient_geometry: u64,
    pub solver_failures: u64,
    pub not_converged: u64,
    pub converged: u64,
}

impl UeCounts {
    pub fn merge(&mut self, o: &UeCounts) {
        self.total += o.total;
        self.out_of_hull += o.out_of_hull;
        self.insufficient_geometry += o.insufficient_geometry;
        self.solver_failures += o.solver_failures;
        self.not_converged += o.not_converged;
        self.converged += o.converged;
    }

    /// UEs handed to the solver.
    pub fn solver_attempts(&self) -> u64 {
        self.converged + self.not_converged + self.solver_failures
    }

    pub fn excluded(&self) -> u64 {
        self.total - self.converged
    }
}

/// Pooled results of a campaign.
///
/// Samples come only from in-hull UEs whose solve converged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStatistics {
    pub config: CampaignConfig,
    pub ue_samples: Vec<UeSample>,
    pub phase_samples: Vec<PhaseSample>,
    /// Keyed by metric name; metrics without samples are absent.
    pub percentiles: BTreeMap<String, Percentiles>,
    pub ambiguity_tally: AmbiguityOutcome,
    pub convergence_rate: f64,
    pub excluded_ues: u64,
    pub counts: UeCounts,
}

impl RunStatistics {
    pub fn assemble(
        config: CampaignConfig,
        ue_samples: Vec<UeSample>,
        phase_samples: Vec<PhaseSample>,
        ambiguity_tally: AmbiguityOutcome,
        counts: UeCounts,
    ) -> Self {
        let mut stats = Self {
            config,
            ue_samples,
            phase_samples,
            percentiles: BTreeMap::new(),
            ambiguity_tally,
            convergence_rate: match counts.solver_attempts() {
                0 => 0.0,
                n => counts.converged as f64 / n as f64,
            },
            excluded_ues: counts.excluded(),
            counts,
        };
        for metric in Metric::ALL {
            if let Ok(p) = Percentiles::from_samples(&stats.values(metric)) {
                stats.percentiles.insert(metric.name().to_string(), p);
            }
        }
        stats
    }

    pub fn values(&self, metric: Metric) -> Vec<f64> {
        match metric {
            Metric::Horizontal => self.ue_samples.iter().map(|s| s.horizontal).collect(),
            Metric::Vertical => self.ue_samples.iter().map(|s| s.vertical).collect(),
            Metric::Error3d => self.ue_samples.iter().map(|s| s.error_3d).collect(),
            Metric::DdPhase => self.phase_samples.iter().map(|s| s.value).collect(),
        }
    }

    pub fn percentile(&self, metric: Metric, p: f64) -> Result<f64> {
        percentile(&self.values(metric), p)
    }

    /// Ascending `(value, cumulative probability)` pairs.
    pub fn cdf(&self, metric: Metric) -> Vec<(f64, f64)> {
        let mut v = self.values(metric);
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        v.into_iter().enumerate().map(|(i, x)| (x, (i + 1) as f64 / n)).collect()
    }

    pub fn solvable_ues(&self) -> u64 {
        self.counts.converged
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn midpoint_of_one_to_hundred() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&s, 0.5).unwrap(), 50.5);
        assert_eq!(percentile(&s, 0.0).unwrap(), 1.0);
        assert_eq!(percentile(&s, 1.0).unwrap(), 100.0);
    }

    #[test]
    fn constant_samples() {
        let s = vec![4.25; 17];
        for p in [0.01, 0.5, 0.67, 0.99] {
            assert_eq!(percentile(&s, p).unwrap(), 4.25);
        }
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(percentile(&[], 0.5), Err(Error::EmptySamples)));
        assert!(percentile(&[1.0], 1.5).is_err());
    }

    /// Independent quantile: index arithmetic on a fresh sort, R type 7.
    fn oracle(samples: &[f64], p: f64) -> f64 {
        let mut v = samples.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        let pos = p * (n as f64 - 1.0);
        let k = pos as usize;
        if k + 1 >= n {
            return v[n - 1];
        }
        let frac = pos - k as f64;
        v[k] * (1.0 - frac) + v[k + 1] * frac
    }

    #[test]
    fn matches_sort_and_index_oracle() {
        let mut r = rng::seeded(9);
        for _ in 0..200 {
            let n = r.random_range(1..300);
            let s: Vec<f64> = (0..n).map(|_| r.random_range(-5.0..5.0)).collect();
            let p = r.random_range(0.001..0.999);
            let got = percentile(&s, p).unwrap();
            assert!((got - oracle(&s, p)).abs() <= 1e-12, "{got}");
        }
    }

    proptest! {
        #[test]
        fn monotone_in_level(s in prop::collection::vec(-1e3f64..1e3, 1..200), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(percentile(&s, lo).unwrap() <= percentile(&s, hi).unwrap());
        }
    }

    #[test]
    fn cdf_is_sorted_step_to_one() {
        let stats = RunStatistics::assemble(
            CampaignConfig::default(),
            (0..5)
                .map(|i| UeSample { drop: 0, ue_id: i, horizontal: (5 - i) as f64, vertical: 0.0, error_3d: 1.0, iterations: 1 })
                .collect(),
            vec![],
            AmbiguityOutcome::default(),
            UeCounts { total: 5, converged: 5, ..Default::default() },
        );
        let cdf = stats.cdf(Metric::Horizontal);
        assert_eq!(cdf.first().unwrap(), &(1.0, 0.2));
        assert_eq!(cdf.last().unwrap(), &(5.0, 1.0));
        assert!(cdf.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
        assert!(!stats.percentiles.contains_key("dd_phase"));
        assert_eq!(stats.convergence_rate, 1.0);
        let p = stats.percentiles["horizontal"];
        assert!(p.p50 <= p.p67 && p.p67 <= p.p80 && p.p80 <= p.p90);
    }
}
