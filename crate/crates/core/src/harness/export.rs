//! Result files: `summary.json`, `samples.csv` and `cdf_<metric>.csv`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::stats::{Metric, RunStatistics};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExportFormat {
    /// Summary plus per-sample and CDF tables.
    #[default]
    Csv,
    /// Summary document only.
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::Config(format!("unknown export format '{other}'"))),
        }
    }
}

/// Summary document written to `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: super::CampaignConfig,
    pub percentiles: std::collections::BTreeMap<String, super::Percentiles>,
    pub total_links: u64,
    pub corrupted_links: u64,
    pub empirical_zeta: f64,
    pub convergence_rate: f64,
    pub excluded_ues: u64,
    pub counts: super::UeCounts,
    pub samples: usize,
}

impl Summary {
    pub fn of(stats: &RunStatistics) -> Self {
        Self {
            config: stats.config.clone(),
            percentiles: stats.percentiles.clone(),
            total_links: stats.ambiguity_tally.total_links,
            corrupted_links: stats.ambiguity_tally.corrupted_links,
            empirical_zeta: stats.ambiguity_tally.empirical_zeta(),
            convergence_rate: stats.convergence_rate,
            excluded_ues: stats.excluded_ues,
            counts: stats.counts,
            samples: stats.ue_samples.len(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Serialization(e.to_string()))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn fmt(v: f64) -> String {
    format!("{v:.15e}")
}

/// Writes the result files for `stats` into directory `dir`, creating it if needed.
pub fn export_results(stats: &RunStatistics, dir: impl AsRef<Path>, format: ExportFormat) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let summary_path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&Summary::of(stats)).map_err(|e| Error::Serialization(e.to_string()))?;
    fs::write(&summary_path, text + "\n").map_err(|e| Error::io(&summary_path, e))?;

    if format == ExportFormat::Json {
        return Ok(());
    }

    let samples_path = dir.join("samples.csv");
    let mut w = create(&samples_path)?;
    let io = |e| Error::io(&samples_path, e);
    writeln!(w, "ue_id,drop,metric,value").map_err(io)?;
    for s in &stats.ue_samples {
        for (metric, v) in [(Metric::Horizontal, s.horizontal), (Metric::Vertical, s.vertical), (Metric::Error3d, s.error_3d)] {
            writeln!(w, "{},{},{},{}", s.ue_id, s.drop, metric.name(), fmt(v)).map_err(io)?;
        }
    }
    for s in &stats.phase_samples {
        writeln!(w, "{},{},{},{}", s.ue_id, s.drop, Metric::DdPhase.name(), fmt(s.value)).map_err(io)?;
    }
    w.flush().map_err(io)?;

    for metric in Metric::ALL {
        let path = dir.join(format!("cdf_{}.csv", metric.name()));
        let mut w = create(&path)?;
        let io = |e| Error::io(&path, e);
        writeln!(w, "error_value,cumulative_probability").map_err(io)?;
        for (v, p) in stats.cdf(metric) {
            writeln!(w, "{},{}", fmt(v), fmt(p)).map_err(io)?;
        }
        w.flush().map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambiguity::AmbiguityOutcome;
    use crate::harness::{run_campaign, CampaignConfig, UeCounts};

    fn empty_stats() -> RunStatistics {
        RunStatistics::assemble(CampaignConfig::default(), vec![], vec![], AmbiguityOutcome::default(), UeCounts::default())
    }

    #[test]
    fn empty_stats_write_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        export_results(&empty_stats(), dir.path(), ExportFormat::Csv).unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("samples.csv")).unwrap(), "ue_id,drop,metric,value\n");
        assert_eq!(
            fs::read_to_string(dir.path().join("cdf_error_3d.csv")).unwrap(),
            "error_value,cumulative_probability\n"
        );
        let s = Summary::load(dir.path().join("summary.json")).unwrap();
        assert!(s.percentiles.is_empty());
    }

    #[test]
    fn json_round_trip_preserves_percentiles() {
        let cfg = CampaignConfig { n_drops: 2, ues_per_drop: 50, ..Default::default() };
        let stats = run_campaign(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export_results(&stats, dir.path(), ExportFormat::Json).unwrap();
        let back = Summary::load(dir.path().join("summary.json")).unwrap();
        assert_eq!(back.percentiles, stats.percentiles);
        assert_eq!(back.config, cfg);
        assert!(!dir.path().join("samples.csv").exists());
    }

    #[test]
    fn csv_rows_cover_every_sample() {
        let cfg = CampaignConfig { n_drops: 2, ues_per_drop: 50, ..Default::default() };
        let stats = run_campaign(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export_results(&stats, dir.path(), ExportFormat::Csv).unwrap();
        let rows = fs::read_to_string(dir.path().join("samples.csv")).unwrap().lines().count() - 1;
        assert_eq!(rows, 3 * stats.ue_samples.len() + stats.phase_samples.len());
        let cdf = fs::read_to_string(dir.path().join("cdf_horizontal.csv")).unwrap();
        let last = cdf.lines().last().unwrap();
        let p: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn unwritable_destination_is_io_error() {
        let file = tempfile::NamedTempFile::new().unwrap();
        let err = export_results(&empty_stats(), file.path().join("sub"), ExportFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
