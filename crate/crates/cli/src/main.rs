use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cphase_core::harness::{
    calibrate, export_results, run_campaign, sweep, CampaignConfig, ExportFormat, Metric, Parameter, Scenario,
};
use cphase_core::{validate, Error};

const EXIT_CONFIG: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_NO_SOLVABLE_UES: u8 = 3;
const EXIT_VALIDATION_FAILED: u8 = 4;

/// Carrier-phase positioning campaigns for indoor-factory deployments.
#[derive(Parser)]
#[command(name = "cphase", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo campaign and write result files.
    Run(RunArgs),
    /// Fit a noise parameter so the 90th-percentile DD phase error hits a target.
    Calibrate(CalibrateArgs),
    /// Run one campaign per value of a parameter.
    Sweep(SweepArgs),
    /// Run the property suite on small instances.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct Overrides {
    /// TOML campaign file; missing fields take their defaults.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    drops: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// los | losnlos
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    eta: Option<u32>,
}

impl Overrides {
    fn load(&self) -> cphase_core::Result<CampaignConfig> {
        let mut c = CampaignConfig::load(&self.config)?;
        if let Some(n) = self.drops {
            c.n_drops = n;
        }
        if let Some(s) = self.seed {
            c.master_seed = s;
        }
        if let Some(s) = self.scenario {
            c.scenario = s;
        }
        if let Some(z) = self.zeta {
            c.ambiguity.zeta = z;
        }
        if let Some(e) = self.eta {
            c.ambiguity.eta = e;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// csv | json
    #[arg(long, default_value = "csv")]
    format: ExportFormat,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// sigma_los | sigma_nlos | nlos_excess_mean
    #[arg(long, default_value = "sigma_los")]
    parameter: Parameter,
    /// Target 90th-percentile |DD phase error|, radians.
    #[arg(long, default_value_t = 1.4)]
    target: f64,
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    #[arg(long, default_value_t = 4.0)]
    hi: f64,
    /// Relative tolerance on the target.
    #[arg(long, default_value_t = 1e-3)]
    tolerance: f64,
    #[arg(long, default_value_t = 40)]
    max_evaluations: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// zeta | sigma_los | sigma_nlos | nlos_excess_mean
    #[arg(long)]
    parameter: Parameter,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Also write sweep.json here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Serialization(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(&e))
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> cphase_core::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.display().to_string(), source: e })?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

fn run(args: RunArgs) -> ExitCode {
    let config = match args.overrides.load() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let stats = match run_campaign(&config) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    if let Err(e) = export_results(&stats, &args.out, args.format) {
        return fail(e);
    }
    let c = stats.counts;
    println!(
        "UEs: {} total, {} outside hull, {} unsolvable, {} converged ({:.2}% of solver attempts)",
        c.total,
        c.out_of_hull,
        c.insufficient_geometry + c.solver_failures + c.not_converged,
        c.converged,
        100.0 * stats.convergence_rate
    );
    println!("links: {} total, {} wrong fixes", stats.ambiguity_tally.total_links, stats.ambiguity_tally.corrupted_links);
    for m in Metric::ALL {
        if let Some(p) = stats.percentiles.get(m.name()) {
            println!("{:<10} p50 {:.5}  p67 {:.5}  p80 {:.5}  p90 {:.5}", m.name(), p.p50, p.p67, p.p80, p.p90);
        }
    }
    println!("results written to {}", args.out.display());
    if stats.solvable_ues() == 0 {
        eprintln!("error: campaign produced zero solvable UEs");
        return ExitCode::from(EXIT_NO_SOLVABLE_UES);
    }
    ExitCode::SUCCESS
}

fn run_calibrate(args: CalibrateArgs) -> ExitCode {
    let config = match args.overrides.load() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    match calibrate(&config, args.parameter, args.target, (args.lo, args.hi), args.tolerance, args.max_evaluations) {
        Ok(cal) => {
            println!(
                "{} = {:.6} gives p90 DD phase error {:.4} rad (target {:.4}, {} campaigns)",
                cal.parameter.name(),
                cal.value,
                cal.achieved,
                cal.target,
                cal.evaluations
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn run_sweep(args: SweepArgs) -> ExitCode {
    let config = match args.overrides.load() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let points = match sweep(&config, args.parameter, &args.values) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    println!("{:>12} {:>10} {:>10} {:>10} {:>10} {:>10}", args.parameter.name(), "h_p90", "v_p90", "3d_p90", "dd_p90", "zeta_hat");
    for p in &points {
        let p90 = |m: Metric| p.percentiles.get(m.name()).map_or(f64::NAN, |x| x.p90);
        println!(
            "{:>12.6} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>10.6}",
            p.value,
            p90(Metric::Horizontal),
            p90(Metric::Vertical),
            p90(Metric::Error3d),
            p90(Metric::DdPhase),
            p.empirical_zeta
        );
    }
    if let Some(dir) = &args.out {
        if let Err(e) = write_json(dir, "sweep.json", &points) {
            return fail(e);
        }
    }
    ExitCode::SUCCESS
}

fn run_validate(seed: u64) -> ExitCode {
    let checks = validate::run_all(seed);
    for c in &checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VALIDATION_FAILED)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Run(a) => run(a),
        Command::Calibrate(a) => run_calibrate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Validate { seed } => run_validate(seed),
    }
}
