//! `rews`: run, validate and sweep IMM-vs-KF wind speed estimation experiments.
//!
//! Exit codes: 0 on success, 1 on configuration, usage or output errors,
//! 2 when any seed fails numerically.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rews_core::harness::output::write_outputs;
use rews_core::harness::{run_experiment, ExperimentConfig, ExperimentReport, Region};
use rews_core::plant::ScheduleKind;

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

#[derive(Parser)]
#[command(
    name = "rews",
    version,
    about = "IMM vs single-EKF rotor-effective wind speed experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment and write CSV outputs.
    Run(RunArgs),
    /// Check a configuration file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Repeat the experiment for several ΔCp values.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated ΔCp values.
        #[arg(long, value_delimiter = ',', required = true)]
        delta_cp_list: Vec<f64>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Seeds to run (repeatable); replaces the configured list.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Output directory; overrides `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Operating region preset (sets the mean wind).
    #[arg(long)]
    scenario: Option<Region>,
    #[arg(long)]
    schedule: Option<ScheduleKind>,
    /// Offset of the IMM's Cp modes.
    #[arg(long)]
    delta_cp: Option<f64>,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg =
            ExperimentConfig::load(&self.config).map_err(|e| Failure::Config(e.to_string()))?;
        if !self.seeds.is_empty() {
            cfg.seeds = self.seeds.clone();
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(region) = self.scenario {
            cfg.set_region(region);
        }
        if let Some(kind) = self.schedule {
            cfg.schedule = kind;
        }
        if let Some(delta) = self.delta_cp {
            cfg.delta_cp = delta;
        }
        cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
        Ok(cfg)
    }
}

fn print_report(report: &ExperimentReport) {
    if let Some(agg) = &report.aggregate {
        println!(
            "{} seed(s), mean wind {} m/s, ΔCp {}",
            agg.seeds, report.config.mean_wind, report.config.delta_cp
        );
        println!("estimator  |wind mean|%  wind std%  |cp mean|%  cp std%");
        for (name, s) in [("imm", &agg.imm), ("kf", &agg.kf)] {
            println!(
                "{name:<9}  {:>12.3}  {:>9.3}  {:>10.3}  {:>7.3}",
                s.wind_abs_mean, s.wind_std, s.cp_abs_mean, s.cp_std
            );
        }
    }
    for (seed, failure) in report.failures() {
        eprintln!("seed {seed}: {failure}");
    }
}

fn execute(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentReport, Failure> {
    let report = run_experiment(cfg).map_err(|e| Failure::Config(e.to_string()))?;
    write_outputs(&report, out).map_err(|e| Failure::Config(e.to_string()))?;
    print_report(&report);
    println!("outputs written to {}", out.display());
    Ok(report)
}

fn check_failures(reports: &[ExperimentReport]) -> Result<(), Failure> {
    let failed: usize = reports.iter().map(|r| r.failures().count()).sum();
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} seed run(s) failed")));
    }
    Ok(())
}

fn sweep(args: &RunArgs, deltas: &[f64]) -> Result<(), Failure> {
    let base = args.load()?;
    let mut reports = Vec::new();
    let mut rows = vec![
        "delta_cp,estimator,seeds,wind_abs_mean_pct,wind_std_pct,cp_abs_mean_pct,cp_std_pct"
            .to_string(),
    ];
    for &delta in deltas {
        let cfg = ExperimentConfig {
            delta_cp: delta,
            ..base.clone()
        };
        cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
        let report = execute(&cfg, &base.out_dir.join(format!("delta_cp_{delta}")))?;
        if let Some(agg) = &report.aggregate {
            for (name, s) in [("imm", &agg.imm), ("kf", &agg.kf)] {
                rows.push(format!(
                    "{delta},{name},{},{},{},{},{}",
                    agg.seeds, s.wind_abs_mean, s.wind_std, s.cp_abs_mean, s.cp_std
                ));
            }
        }
        reports.push(report);
    }
    let path = base.out_dir.join("sweep.csv");
    std::fs::write(&path, rows.join("\n") + "\n")
        .map_err(|e| Failure::Config(format!("writing {}: {e}", path.display())))?;
    check_failures(&reports)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.load()?;
            let report = execute(&cfg, &cfg.out_dir)?;
            check_failures(&[report])
        }
        Command::Validate { config } => {
            let cfg =
                ExperimentConfig::load(&config).map_err(|e| Failure::Config(e.to_string()))?;
            cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
            println!("{}: ok", config.display());
            Ok(())
        }
        Command::Sweep { run, delta_cp_list } => sweep(&run, &delta_cp_list),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
