//! CSV artifacts of an experiment.
//!
//! | file | contents |
//! |------|----------|
//! | `summary.csv` | one row per seed and estimator |
//! | `aggregate.csv` | seed-averaged statistics per estimator |
//! | `timeseries_<seed>.csv` | truth, estimates and mode probabilities |
//! | `hist_<seed>.csv` | paired error histograms |
//! | `config.toml` | every effective parameter |

use std::fs;
use std::path::{Path, PathBuf};

use super::experiment::{AggregateStats, ExperimentReport, SeedRun};
use super::metrics::{low_pass, PairedHistogram, SummaryStats, CP_REFERENCE_CUTOFF_HZ};
use crate::error::OutputError;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const CONFIG_ECHO_FILE: &str = "config.toml";

/// Scenario label used in the summary, e.g. `v8_ti0.1_regime`.
pub fn scenario_label(report: &ExperimentReport) -> String {
    let c = &report.config;
    let kind = match c.schedule {
        crate::plant::ScheduleKind::Walk => "walk",
        crate::plant::ScheduleKind::Regime => "regime",
    };
    format!("v{}_ti{}_{}", c.mean_wind, c.turbulence_intensity, kind)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, OutputError> {
    csv::Writer::from_path(path).map_err(|source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

fn stats_fields(s: &SummaryStats) -> [String; 4] {
    [
        num(s.mean),
        num(s.std),
        s.scored.to_string(),
        s.excluded.to_string(),
    ]
}

fn write_summary(path: &Path, report: &ExperimentReport) -> Result<(), OutputError> {
    let err = csv_err(path);
    let mut w = csv_writer(path)?;
    w.write_record([
        "scenario",
        "seed",
        "estimator",
        "status",
        "wind_mean_pct",
        "wind_std_pct",
        "wind_scored",
        "wind_excluded",
        "cp_mean_pct",
        "cp_std_pct",
        "cp_scored",
        "cp_excluded",
        "settle_time_s",
    ])
    .map_err(&err)?;
    let scenario = scenario_label(report);
    for seed in &report.seeds {
        for estimator in ["imm", "kf"] {
            let mut row = vec![
                scenario.clone(),
                seed.seed.to_string(),
                estimator.to_string(),
            ];
            match &seed.outcome {
                Ok(run) => {
                    let m = if estimator == "imm" {
                        &run.metrics.imm
                    } else {
                        &run.metrics.kf
                    };
                    row.push("ok".into());
                    row.extend(stats_fields(&m.wind));
                    row.extend(stats_fields(&m.cp));
                    row.push(num(run.metrics.settle_time));
                }
                Err(failure) => {
                    row.push(format!("failed: {failure}"));
                    row.extend(std::iter::repeat_n(String::new(), 9));
                }
            }
            w.write_record(&row).map_err(&err)?;
        }
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_aggregate(path: &Path, report: &ExperimentReport) -> Result<(), OutputError> {
    let err = csv_err(path);
    let mut w = csv_writer(path)?;
    w.write_record([
        "scenario",
        "estimator",
        "seeds",
        "failed",
        "wind_mean_pct",
        "wind_abs_mean_pct",
        "wind_std_pct",
        "cp_mean_pct",
        "cp_abs_mean_pct",
        "cp_std_pct",
    ])
    .map_err(&err)?;
    if let Some(agg) = &report.aggregate {
        let failed = report.failures().count();
        let scenario = scenario_label(report);
        for (name, s) in [("imm", &agg.imm), ("kf", &agg.kf)] {
            let AggregateStats {
                wind_mean,
                wind_abs_mean,
                wind_std,
                cp_mean,
                cp_abs_mean,
                cp_std,
            } = *s;
            w.write_record([
                scenario.clone(),
                name.to_string(),
                agg.seeds.to_string(),
                failed.to_string(),
                num(wind_mean),
                num(wind_abs_mean),
                num(wind_std),
                num(cp_mean),
                num(cp_abs_mean),
                num(cp_std),
            ])
            .map_err(&err)?;
        }
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_timeseries(path: &Path, run: &SeedRun, sample_time: f64) -> Result<(), OutputError> {
    let err = csv_err(path);
    let mut w = csv_writer(path)?;
    let trace = &run.trace;
    let modes = trace.mode_probabilities.first().map_or(0, Vec::len);
    let mut header: Vec<String> = [
        "t", "v_rews", "v_imm", "v_kf", "cp_true", "cp_ref", "cp_imm", "cp_kf",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=modes).map(|j| format!("mu{j}")));
    w.write_record(&header).map_err(&err)?;
    let cp_true = trace.cp_true();
    let reference = low_pass(&cp_true, CP_REFERENCE_CUTOFF_HZ, sample_time);
    for (k, r) in trace.plant.records.iter().enumerate() {
        let mut row = vec![
            num(r.time),
            num(r.wind),
            num(trace.imm.wind[k]),
            num(trace.kf.wind[k]),
            num(r.cp),
            num(reference[k]),
            num(trace.imm.cp[k]),
            num(trace.kf.cp[k]),
        ];
        row.extend(trace.mode_probabilities[k].iter().map(|&p| num(p)));
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_histograms(path: &Path, run: &SeedRun) -> Result<(), OutputError> {
    let err = csv_err(path);
    let mut w = csv_writer(path)?;
    w.write_record(["quantity", "bin_lo_pct", "bin_hi_pct", "imm", "kf"])
        .map_err(&err)?;
    let hists: [(&str, &PairedHistogram); 2] = [
        ("wind", &run.metrics.wind_histogram),
        ("cp", &run.metrics.cp_histogram),
    ];
    for (quantity, h) in hists {
        for (i, edge) in h.edges.windows(2).enumerate() {
            w.write_record([
                quantity.to_string(),
                num(edge[0]),
                num(edge[1]),
                h.imm[i].to_string(),
                h.kf[i].to_string(),
            ])
            .map_err(&err)?;
        }
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes every artifact into `dir`, creating it if needed. Returns the
/// written paths in a fixed order.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();

    let echo = dir.join(CONFIG_ECHO_FILE);
    fs::write(&echo, report.config.effective().to_toml()?).map_err(|source| OutputError::Io {
        path: echo.clone(),
        source,
    })?;
    written.push(echo);

    let summary = dir.join(SUMMARY_FILE);
    write_summary(&summary, report)?;
    written.push(summary);

    let aggregate = dir.join(AGGREGATE_FILE);
    write_aggregate(&aggregate, report)?;
    written.push(aggregate);

    for (seed, run) in report.completed() {
        let ts = dir.join(format!("timeseries_{seed}.csv"));
        write_timeseries(&ts, run, report.config.sample_time)?;
        written.push(ts);
        let hist = dir.join(format!("hist_{seed}.csv"));
        write_histograms(&hist, run)?;
        written.push(hist);
    }
    Ok(written)
}
