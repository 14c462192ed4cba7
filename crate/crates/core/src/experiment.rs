//! Multi-seed experiment runs and their on-disk outputs.
//!
//! Output layout under the output directory:
//!
//! ```text
//! seed_<n>/learning_curve.csv   episode,total_raw_reward,phase
//! seed_<n>/eval_actions.csv     day,mean_action,std_action,analytic_optimum
//! seed_<n>/run_summary.json     config echo, seed, wall time, counters
//! median_summary.csv            day,median_mean_action,min_mean_action,max_mean_action,analytic_optimum
//! ```
//!
//! `phase` is one of `priming`, `training`, `evaluation`, or `mixed` for an
//! episode that straddles a boundary. Every file is written to a temporary
//! name and renamed into place.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::config::ExperimentConfigFile;
use crate::error::{Error, Result};
use crate::trainer::{self, DaySummary, EpisodeRecord, Metrics, TrainConfig};
use crate::DAYS;

pub const LEARNING_CURVE_CSV: &str = "learning_curve.csv";
pub const EVAL_ACTIONS_CSV: &str = "eval_actions.csv";
pub const RUN_SUMMARY_JSON: &str = "run_summary.json";
pub const MEDIAN_SUMMARY_CSV: &str = "median_summary.csv";

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub config: TrainConfig,
    pub metrics: Metrics,
    pub summary: Vec<DaySummary>,
    pub wall_time_secs: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MedianRow {
    pub day: usize,
    pub median_mean_action: f64,
    pub min_mean_action: f64,
    pub max_mean_action: f64,
    pub analytic_optimum: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub runs: Vec<RunOutput>,
    pub median: Vec<MedianRow>,
}

impl ExperimentReport {
    pub fn median_actions(&self) -> [f64; DAYS] {
        let mut out = [0.0; DAYS];
        for row in &self.median {
            out[row.day] = row.median_mean_action;
        }
        out
    }
}

/// Runs one training run and summarises its evaluation phase.
pub fn run_single(config: &TrainConfig, observer: impl FnMut(&EpisodeRecord)) -> Result<RunOutput> {
    let started = Instant::now();
    let metrics = trainer::run_with_observer(config, observer)?;
    let summary = trainer::evaluate(&metrics)?;
    Ok(RunOutput {
        config: config.clone(),
        metrics,
        summary,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Runs every seed of `file` (each on its own thread) and aggregates the
/// per-day medians.
pub fn run_experiment(
    file: &ExperimentConfigFile,
    observer: impl Fn(u64, &EpisodeRecord) + Sync,
) -> Result<ExperimentReport> {
    file.validate()?;
    let configs = file.train_configs()?;
    let observer = &observer;
    let runs = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| scope.spawn(move || run_single(cfg, |rec| observer(cfg.seed, rec))))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Numeric("training thread panicked".into())))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let median = median_rows(&runs);
    Ok(ExperimentReport { runs, median })
}

fn median_rows(runs: &[RunOutput]) -> Vec<MedianRow> {
    (0..DAYS)
        .map(|day| {
            let xs: Vec<f64> = runs.iter().map(|r| r.summary[day].mean_action).collect();
            MedianRow {
                day,
                median_mean_action: median(&xs),
                min_mean_action: xs.iter().copied().fold(f64::INFINITY, f64::min),
                max_mean_action: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                analytic_optimum: runs[0].summary[day].analytic_optimum,
            }
        })
        .collect()
}

/// Median of a nonempty slice (mean of the middle pair for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "median of an empty slice");
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Writes per-seed outputs and the median summary under `out_dir`.
pub fn write_report(
    out_dir: &Path,
    file: &ExperimentConfigFile,
    report: &ExperimentReport,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    for run in &report.runs {
        write_run(
            &out_dir.join(format!("seed_{}", run.config.seed)),
            file,
            run,
        )?;
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "day",
        "median_mean_action",
        "min_mean_action",
        "max_mean_action",
        "analytic_optimum",
    ])?;
    for row in &report.median {
        w.write_record([
            row.day.to_string(),
            row.median_mean_action.to_string(),
            row.min_mean_action.to_string(),
            row.max_mean_action.to_string(),
            row.analytic_optimum.to_string(),
        ])?;
    }
    write_atomic(&out_dir.join(MEDIAN_SUMMARY_CSV), &finish(w)?)
}

#[derive(Serialize)]
struct RunSummary<'a> {
    name: Option<&'a str>,
    seed: u64,
    wall_time_secs: f64,
    total_timesteps: usize,
    train_steps: u64,
    actor_updates: u64,
    buffer_len_at_priming_end: usize,
    mean_episode_reward: [Option<f64>; 3],
    phase_stats: &'a [trainer::PhaseStats; 3],
    config: &'a TrainConfig,
}

/// Writes the three files of one run into `dir`.
pub fn write_run(dir: &Path, file: &ExperimentConfigFile, run: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_atomic(
        &dir.join(LEARNING_CURVE_CSV),
        &learning_curve_csv(&run.metrics)?,
    )?;
    write_atomic(
        &dir.join(EVAL_ACTIONS_CSV),
        &eval_actions_csv(&run.summary)?,
    )?;
    let summary = RunSummary {
        name: file.name.as_deref(),
        seed: run.config.seed,
        wall_time_secs: run.wall_time_secs,
        total_timesteps: run.metrics.total_timesteps,
        train_steps: run.metrics.train_steps,
        actor_updates: run.metrics.actor_updates,
        buffer_len_at_priming_end: run.metrics.buffer_len_at_priming_end,
        mean_episode_reward: trainer::Phase::ALL.map(|p| run.metrics.mean_episode_reward(p)),
        phase_stats: &run.metrics.phase_stats,
        config: &run.config,
    };
    write_atomic(
        &dir.join(RUN_SUMMARY_JSON),
        serde_json::to_string_pretty(&summary)?.as_bytes(),
    )
}

pub fn learning_curve_csv(metrics: &Metrics) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["episode", "total_raw_reward", "phase"])?;
    for e in &metrics.learning_curve {
        let phase = e
            .phase
            .map_or_else(|| "mixed".to_string(), |p| p.to_string());
        w.write_record([e.episode.to_string(), e.total_raw_reward.to_string(), phase])?;
    }
    finish(w)
}

pub fn eval_actions_csv(summary: &[DaySummary]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["day", "mean_action", "std_action", "analytic_optimum"])?;
    for s in summary {
        w.write_record([
            s.day.to_string(),
            s.mean_action.to_string(),
            s.std_action.to_string(),
            s.analytic_optimum.to_string(),
        ])?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Usage(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[7.0]), 7.0);
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_atomic(&p, b"a,b\n").unwrap();
        write_atomic(&p, b"c,d\n").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"c,d\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
