//! Variant × seed experiment grids and their summary files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, Variant};
use super::metrics::{env_step_series, median_crossing, steps_to_threshold, train_step_series};
use super::train::{run_training, RunSummary};
use crate::error::{Error, Result};

/// One line of a summary file. Rows with `seed` set describe a single run at
/// one threshold; rows without it aggregate a variant over its seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub variant: String,
    pub label: String,
    pub b: f64,
    pub seed: Option<u64>,
    pub threshold: f64,
    /// Training steps (pretraining excluded) until the threshold held.
    pub steps_to_threshold: Option<usize>,
    pub env_steps_to_threshold: Option<usize>,
    /// Median over seeds, for aggregate rows.
    pub median_steps_to_threshold: Option<f64>,
    pub median_env_steps_to_threshold: Option<f64>,
    pub crossings: usize,
    pub runs: usize,
    pub final_rolling_success: Option<f64>,
    pub metrics_file: Option<String>,
    pub error: Option<String>,
}

/// A configured run in a grid.
#[derive(Debug, Clone)]
pub struct Job {
    pub name: String,
    pub label: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone)]
pub struct JobResult {
    pub job: String,
    pub seed: u64,
    pub metrics_file: PathBuf,
    pub outcome: std::result::Result<RunSummary, String>,
}

pub fn variant_jobs(base: &RunConfig, variants: &[Variant]) -> Vec<Job> {
    variants
        .iter()
        .map(|&v| Job { name: v.key().to_string(), label: v.label(base.agent.algo), config: v.apply(base) })
        .collect()
}

/// R2 runs that differ only in the bonus.
pub fn bonus_jobs(base: &RunConfig, values: &[f64]) -> Vec<Job> {
    values
        .iter()
        .map(|&b| {
            let mut config = Variant::R2.apply(base);
            config.agent.b = b;
            Job { name: format!("b{b}"), label: format!("{}R2 b={b}", base.agent.algo.to_string().to_uppercase()), config }
        })
        .collect()
}

/// Runs every job for each of its seeds, writing `<job>_seed<k>.jsonl`
/// metrics files into `out_dir`. A failing run is recorded and the grid continues.
pub fn run_jobs(jobs: &[Job], out_dir: &Path) -> Result<Vec<JobResult>> {
    std::fs::create_dir_all(out_dir)?;
    let mut results = Vec::new();
    for job in jobs {
        for &seed in &job.config.seeds {
            let path = out_dir.join(format!("{}_seed{seed}.jsonl", job.name));
            let outcome = File::create(&path)
                .map_err(Error::from)
                .and_then(|f| run_training::<f64, _>(&job.config, &job.name, seed, BufWriter::new(f)))
                .map(|(summary, _)| summary)
                .map_err(|e| e.to_string());
            results.push(JobResult { job: job.name.clone(), seed, metrics_file: path, outcome });
        }
    }
    Ok(results)
}

/// Per-run and per-job rows for every configured threshold.
pub fn summarize(jobs: &[Job], results: &[JobResult]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for job in jobs {
        let mine: Vec<&JobResult> = results.iter().filter(|r| r.job == job.name).collect();
        for &threshold in &job.config.thresholds {
            let mut train_steps = Vec::new();
            let mut env_steps = Vec::new();
            let mut finals = Vec::new();
            for r in &mine {
                let base = SummaryRow {
                    variant: job.name.clone(),
                    label: job.label.clone(),
                    b: job.config.agent.b,
                    seed: Some(r.seed),
                    threshold,
                    steps_to_threshold: None,
                    env_steps_to_threshold: None,
                    median_steps_to_threshold: None,
                    median_env_steps_to_threshold: None,
                    crossings: 0,
                    runs: 1,
                    final_rolling_success: None,
                    metrics_file: Some(r.metrics_file.display().to_string()),
                    error: None,
                };
                match &r.outcome {
                    Ok(s) => {
                        let hold = job.config.hold_window;
                        let ts = steps_to_threshold(&train_step_series(&s.records), threshold, hold);
                        let es = steps_to_threshold(&env_step_series(&s.records), threshold, hold);
                        let fin = s.records.last().map(|r| r.rolling_success);
                        train_steps.push(ts);
                        env_steps.push(es);
                        finals.extend(fin);
                        rows.push(SummaryRow {
                            steps_to_threshold: ts,
                            env_steps_to_threshold: es,
                            crossings: ts.is_some() as usize,
                            final_rolling_success: fin,
                            ..base
                        });
                    }
                    Err(e) => rows.push(SummaryRow { error: Some(e.clone()), ..base }),
                }
            }
            rows.push(SummaryRow {
                variant: job.name.clone(),
                label: job.label.clone(),
                b: job.config.agent.b,
                seed: None,
                threshold,
                steps_to_threshold: None,
                env_steps_to_threshold: None,
                median_steps_to_threshold: median_crossing(&train_steps),
                median_env_steps_to_threshold: median_crossing(&env_steps),
                crossings: train_steps.iter().flatten().count(),
                runs: train_steps.len(),
                final_rolling_success: (!finals.is_empty()).then(|| finals.iter().sum::<f64>() / finals.len() as f64),
                metrics_file: None,
                error: None,
            });
        }
    }
    rows
}

pub fn write_summary<W: Write>(w: &mut W, rows: &[SummaryRow]) -> Result<()> {
    for row in rows {
        serde_json::to_writer(&mut *w, row).map_err(|e| Error::Io(e.into()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Runs the jobs and writes `summary.jsonl` next to the metrics files.
pub fn run_grid(jobs: &[Job], out_dir: &Path) -> Result<Vec<SummaryRow>> {
    let results = run_jobs(jobs, out_dir)?;
    let rows = summarize(jobs, &results);
    let mut f = BufWriter::new(File::create(out_dir.join("summary.jsonl"))?);
    write_summary(&mut f, &rows)?;
    f.flush()?;
    Ok(rows)
}

pub fn run_matrix(base: &RunConfig, variants: &[Variant], out_dir: &Path) -> Result<Vec<SummaryRow>> {
    run_grid(&variant_jobs(base, variants), out_dir)
}

pub fn sweep_b(base: &RunConfig, values: &[f64], out_dir: &Path) -> Result<Vec<SummaryRow>> {
    run_grid(&bonus_jobs(base, values), out_dir)
}
