//! Per-episode metrics files and the statistics computed from them.
//!
//! A metrics file is line-delimited JSON: one header object carrying the
//! effective configuration, then one [`MetricsRecord`] per episode.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// Online environment steps after this episode.
    pub env_step: usize,
    /// Training steps completed when the episode was collected.
    pub train_step: usize,
    pub episode_index: usize,
    pub episode_return: f64,
    pub episode_success: u8,
    pub episode_length: usize,
    pub rolling_success: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsHeader {
    pub variant: String,
    pub seed: u64,
    /// Effective configuration as ordered `[key, value]` pairs.
    pub config: Vec<(String, String)>,
}

impl MetricsHeader {
    pub fn new(variant: &str, seed: u64, config: &RunConfig) -> Self {
        Self {
            variant: variant.to_string(),
            seed,
            config: config.pairs().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        for (k, v) in &self.config {
            c.set(k, v)?;
        }
        Ok(c)
    }
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Io(e.into())
}

pub struct MetricsWriter<W: Write> {
    out: W,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(mut out: W, header: &MetricsHeader) -> Result<Self> {
        serde_json::to_writer(&mut out, header).map_err(json_err)?;
        out.write_all(b"\n")?;
        Ok(Self { out })
    }

    pub fn write(&mut self, record: &MetricsRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, record).map_err(json_err)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn read_metrics<R: BufRead>(r: R) -> Result<(MetricsHeader, Vec<MetricsRecord>)> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| Error::Parse { line: 1, msg: "empty metrics file".into() })??;
    let header = serde_json::from_str(&first).map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
    let mut records = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| Error::Parse { line: k + 2, msg: e.to_string() })?);
    }
    Ok((header, records))
}

/// Trailing mean of `successes` over `window` episodes; early episodes
/// average over the history available so far.
pub fn rolling_success(successes: &[u8], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut sum = 0usize;
    successes
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            sum += s as usize;
            if i >= window {
                sum -= successes[i - window] as usize;
            }
            sum as f64 / (i + 1).min(window) as f64
        })
        .collect()
}

/// Step of the episode that completes the first run of `hold_window`
/// consecutive points with value at least `threshold`.
pub fn steps_to_threshold(series: &[(usize, f64)], threshold: f64, hold_window: usize) -> Option<usize> {
    let hold = hold_window.max(1);
    let mut run = 0;
    for &(step, value) in series {
        if value >= threshold {
            run += 1;
            if run == hold {
                return Some(step);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// `(env_step, rolling_success)` pairs of a run.
pub fn env_step_series(records: &[MetricsRecord]) -> Vec<(usize, f64)> {
    records.iter().map(|r| (r.env_step, r.rolling_success)).collect()
}

/// `(train_step, rolling_success)` pairs of a run.
pub fn train_step_series(records: &[MetricsRecord]) -> Vec<(usize, f64)> {
    records.iter().map(|r| (r.train_step, r.rolling_success)).collect()
}

/// Median of the present values, treating absent ones as larger than any
/// number. `None` when the median itself is absent.
pub fn median_crossing(values: &[Option<usize>]) -> Option<f64> {
    let mut v: Vec<Option<usize>> = values.to_vec();
    v.sort_by_key(|x| x.unwrap_or(usize::MAX));
    if v.is_empty() {
        return None;
    }
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2].map(|x| x as f64)
    } else {
        Some((v[n / 2 - 1]? as f64 + v[n / 2]? as f64) / 2.0)
    }
}
