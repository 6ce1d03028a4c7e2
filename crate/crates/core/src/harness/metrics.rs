use std::ops::Range;

use crate::error::ConfigError;
use crate::harness::config::ScenarioConfig;
use crate::harness::run::StepRecord;

/// Samples skipped after the disturbance before measuring.
pub const DEFAULT_SKIP: usize = 50;
/// Settling band on `|y - w|`.
pub const DEFAULT_BAND: f64 = 0.01;
/// Fraction of the run, at its end, treated as steady state.
pub const STEADY_FRACTION: f64 = 0.1;

/// Where and how metrics are measured.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsWindow {
    /// Records (by index) over which `u_var` and `ise` are taken.
    pub range: Range<usize>,
    /// Index from which settling is measured (the disturbance onset).
    pub settle_from: usize,
    pub band: f64,
}

impl MetricsWindow {
    /// From `skip` samples after the disturbance to the end of the run.
    pub fn post_disturbance(cfg: &ScenarioConfig, skip: usize) -> Self {
        Self {
            range: (cfg.disturbance.step_time + skip).min(cfg.steps)..cfg.steps,
            settle_from: cfg.disturbance.step_time,
            band: DEFAULT_BAND,
        }
    }

    pub fn with_band(mut self, band: f64) -> Self {
        self.band = band;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    /// Mean `|y - w|` over the final tenth of the run.
    pub sse: f64,
    /// Population variance of `u` over the window.
    pub u_var: f64,
    /// Samples after `settle_from` until `|y - w|` stays inside the band;
    /// `None` if it never does.
    pub settle_time: Option<usize>,
    /// Sum of `(y - w)^2` over the window.
    pub ise: f64,
}

pub fn compute_metrics(records: &[StepRecord], window: &MetricsWindow) -> Result<MetricsReport, ConfigError> {
    let Range { start, end } = window.range;
    if start >= end || end > records.len() {
        return Err(ConfigError::invalid(
            "metrics window",
            format!("{start}..{end} is empty or outside a run of {}", records.len()),
        ));
    }
    if window.settle_from >= records.len() {
        return Err(ConfigError::invalid("metrics window", "settling start past the end of the run"));
    }
    let in_window = &records[start..end];

    let tail_len = ((records.len() as f64 * STEADY_FRACTION).ceil() as usize).max(1);
    let tail = &records[records.len() - tail_len..];
    let sse = tail.iter().map(|r| r.tracking_error().abs()).sum::<f64>() / tail_len as f64;

    let ise = in_window.iter().map(|r| r.tracking_error().powi(2)).sum();
    let u_var = population_variance(in_window.iter().map(|r| r.u));

    let after = &records[window.settle_from..];
    let settle_time = match after.iter().rposition(|r| r.tracking_error().abs() >= window.band) {
        None => Some(0),
        Some(last_out) if last_out + 1 < after.len() => Some(last_out + 1),
        Some(_) => None,
    };

    Ok(MetricsReport {
        sse,
        u_var,
        settle_time,
        ise,
    })
}

/// Population variance, accumulated relative to the first sample so a
/// constant signal gives exactly zero.
pub fn population_variance(mut values: impl Iterator<Item = f64>) -> f64 {
    let Some(shift) = values.next() else {
        return 0.0;
    };
    let (mut n, mut sum, mut sum_sq) = (1usize, 0.0, 0.0);
    for x in values {
        let d = x - shift;
        n += 1;
        sum += d;
        sum_sq += d * d;
    }
    let n = n as f64;
    ((sum_sq - sum * sum / n) / n).max(0.0)
}
