//! Closed-loop scenarios, metrics, paired comparisons and parameter sweeps.

pub mod config;
pub mod csv;
pub mod metrics;
pub mod run;

use std::fmt;
use std::thread;

use crate::controllers::Variant;
use crate::error::{ConfigError, Error};

pub use config::{DisturbanceSpec, EstimatorSpec, ReferenceSegment, ScenarioConfig};
pub use metrics::{compute_metrics, MetricsReport, MetricsWindow, DEFAULT_SKIP};
pub use run::{run_scenario, StepRecord, Trajectory};

/// Below this, a command variance is treated as zero and the ratio is undefined.
pub const MIN_VARIANCE: f64 = 1e-24;

/// One arm of a comparison.
#[derive(Clone, Debug)]
pub struct ArmResult {
    pub variant: Variant,
    pub trajectory: Trajectory,
    pub metrics: MetricsReport,
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub first: ArmResult,
    pub second: ArmResult,
    /// `u_var(second) / u_var(first)`; `None` when the first variance is ~0.
    pub variance_ratio: Option<f64>,
}

fn run_with_metrics(cfg: &ScenarioConfig) -> Result<ArmResult, Error> {
    let trajectory = run_scenario(cfg)?;
    let window = MetricsWindow::post_disturbance(cfg, DEFAULT_SKIP);
    let metrics = compute_metrics(&trajectory.records, &window)?;
    Ok(ArmResult {
        variant: cfg.controller.variant,
        trajectory,
        metrics,
    })
}

/// Runs two configurations that differ only in their controller, in parallel.
pub fn compare(first: &ScenarioConfig, second: &ScenarioConfig) -> Result<ComparisonReport, Error> {
    first.ensure_comparable(second)?;
    let (a, b) = thread::scope(|s| {
        let h = s.spawn(|| run_with_metrics(first));
        let b = run_with_metrics(second);
        (h.join().expect("scenario thread panicked"), b)
    });
    let (first, second) = (a?, b?);
    let variance_ratio = variance_ratio(first.metrics.u_var, second.metrics.u_var);
    Ok(ComparisonReport {
        first,
        second,
        variance_ratio,
    })
}

pub fn variance_ratio(first: f64, second: f64) -> Option<f64> {
    (first > MIN_VARIANCE).then(|| second / first)
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = (&self.first.metrics, &self.second.metrics);
        let settle = |s: Option<usize>| s.map_or("never".to_string(), |n| n.to_string());
        writeln!(f, "{:<14}{:>16}{:>16}", "metric", self.first.variant, self.second.variant)?;
        writeln!(f, "{:<14}{:>16.6e}{:>16.6e}", "sse", a.sse, b.sse)?;
        writeln!(f, "{:<14}{:>16.6e}{:>16.6e}", "u_var", a.u_var, b.u_var)?;
        writeln!(f, "{:<14}{:>16}{:>16}", "settle_time", settle(a.settle_time), settle(b.settle_time))?;
        writeln!(f, "{:<14}{:>16.6e}{:>16.6e}", "ise", a.ise, b.ise)?;
        match self.variance_ratio {
            Some(r) => write!(f, "u_var ratio ({}/{}): {r:.6}", self.second.variant, self.first.variant),
            None => write!(f, "u_var ratio: undefined (reference variance is zero)"),
        }
    }
}

/// Knob varied by [`sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    R,
    Lambda,
    Sigma2,
    Magnitude,
    P0Scale,
}

impl std::str::FromStr for SweepParam {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "r" => SweepParam::R,
            "lambda" => SweepParam::Lambda,
            "sigma2" => SweepParam::Sigma2,
            "magnitude" => SweepParam::Magnitude,
            "p0_scale" => SweepParam::P0Scale,
            other => {
                return Err(ConfigError::invalid(
                    "sweep parameter",
                    format!("{other:?} (expected r, lambda, sigma2, magnitude or p0_scale)"),
                ))
            }
        })
    }
}

impl SweepParam {
    pub fn apply(self, cfg: &ScenarioConfig, value: f64) -> ScenarioConfig {
        let mut cfg = cfg.clone();
        match self {
            SweepParam::R => cfg.controller.r = value,
            SweepParam::Lambda => cfg.estimator.lambda = value,
            SweepParam::Sigma2 => cfg.plant.sigma2 = value,
            SweepParam::Magnitude => cfg.disturbance.magnitude = value,
            SweepParam::P0Scale => cfg.estimator.p0_scale = value,
        }
        cfg
    }
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub result: ArmResult,
}

/// Runs `cfg` once per value of `param`, in parallel, results in input order.
pub fn sweep(cfg: &ScenarioConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepPoint>, Error> {
    let configs: Vec<ScenarioConfig> = values.iter().map(|&v| param.apply(cfg, v)).collect();
    for c in &configs {
        c.validate()?;
    }
    let results: Vec<Result<ArmResult, Error>> = thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || run_with_metrics(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    });
    values
        .iter()
        .zip(results)
        .map(|(&value, r)| r.map(|result| SweepPoint { value, result }))
        .collect()
}
