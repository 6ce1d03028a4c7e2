use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controllers::{ControllerSpec, Variant};
use crate::error::ConfigError;
use crate::estimator::{ParameterVector, DEFAULT_P0_SCALE, N_PARAMS};
use crate::plant::{make_default_plant, PlantSpec};

pub const MIN_STEPS: usize = 100;
pub const DEFAULT_WARMUP: usize = 5;
pub const DEFAULT_STEPS: usize = 5000;
pub const DEFAULT_STEP_TIME: usize = 1000;
/// Output-side load disturbance standing in for the 0.2 p.u. torque step.
pub const DEFAULT_LOAD_STEP: f64 = -0.05;
/// Nominal sampling period in seconds; only used to label time axes.
pub const SAMPLE_PERIOD_S: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    #[serde(default = "zero_theta")]
    pub theta0: Vec<f64>,
    #[serde(default = "default_p0")]
    pub p0_scale: f64,
    pub lambda: f64,
    /// Keep `theta0` fixed for the whole run (no identification).
    #[serde(default)]
    pub freeze: bool,
    #[serde(default)]
    pub min_excitation: Option<f64>,
}

fn zero_theta() -> Vec<f64> {
    vec![0.0; N_PARAMS]
}

fn default_p0() -> f64 {
    DEFAULT_P0_SCALE
}

/// Piecewise-constant reference: `value` holds from step `from` until the
/// next segment starts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSegment {
    pub from: usize,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    pub step_time: usize,
    pub magnitude: f64,
}

/// Complete description of one closed-loop run, as stored in a JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub plant: PlantSpec,
    pub controller: ControllerSpec,
    pub estimator: EstimatorSpec,
    pub reference: Vec<ReferenceSegment>,
    pub disturbance: DisturbanceSpec,
    pub steps: usize,
    pub seed: u64,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
}

fn default_warmup() -> usize {
    DEFAULT_WARMUP
}

impl ScenarioConfig {
    /// Load-step study around the default plant: constant unit reference,
    /// `r = 0.01`, forgetting factor 0.998, noise variance `1e-8`, and a
    /// `-0.05` load step at sample 1000 of 5000.
    pub fn load_step_study(variant: Variant) -> Self {
        Self {
            plant: PlantSpec::from(&make_default_plant()),
            controller: ControllerSpec {
                variant,
                r: 0.01,
                c: vec![1.0],
                d: 0.0,
                u_limits: None,
            },
            estimator: EstimatorSpec {
                theta0: zero_theta(),
                p0_scale: DEFAULT_P0_SCALE,
                lambda: 0.998,
                freeze: false,
                min_excitation: None,
            },
            reference: vec![ReferenceSegment { from: 0, value: 1.0 }],
            disturbance: DisturbanceSpec {
                step_time: DEFAULT_STEP_TIME,
                magnitude: DEFAULT_LOAD_STEP,
            },
            steps: DEFAULT_STEPS,
            seed: 0,
            warmup: DEFAULT_WARMUP,
            output_path: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let parse_err = |reason: String| ConfigError::Parse {
            path: path.to_path_buf(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| parse_err(e.to_string()))?;
        let cfg = Self::from_json(&text).map_err(|e| parse_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.steps < MIN_STEPS {
            return Err(ConfigError::invalid("steps", format!("{} < {MIN_STEPS}", self.steps)));
        }
        if self.disturbance.step_time >= self.steps {
            return Err(ConfigError::invalid(
                "disturbance step_time",
                format!("{} not before the end of the run ({})", self.disturbance.step_time, self.steps),
            ));
        }
        if !self.disturbance.magnitude.is_finite() {
            return Err(ConfigError::invalid("disturbance magnitude", "non-finite"));
        }
        if self.reference.is_empty() {
            return Err(ConfigError::invalid("reference", "schedule is empty"));
        }
        if self.reference.windows(2).any(|s| s[0].from >= s[1].from) {
            return Err(ConfigError::invalid("reference", "segments must start at increasing steps"));
        }
        if self.reference.iter().any(|s| !s.value.is_finite()) {
            return Err(ConfigError::invalid("reference", "non-finite value"));
        }
        let lambda = self.estimator.lambda;
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(ConfigError::invalid("lambda", format!("{lambda} outside (0, 1]")));
        }
        self.theta0()?;
        self.plant.build(self.seed)?;
        self.controller.build()?;
        Ok(())
    }

    pub fn theta0(&self) -> Result<ParameterVector, ConfigError> {
        ParameterVector::from_slice(&self.estimator.theta0)
    }

    /// Reference value at step `t`; zero before the first segment.
    pub fn reference_at(&self, t: usize) -> f64 {
        self.reference
            .iter()
            .take_while(|s| s.from <= t)
            .last()
            .map_or(0.0, |s| s.value)
    }

    /// Load disturbance at step `t`.
    pub fn disturbance_at(&self, t: usize) -> f64 {
        if t >= self.disturbance.step_time {
            self.disturbance.magnitude
        } else {
            0.0
        }
    }

    /// Copy with `variant` swapped in, everything else unchanged.
    pub fn with_variant(&self, variant: Variant) -> Self {
        let mut cfg = self.clone();
        cfg.controller.variant = variant;
        cfg
    }

    /// Checks that two configs differ only in their controller and output path.
    pub fn ensure_comparable(&self, other: &Self) -> Result<(), ConfigError> {
        let strip = |c: &Self| {
            let mut c = c.clone();
            c.controller = other.controller.clone();
            c.output_path = None;
            c
        };
        let (a, b) = (strip(self), strip(other));
        if a == b {
            return Ok(());
        }
        let (va, vb) = (
            serde_json::to_value(&a).expect("serializes"),
            serde_json::to_value(&b).expect("serializes"),
        );
        let fields: Vec<String> = va
            .as_object()
            .into_iter()
            .flatten()
            .filter(|(k, v)| vb.get(k.as_str()) != Some(v))
            .map(|(k, _)| k.clone())
            .collect();
        Err(ConfigError::Mismatch(fields.join(", ")))
    }
}
