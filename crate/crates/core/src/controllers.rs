//! Self-tuning control laws with control penalty.
//!
//! With `Â = 1 + â1 z^-1 + ... + â4 z^-4` and `B̂ = b̂0 + ... + b̂3 z^-3` the
//! current estimates, each law is a difference equation solved for `u(t)`:
//!
//! * **J1** (feedback compensation, `Q = r(1 - z^-1)`):
//!   `(B̂ + Q) u(t) = w(t) + â1 y(t) + â2 y(t-1) + â3 y(t-2) + â4 y(t-3)`
//! * **J2** (feedback and reference compensation, `Q = r`):
//!   `(B̂ + r) u(t) = â1 y(t) + ... + â4 y(t-3) + k̂c w(t)`, with
//!   `k̂c = 1 + r Â(1) / B̂(1)` recomputed every sample.
//! * **General** (coloured noise and offset, `Q = r(1 - z^-1)`):
//!   `(B̂ + Q C) u(t) = C w(t) - F y(t) - d`, `F = z [C - Â]`.
//!
//! J1 and the general law share one solver, so the general law with `C = 1`,
//! `d = 0` reproduces J1 bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::estimator::{ParameterVector, ORDER};
use crate::sigcore::{DelayPolynomial, SignalHistory};

/// Denominator leading coefficients below this are treated as singular.
pub const MIN_LEADING_COEFF: f64 = 1e-6;
/// Default lower bound on `|B̂(1)|` for computing `k̂f`.
pub const DEFAULT_MIN_DC: f64 = 1e-6;

const HISTORY: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    J1,
    J2,
    #[serde(rename = "GENERAL")]
    General,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::J1 => "J1",
            Variant::J2 => "J2",
            Variant::General => "GENERAL",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControllerConfig {
    pub variant: Variant,
    /// Penalty factor `r >= 0`.
    pub r: f64,
    /// Noise filter; monic. Only the general law reads it.
    pub c: DelayPolynomial,
    /// Steady-state offset; only the general law reads it.
    pub d: f64,
    pub u_limits: Option<(f64, f64)>,
    /// Lower bound on `|B̂(1)|` when computing `k̂f`.
    pub min_dc: f64,
}

impl ControllerConfig {
    pub fn j1(r: f64) -> Self {
        Self::base(Variant::J1, r)
    }

    pub fn j2(r: f64) -> Self {
        Self::base(Variant::J2, r)
    }

    pub fn general(r: f64, c: DelayPolynomial, d: f64) -> Self {
        Self {
            c,
            d,
            ..Self::base(Variant::General, r)
        }
    }

    fn base(variant: Variant, r: f64) -> Self {
        Self {
            variant,
            r,
            c: DelayPolynomial::one(),
            d: 0.0,
            u_limits: None,
            min_dc: DEFAULT_MIN_DC,
        }
    }

    pub fn with_limits(mut self, lo: f64, hi: f64) -> Self {
        self.u_limits = Some((lo, hi));
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(ConfigError::invalid("penalty r", format!("{} is not >= 0", self.r)));
        }
        if !self.c.is_monic() || self.c.degree() > ORDER {
            return Err(ConfigError::invalid("controller C", "must be monic with degree at most 4"));
        }
        if self.variant == Variant::General && !self.c.is_stable() {
            return Err(ConfigError::invalid("controller C", format!("{} is not stable", self.c)));
        }
        if !self.d.is_finite() {
            return Err(ConfigError::invalid("controller d", format!("{}", self.d)));
        }
        if let Some((lo, hi)) = self.u_limits {
            if !(lo < hi) {
                return Err(ConfigError::invalid("u limits", format!("({lo}, {hi})")));
            }
        }
        if !(self.min_dc > 0.0) {
            return Err(ConfigError::invalid("min dc", format!("{}", self.min_dc)));
        }
        Ok(())
    }

    /// Penalty polynomial `Q`: `r(1 - z^-1)` for J1 and the general law, `r` for J2.
    pub fn penalty(&self) -> Vec<f64> {
        match self.variant {
            Variant::J1 | Variant::General => vec![self.r, -self.r],
            Variant::J2 => vec![self.r],
        }
    }
}

/// Conditions raised while computing one command.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ControlFaults {
    /// `|b̂0 + q0| < 1e-6`; the previous command was held.
    pub singular_denominator: bool,
    /// `|B̂(1)|` below the threshold; the previous `k̂f` was held.
    pub degenerate_gain: bool,
    /// Numerator went non-finite; the previous command was held.
    pub non_finite: bool,
}

impl ControlFaults {
    pub fn any(&self) -> bool {
        self.singular_denominator || self.degenerate_gain || self.non_finite
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Command {
    pub u: f64,
    pub faults: ControlFaults,
}

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
#[error("degenerate dc gain: |B(1)| = {b_at_one:e} below threshold")]
pub struct DegenerateGain {
    pub b_at_one: f64,
}

/// `k̂f = Â(1) / B̂(1)`, the inverse of the estimated dc gain.
pub fn compute_kf(theta: &ParameterVector, min_dc: f64) -> Result<f64, DegenerateGain> {
    let b_at_one = theta.b_at_one();
    if !(b_at_one.abs() >= min_dc) {
        return Err(DegenerateGain { b_at_one });
    }
    Ok(theta.a_at_one() / b_at_one)
}

/// Reference compensation parameter `k̂c = 1 + r k̂f`.
pub fn compute_kc(theta: &ParameterVector, r: f64, min_dc: f64) -> Result<f64, DegenerateGain> {
    Ok(1.0 + r * compute_kf(theta, min_dc)?)
}

/// Controller memory: signal histories and the held `k̂f`.
#[derive(Clone, Debug)]
pub struct ControllerState {
    config: ControllerConfig,
    y_hist: SignalHistory,
    u_hist: SignalHistory,
    w_hist: SignalHistory,
    kf: f64,
    kc: Option<f64>,
}

impl ControllerState {
    pub fn new(config: ControllerConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Self {
            config,
            y_hist: SignalHistory::new(HISTORY),
            u_hist: SignalHistory::new(HISTORY),
            w_hist: SignalHistory::new(HISTORY),
            kf: 0.0,
            kc: None,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    /// Output history; before a step, index 0 is `y(t-1)`.
    pub fn y_history(&self) -> &SignalHistory {
        &self.y_hist
    }

    /// Command history; index 0 is the last issued command.
    pub fn u_history(&self) -> &SignalHistory {
        &self.u_hist
    }

    /// Last `k̂c` computed by the J2 law.
    pub fn kc(&self) -> Option<f64> {
        self.kc
    }

    /// Pre-loads the histories with a constant operating point.
    pub fn preload(&mut self, w: f64, y: f64, u: f64) {
        self.w_hist.fill(w);
        self.y_hist.fill(y);
        self.u_hist.fill(u);
    }

    /// Records a sample while issuing a fixed command (start-up warm-up).
    pub fn hold(&mut self, w: f64, y: f64, u: f64) {
        self.w_hist.push(w);
        self.y_hist.push(y);
        self.u_hist.push(u);
    }

    /// Computes the command with the law selected in the configuration.
    pub fn step(&mut self, theta: &ParameterVector, w: f64, y: f64) -> Command {
        match self.config.variant {
            Variant::J1 => self.j1_control(theta, w, y),
            Variant::J2 => self.j2_control(theta, w, y),
            Variant::General => self.general_control(theta, w, y),
        }
    }

    /// J1 law, `(B̂ + r(1 - z^-1)) u(t) = w(t) + sum â_i y(t-i+1)`.
    pub fn j1_control(&mut self, theta: &ParameterVector, w: f64, y: f64) -> Command {
        self.observe(w, y);
        let r = self.config.r;
        let y_coeffs: [f64; ORDER] = std::array::from_fn(|i| theta.a(i + 1));
        let mut den: [f64; ORDER] = std::array::from_fn(|j| theta.b(j));
        den[0] += r;
        den[1] += -r;
        self.solve(w, &y_coeffs, &den, ControlFaults::default())
    }

    /// J2 law, `(B̂ + r) u(t) = sum â_i y(t-i+1) + k̂c w(t)`.
    pub fn j2_control(&mut self, theta: &ParameterVector, w: f64, y: f64) -> Command {
        self.observe(w, y);
        let r = self.config.r;
        let mut faults = ControlFaults::default();
        match compute_kf(theta, self.config.min_dc) {
            Ok(kf) => self.kf = kf,
            Err(_) => faults.degenerate_gain = true,
        }
        let kc = 1.0 + r * self.kf;
        self.kc = Some(kc);
        let y_coeffs: [f64; ORDER] = std::array::from_fn(|i| theta.a(i + 1));
        let mut den: [f64; ORDER] = std::array::from_fn(|j| theta.b(j));
        den[0] += r;
        self.solve(kc * w, &y_coeffs, &den, faults)
    }

    /// General law `(B̂ + QC) u(t) = C w(t) - F y(t) - d`, `F = z[C - Â]`,
    /// `Q = r(1 - z^-1)`.
    pub fn general_control(&mut self, theta: &ParameterVector, w: f64, y: f64) -> Command {
        self.observe(w, y);
        let c = &self.config.c;
        let q = self.config.penalty();

        let w_term = c.filter(&self.w_hist).expect("history covers degree-4 C") - self.config.d;
        // -F: coefficient of y(t-i) is -(c_{i+1} - â_{i+1})
        let y_coeffs: Vec<f64> = (0..ORDER).map(|i| -(c.coeff(i + 1) - theta.a(i + 1))).collect();
        let qc_len = q.len() + c.degree();
        let den: Vec<f64> = (0..ORDER.max(qc_len))
            .map(|j| {
                let qc: f64 = (0..q.len())
                    .filter(|&m| m <= j && j - m <= c.degree())
                    .map(|m| q[m] * c.coeff(j - m))
                    .sum();
                let b = if j < ORDER { theta.b(j) } else { 0.0 };
                b + qc
            })
            .collect();
        self.solve(w_term, &y_coeffs, &den, ControlFaults::default())
    }

    fn observe(&mut self, w: f64, y: f64) {
        self.w_hist.push(w);
        self.y_hist.push(y);
    }

    /// `u(t) = [rhs + sum y_coeffs[i] y(t-i) - sum_{j>=1} den[j] u(t-j)] / den[0]`.
    fn solve(&mut self, rhs: f64, y_coeffs: &[f64], den: &[f64], mut faults: ControlFaults) -> Command {
        let previous = self.u_hist[0];
        let feedback: f64 = y_coeffs.iter().enumerate().map(|(i, a)| a * self.y_hist[i]).sum();
        let memory: f64 = den[1..].iter().enumerate().map(|(j, b)| b * self.u_hist[j]).sum();
        let numerator = rhs + feedback - memory;

        let mut u = if !(den[0].abs() >= MIN_LEADING_COEFF) {
            faults.singular_denominator = true;
            previous
        } else {
            numerator / den[0]
        };
        if !u.is_finite() {
            faults.non_finite = true;
            u = previous;
        }
        if let Some((lo, hi)) = self.config.u_limits {
            u = u.clamp(lo, hi);
        }
        self.u_hist.push(u);
        Command { u, faults }
    }
}

/// Serializable controller section of a scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    pub variant: Variant,
    pub r: f64,
    #[serde(default = "default_c")]
    pub c: Vec<f64>,
    #[serde(default)]
    pub d: f64,
    #[serde(default)]
    pub u_limits: Option<(f64, f64)>,
}

fn default_c() -> Vec<f64> {
    vec![1.0]
}

impl ControllerSpec {
    pub fn build(&self) -> Result<ControllerConfig, ConfigError> {
        let config = ControllerConfig {
            variant: self.variant,
            r: self.r,
            c: DelayPolynomial::new(self.c.clone())?,
            d: self.d,
            u_limits: self.u_limits,
            min_dc: DEFAULT_MIN_DC,
        };
        config.validate()?;
        Ok(config)
    }
}
