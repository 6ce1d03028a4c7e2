//! ARMAX simulator of the excitation voltage channel:
//!
//! ```text
//! A(z^-1) y(t) = z^-1 B(z^-1) u(t) + C(z^-1) e(t) + d + v(t)
//! ```
//!
//! `e` is seeded Gaussian white noise and `v` the load disturbance, which is
//! added directly into the difference equation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, SimulationFault};
use crate::estimator::{ParameterVector, ORDER};
use crate::sigcore::{DelayPolynomial, SignalHistory};

const HISTORY: usize = 8;

/// Plant coefficients and noise description.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantModel {
    a: DelayPolynomial,
    b: DelayPolynomial,
    c: DelayPolynomial,
    pub d: f64,
    pub sigma2: f64,
    pub seed: u64,
}

impl PlantModel {
    pub fn new(
        a: DelayPolynomial,
        b: DelayPolynomial,
        c: DelayPolynomial,
        d: f64,
        sigma2: f64,
        seed: u64,
    ) -> Result<Self, ConfigError> {
        if !a.is_monic() || a.degree() > ORDER {
            return Err(ConfigError::invalid("plant A", "must be monic with degree at most 4"));
        }
        if b.degree() >= ORDER {
            return Err(ConfigError::invalid("plant B", "degree must be at most 3"));
        }
        if !c.is_monic() || c.degree() > ORDER {
            return Err(ConfigError::invalid("plant C", "must be monic with degree at most 4"));
        }
        if !a.is_stable() {
            return Err(ConfigError::invalid("plant A", format!("{a} is not stable")));
        }
        if !c.is_stable() {
            return Err(ConfigError::invalid("plant C", format!("{c} is not stable")));
        }
        if b.eval_at_one() == 0.0 {
            return Err(ConfigError::invalid("plant B", "zero dc gain, B(1) = 0"));
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(ConfigError::invalid("noise variance", format!("{sigma2}")));
        }
        if !d.is_finite() {
            return Err(ConfigError::invalid("plant offset d", format!("{d}")));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            sigma2,
            seed,
        })
    }

    pub fn a(&self) -> &DelayPolynomial {
        &self.a
    }

    pub fn b(&self) -> &DelayPolynomial {
        &self.b
    }

    pub fn c(&self) -> &DelayPolynomial {
        &self.c
    }

    /// Steady-state gain `B(1) / A(1)`.
    pub fn dc_gain(&self) -> f64 {
        self.b.eval_at_one() / self.a.eval_at_one()
    }

    /// Inverse dc gain `A(1) / B(1)`, the steady-state command per unit reference.
    pub fn kf(&self) -> f64 {
        self.a.eval_at_one() / self.b.eval_at_one()
    }

    /// True `[a1..a4, b0..b3]`, the target of identification.
    pub fn theta(&self) -> ParameterVector {
        ParameterVector::from_polynomials(&self.a, &self.b).expect("validated at construction")
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.sigma2 = sigma2;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Default fourth-order excitation channel.
///
/// `A = 1 - 1.2z^-1 + 0.5z^-2 - 0.1z^-3 + 0.005z^-4`,
/// `B = 0.3 + 0.15z^-1 + 0.05z^-2 + 0.01z^-3`, `C = 1`, `d = 0`,
/// noise variance `1e-8`. Poles at 0.648, 0.240 ± 0.225j and 0.071;
/// dc gain `0.51 / 0.205`.
pub fn make_default_plant() -> PlantModel {
    let a = DelayPolynomial::new(vec![1.0, -1.2, 0.5, -0.1, 0.005]).expect("finite");
    let b = DelayPolynomial::new(vec![0.3, 0.15, 0.05, 0.01]).expect("finite");
    assert!(a.is_stable(), "default A must be stable");
    assert!(b.eval_at_one() != 0.0, "default B must have nonzero dc gain");
    PlantModel::new(a, b, DelayPolynomial::one(), 0.0, 1e-8, 0).expect("default plant is valid")
}

/// One simulated output sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantSample {
    pub y: f64,
    pub e: f64,
}

/// Simulation state of one plant instance.
#[derive(Clone, Debug)]
pub struct Plant {
    model: PlantModel,
    y_hist: SignalHistory,
    u_hist: SignalHistory,
    e_hist: SignalHistory,
    t: usize,
    rng: ChaCha8Rng,
    noise: Normal<f64>,
}

impl Plant {
    pub fn new(model: PlantModel) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(model.seed);
        let noise = Normal::new(0.0, model.sigma2.sqrt()).expect("validated variance");
        Self {
            model,
            y_hist: SignalHistory::new(HISTORY),
            u_hist: SignalHistory::new(HISTORY),
            e_hist: SignalHistory::new(HISTORY),
            t: 0,
            rng,
            noise,
        }
    }

    pub fn model(&self) -> &PlantModel {
        &self.model
    }

    /// Number of outputs produced so far.
    pub fn time(&self) -> usize {
        self.t
    }

    /// Advances one sample. `u_prev` is the command issued at the previous
    /// instant (the plant has a unit transport delay), `v` the load disturbance
    /// acting now.
    pub fn step(&mut self, u_prev: f64, v: f64) -> Result<PlantSample, SimulationFault> {
        let step = self.t;
        let fault = |signal, value| SimulationFault { step, signal, value };
        if !u_prev.is_finite() {
            return Err(fault("u", u_prev));
        }
        if !v.is_finite() {
            return Err(fault("v", v));
        }
        self.u_hist.push(u_prev);
        let e = self.noise.sample(&mut self.rng);
        let m = &self.model;

        let autoregressive: f64 = (1..=m.a.degree()).map(|i| m.a.coeff(i) * self.y_hist[i - 1]).sum();
        let exogenous: f64 = (0..=m.b.degree()).map(|j| m.b.coeff(j) * self.u_hist[j]).sum();
        let coloured: f64 = (1..=m.c.degree()).map(|k| m.c.coeff(k) * self.e_hist[k - 1]).sum();
        let y = -autoregressive + exogenous + e + coloured + m.d + v;
        if !y.is_finite() {
            return Err(fault("y", y));
        }
        self.y_hist.push(y);
        self.e_hist.push(e);
        self.t += 1;
        Ok(PlantSample { y, e })
    }
}

/// Serializable form of [`PlantModel`] used in scenario files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(default = "default_c")]
    pub c: Vec<f64>,
    #[serde(default)]
    pub d: f64,
    pub sigma2: f64,
}

fn default_c() -> Vec<f64> {
    vec![1.0]
}

impl PlantSpec {
    pub fn build(&self, seed: u64) -> Result<PlantModel, ConfigError> {
        PlantModel::new(
            DelayPolynomial::new(self.a.clone())?,
            DelayPolynomial::new(self.b.clone())?,
            DelayPolynomial::new(self.c.clone())?,
            self.d,
            self.sigma2,
            seed,
        )
    }
}

impl From<&PlantModel> for PlantSpec {
    fn from(m: &PlantModel) -> Self {
        Self {
            a: m.a.coeffs().to_vec(),
            b: m.b.coeffs().to_vec(),
            c: m.c.coeffs().to_vec(),
            d: m.d,
            sigma2: m.sigma2,
        }
    }
}
