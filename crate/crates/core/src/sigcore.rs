//! Delay-operator polynomials and bounded signal histories.
//!
//! A [`DelayPolynomial`] `c0 + c1 z^-1 + ... + cn z^-n` acts on a
//! [`SignalHistory`] (newest sample first) as an FIR filter evaluated at the
//! current instant. Everything downstream (plant, estimator, control laws) is
//! built from these two types.

use std::fmt;
use std::ops::Index;

use nalgebra::DMatrix;

use crate::error::ConfigError;

/// Roots must sit strictly inside this radius to count as stable.
pub const STABILITY_RADIUS: f64 = 1.0 - 1e-9;

/// Polynomial in the one-step delay operator `z^-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayPolynomial {
    coeffs: Vec<f64>,
}

impl DelayPolynomial {
    /// Builds a polynomial from `c0, c1, ..., cn`.
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Result<Self, ConfigError> {
        let coeffs = coeffs.into();
        if coeffs.is_empty() {
            return Err(ConfigError::invalid("polynomial", "coefficient list is empty"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(ConfigError::invalid("polynomial", "non-finite coefficient"));
        }
        Ok(Self { coeffs })
    }

    /// `1 + tail[0] z^-1 + tail[1] z^-2 + ...`
    pub fn monic(tail: &[f64]) -> Result<Self, ConfigError> {
        let mut coeffs = Vec::with_capacity(tail.len() + 1);
        coeffs.push(1.0);
        coeffs.extend_from_slice(tail);
        Self::new(coeffs)
    }

    /// The identity polynomial `1`.
    pub fn one() -> Self {
        Self { coeffs: vec![1.0] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of `z^-k`, zero past the degree.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Constant term is exactly one (the form required of `A` and `C`).
    pub fn is_monic(&self) -> bool {
        self.coeffs[0] == 1.0
    }

    /// Value at `z = 1`, i.e. the sum of the coefficients (the dc value).
    pub fn eval_at_one(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// FIR application `sum_k c_k h[k]` at the current instant.
    pub fn filter(&self, history: &SignalHistory) -> Result<f64, ConfigError> {
        if history.capacity() < self.coeffs.len() {
            return Err(ConfigError::invalid(
                "history",
                format!(
                    "capacity {} too small for a degree-{} polynomial",
                    history.capacity(),
                    self.degree()
                ),
            ));
        }
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * history[k])
            .sum())
    }

    /// True iff every root of `c0 z^n + c1 z^(n-1) + ... + cn` lies strictly
    /// inside the circle of radius [`STABILITY_RADIUS`].
    ///
    /// Constants are stable by convention. A zero constant term makes the
    /// characteristic polynomial drop degree (a root at infinity) and is
    /// reported unstable.
    pub fn is_stable(&self) -> bool {
        let n = self.degree();
        if n == 0 {
            return true;
        }
        let lead = self.coeffs[0];
        if lead == 0.0 {
            return false;
        }
        let companion = DMatrix::from_fn(n, n, |i, j| {
            if i == 0 {
                -self.coeffs[j + 1] / lead
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        companion
            .complex_eigenvalues()
            .iter()
            .all(|root| root.norm() < STABILITY_RADIUS)
    }
}

impl fmt::Display for DelayPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.coeffs.iter().enumerate() {
            if k == 0 {
                write!(f, "{c}")?;
            } else {
                let sign = if c.is_sign_negative() { '-' } else { '+' };
                write!(f, " {sign} {}z^-{k}", c.abs())?;
            }
        }
        Ok(())
    }
}

/// Ring buffer of the most recent samples of one scalar signal.
///
/// Index `k` is the sample `k` steps in the past; index 0 is the newest.
/// Slots not yet written read as zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalHistory {
    buf: Vec<f64>,
    /// Position of the newest sample.
    head: usize,
}

impl SignalHistory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "history capacity must be positive");
        Self {
            buf: vec![0.0; capacity],
            head: 0,
        }
    }

    /// History pre-filled with `samples`, newest first. Remaining slots are zero.
    pub fn from_recent(capacity: usize, samples: &[f64]) -> Self {
        let mut h = Self::new(capacity);
        for &s in samples.iter().take(capacity).rev() {
            h.push(s);
        }
        h
    }

    pub fn capacity(&self) -> usize {
        self.buf.len()
    }

    pub fn push(&mut self, sample: f64) {
        self.head = (self.head + 1) % self.buf.len();
        self.buf[self.head] = sample;
    }

    /// Newest sample.
    pub fn latest(&self) -> f64 {
        self.buf[self.head]
    }

    /// Samples from newest to oldest.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.buf.len()).map(move |k| self[k])
    }

    /// Sets every slot to `value`, as if the signal had been constant forever.
    pub fn fill(&mut self, value: f64) {
        self.buf.iter_mut().for_each(|s| *s = value);
    }
}

impl Index<usize> for SignalHistory {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        let n = self.buf.len();
        assert!(k < n, "history index {k} out of range for capacity {n}");
        &self.buf[(self.head + n - k) % n]
    }
}
