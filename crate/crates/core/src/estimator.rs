//! Recursive least-squares identification of the ARMAX plant with
//! exponential forgetting.
//!
//! The model `A(z^-1) y(t) = z^-1 B(z^-1) u(t) + e(t)` with `A` monic of
//! degree 4 and `B` of degree 3 is rewritten as the linear regression
//! `y(t) = phi(t)' theta + e(t)` where
//!
//! ```text
//! theta = [a1, a2, a3, a4, b0, b1, b2, b3]
//! phi   = [-y(t-1), -y(t-2), -y(t-3), -y(t-4), u(t-1), u(t-2), u(t-3), u(t-4)]
//! ```
//!
//! Each update computes
//!
//! ```text
//! k     = P phi / (lambda + phi' P phi)
//! theta = theta + k (y - phi' theta)
//! P     = (P - k phi' P) / lambda        (then symmetrized)
//! ```

use nalgebra::{SMatrix, SVector};

use crate::error::ConfigError;
use crate::sigcore::{DelayPolynomial, SignalHistory};

/// Number of estimated parameters (four `a`, four `b`).
pub const N_PARAMS: usize = 8;
/// Degree of `A`; also the number of `b` coefficients.
pub const ORDER: usize = 4;

/// Smallest and largest accepted forgetting factors.
pub const LAMBDA_RANGE: (f64, f64) = (0.9, 1.0);
/// Default initial covariance scale, `P0 = P0_SCALE * I`.
pub const DEFAULT_P0_SCALE: f64 = 1e4;

pub type Vector8 = SVector<f64, N_PARAMS>;
pub type Matrix8 = SMatrix<f64, N_PARAMS, N_PARAMS>;

/// Ordered parameter vector `[a1, a2, a3, a4, b0, b1, b2, b3]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParameterVector(pub Vector8);

impl ParameterVector {
    pub fn zeros() -> Self {
        Self(Vector8::zeros())
    }

    pub fn from_slice(values: &[f64]) -> Result<Self, ConfigError> {
        if values.len() != N_PARAMS {
            return Err(ConfigError::invalid(
                "theta",
                format!("expected {N_PARAMS} entries, got {}", values.len()),
            ));
        }
        Ok(Self(Vector8::from_column_slice(values)))
    }

    /// `a` = coefficients of `A` after its unit constant, `b` = all of `B`.
    pub fn from_parts(a: [f64; ORDER], b: [f64; ORDER]) -> Self {
        let mut v = Vector8::zeros();
        for i in 0..ORDER {
            v[i] = a[i];
            v[ORDER + i] = b[i];
        }
        Self(v)
    }

    /// Reads `A` (monic, degree ≤ 4) and `B` (degree ≤ 3) into a parameter vector.
    pub fn from_polynomials(a: &DelayPolynomial, b: &DelayPolynomial) -> Result<Self, ConfigError> {
        if !a.is_monic() || a.degree() > ORDER {
            return Err(ConfigError::invalid("A", "must be monic with degree at most 4"));
        }
        if b.degree() >= ORDER {
            return Err(ConfigError::invalid("B", "degree must be at most 3"));
        }
        Ok(Self::from_parts(
            std::array::from_fn(|i| a.coeff(i + 1)),
            std::array::from_fn(|j| b.coeff(j)),
        ))
    }

    /// `a_i`, `i` in `1..=4`.
    pub fn a(&self, i: usize) -> f64 {
        assert!((1..=ORDER).contains(&i), "a index {i} out of range");
        self.0[i - 1]
    }

    /// `b_j`, `j` in `0..=3`.
    pub fn b(&self, j: usize) -> f64 {
        assert!(j < ORDER, "b index {j} out of range");
        self.0[ORDER + j]
    }

    /// `A(1) = 1 + a1 + a2 + a3 + a4`.
    pub fn a_at_one(&self) -> f64 {
        1.0 + (1..=ORDER).map(|i| self.a(i)).sum::<f64>()
    }

    /// `B(1) = b0 + b1 + b2 + b3`.
    pub fn b_at_one(&self) -> f64 {
        (0..ORDER).map(|j| self.b(j)).sum()
    }

    pub fn a_polynomial(&self) -> DelayPolynomial {
        let mut c = vec![1.0];
        c.extend((1..=ORDER).map(|i| self.a(i)));
        DelayPolynomial::new(c).expect("finite parameters")
    }

    pub fn b_polynomial(&self) -> DelayPolynomial {
        DelayPolynomial::new((0..ORDER).map(|j| self.b(j)).collect::<Vec<_>>())
            .expect("finite parameters")
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    /// Largest absolute component-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.0 - other.0).amax()
    }
}

/// Regression vector aligned with [`ParameterVector`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regressor(pub Vector8);

impl Regressor {
    pub fn predict(&self, theta: &ParameterVector) -> f64 {
        self.0.dot(&theta.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

/// Builds `phi(t)` from histories whose index 0 holds `y(t-1)` and `u(t-1)`,
/// i.e. before the current output is pushed.
pub fn build_regressor(y_past: &SignalHistory, u_past: &SignalHistory) -> Regressor {
    assert!(
        y_past.capacity() >= ORDER && u_past.capacity() >= ORDER,
        "regressor needs four past samples of y and u"
    );
    let mut phi = Vector8::zeros();
    for k in 0..ORDER {
        phi[k] = -y_past[k];
        phi[ORDER + k] = u_past[k];
    }
    Regressor(phi)
}

/// Result of one accepted update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RlsStep {
    /// A-priori prediction error `y - phi' theta` (before the update).
    pub prediction_error: f64,
    /// False when the excitation threshold skipped the update.
    pub applied: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum EstimatorFault {
    #[error("non-finite measurement or regressor; update rejected")]
    NonFiniteData,
}

/// RLS state: estimate, covariance and forgetting factor.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorState {
    theta: ParameterVector,
    p: Matrix8,
    lambda: f64,
    /// Skip updates when `phi' P phi` falls below this.
    min_excitation: Option<f64>,
}

impl EstimatorState {
    /// Zero initial estimate and `P0 = 1e4 I`.
    pub fn new(lambda: f64) -> Result<Self, ConfigError> {
        Self::with_prior(ParameterVector::zeros(), DEFAULT_P0_SCALE, lambda)
    }

    pub fn with_prior(theta0: ParameterVector, p0_scale: f64, lambda: f64) -> Result<Self, ConfigError> {
        validate_lambda(lambda)?;
        if !(p0_scale > 0.0 && p0_scale.is_finite()) {
            return Err(ConfigError::invalid("P0 scale", format!("{p0_scale} is not positive")));
        }
        if !theta0.is_finite() {
            return Err(ConfigError::invalid("theta0", "non-finite entry"));
        }
        Ok(Self {
            theta: theta0,
            p: Matrix8::identity() * p0_scale,
            lambda,
            min_excitation: None,
        })
    }

    pub fn with_min_excitation(mut self, threshold: Option<f64>) -> Self {
        self.min_excitation = threshold;
        self
    }

    pub fn theta(&self) -> &ParameterVector {
        &self.theta
    }

    pub fn covariance(&self) -> &Matrix8 {
        &self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Largest `|P_ij - P_ji|`.
    pub fn asymmetry(&self) -> f64 {
        (self.p - self.p.transpose()).amax()
    }

    /// One forgetting-factor RLS step on the sample `(phi, y)`.
    ///
    /// Non-finite data leaves the state untouched.
    pub fn update(&mut self, phi: &Regressor, y: f64) -> Result<RlsStep, EstimatorFault> {
        if !y.is_finite() || !phi.is_finite() {
            return Err(EstimatorFault::NonFiniteData);
        }
        let prediction_error = y - phi.predict(&self.theta);
        let p_phi = self.p * phi.0;
        let excitation = phi.0.dot(&p_phi);
        if let Some(threshold) = self.min_excitation {
            if excitation < threshold {
                return Ok(RlsStep {
                    prediction_error,
                    applied: false,
                });
            }
        }
        let gain = p_phi / (self.lambda + excitation);
        self.theta.0 += gain * prediction_error;
        // P phi phi' P / (lambda + phi' P phi); p_phi' == phi' P for symmetric P
        self.p = (self.p - gain * p_phi.transpose()) / self.lambda;
        self.symmetrize();
        Ok(RlsStep {
            prediction_error,
            applied: true,
        })
    }

    /// `P <- alpha I`; the estimate is kept.
    pub fn reset_covariance(&mut self, alpha: f64) -> Result<(), ConfigError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ConfigError::invalid("covariance reset", format!("alpha = {alpha}")));
        }
        self.p = Matrix8::identity() * alpha;
        Ok(())
    }

    fn symmetrize(&mut self) {
        for i in 0..N_PARAMS {
            for j in (i + 1)..N_PARAMS {
                let m = 0.5 * (self.p[(i, j)] + self.p[(j, i)]);
                self.p[(i, j)] = m;
                self.p[(j, i)] = m;
            }
        }
    }
}

pub fn validate_lambda(lambda: f64) -> Result<(), ConfigError> {
    let (lo, hi) = LAMBDA_RANGE;
    if !(lo..=hi).contains(&lambda) {
        return Err(ConfigError::invalid(
            "forgetting factor",
            format!("{lambda} outside [{lo}, {hi}]"),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hist(samples: &[f64]) -> SignalHistory {
        SignalHistory::from_recent(8, samples)
    }

    #[test]
    fn regressor_examples() {
        assert_eq!(build_regressor(&hist(&[]), &hist(&[])).0, Vector8::zeros());
        let phi = build_regressor(&hist(&[1.0]), &hist(&[]));
        assert_eq!(phi.0.as_slice(), &[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let phi = build_regressor(&hist(&[0.1, 0.2]), &hist(&[1.0]));
        assert_eq!(phi.0.as_slice(), &[-0.1, -0.2, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_regressor_only_inflates_covariance() {
        let mut est = EstimatorState::with_prior(ParameterVector::zeros(), 2.0, 0.95).unwrap();
        est.theta.0[3] = 0.7;
        let before = est.theta;
        let step = est.update(&Regressor(Vector8::zeros()), 1.5).unwrap();
        assert_eq!(est.theta, before);
        assert_eq!(step.prediction_error, 1.5);
        assert_eq!(*est.covariance(), Matrix8::identity() * (2.0 / 0.95));
    }

    #[test]
    fn scalar_case_hand_run() {
        let mut est = EstimatorState::with_prior(ParameterVector::zeros(), 1e6, 1.0).unwrap();
        let mut phi = Vector8::zeros();
        phi[0] = 1.0;
        est.update(&Regressor(phi), 2.0).unwrap();
        let expected = 2.0 * 1e6 / (1.0 + 1e6);
        assert!((est.theta().a(1) - expected).abs() < 1e-12);
        assert!((est.theta().a(1) - 1.999998).abs() < 1e-6);
        // untouched directions keep their prior
        assert_eq!(est.covariance()[(1, 1)], 1e6);
    }

    #[test]
    fn non_finite_sample_rejected_without_side_effects() {
        let mut est = EstimatorState::new(0.998).unwrap();
        let snapshot = est.clone();
        let mut phi = Vector8::zeros();
        phi[2] = 1.0;
        assert_eq!(est.update(&Regressor(phi), f64::NAN), Err(EstimatorFault::NonFiniteData));
        phi[2] = f64::INFINITY;
        assert_eq!(est.update(&Regressor(phi), 0.0), Err(EstimatorFault::NonFiniteData));
        assert_eq!(est, snapshot);
    }

    #[test]
    fn covariance_reset() {
        let mut est = EstimatorState::new(1.0).unwrap();
        est.reset_covariance(1.0).unwrap();
        assert_eq!(*est.covariance(), Matrix8::identity());
        est.reset_covariance(1e6).unwrap();
        assert_eq!(*est.covariance(), Matrix8::identity() * 1e6);
        assert!(est.reset_covariance(0.0).is_err());
        assert!(est.reset_covariance(-1.0).is_err());
    }

    #[test]
    fn lambda_bounds() {
        assert!(EstimatorState::new(0.998).is_ok());
        assert!(EstimatorState::new(1.0).is_ok());
        assert!(EstimatorState::new(0.89).is_err());
        assert!(EstimatorState::new(1.01).is_err());
        assert!(EstimatorState::with_prior(ParameterVector::zeros(), 0.0, 1.0).is_err());
    }

    #[test]
    fn min_excitation_skips_tiny_updates() {
        let mut est = EstimatorState::with_prior(ParameterVector::zeros(), 1.0, 1.0)
            .unwrap()
            .with_min_excitation(Some(1e-12));
        let step = est.update(&Regressor(Vector8::zeros()), 3.0).unwrap();
        assert!(!step.applied);
        assert_eq!(*est.covariance(), Matrix8::identity());
    }

    /// Linear system generating `y = phi' theta + noise` from a random input.
    fn synthetic_data(
        theta: &ParameterVector,
        inputs: &[f64],
        noise: &[f64],
        scale: f64,
    ) -> Vec<(Regressor, f64)> {
        let mut y_hist = SignalHistory::new(8);
        let mut u_hist = SignalHistory::new(8);
        let mut out = Vec::new();
        for (u, e) in inputs.iter().zip(noise) {
            let phi = build_regressor(&y_hist, &u_hist);
            let y = phi.predict(theta) + e * scale;
            out.push((phi, y));
            y_hist.push(y);
            u_hist.push(u * scale);
        }
        out
    }

    fn smallest_eigenvalue(p: &Matrix8) -> f64 {
        p.symmetric_eigenvalues().min()
    }

    fn test_theta() -> ParameterVector {
        ParameterVector::from_parts([-0.9, 0.2, 0.0, 0.0], [0.5, 0.2, 0.0, 0.0])
    }

    proptest! {
        #[test]
        fn covariance_stays_symmetric_positive_definite(
            inputs in prop::collection::vec(-1.0..1.0f64, 200),
            noise in prop::collection::vec(-0.01..0.01f64, 200),
            lambda in 0.95..1.0f64,
        ) {
            let mut est = EstimatorState::with_prior(ParameterVector::zeros(), 100.0, lambda).unwrap();
            for (phi, y) in synthetic_data(&test_theta(), &inputs, &noise, 1.0) {
                est.update(&phi, y).unwrap();
                prop_assert!(est.asymmetry() <= 1e-9);
            }
            prop_assert!(smallest_eigenvalue(est.covariance()) > 0.0);
        }

        #[test]
        fn trace_non_increasing_without_forgetting(
            inputs in prop::collection::vec(-1.0..1.0f64, 100),
        ) {
            let noise = vec![0.0; inputs.len()];
            let mut est = EstimatorState::with_prior(ParameterVector::zeros(), 10.0, 1.0).unwrap();
            let mut trace = est.covariance().trace();
            for (phi, y) in synthetic_data(&test_theta(), &inputs, &noise, 1.0) {
                est.update(&phi, y).unwrap();
                let next = est.covariance().trace();
                prop_assert!(next <= trace * (1.0 + 1e-12));
                trace = next;
            }
        }

        #[test]
        fn estimates_invariant_to_data_scaling(
            inputs in prop::collection::vec(-1.0..1.0f64, 60),
            noise in prop::collection::vec(-0.05..0.05f64, 60),
            scale in 0.5..4.0f64,
        ) {
            // P0 scaled by 1/scale^2 keeps the prior weight identical in scaled units
            let base = synthetic_data(&test_theta(), &inputs, &noise, 1.0);
            let scaled = synthetic_data(&test_theta(), &inputs, &noise, scale);
            let mut e1 = EstimatorState::with_prior(ParameterVector::zeros(), 100.0, 0.99).unwrap();
            let mut e2 = EstimatorState::with_prior(ParameterVector::zeros(), 100.0 / (scale * scale), 0.99).unwrap();
            for ((p1, y1), (p2, y2)) in base.iter().zip(&scaled) {
                e1.update(p1, *y1).unwrap();
                e2.update(p2, *y2).unwrap();
                let d = e1.theta().max_abs_diff(e2.theta());
                let mag = e1.theta().0.amax().max(1.0);
                prop_assert!(d <= 1e-9 * mag, "diff {} at scale {}", d, scale);
            }
        }
    }
}
