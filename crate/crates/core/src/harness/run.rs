use crate::controllers::{ControllerState, Variant};
use crate::error::{Error, SimulationFault};
use crate::estimator::{build_regressor, EstimatorState, N_PARAMS};
use crate::harness::config::ScenarioConfig;
use crate::plant::Plant;

/// One logged sample of a closed-loop run.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub w: f64,
    pub y: f64,
    pub u: f64,
    pub v: f64,
    pub e: f64,
    pub theta: [f64; N_PARAMS],
    /// Reference compensation parameter, J2 only.
    pub kc: Option<f64>,
    /// A-priori prediction error of the estimator.
    pub eps: f64,
}

impl StepRecord {
    pub fn is_finite(&self) -> bool {
        [self.w, self.y, self.u, self.v, self.e, self.eps]
            .iter()
            .chain(self.theta.iter())
            .chain(self.kc.iter())
            .all(|x| x.is_finite())
    }

    pub fn tracking_error(&self) -> f64 {
        self.y - self.w
    }
}

/// Counts of controller fault flags over a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FaultCounts {
    pub singular_denominator: usize,
    pub degenerate_gain: usize,
    pub non_finite_command: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    /// Largest covariance asymmetry seen after any update.
    pub max_asymmetry: f64,
    pub faults: FaultCounts,
}

/// Runs one closed loop: plant output, estimator update, control law, repeat.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Trajectory, Error> {
    cfg.validate()?;
    let mut plant = Plant::new(cfg.plant.build(cfg.seed)?);
    let mut controller = ControllerState::new(cfg.controller.build()?)?;
    let mut estimator = EstimatorState::with_prior(cfg.theta0()?, cfg.estimator.p0_scale, cfg.estimator.lambda)?
        .with_min_excitation(cfg.estimator.min_excitation);

    let mut records = Vec::with_capacity(cfg.steps);
    let mut faults = FaultCounts::default();
    let mut max_asymmetry = 0.0_f64;
    let mut u_prev = 0.0;

    for t in 0..cfg.steps {
        let fault = |signal, value| SimulationFault { step: t, signal, value };
        let w = cfg.reference_at(t);
        let v = cfg.disturbance_at(t);
        let sample = plant.step(u_prev, v)?;

        let phi = build_regressor(controller.y_history(), controller.u_history());
        let eps = if cfg.estimator.freeze {
            sample.y - phi.predict(estimator.theta())
        } else {
            let step = estimator
                .update(&phi, sample.y)
                .map_err(|_| fault("regressor", f64::NAN))?;
            max_asymmetry = max_asymmetry.max(estimator.asymmetry());
            step.prediction_error
        };

        let theta = *estimator.theta();
        let u = if t < cfg.warmup {
            controller.hold(w, sample.y, 0.0);
            0.0
        } else {
            let cmd = controller.step(&theta, w, sample.y);
            faults.singular_denominator += cmd.faults.singular_denominator as usize;
            faults.degenerate_gain += cmd.faults.degenerate_gain as usize;
            faults.non_finite_command += cmd.faults.non_finite as usize;
            cmd.u
        };

        let kc = match cfg.controller.variant {
            Variant::J2 => Some(controller.kc().unwrap_or(1.0)),
            _ => None,
        };
        let record = StepRecord {
            t,
            w,
            y: sample.y,
            u,
            v,
            e: sample.e,
            theta: std::array::from_fn(|i| theta.0[i]),
            kc,
            eps,
        };
        if !record.is_finite() {
            let bad = [("u", u), ("eps", eps), ("kc", kc.unwrap_or(0.0))]
                .into_iter()
                .find(|(_, x)| !x.is_finite())
                .unwrap_or(("theta", f64::NAN));
            return Err(fault(bad.0, bad.1).into());
        }
        records.push(record);
        u_prev = u;
    }

    Ok(Trajectory {
        records,
        max_asymmetry,
        faults,
    })
}
