//! Self-tuning excitation control.
//!
//! Two minimum-variance self-tuning regulators with a control penalty, one
//! with feedback compensation only (`J1`) and one that adds reference
//! compensation (`J2`), wrapped around a recursive least-squares estimator
//! of a fourth-order ARMAX model of a synchronous generator's voltage channel.
//!
//! Modules, bottom up:
//!
//! * [`sigcore`]: delay-operator polynomials and signal histories
//! * [`plant`]: seeded ARMAX simulator
//! * [`estimator`]: forgetting-factor RLS
//! * [`controllers`]: the J1, J2 and general control laws
//! * [`harness`]: scenario runner, metrics, CSV export, comparisons

pub mod controllers;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod plant;
pub mod sigcore;

pub use controllers::{ControllerConfig, ControllerState, Variant};
pub use error::{ConfigError, Error, SimulationFault};
pub use estimator::{EstimatorState, ParameterVector, Regressor};
pub use harness::{run_scenario, ScenarioConfig, StepRecord};
pub use plant::{make_default_plant, Plant, PlantModel};
pub use sigcore::{DelayPolynomial, SignalHistory};
