//! Simulation and analysis of Bayesian beliefs under dissipation.
//!
//! A scalar Gaussian belief loses precision exponentially over time and
//! regains it through conjugate updates from a stream of observations. Each
//! observation is charged energy against the Landauer bound, and the closed
//! form steady-state laws in [`analysis`] can be checked against the
//! event-driven simulator in [`engine`].
//!
//! The belief math is generic over [`Scalar`] (`f32` or `f64`); the scenario
//! records, flux generation and engine work in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod csvfmt;
pub mod dynamics;
pub mod energy;
pub mod engine;
pub mod fluxgen;
pub mod overrides;
pub mod scalar;
pub mod types;

pub use analysis::{
    classify_run, kl_gaussian, optimal_obs_precision, p_min_exact, p_min_linear, predict, required_rate,
    AnalysisError, ClassVerdict, SteadyStatePrediction, VerdictEvidence,
};
pub use dynamics::{bayes_update, check_crystallization, is_crystallized, propagate, CrystallizationOutcome};
pub use energy::{
    gaussian_entropy, info_gain, landauer_min_energy, observation_cost, windowed_power, EnergyLedger, LedgerEntry,
    ObservationCost,
};
pub use engine::{run, run_with_flux, sweep, EngineError, Event, EventKind, GridAxis, RunTrace, Sample, Summary, SweepTable};
pub use fluxgen::{generate_flux, target_mean_at, ArrivalProcess, FluxSpec, NoiseModel};
pub use scalar::Scalar;
pub use types::{
    validate_scenario, BedsParams, EnergyKind, EnergyModel, GaussianBelief, Observation, ProblemSpec, Scenario,
    TargetKind, TargetSpec, ValidationError,
};

pub type GaussianBelief64 = GaussianBelief<f64>;
pub type GaussianBelief32 = GaussianBelief<f32>;
pub type Observation64 = Observation<f64>;
pub type Observation32 = Observation<f32>;
pub type EnergyLedger64 = EnergyLedger<f64>;
pub type EnergyLedger32 = EnergyLedger<f32>;
pub type TargetSpec64 = TargetSpec<f64>;
pub type EnergyModel64 = EnergyModel<f64>;
pub type SteadyStatePrediction64 = SteadyStatePrediction<f64>;
