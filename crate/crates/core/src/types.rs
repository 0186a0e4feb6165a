//! Domain records shared by every module, plus scenario validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fluxgen::{ArrivalProcess, FluxSpec};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("{field} must be finite")]
    NonFinite { field: &'static str },
    #[error("{field} must be positive")]
    NonPositive { field: &'static str },
    #[error("{field} must be non-negative")]
    Negative { field: &'static str },
}

pub(crate) fn finite<T: Scalar>(field: &'static str, x: T) -> Result<T, CoreError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CoreError::NonFinite { field })
    }
}

pub(crate) fn positive<T: Scalar>(field: &'static str, x: T) -> Result<T, CoreError> {
    finite(field, x)?;
    if x > T::zero() {
        Ok(x)
    } else {
        Err(CoreError::NonPositive { field })
    }
}

pub(crate) fn non_negative<T: Scalar>(field: &'static str, x: T) -> Result<T, CoreError> {
    finite(field, x)?;
    if x >= T::zero() {
        Ok(x)
    } else {
        Err(CoreError::Negative { field })
    }
}

/// Gaussian belief `N(mean, 1/precision)` over a scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBelief<T> {
    pub mean: T,
    pub precision: T,
}

impl<T: Scalar> GaussianBelief<T> {
    pub fn new(mean: T, precision: T) -> Result<Self, CoreError> {
        Ok(Self {
            mean: finite("mean", mean)?,
            precision: positive("precision", precision)?,
        })
    }

    pub fn from_variance(mean: T, variance: T) -> Result<Self, CoreError> {
        positive("variance", variance)?;
        Self::new(mean, variance.recip())
    }

    pub fn variance(&self) -> T {
        self.precision.recip()
    }

    pub fn std_dev(&self) -> T {
        self.variance().sqrt()
    }

    pub fn is_valid(&self) -> bool {
        self.mean.is_finite() && self.precision.is_finite() && self.precision > T::zero()
    }
}

/// A timestamped datum together with the precision of its likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation<T> {
    pub time: T,
    pub value: T,
    pub obs_precision: T,
}

impl<T: Scalar> Observation<T> {
    pub fn new(time: T, value: T, obs_precision: T) -> Result<Self, CoreError> {
        Ok(Self {
            time: non_negative("time", time)?,
            value: finite("value", value)?,
            obs_precision: positive("obs_precision", obs_precision)?,
        })
    }
}

/// Dissipation rate, crystallization threshold and initial belief of a system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BedsParams<T> {
    pub gamma: T,
    pub epsilon: T,
    pub initial_belief: GaussianBelief<T>,
}

impl<T: Scalar> BedsParams<T> {
    pub fn new(gamma: T, epsilon: T, initial_belief: GaussianBelief<T>) -> Result<Self, CoreError> {
        GaussianBelief::new(initial_belief.mean, initial_belief.precision)?;
        Ok(Self {
            gamma: positive("gamma", gamma)?,
            epsilon: positive("epsilon", epsilon)?,
            initial_belief,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Static,
    Drifting,
}

/// The quantity being inferred, `theta(t) = theta0 + velocity * t`, and the
/// spread of the target distribution used for KL checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec<T> {
    pub kind: TargetKind,
    pub theta0: T,
    pub velocity: T,
    pub target_variance: T,
}

impl<T: Scalar> TargetSpec<T> {
    pub fn fixed(theta0: T, target_variance: T) -> Result<Self, CoreError> {
        Ok(Self {
            kind: TargetKind::Static,
            theta0: finite("theta0", theta0)?,
            velocity: T::zero(),
            target_variance: positive("target_variance", target_variance)?,
        })
    }

    pub fn drifting(theta0: T, velocity: T, target_variance: T) -> Result<Self, CoreError> {
        Ok(Self {
            kind: TargetKind::Drifting,
            theta0: finite("theta0", theta0)?,
            velocity: finite("velocity", velocity)?,
            target_variance: positive("target_variance", target_variance)?,
        })
    }

    /// Target distribution at time `t` as a Gaussian belief.
    pub fn distribution_at(&self, t: T) -> GaussianBelief<T> {
        GaussianBelief {
            mean: crate::fluxgen::target_mean_at(self, t),
            precision: self.target_variance.recip(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyKind {
    LandauerMin,
    FixedCost,
}

/// How much energy each observation is charged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct EnergyModel<T> {
    pub kind: EnergyKind,
    #[serde(default = "num_traits::Zero::zero")]
    pub fixed_cost_value: T,
    #[serde(rename = "kBT", alias = "kbt", default = "num_traits::One::one")]
    pub kbt: T,
}

impl<T: Scalar> EnergyModel<T> {
    pub fn landauer(kbt: T) -> Result<Self, CoreError> {
        Ok(Self {
            kind: EnergyKind::LandauerMin,
            fixed_cost_value: T::zero(),
            kbt: positive("kBT", kbt)?,
        })
    }

    pub fn fixed(cost: T, kbt: T) -> Result<Self, CoreError> {
        Ok(Self {
            kind: EnergyKind::FixedCost,
            fixed_cost_value: positive("fixed_cost_value", cost)?,
            kbt: positive("kBT", kbt)?,
        })
    }
}

/// Accuracy, power bound and burn-in of an inference problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec<T> {
    pub target: TargetSpec<T>,
    pub delta: T,
    pub p_max: T,
    pub t0: T,
    /// Width of the sliding window used for power estimates. When absent
    /// the engine uses a tenth of the horizon.
    #[serde(default)]
    pub power_window: Option<T>,
}

/// A complete experiment description; the CLI's config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub beds: BedsParams<f64>,
    pub flux_spec: FluxSpec,
    pub problem: ProblemSpec<f64>,
    pub energy_model: EnergyModel<f64>,
    pub horizon: f64,
    pub sample_dt: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn power_window(&self) -> f64 {
        self.problem.power_window.unwrap_or(self.horizon / 10.0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error", content = "field")]
pub enum ValidationError {
    #[error("{0} must be positive")]
    NonPositiveParameter(String),
    #[error("{0} must be non-negative")]
    NegativeParameter(String),
    #[error("{0} must be finite")]
    NonFiniteParameter(String),
    #[error("static target must have zero velocity")]
    InconsistentTarget,
    #[error("sample_dt must be smaller than horizon")]
    DegenerateHorizon,
    #[error("{0} must be non-decreasing")]
    UnsortedSchedule(String),
}

struct Checker(Vec<ValidationError>);

impl Checker {
    fn finite(&mut self, field: &str, x: f64) -> bool {
        if x.is_finite() {
            true
        } else {
            self.0.push(ValidationError::NonFiniteParameter(field.to_owned()));
            false
        }
    }

    fn positive(&mut self, field: &str, x: f64) {
        if self.finite(field, x) && x <= 0.0 {
            self.0.push(ValidationError::NonPositiveParameter(field.to_owned()));
        }
    }

    fn non_negative(&mut self, field: &str, x: f64) {
        if self.finite(field, x) && x < 0.0 {
            self.0.push(ValidationError::NegativeParameter(field.to_owned()));
        }
    }
}

/// Checks every invariant of a scenario and reports all violations at once.
pub fn validate_scenario(raw: Scenario) -> Result<Scenario, Vec<ValidationError>> {
    let mut c = Checker(Vec::new());

    c.positive("beds.gamma", raw.beds.gamma);
    c.positive("beds.epsilon", raw.beds.epsilon);
    c.finite("beds.initial_belief.mean", raw.beds.initial_belief.mean);
    c.positive("beds.initial_belief.precision", raw.beds.initial_belief.precision);

    match &raw.flux_spec.arrival {
        ArrivalProcess::Poisson { rate } => c.positive("flux_spec.arrival.rate", *rate),
        ArrivalProcess::Periodic { period } => c.positive("flux_spec.arrival.period", *period),
        ArrivalProcess::Schedule { times } => {
            for t in times {
                c.non_negative("flux_spec.arrival.times", *t);
            }
            if times.windows(2).any(|w| w[1] < w[0]) {
                c.0.push(ValidationError::UnsortedSchedule("flux_spec.arrival.times".into()));
            }
        }
    }
    c.positive("flux_spec.obs_precision", raw.flux_spec.obs_precision);

    let p = &raw.problem;
    c.finite("problem.target.theta0", p.target.theta0);
    c.finite("problem.target.velocity", p.target.velocity);
    c.positive("problem.target.target_variance", p.target.target_variance);
    if p.target.kind == TargetKind::Static && p.target.velocity != 0.0 {
        c.0.push(ValidationError::InconsistentTarget);
    }
    c.positive("problem.delta", p.delta);
    c.positive("problem.p_max", p.p_max);
    c.non_negative("problem.t0", p.t0);
    if let Some(w) = p.power_window {
        c.positive("problem.power_window", w);
    }

    let e = &raw.energy_model;
    c.positive("energy_model.kBT", e.kbt);
    match e.kind {
        EnergyKind::FixedCost => c.positive("energy_model.fixed_cost_value", e.fixed_cost_value),
        EnergyKind::LandauerMin => c.non_negative("energy_model.fixed_cost_value", e.fixed_cost_value),
    }

    c.positive("horizon", raw.horizon);
    c.positive("sample_dt", raw.sample_dt);
    if raw.sample_dt.is_finite() && raw.horizon.is_finite() && raw.sample_dt >= raw.horizon {
        c.0.push(ValidationError::DegenerateHorizon);
    }

    if c.0.is_empty() {
        Ok(raw)
    } else {
        Err(c.0)
    }
}
