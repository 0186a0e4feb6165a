//! Closed-form steady-state predictions, Gaussian KL divergence, and the
//! finite-horizon problem-class classifier.
//!
//! A system holding precision `tau_star` against dissipation `gamma` with
//! observations of precision `tau_d` needs `gamma * tau_star / tau_d`
//! observations per unit time. At the Landauer minimum each of them costs
//! `kBT/2 * ln(1 + tau_d/tau_star)`, so the minimum power is their product,
//! which approaches `gamma * kBT / 2` from below as `tau_d / tau_star -> 0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::CrystallizationOutcome;
use crate::energy::windowed_power;
use crate::engine::RunTrace;
use crate::scalar::Scalar;
use crate::types::{GaussianBelief, ProblemSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("{0} must be positive and finite")]
    NonPositiveParameter(&'static str),
    #[error("run trace has no samples")]
    EmptyTrace,
}

fn check<T: Scalar>(name: &'static str, x: T) -> Result<T, AnalysisError> {
    if x > T::zero() && x.is_finite() {
        Ok(x)
    } else {
        Err(AnalysisError::NonPositiveParameter(name))
    }
}

/// Observation rate that balances dissipation at precision `tau_star`.
pub fn required_rate<T: Scalar>(gamma: T, tau_star: T, tau_d: T) -> Result<T, AnalysisError> {
    Ok(check("gamma", gamma)? * check("tau_star", tau_star)? / check("tau_d", tau_d)?)
}

/// Minimum steady-state power with Landauer-priced observations.
pub fn p_min_exact<T: Scalar>(gamma: T, tau_star: T, tau_d: T, kbt: T) -> Result<T, AnalysisError> {
    let gamma = check("gamma", gamma)?;
    let tau_star = check("tau_star", tau_star)?;
    let tau_d = check("tau_d", tau_d)?;
    let kbt = check("kBT", kbt)?;
    let half = T::of(0.5);
    Ok(gamma * tau_star / tau_d * half * kbt * (tau_d / tau_star).ln_1p())
}

/// `gamma * kBT / 2`, the small-observation limit of [`p_min_exact`].
pub fn p_min_linear<T: Scalar>(gamma: T, kbt: T) -> T {
    gamma * kbt * T::of(0.5)
}

/// Observation precision that meets the balance at exactly `lambda_max`.
pub fn optimal_obs_precision<T: Scalar>(gamma: T, tau_star: T, lambda_max: T) -> Result<T, AnalysisError> {
    Ok(check("gamma", gamma)? * check("tau_star", tau_star)? / check("lambda_max", lambda_max)?)
}

/// `KL(q || p)` for scalar Gaussians, in nats.
pub fn kl_gaussian<T: Scalar>(q: &GaussianBelief<T>, p: &GaussianBelief<T>) -> T {
    let half = T::of(0.5);
    // r = var_q / var_p
    let r = p.precision / q.precision;
    let dm = q.mean - p.mean;
    let kl = half * ((r - T::one()) - r.ln()) + half * p.precision * dm * dm;
    kl.max(T::zero())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStatePrediction<T> {
    pub lambda_required: T,
    pub p_min_exact: T,
    pub p_min_linear: T,
    pub e_obs_min: T,
}

pub fn predict<T: Scalar>(
    gamma: T,
    tau_star: T,
    tau_d: T,
    kbt: T,
) -> Result<SteadyStatePrediction<T>, AnalysisError> {
    let lambda_required = required_rate(gamma, tau_star, tau_d)?;
    let info = crate::energy::info_gain(tau_star, tau_d)
        .map_err(|_| AnalysisError::NonPositiveParameter("tau_star"))?;
    Ok(SteadyStatePrediction {
        lambda_required,
        p_min_exact: p_min_exact(gamma, tau_star, tau_d, kbt)?,
        p_min_linear: p_min_linear(gamma, kbt),
        e_obs_min: crate::energy::landauer_min_energy(info, kbt),
    })
}

/// Measurements the verdict flags were derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictEvidence {
    pub final_time: f64,
    pub final_kl: f64,
    pub samples_after_t0: usize,
    pub max_kl_after_t0: Option<f64>,
    pub max_windowed_power_after_t0: Option<f64>,
    pub terminal_windowed_power: f64,
    pub crystallization: CrystallizationOutcome<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassVerdict {
    pub attainable: bool,
    pub maintainable: bool,
    pub crystallizable: bool,
    pub evidence: VerdictEvidence,
}

/// Finite-horizon verdicts for the three problem classes.
///
/// * crystallizable: the run crystallized with an accurate output mean.
/// * maintainable: at least one sample after `t0`, every such sample has KL
///   below `delta`, and the largest windowed power among them is below `p_max`.
/// * attainable: crystallizable, or the final KL is below `delta` while the
///   power over the last window has fallen under `p_max / 100`.
pub fn classify_run(trace: &RunTrace, problem: &ProblemSpec<f64>) -> Result<ClassVerdict, AnalysisError> {
    let last = trace.samples.last().ok_or(AnalysisError::EmptyTrace)?;
    let after: Vec<_> = trace.samples.iter().filter(|s| s.t > problem.t0).collect();
    let max_kl = after.iter().map(|s| s.kl_to_target).reduce(f64::max);
    let max_power = after.iter().map(|s| s.windowed_power).reduce(f64::max);
    let terminal_power = windowed_power(&trace.ledger, trace.horizon, trace.power_window);

    let crystallizable = trace.outcome.crystallized && trace.outcome.is_accurate();
    let maintainable = match (max_kl, max_power) {
        (Some(kl), Some(p)) => kl < problem.delta && p < problem.p_max,
        _ => false,
    };
    let attainable =
        crystallizable || (last.kl_to_target < problem.delta && terminal_power < 0.01 * problem.p_max);

    Ok(ClassVerdict {
        attainable,
        maintainable,
        crystallizable,
        evidence: VerdictEvidence {
            final_time: last.t,
            final_kl: last.kl_to_target,
            samples_after_t0: after.len(),
            max_kl_after_t0: max_kl,
            max_windowed_power_after_t0: max_power,
            terminal_windowed_power: terminal_power,
            crystallization: trace.outcome,
        },
    })
}
