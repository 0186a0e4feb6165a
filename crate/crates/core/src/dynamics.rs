//! Belief evolution: exponential precision decay between observations and
//! conjugate Gaussian updates at observations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::types::{GaussianBelief, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DynamicsError {
    #[error("propagation interval must be non-negative and finite")]
    NegativeDt,
    #[error("dissipation rate must be positive and finite")]
    NonPositiveRate,
    #[error("observation precision must be positive and finite")]
    NonPositiveObsPrecision,
}

/// Evolves a belief for `dt` time units with no observations.
///
/// The mean is untouched and the precision decays as `exp(-gamma * dt)`.
/// Precision never drops below [`Scalar::precision_floor`].
pub fn propagate<T: Scalar>(
    b: GaussianBelief<T>,
    dt: T,
    gamma: T,
) -> Result<GaussianBelief<T>, DynamicsError> {
    if !(dt >= T::zero()) || !dt.is_finite() {
        return Err(DynamicsError::NegativeDt);
    }
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(DynamicsError::NonPositiveRate);
    }
    if dt == T::zero() {
        return Ok(b);
    }
    let precision = (b.precision * (-gamma * dt).exp()).max(T::precision_floor());
    Ok(GaussianBelief { mean: b.mean, precision })
}

/// True when the precision sits on the underflow floor.
pub fn is_clamped<T: Scalar>(b: &GaussianBelief<T>) -> bool {
    b.precision <= T::precision_floor()
}

/// Conjugate update of a Gaussian belief with a Gaussian likelihood.
pub fn bayes_update<T: Scalar>(
    b: GaussianBelief<T>,
    obs: &Observation<T>,
) -> Result<GaussianBelief<T>, DynamicsError> {
    let tau_d = obs.obs_precision;
    if !(tau_d > T::zero()) || !tau_d.is_finite() {
        return Err(DynamicsError::NonPositiveObsPrecision);
    }
    let precision = b.precision + tau_d;
    let mean = (b.precision * b.mean + tau_d * obs.value) / precision;
    Ok(GaussianBelief { mean, precision })
}

/// `Var[q] < epsilon`, strictly.
pub fn is_crystallized<T: Scalar>(b: &GaussianBelief<T>, epsilon: T) -> bool {
    b.variance() < epsilon
}

/// Result of a crystallization check.
///
/// `time`, `output_mean` and `accurate` are present exactly when
/// `crystallized` is true.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrystallizationOutcome<T> {
    pub crystallized: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub time: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub output_mean: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub accurate: Option<bool>,
}

impl<T: Scalar> CrystallizationOutcome<T> {
    pub fn none() -> Self {
        Self { crystallized: false, time: None, output_mean: None, accurate: None }
    }

    pub fn is_accurate(&self) -> bool {
        self.accurate == Some(true)
    }
}

pub fn check_crystallization<T: Scalar>(
    b: &GaussianBelief<T>,
    t: T,
    epsilon: T,
    target_mean_at_t: T,
    delta: T,
) -> CrystallizationOutcome<T> {
    if !is_crystallized(b, epsilon) {
        return CrystallizationOutcome::none();
    }
    CrystallizationOutcome {
        crystallized: true,
        time: Some(t),
        output_mean: Some(b.mean),
        accurate: Some((b.mean - target_mean_at_t).abs() < delta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn belief(mean: f64, precision: f64) -> GaussianBelief<f64> {
        GaussianBelief::new(mean, precision).unwrap()
    }

    fn obs(value: f64, tau_d: f64) -> Observation<f64> {
        Observation::new(0.0, value, tau_d).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn zero_dt_is_identity() {
        let b = belief(0.0, 1.0);
        assert_eq!(propagate(b, 0.0, 0.1).unwrap(), b);
    }

    #[test]
    fn halving_time_halves_precision() {
        let b = propagate(belief(3.0, 2.0), 1.0, std::f64::consts::LN_2).unwrap();
        assert_eq!(b.mean, 3.0);
        assert!(rel(b.precision, 1.0) < 1e-15);
    }

    #[test]
    fn negative_dt_rejected() {
        assert_eq!(propagate(belief(0.0, 1.0), -1.0, 0.1), Err(DynamicsError::NegativeDt));
        assert_eq!(propagate(belief(0.0, 1.0), f64::NAN, 0.1), Err(DynamicsError::NegativeDt));
        assert_eq!(propagate(belief(0.0, 1.0), 1.0, 0.0), Err(DynamicsError::NonPositiveRate));
    }

    #[test]
    fn long_horizon_clamps_instead_of_underflowing() {
        let b = propagate(belief(0.0, 1.0), 1e6, 10.0).unwrap();
        assert_eq!(b.precision, 1e-300);
        assert!(is_clamped(&b));
        assert!(!is_clamped(&belief(0.0, 1.0)));
    }

    #[test]
    fn update_matches_hand_evaluation() {
        let b = bayes_update(belief(0.0, 1.0), &obs(2.0, 1.0)).unwrap();
        assert_eq!(b, belief(1.0, 2.0));
    }

    #[test]
    fn tiny_observation_precision_barely_moves_mean() {
        let b = bayes_update(belief(0.0, 1.0), &obs(1.0, 1e-12)).unwrap();
        assert!(b.mean.abs() < 1e-11);
        let bad = Observation { time: 0.0, value: 1.0, obs_precision: 0.0 };
        assert_eq!(bayes_update(belief(0.0, 1.0), &bad), Err(DynamicsError::NonPositiveObsPrecision));
    }

    #[test]
    fn crystallization_threshold_is_strict() {
        assert!(is_crystallized(&belief(0.0, 1e4), 1e-3));
        assert!(!is_crystallized(&belief(0.0, 1e3), 1e-3));
        assert!(!is_crystallized(&belief(0.0, 1.0), 1e-3));
    }

    #[test]
    fn crystallization_outcomes() {
        let ok = check_crystallization(&belief(5.0001, 1e6), 3.0, 1e-3, 5.0, 0.01);
        assert_eq!(ok.time, Some(3.0));
        assert_eq!(ok.output_mean, Some(5.0001));
        assert!(ok.crystallized && ok.is_accurate());

        let off = check_crystallization(&belief(7.0, 1e6), 3.0, 1e-3, 5.0, 0.01);
        assert!(off.crystallized);
        assert_eq!(off.accurate, Some(false));

        let no = check_crystallization(&belief(5.0, 1.0), 3.0, 1e-3, 5.0, 0.01);
        assert_eq!(no, CrystallizationOutcome::none());
    }

    #[test]
    fn works_in_single_precision() {
        let b = GaussianBelief::<f32>::new(1.0, 4.0).unwrap();
        let p = propagate(b, 2.0, 0.5).unwrap();
        assert!(((p.precision - 4.0 * (-1.0f32).exp()) / p.precision).abs() < 1e-6);
        let u = bayes_update(p, &Observation::new(2.0f32, 1.0, 1.0).unwrap()).unwrap();
        assert!((u.precision - p.precision - 1.0).abs() < 1e-6);
        assert!(propagate(b, 1e9, 1.0).unwrap().precision > 0.0);
    }

    proptest! {
        #[test]
        fn propagation_keeps_mean_and_decays(
            mean in -100.0..100.0f64, tau in 1e-3..1e6f64, dt in 1e-6..50.0f64, gamma in 1e-3..10.0f64,
        ) {
            let before = belief(mean, tau);
            let after = propagate(before, dt, gamma).unwrap();
            prop_assert_eq!(after.mean, mean);
            prop_assert!(after.precision < tau);
            prop_assert!(after.variance() >= before.variance());
        }

        #[test]
        fn update_at_prior_mean_keeps_mean(
            mean in -100.0..100.0f64, tau in 1e-3..1e3f64, tau_d in 1e-3..1e3f64,
        ) {
            let after = bayes_update(belief(mean, tau), &obs(mean, tau_d)).unwrap();
            prop_assert!((after.mean - mean).abs() <= 1e-12 * mean.abs().max(1.0));
            prop_assert!(after.precision > tau);
        }
    }
}
