//! Seeded generation of observation streams.
//!
//! Arrival times and observation noise come from two independent ChaCha8
//! streams derived from the same seed, so switching noise on or off never
//! moves the arrival times. Exponential gaps use inverse transform sampling
//! (`-ln(u) / rate`, `u` in `(0, 1]`) and Gaussian noise uses the cosine
//! branch of Box-Muller, one normal per pair of uniforms.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csvfmt::{fmt_real, CsvError};
use crate::scalar::Scalar;
use crate::types::{Observation, TargetSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalProcess {
    Poisson { rate: f64 },
    Periodic { period: f64 },
    Schedule { times: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Observations equal the target value at their arrival time.
    Exact,
    /// Observations are drawn from `N(theta(t), 1/obs_precision)`.
    Noisy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxSpec {
    pub arrival: ArrivalProcess,
    pub obs_precision: f64,
    pub noise: NoiseModel,
}

impl FluxSpec {
    /// Mean number of observations per unit time, when defined.
    pub fn mean_rate(&self) -> Option<f64> {
        match &self.arrival {
            ArrivalProcess::Poisson { rate } => Some(*rate),
            ArrivalProcess::Periodic { period } => Some(period.recip()),
            ArrivalProcess::Schedule { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FluxError {
    #[error("flux spec cannot produce observations: {0}")]
    EmptySpec(String),
    #[error("horizon must be positive and finite")]
    NonPositiveHorizon,
}

const NOISE_STREAM: u64 = 1;

pub fn target_mean_at<T: Scalar>(target: &TargetSpec<T>, t: T) -> T {
    target.theta0 + target.velocity * t
}

fn arrival_times(arrival: &ArrivalProcess, horizon: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, FluxError> {
    let bad = |what: &str| Err(FluxError::EmptySpec(what.to_owned()));
    match arrival {
        ArrivalProcess::Poisson { rate } => {
            if !(*rate > 0.0 && rate.is_finite()) {
                return bad("poisson rate must be positive");
            }
            let mut times = Vec::with_capacity((rate * horizon) as usize + 16);
            let mut t = 0.0;
            loop {
                let u = 1.0 - rng.random::<f64>();
                t += -u.ln() / rate;
                if t > horizon {
                    break;
                }
                times.push(t);
            }
            Ok(times)
        }
        ArrivalProcess::Periodic { period } => {
            if !(*period > 0.0 && period.is_finite()) {
                return bad("period must be positive");
            }
            Ok((1u64..)
                .map(|k| k as f64 * period)
                .take_while(|t| *t <= horizon)
                .collect())
        }
        ArrivalProcess::Schedule { times } => {
            if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return bad("schedule times must be finite and non-negative");
            }
            if times.windows(2).any(|w| w[1] < w[0]) {
                return bad("schedule times must be non-decreasing");
            }
            Ok(times.iter().copied().filter(|t| *t <= horizon).collect())
        }
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Generates the observation stream for one run.
pub fn generate_flux(
    spec: &FluxSpec,
    target: &TargetSpec<f64>,
    horizon: f64,
    seed: u64,
) -> Result<Vec<Observation<f64>>, FluxError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(FluxError::NonPositiveHorizon);
    }
    if !(spec.obs_precision > 0.0 && spec.obs_precision.is_finite()) {
        return Err(FluxError::EmptySpec("obs_precision must be positive".into()));
    }
    let mut arrivals = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = ChaCha8Rng::seed_from_u64(seed);
    noise.set_stream(NOISE_STREAM);

    let sd = spec.obs_precision.recip().sqrt();
    let times = arrival_times(&spec.arrival, horizon, &mut arrivals)?;
    Ok(times
        .into_iter()
        .map(|time| {
            let mut value = target_mean_at(target, time);
            if spec.noise == NoiseModel::Noisy {
                value += sd * standard_normal(&mut noise);
            }
            Observation { time, value, obs_precision: spec.obs_precision }
        })
        .collect())
}

pub fn write_flux_csv<W: Write>(flux: &[Observation<f64>], out: W) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "value", "obs_precision"])?;
    for o in flux {
        w.write_record([fmt_real(o.time), fmt_real(o.value), fmt_real(o.obs_precision)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a flux written by [`write_flux_csv`] or produced externally.
pub fn read_flux_csv<R: Read>(input: R) -> Result<Vec<Observation<f64>>, CsvError> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, record) in r.deserialize::<(f64, f64, f64)>().enumerate() {
        let (time, value, obs_precision) = record?;
        let obs = Observation::new(time, value, obs_precision)
            .map_err(|e| CsvError::Parse { row: i + 1, message: e.to_string() })?;
        out.push(obs);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic(period: f64, noise: NoiseModel) -> FluxSpec {
        FluxSpec { arrival: ArrivalProcess::Periodic { period }, obs_precision: 1.0, noise }
    }

    #[test]
    fn periodic_exact_static() {
        let target = TargetSpec::fixed(3.0, 1.0).unwrap();
        let flux = generate_flux(&periodic(1.0, NoiseModel::Exact), &target, 5.0, 0).unwrap();
        let times: Vec<f64> = flux.iter().map(|o| o.time).collect();
        assert_eq!(times, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(flux.iter().all(|o| o.value == 3.0));
    }

    #[test]
    fn periodic_exact_drifting() {
        let target = TargetSpec::drifting(0.0, 1.0, 1.0).unwrap();
        let flux = generate_flux(&periodic(1.0, NoiseModel::Exact), &target, 5.0, 0).unwrap();
        let values: Vec<f64> = flux.iter().map(|o| o.value).collect();
        assert_eq!(values, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn target_mean_is_linear() {
        assert_eq!(target_mean_at(&TargetSpec::fixed(5.0, 1.0).unwrap(), 100.0), 5.0);
        assert_eq!(target_mean_at(&TargetSpec::drifting(0.0, 1.0, 1.0).unwrap(), 7.0), 7.0);
        assert_eq!(target_mean_at(&TargetSpec::drifting(2.0, -0.5, 1.0).unwrap(), 4.0), 0.0);
    }

    #[test]
    fn same_seed_same_flux() {
        let spec = FluxSpec {
            arrival: ArrivalProcess::Poisson { rate: 3.0 },
            obs_precision: 2.0,
            noise: NoiseModel::Noisy,
        };
        let target = TargetSpec::fixed(1.0, 1.0).unwrap();
        let a = generate_flux(&spec, &target, 100.0, 42).unwrap();
        let b = generate_flux(&spec, &target, 100.0, 42).unwrap();
        let c = generate_flux(&spec, &target, 100.0, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|o| o.time >= 0.0 && o.time <= 100.0));
        assert!(a.windows(2).all(|w| w[0].time <= w[1].time));
    }

    #[test]
    fn noise_does_not_move_arrivals() {
        let mut spec = FluxSpec {
            arrival: ArrivalProcess::Poisson { rate: 3.0 },
            obs_precision: 2.0,
            noise: NoiseModel::Noisy,
        };
        let target = TargetSpec::fixed(1.0, 1.0).unwrap();
        let noisy = generate_flux(&spec, &target, 50.0, 9).unwrap();
        spec.noise = NoiseModel::Exact;
        let exact = generate_flux(&spec, &target, 50.0, 9).unwrap();
        let t = |f: &[Observation<f64>]| f.iter().map(|o| o.time).collect::<Vec<_>>();
        assert_eq!(t(&noisy), t(&exact));
    }

    #[test]
    fn schedule_is_clipped_to_horizon() {
        let spec = FluxSpec {
            arrival: ArrivalProcess::Schedule { times: vec![0.0, 1.0, 1.0, 7.0] },
            obs_precision: 1.0,
            noise: NoiseModel::Exact,
        };
        let flux = generate_flux(&spec, &TargetSpec::fixed(0.0, 1.0).unwrap(), 5.0, 0).unwrap();
        assert_eq!(flux.len(), 3);
    }

    #[test]
    fn error_paths() {
        let target = TargetSpec::fixed(0.0, 1.0).unwrap();
        assert_eq!(
            generate_flux(&periodic(1.0, NoiseModel::Exact), &target, 0.0, 0),
            Err(FluxError::NonPositiveHorizon)
        );
        assert!(matches!(
            generate_flux(&periodic(-1.0, NoiseModel::Exact), &target, 1.0, 0),
            Err(FluxError::EmptySpec(_))
        ));
        let unsorted = FluxSpec {
            arrival: ArrivalProcess::Schedule { times: vec![2.0, 1.0] },
            obs_precision: 1.0,
            noise: NoiseModel::Exact,
        };
        assert!(matches!(generate_flux(&unsorted, &target, 5.0, 0), Err(FluxError::EmptySpec(_))));
    }

    #[test]
    fn csv_round_trip() {
        let spec = FluxSpec {
            arrival: ArrivalProcess::Poisson { rate: 1.0 },
            obs_precision: 0.3,
            noise: NoiseModel::Noisy,
        };
        let flux = generate_flux(&spec, &TargetSpec::fixed(2.0, 1.0).unwrap(), 20.0, 5).unwrap();
        let mut buf = Vec::new();
        write_flux_csv(&flux, &mut buf).unwrap();
        assert_eq!(read_flux_csv(buf.as_slice()).unwrap(), flux);
    }

    #[test]
    fn csv_rejects_bad_precision() {
        let text = "time,value,obs_precision\n1.0,2.0,0.0\n";
        assert!(matches!(read_flux_csv(text.as_bytes()), Err(CsvError::Parse { row: 1, .. })));
    }

    #[test]
    fn serde_tags_arrival_kind() {
        let spec = FluxSpec {
            arrival: ArrivalProcess::Poisson { rate: 2.0 },
            obs_precision: 1.0,
            noise: NoiseModel::Exact,
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            json,
            r#"{"arrival":{"kind":"poisson","rate":2.0},"obs_precision":1.0,"noise":"exact"}"#
        );
    }
}
