//! Information and energy accounting.
//!
//! Information is measured in nats and the minimum cost of an observation is
//! `kBT` per nat of entropy removed from the belief.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csvfmt::{fmt_real, CsvError};
use crate::scalar::Scalar;
use crate::types::{EnergyKind, EnergyModel, GaussianBelief};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EnergyError {
    #[error("precision must be positive and finite")]
    NonPositivePrecision,
    #[error("ledger entry at an earlier time than the previous entry")]
    NonMonotonicTime,
}

/// Differential entropy of a Gaussian belief, in nats.
pub fn gaussian_entropy<T: Scalar>(b: &GaussianBelief<T>) -> T {
    let half = T::of(0.5);
    half * (T::TAU() * T::E()).ln() - half * b.precision.ln()
}

/// Entropy removed from a belief of precision `tau` by an observation of
/// precision `tau_d`: `ln(1 + tau_d / tau) / 2`.
pub fn info_gain<T: Scalar>(tau: T, tau_d: T) -> Result<T, EnergyError> {
    let ok = |x: T| x > T::zero() && x.is_finite();
    if !ok(tau) || !ok(tau_d) {
        return Err(EnergyError::NonPositivePrecision);
    }
    Ok(T::of(0.5) * (tau_d / tau).ln_1p())
}

pub fn landauer_min_energy<T: Scalar>(info_nats: T, kbt: T) -> T {
    kbt * info_nats
}

/// Energy charged for one observation and the information it carried.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationCost<T> {
    pub energy: T,
    pub info: T,
    /// The charged energy is below `kBT * info`.
    pub sub_landauer: bool,
}

pub fn observation_cost<T: Scalar>(
    model: &EnergyModel<T>,
    tau_before: T,
    tau_d: T,
) -> Result<ObservationCost<T>, EnergyError> {
    let info = info_gain(tau_before, tau_d)?;
    let bound = landauer_min_energy(info, model.kbt);
    let energy = match model.kind {
        EnergyKind::LandauerMin => bound,
        EnergyKind::FixedCost => model.fixed_cost_value,
    };
    Ok(ObservationCost { energy, info, sub_landauer: energy < bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry<T> {
    pub time: T,
    pub energy: T,
    pub info_gain: T,
    pub entropy_reduction: T,
    /// Running total including this entry.
    pub cumulative_energy: T,
    pub sub_landauer: bool,
}

/// Append-only record of per-observation charges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger<T> {
    entries: Vec<LedgerEntry<T>>,
    cumulative_energy: T,
    cumulative_info: T,
}

impl<T: Scalar> Default for EnergyLedger<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> EnergyLedger<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new(), cumulative_energy: T::zero(), cumulative_info: T::zero() }
    }

    pub fn entries(&self) -> &[LedgerEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cumulative_energy(&self) -> T {
        self.cumulative_energy
    }

    pub fn cumulative_info(&self) -> T {
        self.cumulative_info
    }

    pub fn charge(&mut self, time: T, energy: T, info: T) -> Result<&LedgerEntry<T>, EnergyError> {
        self.push(time, energy, info, false)
    }

    pub fn charge_observation(
        &mut self,
        time: T,
        cost: &ObservationCost<T>,
    ) -> Result<&LedgerEntry<T>, EnergyError> {
        self.push(time, cost.energy, cost.info, cost.sub_landauer)
    }

    fn push(
        &mut self,
        time: T,
        energy: T,
        info: T,
        sub_landauer: bool,
    ) -> Result<&LedgerEntry<T>, EnergyError> {
        if self.entries.last().is_some_and(|last| time < last.time) {
            return Err(EnergyError::NonMonotonicTime);
        }
        self.cumulative_energy = self.cumulative_energy + energy;
        self.cumulative_info = self.cumulative_info + info;
        self.entries.push(LedgerEntry {
            time,
            energy,
            info_gain: info,
            entropy_reduction: info,
            cumulative_energy: self.cumulative_energy,
            sub_landauer,
        });
        Ok(self.entries.last().expect("just pushed"))
    }

    /// Cumulative energy over entries with `time <= t`.
    pub fn energy_until(&self, t: T) -> T {
        let n = self.entries.partition_point(|e| e.time <= t);
        if n == 0 {
            T::zero()
        } else {
            self.entries[n - 1].cumulative_energy
        }
    }

    pub fn any_sub_landauer(&self) -> bool {
        self.entries.iter().any(|e| e.sub_landauer)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CsvError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "energy", "info_gain", "cumulative_energy", "sub_landauer"])?;
        for e in &self.entries {
            w.write_record([
                fmt_real(e.time),
                fmt_real(e.energy),
                fmt_real(e.info_gain),
                fmt_real(e.cumulative_energy),
                e.sub_landauer.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Average power over `(t_end - window, t_end]`.
pub fn windowed_power<T: Scalar>(ledger: &EnergyLedger<T>, t_end: T, window: T) -> T {
    let lo = ledger.entries.partition_point(|e| e.time <= t_end - window);
    let hi = ledger.entries.partition_point(|e| e.time <= t_end);
    if hi <= lo {
        return T::zero();
    }
    let below = if lo == 0 { T::zero() } else { ledger.entries[lo - 1].cumulative_energy };
    (ledger.entries[hi - 1].cumulative_energy - below) / window
}
