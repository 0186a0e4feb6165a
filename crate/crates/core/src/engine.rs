//! Event-driven simulation of one system over a generated or replayed flux,
//! and parameter sweeps over many such runs.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::kl_gaussian;
use crate::csvfmt::{fmt_opt, fmt_real, CsvError};
use crate::dynamics::{self, bayes_update, check_crystallization, propagate, CrystallizationOutcome, DynamicsError};
use crate::energy::{observation_cost, windowed_power, EnergyError, EnergyLedger};
use crate::fluxgen::{generate_flux, target_mean_at, FluxError};
use crate::overrides::{set_numeric, OverrideError};
use crate::types::{validate_scenario, GaussianBelief, Observation, Scenario, ValidationError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid scenario: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<ValidationError>),
    #[error(transparent)]
    Flux(#[from] FluxError),
    #[error("observation times must be non-negative and non-decreasing")]
    NonMonotonicFlux,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Override(#[from] OverrideError),
    #[error("replicates must be at least 1")]
    NoReplicates,
}

/// Belief and bookkeeping at one sampling instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub mean: f64,
    pub precision: f64,
    pub variance: f64,
    pub kl_to_target: f64,
    pub cumulative_energy: f64,
    pub windowed_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Observation {
        value: f64,
        obs_precision: f64,
        precision_before: f64,
        precision_after: f64,
        energy: f64,
        info_gain: f64,
    },
    Crystallization {
        output_mean: f64,
        accurate: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Aggregates over the part of a run after the burn-in time `t0`.
///
/// The `*_after_t0` fields are `None` when no sample falls after `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean_precision_after_t0: Option<f64>,
    pub max_kl_after_t0: Option<f64>,
    pub mean_windowed_power_after_t0: Option<f64>,
    pub max_windowed_power_after_t0: Option<f64>,
    pub observation_count: usize,
    pub total_energy: f64,
    pub total_info: f64,
    /// Some belief hit the precision floor during the run.
    pub precision_clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub outcome: CrystallizationOutcome<f64>,
    pub ledger: EnergyLedger<f64>,
    pub summary: Summary,
    pub horizon: f64,
    pub power_window: f64,
}

impl RunTrace {
    pub fn final_belief(&self) -> Option<GaussianBelief<f64>> {
        self.samples.last().map(|s| GaussianBelief { mean: s.mean, precision: s.precision })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CsvError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "t",
            "mean",
            "precision",
            "variance",
            "kl_to_target",
            "cumulative_energy",
            "windowed_power",
        ])?;
        for s in &self.samples {
            w.write_record([
                fmt_real(s.t),
                fmt_real(s.mean),
                fmt_real(s.precision),
                fmt_real(s.variance),
                fmt_real(s.kl_to_target),
                fmt_real(s.cumulative_energy),
                fmt_real(s.windowed_power),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Summary document written next to the trace: summary plus outcome.
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            summary: &'a Summary,
            outcome: &'a CrystallizationOutcome<f64>,
            event_count: usize,
        }
        let doc = Doc { summary: &self.summary, outcome: &self.outcome, event_count: self.events.len() };
        serde_json::to_string_pretty(&doc).expect("summary serializes")
    }
}

struct Sampler<'a> {
    scenario: &'a Scenario,
    window: f64,
    next: u64,
    last: u64,
    samples: Vec<Sample>,
}

impl<'a> Sampler<'a> {
    fn new(scenario: &'a Scenario) -> Self {
        let last = (scenario.horizon / scenario.sample_dt + 1e-9).floor() as u64;
        Self {
            scenario,
            window: scenario.power_window(),
            next: 0,
            last,
            samples: Vec::with_capacity(last as usize + 1),
        }
    }

    fn time_of(&self, k: u64) -> f64 {
        (k as f64 * self.scenario.sample_dt).min(self.scenario.horizon)
    }

    /// Emits every pending sample whose time satisfies `before(t)`, by
    /// closed-form propagation from the last event.
    fn emit_while(
        &mut self,
        before: impl Fn(f64) -> bool,
        belief: GaussianBelief<f64>,
        t_last: f64,
        ledger: &EnergyLedger<f64>,
    ) -> Result<bool, DynamicsError> {
        let mut clamped = false;
        let s = self.scenario;
        while self.next <= self.last {
            let t = self.time_of(self.next);
            if !before(t) {
                break;
            }
            let b = propagate(belief, t - t_last, s.beds.gamma)?;
            clamped |= dynamics::is_clamped(&b);
            self.samples.push(Sample {
                t,
                mean: b.mean,
                precision: b.precision,
                variance: b.variance(),
                kl_to_target: kl_gaussian(&b, &s.problem.target.distribution_at(t)),
                cumulative_energy: ledger.cumulative_energy(),
                windowed_power: windowed_power(ledger, t, self.window),
            });
            self.next += 1;
        }
        Ok(clamped)
    }
}

fn summarize(samples: &[Sample], t0: f64, ledger: &EnergyLedger<f64>, clamped: bool) -> Summary {
    let after: Vec<&Sample> = samples.iter().filter(|s| s.t > t0).collect();
    let n = after.len() as f64;
    let mean = |f: fn(&Sample) -> f64| (!after.is_empty()).then(|| after.iter().map(|s| f(s)).sum::<f64>() / n);
    let max = |f: fn(&Sample) -> f64| after.iter().map(|s| f(s)).reduce(f64::max);
    Summary {
        mean_precision_after_t0: mean(|s| s.precision),
        max_kl_after_t0: max(|s| s.kl_to_target),
        mean_windowed_power_after_t0: mean(|s| s.windowed_power),
        max_windowed_power_after_t0: max(|s| s.windowed_power),
        observation_count: ledger.len(),
        total_energy: ledger.cumulative_energy(),
        total_info: ledger.cumulative_info(),
        precision_clamped: clamped,
    }
}

/// Simulates a scenario over the flux generated from its own seed.
pub fn run(scenario: &Scenario) -> Result<RunTrace, EngineError> {
    let s = validate_scenario(scenario.clone()).map_err(EngineError::Validation)?;
    let flux = generate_flux(&s.flux_spec, &s.problem.target, s.horizon, s.seed)?;
    simulate(&s, &flux)
}

/// Simulates a scenario over an externally supplied flux. Observations past
/// the horizon are ignored.
pub fn run_with_flux(scenario: &Scenario, flux: &[Observation<f64>]) -> Result<RunTrace, EngineError> {
    let s = validate_scenario(scenario.clone()).map_err(EngineError::Validation)?;
    simulate(&s, flux)
}

fn simulate(s: &Scenario, flux: &[Observation<f64>]) -> Result<RunTrace, EngineError> {
    if flux.first().is_some_and(|o| !(o.time >= 0.0)) || flux.windows(2).any(|w| !(w[1].time >= w[0].time)) {
        return Err(EngineError::NonMonotonicFlux);
    }
    let gamma = s.beds.gamma;
    let target = &s.problem.target;
    let mut sampler = Sampler::new(s);
    let mut ledger = EnergyLedger::new();
    let mut events = Vec::new();
    let mut outcome = CrystallizationOutcome::none();
    let mut belief = s.beds.initial_belief;
    let mut t_last = 0.0;
    let mut clamped = false;

    for obs in flux.iter().take_while(|o| o.time <= s.horizon) {
        let t = obs.time;
        clamped |= sampler.emit_while(|ts| ts < t, belief, t_last, &ledger)?;

        let prior = propagate(belief, t - t_last, gamma)?;
        clamped |= dynamics::is_clamped(&prior);
        let cost = observation_cost(&s.energy_model, prior.precision, obs.obs_precision)?;
        let posterior = bayes_update(prior, obs)?;
        ledger.charge_observation(t, &cost)?;
        events.push(Event {
            t,
            kind: EventKind::Observation {
                value: obs.value,
                obs_precision: obs.obs_precision,
                precision_before: prior.precision,
                precision_after: posterior.precision,
                energy: cost.energy,
                info_gain: cost.info,
            },
        });
        belief = posterior;
        t_last = t;

        let check = check_crystallization(
            &belief,
            t,
            s.beds.epsilon,
            target_mean_at(target, t),
            s.problem.delta,
        );
        if check.crystallized {
            events.push(Event {
                t,
                kind: EventKind::Crystallization { output_mean: belief.mean, accurate: check.is_accurate() },
            });
            outcome = check;
            break;
        }
    }

    let stop = outcome.time.unwrap_or(s.horizon);
    clamped |= sampler.emit_while(|ts| ts <= stop, belief, t_last, &ledger)?;

    let summary = summarize(&sampler.samples, s.problem.t0, &ledger, clamped);
    Ok(RunTrace {
        samples: sampler.samples,
        events,
        outcome,
        ledger,
        summary,
        horizon: s.horizon,
        power_window: s.power_window(),
    })
}

/// One swept parameter: a dotted path into the scenario and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub path: String,
    pub values: Vec<f64>,
}

impl GridAxis {
    pub fn new(path: impl Into<String>, values: Vec<f64>) -> Self {
        Self { path: path.into(), values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub replicate: usize,
    pub seed: u64,
    pub crystallized: bool,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub paths: Vec<String>,
    /// `exploratory` when the sweep varies target velocity.
    pub tag: String,
    pub rows: Vec<SweepRow>,
}

pub const VELOCITY_PATH: &str = "problem.target.velocity";

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CsvError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.paths.iter().map(String::as_str).collect();
        header.extend([
            "replicate",
            "seed",
            "tag",
            "crystallized",
            "mean_precision_after_t0",
            "max_kl_after_t0",
            "mean_windowed_power_after_t0",
            "max_windowed_power_after_t0",
            "observation_count",
            "total_energy",
            "total_info",
        ]);
        w.write_record(&header)?;
        for row in &self.rows {
            let sm = &row.summary;
            let mut rec: Vec<String> = row.values.iter().map(|v| fmt_real(*v)).collect();
            rec.extend([
                row.replicate.to_string(),
                row.seed.to_string(),
                self.tag.clone(),
                row.crystallized.to_string(),
                fmt_opt(sm.mean_precision_after_t0),
                fmt_opt(sm.max_kl_after_t0),
                fmt_opt(sm.mean_windowed_power_after_t0),
                fmt_opt(sm.max_windowed_power_after_t0),
                sm.observation_count.to_string(),
                fmt_real(sm.total_energy),
                fmt_real(sm.total_info),
            ]);
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the Cartesian product of `grid` with `replicates` seeds per cell.
///
/// Rows come out grid-major (first axis slowest), replicate-minor; replicate
/// `i` uses seed `base.seed + i`. Cells run in parallel.
pub fn sweep(base: &Scenario, grid: &[GridAxis], replicates: usize) -> Result<SweepTable, EngineError> {
    if replicates == 0 {
        return Err(EngineError::NoReplicates);
    }
    let base_doc = serde_json::to_value(base).map_err(OverrideError::from)?;

    let mut cells: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in grid {
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push(*v);
                    next
                })
            })
            .collect();
    }

    let mut jobs = Vec::with_capacity(cells.len() * replicates);
    for values in &cells {
        let mut doc = base_doc.clone();
        for (axis, v) in grid.iter().zip(values) {
            set_numeric(&mut doc, &axis.path, *v)?;
        }
        let cell: Scenario = serde_json::from_value(doc).map_err(OverrideError::from)?;
        let cell = validate_scenario(cell).map_err(EngineError::Validation)?;
        for replicate in 0..replicates {
            let mut sc = cell.clone();
            sc.seed = base.seed.wrapping_add(replicate as u64);
            jobs.push((values.clone(), replicate, sc));
        }
    }

    let rows = jobs
        .into_par_iter()
        .map(|(values, replicate, sc)| {
            let trace = run(&sc)?;
            Ok(SweepRow {
                values,
                replicate,
                seed: sc.seed,
                crystallized: trace.outcome.crystallized,
                summary: trace.summary,
            })
        })
        .collect::<Result<Vec<_>, EngineError>>()?;

    let paths: Vec<String> = grid.iter().map(|a| a.path.clone()).collect();
    let tag = if paths.iter().any(|p| p == VELOCITY_PATH) { "exploratory" } else { "" };
    Ok(SweepTable { paths, tag: tag.to_owned(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluxgen::{ArrivalProcess, NoiseModel};
    use crate::types::tests::sample_scenario;
    use crate::types::EnergyModel;

    fn quiet() -> Scenario {
        let mut s = sample_scenario();
        s.flux_spec.arrival = ArrivalProcess::Schedule { times: vec![] };
        s.beds.gamma = 0.1;
        s.horizon = 10.0;
        s.sample_dt = 0.5;
        s.problem.t0 = 0.0;
        s
    }

    #[test]
    fn dissipation_only_run() {
        let trace = run(&quiet()).unwrap();
        assert_eq!(trace.samples.len(), 21);
        let last = trace.samples.last().unwrap();
        assert_eq!(last.t, 10.0);
        assert!((last.precision - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(trace.summary.total_energy, 0.0);
        assert!(trace.events.is_empty());
        assert!(!trace.outcome.crystallized);
    }

    #[test]
    fn single_exact_observation_without_dissipation_loss() {
        let mut s = quiet();
        // gamma must be positive; make it negligible over the horizon
        s.beds.gamma = 1e-300;
        s.flux_spec = crate::fluxgen::FluxSpec {
            arrival: ArrivalProcess::Schedule { times: vec![1.0] },
            obs_precision: 1.0,
            noise: NoiseModel::Exact,
        };
        let trace = run(&s).unwrap();
        assert_eq!(trace.final_belief().unwrap().precision, 2.0);
        assert_eq!(trace.ledger.len(), 1);
        assert!((trace.ledger.entries()[0].info_gain - 0.5 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn crystallization_halts_the_run() {
        let mut s = quiet();
        s.beds.gamma = 0.01;
        s.beds.epsilon = 1e-3;
        s.horizon = 100.0;
        s.flux_spec = crate::fluxgen::FluxSpec {
            arrival: ArrivalProcess::Periodic { period: 0.05 },
            obs_precision: 1.0,
            noise: NoiseModel::Exact,
        };
        let trace = run(&s).unwrap();
        let tc = trace.outcome.time.expect("crystallizes");
        assert!(tc < 100.0);
        assert!(trace.outcome.is_accurate());
        assert!(trace.samples.iter().all(|x| x.t <= tc));
        assert!(trace.ledger.entries().iter().all(|e| e.time <= tc));
        assert!(matches!(trace.events.last().unwrap().kind, EventKind::Crystallization { .. }));
    }

    #[test]
    fn sampling_grid_does_not_change_dynamics() {
        let mut a = sample_scenario();
        a.sample_dt = 1.0;
        let mut b = a.clone();
        b.sample_dt = 0.25;
        let ta = run(&a).unwrap();
        let tb = run(&b).unwrap();
        assert_eq!(ta.ledger, tb.ledger);
        for sa in &ta.samples {
            let sb = tb.samples.iter().find(|x| x.t == sa.t).unwrap();
            assert!((sa.precision - sb.precision).abs() <= 1e-12 * sa.precision);
            assert_eq!(sa.mean, sb.mean);
        }
    }

    #[test]
    fn repeated_runs_are_identical() {
        let s = sample_scenario();
        assert_eq!(run(&s).unwrap(), run(&s).unwrap());
    }

    #[test]
    fn replayed_flux_must_be_sorted() {
        let s = quiet();
        let flux = vec![
            Observation::new(2.0, 0.0, 1.0).unwrap(),
            Observation::new(1.0, 0.0, 1.0).unwrap(),
        ];
        assert!(matches!(run_with_flux(&s, &flux), Err(EngineError::NonMonotonicFlux)));
    }

    #[test]
    fn invalid_scenario_propagates() {
        let mut s = quiet();
        s.beds.gamma = 0.0;
        assert!(matches!(run(&s), Err(EngineError::Validation(_))));
    }

    #[test]
    fn fixed_cost_ledger_counts_observations() {
        let mut s = sample_scenario();
        s.energy_model = EnergyModel::fixed(2.0, 1.0).unwrap();
        let trace = run(&s).unwrap();
        assert_eq!(trace.summary.observation_count, trace.ledger.len());
        assert_eq!(trace.summary.total_energy, 2.0 * trace.ledger.len() as f64);
    }

    #[test]
    fn sweep_row_order_and_seeds() {
        let base = sample_scenario();
        let t = sweep(&base, &[], 3).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.rows.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![7, 8, 9]);

        let grid = [
            GridAxis::new("beds.gamma", vec![0.1, 0.2]),
            GridAxis::new("flux_spec.obs_precision", vec![1.0, 2.0, 3.0]),
        ];
        let t = sweep(&base, &grid, 2).unwrap();
        assert_eq!(t.rows.len(), 12);
        assert_eq!(t.rows[0].values, vec![0.1, 1.0]);
        assert_eq!(t.rows[1].values, vec![0.1, 1.0]);
        assert_eq!(t.rows[2].values, vec![0.1, 2.0]);
        assert_eq!(t.rows[6].values, vec![0.2, 1.0]);
        assert_eq!(t.tag, "");
    }

    #[test]
    fn sweep_rejects_unknown_paths() {
        let grid = [GridAxis::new("beds.bogus", vec![1.0])];
        assert!(matches!(
            sweep(&sample_scenario(), &grid, 1),
            Err(EngineError::Override(OverrideError::UnknownParameterPath(_)))
        ));
        assert!(matches!(sweep(&sample_scenario(), &[], 0), Err(EngineError::NoReplicates)));
    }

    #[test]
    fn velocity_sweeps_are_tagged() {
        let mut base = sample_scenario();
        base.problem.target = crate::types::TargetSpec::drifting(0.0, 0.0, 1.0).unwrap();
        let t = sweep(&base, &[GridAxis::new(VELOCITY_PATH, vec![0.0, 1.0])], 2).unwrap();
        assert_eq!(t.tag, "exploratory");
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().next().unwrap().starts_with("problem.target.velocity,replicate,seed,tag"));
    }
}
