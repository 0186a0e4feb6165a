//! Operation-level checks: expected values come from the independent
//! oracles, are frozen here, and the production functions must hit them.

use beds_core::analysis::{kl_gaussian, p_min_exact, required_rate};
use beds_core::dynamics::{bayes_update, propagate};
use beds_core::energy::{gaussian_entropy, info_gain, landauer_min_energy, observation_cost, windowed_power};
use beds_core::{
    generate_flux, run, ArrivalProcess, EnergyModel, FluxSpec, GaussianBelief, NoiseModel, Observation, TargetSpec,
};
use beds_verify::{oracles, scenarios};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

// frozen oracle outputs
const TAU_AFTER_TEN_AT_TENTH: f64 = 0.367_879_441_171_442_3;
const ENTROPY_UNIT_PRECISION: f64 = 1.418_938_533_204_672_7;
const INFO_UNIT: f64 = 0.346_573_590_279_972_6;
const INFO_HUNDRED: f64 = 0.004_975_165_426_584_2;
const P_MIN_HUNDRED: f64 = 0.497_516_542_658_42;
const KL_SHIFTED: f64 = 0.5;
const KL_WIDER: f64 = 0.318_147_180_559_945_3;

#[test]
fn propagate_matches_rk4() {
    let ode = 1.0 / oracles::rk4_variance(0.5, std::f64::consts::LN_2, 1.0, 1e-4);
    assert!(rel(ode, 1.0) < 1e-8);
    let b = propagate(GaussianBelief::new(3.0, 2.0).unwrap(), 1.0, std::f64::consts::LN_2).unwrap();
    assert!(rel(b.precision, ode) < 1e-8);
    assert_eq!(b.mean, 3.0);

    let ode = 1.0 / oracles::rk4_variance(1.0, 0.1, 10.0, 1e-4);
    assert!(rel(ode, TAU_AFTER_TEN_AT_TENTH) < 1e-8);
    let b = propagate(GaussianBelief::new(0.0, 1.0).unwrap(), 10.0, 0.1).unwrap();
    assert!(rel(b.precision, TAU_AFTER_TEN_AT_TENTH) < 1e-8);
}

#[test]
fn update_matches_grid_bayes() {
    let (gm, gp) = oracles::grid_posterior(0.0, 1.0, 2.0, 1.0, -10.0, 10.0, 100_000);
    assert!(rel(gm, 1.0) < 1e-4 && rel(gp, 2.0) < 1e-4);
    let b = bayes_update(GaussianBelief::new(0.0, 1.0).unwrap(), &Observation::new(0.0, 2.0, 1.0).unwrap()).unwrap();
    assert!(rel(b.mean, gm) < 1e-4 && rel(b.precision, gp) < 1e-4);
}

#[test]
fn entropy_matches_quadrature() {
    let q = oracles::quadrature_entropy(0.0, 1.0, 20_000);
    assert!((q - ENTROPY_UNIT_PRECISION).abs() < 1e-9);
    assert!((gaussian_entropy(&GaussianBelief::new(0.0, 1.0).unwrap()) - ENTROPY_UNIT_PRECISION).abs() < 1e-12);

    let tau = std::f64::consts::E * std::f64::consts::TAU * std::f64::consts::E;
    let q = oracles::quadrature_entropy(2.0, 1.0 / tau, 20_000);
    assert!((q + 0.5).abs() < 1e-9);
    assert!((gaussian_entropy(&GaussianBelief::new(2.0, tau).unwrap()) + 0.5).abs() < 1e-12);
}

#[test]
fn info_gain_matches_quadrature_difference() {
    let drop = |tau: f64, tau_d: f64| {
        oracles::quadrature_entropy(0.0, 1.0 / tau, 20_000) - oracles::quadrature_entropy(0.0, 1.0 / (tau + tau_d), 20_000)
    };
    assert!((drop(1.0, 1.0) - INFO_UNIT).abs() < 1e-9);
    assert!((info_gain(1.0, 1.0).unwrap() - INFO_UNIT).abs() < 1e-15);
    assert!((drop(100.0, 1.0) - INFO_HUNDRED).abs() < 1e-9);
    assert!((info_gain(100.0, 1.0).unwrap() - INFO_HUNDRED).abs() < 1e-15);
    assert!((landauer_min_energy(INFO_UNIT, 1.0) - INFO_UNIT).abs() < 1e-15);
}

#[test]
fn observation_cost_composes_oracles() {
    let c = observation_cost(&EnergyModel::landauer(1.0).unwrap(), 1.0, 1.0).unwrap();
    assert!((c.energy - INFO_UNIT).abs() < 1e-15 && (c.info - INFO_UNIT).abs() < 1e-15);
    let fixed = observation_cost(&EnergyModel::fixed(0.1, 1.0).unwrap(), 100.0, 1.0).unwrap();
    assert!(!fixed.sub_landauer && 0.1 > INFO_HUNDRED);
}

#[test]
fn required_rate_matches_bisection() {
    for (g, ts, td, expected) in [(0.1, 100.0, 10.0, 1.0), (2.0, 50.0, 5.0, 20.0), (1.0, 3.0, 3.0, 1.0)] {
        let oracle = oracles::bisect_rate(g, ts, td);
        assert!(rel(oracle, expected) < 1e-12);
        assert!(rel(required_rate(g, ts, td).unwrap(), oracle) < 1e-12);
    }
}

#[test]
fn p_min_exact_matches_composed_oracle() {
    let oracle = oracles::landauer_power(1.0, 100.0, 1.0, 1.0);
    assert!(rel(oracle, P_MIN_HUNDRED) < 1e-10);
    assert!(rel(p_min_exact(1.0, 100.0, 1.0, 1.0).unwrap(), P_MIN_HUNDRED) < 1e-12);
    let unit = oracles::landauer_power(1.0, 1.0, 1.0, 1.0);
    assert!(rel(unit, INFO_UNIT) < 1e-12);
    assert!(rel(p_min_exact(1.0, 1.0, 1.0, 1.0).unwrap(), INFO_UNIT) < 1e-12);
}

#[test]
fn kl_matches_monte_carlo() {
    let mc = oracles::monte_carlo_kl((1.0, 1.0), (0.0, 1.0), 10_000_000, 11);
    assert!((mc - KL_SHIFTED).abs() < 1e-3, "{mc}");
    let g = |m, v| GaussianBelief::from_variance(m, v).unwrap();
    assert!((kl_gaussian(&g(1.0, 1.0), &g(0.0, 1.0)) - KL_SHIFTED).abs() < 1e-12);

    let mc = oracles::monte_carlo_kl((0.0, 1.0), (0.0, 4.0), 10_000_000, 12);
    assert!((mc - KL_WIDER).abs() < 1e-3, "{mc}");
    assert!((kl_gaussian(&g(0.0, 1.0), &g(0.0, 4.0)) - KL_WIDER).abs() < 1e-12);
}

fn poisson(rate: f64, noise: NoiseModel, tau_d: f64) -> FluxSpec {
    FluxSpec { arrival: ArrivalProcess::Poisson { rate }, obs_precision: tau_d, noise }
}

#[test]
fn poisson_counts_within_four_sigma() {
    let target = TargetSpec::fixed(0.0, 1.0).unwrap();
    let expected: f64 = 2.0e4;
    let band = 4.0 * expected.sqrt();
    for seed in 0..100 {
        let n = generate_flux(&poisson(2.0, NoiseModel::Exact, 1.0), &target, 1e4, seed).unwrap().len() as f64;
        assert!((n - expected).abs() <= band, "seed {seed}: {n}");
    }
}

#[test]
fn poisson_gaps_average_inverse_rate() {
    let target = TargetSpec::fixed(0.0, 1.0).unwrap();
    let flux = generate_flux(&poisson(4.0, NoiseModel::Exact, 1.0), &target, 26_000.0, 3).unwrap();
    assert!(flux.len() > 100_000);
    let gaps: Vec<f64> = flux.windows(2).take(100_000).map(|w| w[1].time - w[0].time).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    assert!(rel(mean, 0.25) < 0.05, "{mean}");
}

#[test]
fn noisy_values_are_calibrated() {
    let tau_d = 4.0;
    let target = TargetSpec::drifting(1.0, 0.5, 1.0).unwrap();
    let spec = FluxSpec { arrival: ArrivalProcess::Schedule { times: vec![2.0] }, obs_precision: tau_d, noise: NoiseModel::Noisy };
    let n = 20_000;
    let values: Vec<f64> = (0..n).map(|s| generate_flux(&spec, &target, 5.0, s).unwrap()[0].value).collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let se = (tau_d * n as f64).powf(-0.5);
    assert!((mean - 2.0).abs() < 4.0 * se, "{mean}");
    assert!(rel(var, 1.0 / tau_d) < 0.05, "{var}");
}

#[test]
fn windowed_power_tracks_rate_times_cost() {
    let mut s = scenarios::load(scenarios::POWER_LAW);
    s.energy_model = EnergyModel::fixed(2.0, 1.0).unwrap();
    s.flux_spec.arrival = ArrivalProcess::Poisson { rate: 1.0 };
    let mut total = 0.0;
    for seed in 0..20 {
        s.seed = seed;
        let trace = run(&s).unwrap();
        total += windowed_power(&trace.ledger, s.horizon, 1000.0);
    }
    let mean = total / 20.0;
    assert!((mean - 2.0).abs() <= 0.2, "{mean}");
}
