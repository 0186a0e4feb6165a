//! Reference computations that reach the same quantities as `beds-core` by a
//! different numerical route: ODE integration instead of closed forms,
//! quadrature instead of analytic entropies, sampling instead of closed-form
//! divergences, search instead of algebra. Nothing here calls the
//! production function it is meant to check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Integrates `d(var)/dt = gamma * var` with classical RK4 at step `h`,
/// finishing with a shortened step so the endpoint is hit exactly.
pub fn rk4_variance(var0: f64, gamma: f64, dt: f64, h: f64) -> f64 {
    let f = |v: f64| gamma * v;
    let mut v = var0;
    let mut t = 0.0;
    while t < dt {
        let step = h.min(dt - t);
        let k1 = f(v);
        let k2 = f(v + 0.5 * step * k1);
        let k3 = f(v + 0.5 * step * k2);
        let k4 = f(v + step * k3);
        v += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += step;
    }
    v
}

/// Posterior mean and precision from Bayes' rule evaluated on a uniform
/// midpoint grid over `[lo, hi]`: prior `N(mean, 1/precision)` times a
/// Gaussian likelihood of `value` with precision `obs_precision`,
/// normalised numerically.
pub fn grid_posterior(
    mean: f64,
    precision: f64,
    value: f64,
    obs_precision: f64,
    lo: f64,
    hi: f64,
    cells: usize,
) -> (f64, f64) {
    let w = (hi - lo) / cells as f64;
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..cells {
        let x = lo + (i as f64 + 0.5) * w;
        let log_prior = -0.5 * precision * (x - mean).powi(2);
        let log_lik = -0.5 * obs_precision * (value - x).powi(2);
        let p = (log_prior + log_lik).exp();
        z += p;
        m1 += p * x;
        m2 += p * x * x;
    }
    let mu = m1 / z;
    let var = m2 / z - mu * mu;
    (mu, 1.0 / var)
}

/// `-integral q ln q` over `mean +/- 8 sd` with composite Simpson's rule.
pub fn quadrature_entropy(mean: f64, variance: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let sd = variance.sqrt();
    let (a, b) = (mean - 8.0 * sd, mean + 8.0 * sd);
    let h = (b - a) / n as f64;
    let q = |x: f64| (-(x - mean).powi(2) / (2.0 * variance)).exp() / (std::f64::consts::TAU * variance).sqrt();
    let g = |x: f64| {
        let v = q(x);
        if v > 0.0 {
            -v * v.ln()
        } else {
            0.0
        }
    };
    let mut s = g(a) + g(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 * g(x) } else { 2.0 * g(x) };
    }
    s * h / 3.0
}

/// Entropy `ln(2 pi e var) / 2` written in terms of the variance.
pub fn entropy_from_variance(variance: f64) -> f64 {
    0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * variance).ln()
}

fn log_normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    -0.5 * (std::f64::consts::TAU * variance).ln() - (x - mean).powi(2) / (2.0 * variance)
}

/// Monte-Carlo estimate of `E_q[ln q - ln p]` with `n` draws from `q`.
pub fn monte_carlo_kl(q: (f64, f64), p: (f64, f64), n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = q.1.sqrt();
    let mut acc = 0.0;
    for _ in 0..n {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        let x = q.0 + sd * z;
        acc += log_normal_pdf(x, q.0, q.1) - log_normal_pdf(x, p.0, p.1);
    }
    acc / n as f64
}

/// Observation rate whose steady state of `d tau/dt = -gamma tau + rate tau_d`
/// sits at `tau_star`, found by bisection on the drift at `tau_star`.
pub fn bisect_rate(gamma: f64, tau_star: f64, tau_d: f64) -> f64 {
    let drift = |rate: f64| -gamma * tau_star + rate * tau_d;
    let (mut lo, mut hi) = (0.0, 1.0);
    while drift(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if drift(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Steady-state power at the Landauer price, assembled from the balance
/// rate and the entropy drop of one observation using
/// [`entropy_from_variance`].
pub fn landauer_power(gamma: f64, tau_star: f64, tau_d: f64, kbt: f64) -> f64 {
    let rate = bisect_rate(gamma, tau_star, tau_d);
    let drop = entropy_from_variance(1.0 / tau_star) - entropy_from_variance(1.0 / (tau_star + tau_d));
    rate * kbt * drop
}

/// Result of scanning `tau_d` on a grid for the cheapest feasible choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum {
    pub argmin: f64,
    pub min_value: f64,
    pub step: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Minimises `objective(tau_d)` over grid points `lower + k * step` up to
/// `upper` for which `feasible(tau_d)` holds.
pub fn grid_minimize(
    lower: f64,
    upper: f64,
    step: f64,
    feasible: impl Fn(f64) -> bool,
    objective: impl Fn(f64) -> f64,
) -> Option<GridOptimum> {
    let n = ((upper - lower) / step).floor() as u64;
    let mut best: Option<(f64, f64)> = None;
    for k in 0..=n {
        let x = lower + k as f64 * step;
        if !feasible(x) {
            continue;
        }
        let v = objective(x);
        if best.is_none_or(|(_, bv)| v < bv) {
            best = Some((x, v));
        }
    }
    best.map(|(argmin, min_value)| GridOptimum { argmin, min_value, step, lower, upper })
}
