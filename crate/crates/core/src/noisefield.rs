//! Stochastic acceleration fields and the displacements they induce.
//!
//! The field is expanded in the site coordinate as
//! `g(x, t) = g⁽⁰⁾(t) + g⁽¹⁾(t) x + g⁽²⁾(t) x² + …`, each coefficient being an
//! independent stochastic process. A device at `x = n h` is translated by
//! `x_{γ,n}(t) = Σ_k (n h)^k x_γ⁽ᵏ⁾(t)` with
//! `x_γ⁽ᵏ⁾(t) = ∫₀ᵗ g⁽ᵏ⁾(s)(s − t) ds`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::binomial;
use crate::rng::stream;

/// Newton's constant in m³ kg⁻¹ s⁻².
pub const G_NEWTON: f64 = 6.674e-11;

/// Process driving one multipole coefficient `g⁽ᵏ⁾(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Process {
    Zero,
    /// One Gaussian draw per shot, held for the whole run.
    ShotConstant { mean: f64, std: f64 },
    /// Stationary Ornstein–Uhlenbeck process.
    OrnsteinUhlenbeck { relaxation_time: f64, std: f64 },
    /// Independent Gaussian values held over blocks of `correlation_step`.
    BandLimitedWhite { std: f64, correlation_step: f64 },
}

impl Process {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Configuration(m));
        match *self {
            Process::Zero => Ok(()),
            Process::ShotConstant { mean, std } => {
                if !(std >= 0.0 && std.is_finite() && mean.is_finite()) {
                    return bad(format!("shot_constant needs finite mean and std >= 0, got ({mean}, {std})"));
                }
                Ok(())
            }
            Process::OrnsteinUhlenbeck { relaxation_time, std } => {
                if !(relaxation_time > 0.0 && relaxation_time.is_finite()) {
                    return bad(format!("ornstein_uhlenbeck relaxation_time must be > 0, got {relaxation_time}"));
                }
                if !(std >= 0.0 && std.is_finite()) {
                    return bad(format!("ornstein_uhlenbeck std must be >= 0, got {std}"));
                }
                Ok(())
            }
            Process::BandLimitedWhite { std, correlation_step } => {
                if !(correlation_step > 0.0 && correlation_step.is_finite()) {
                    return bad(format!("band_limited_white correlation_step must be > 0, got {correlation_step}"));
                }
                if !(std >= 0.0 && std.is_finite()) {
                    return bad(format!("band_limited_white std must be >= 0, got {std}"));
                }
                Ok(())
            }
        }
    }

    /// Sample the process on `times`.
    fn sample<R: Rng + ?Sized>(&self, times: &[f64], rng: &mut R) -> Vec<f64> {
        match *self {
            Process::Zero => vec![0.0; times.len()],
            Process::ShotConstant { mean, std } => {
                let c = mean + std * rng.sample::<f64, _>(StandardNormal);
                vec![c; times.len()]
            }
            Process::OrnsteinUhlenbeck { relaxation_time, std } => {
                let mut out = Vec::with_capacity(times.len());
                let mut x = std * rng.sample::<f64, _>(StandardNormal);
                out.push(x);
                for w in times.windows(2) {
                    let decay = (-(w[1] - w[0]) / relaxation_time).exp();
                    let kick = std * (1.0 - decay * decay).sqrt();
                    x = x * decay + kick * rng.sample::<f64, _>(StandardNormal);
                    out.push(x);
                }
                out
            }
            Process::BandLimitedWhite { std, correlation_step } => {
                let mut out = Vec::with_capacity(times.len());
                let mut block = u64::MAX;
                let mut value = 0.0;
                for &t in times {
                    let b = (t / correlation_step).floor() as u64;
                    if b != block {
                        block = b;
                        value = std * rng.sample::<f64, _>(StandardNormal);
                    }
                    out.push(value);
                }
                out
            }
        }
    }

    /// Mean and standard deviation of `∫₀ᵗ g(s)(s − t) ds` when they are known
    /// in closed form.
    fn displacement_moments(&self, t: f64) -> Option<(f64, f64)> {
        let lever = -0.5 * t * t;
        match *self {
            Process::Zero => Some((0.0, 0.0)),
            Process::ShotConstant { mean, std } => Some((mean * lever, std * lever.abs())),
            _ => None,
        }
    }
}

/// Per-order processes for `g⁽⁰⁾ … g⁽Q⁾`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    pub orders: Vec<Process>,
}

impl NoiseModel {
    pub fn zero() -> Self {
        Self { orders: vec![Process::Zero] }
    }

    pub fn new(orders: Vec<Process>) -> Self {
        Self { orders }
    }

    /// Per-shot Gaussian common-mode acceleration whose induced displacement
    /// at time `t` has standard deviation `sigma_gamma`.
    pub fn common_mode_displacement(sigma_gamma: f64, t: f64) -> Self {
        Self::new(vec![Process::ShotConstant { mean: 0.0, std: 2.0 * sigma_gamma / (t * t) }])
    }

    /// Highest multipole order carried by the model.
    pub fn expansion_order(&self) -> usize {
        self.orders.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        self.orders.iter().try_for_each(Process::validate)
    }

    /// Draw displacement coefficients at time `t` for one realization.
    ///
    /// Per-shot constant orders are integrated in closed form; other orders
    /// are sampled on a grid of spacing `step` and integrated by trapezoid.
    pub fn draw_displacements<R: Rng + ?Sized>(&self, t: f64, step: f64, rng: &mut R) -> DisplacementCoefficients {
        let mut grid: Option<Vec<f64>> = None;
        let coeffs = self
            .orders
            .iter()
            .map(|p| match *p {
                Process::Zero => 0.0,
                Process::ShotConstant { mean, std } => {
                    let c = mean + std * rng.sample::<f64, _>(StandardNormal);
                    -0.5 * c * t * t
                }
                _ => {
                    let times = grid.get_or_insert_with(|| time_grid(t, step));
                    let values = p.sample(times, rng);
                    kernel_integral(times, &values, t)
                }
            })
            .collect();
        DisplacementCoefficients(coeffs)
    }

    /// Closed-form mean and standard deviation of `Σ_k weights[k] x_γ⁽ᵏ⁾(t)`,
    /// available when every order is zero or per-shot constant.
    pub fn combined_moments(&self, t: f64, weights: &[f64]) -> Option<(f64, f64)> {
        let mut mean = 0.0;
        let mut var = 0.0;
        for (k, p) in self.orders.iter().enumerate() {
            let w = weights.get(k).copied().unwrap_or(0.0);
            let (m, s) = p.displacement_moments(t)?;
            mean += w * m;
            var += (w * s).powi(2);
        }
        Some((mean, var.sqrt()))
    }
}

fn time_grid(duration: f64, step: f64) -> Vec<f64> {
    let n = (duration / step).ceil().max(1.0) as usize;
    let dt = duration / n as f64;
    (0..=n).map(|i| if i == n { duration } else { i as f64 * dt }).collect()
}

/// One sampled realization of every multipole coefficient on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePath {
    pub times: Vec<f64>,
    /// `values[k][i]` is `g⁽ᵏ⁾(times[i])`.
    pub values: Vec<Vec<f64>>,
    pub seed: u64,
}

impl NoisePath {
    /// Build a path from explicit samples, e.g. a deterministic test field.
    pub fn from_samples(times: Vec<f64>, values: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let path = Self { times, values, seed };
        path.validate()?;
        Ok(path)
    }

    /// Tabulate `f(order, t)` on a uniform grid.
    pub fn from_fn<F: Fn(usize, f64) -> f64>(duration: f64, step: f64, orders: usize, f: F) -> Result<Self> {
        check_grid(duration, step)?;
        let times = time_grid(duration, step);
        let values = (0..orders).map(|k| times.iter().map(|&t| f(k, t)).collect()).collect();
        Self::from_samples(times, values, 0)
    }

    fn validate(&self) -> Result<()> {
        if self.times.first() != Some(&0.0) {
            return Err(Error::InvalidGrid("time grid must start at 0".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("time grid must be strictly increasing".into()));
        }
        if self.values.iter().any(|v| v.len() != self.times.len()) {
            return Err(Error::InvalidGrid("every order needs one value per grid time".into()));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn orders(&self) -> usize {
        self.values.len()
    }

    /// Linear interpolation of `g⁽ᵏ⁾` at time `t` (zero for absent orders).
    pub fn value_at(&self, order: usize, t: f64) -> f64 {
        let Some(v) = self.values.get(order) else {
            return 0.0;
        };
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return v[0];
        }
        if i >= self.times.len() {
            return *v.last().unwrap();
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let f = (t - t0) / (t1 - t0);
        v[i - 1] + f * (v[i] - v[i - 1])
    }
}

fn check_grid(duration: f64, step: f64) -> Result<()> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidGrid(format!("duration must be positive, got {duration}")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
    }
    if step > duration {
        return Err(Error::InvalidGrid(format!("step {step} exceeds duration {duration}")));
    }
    Ok(())
}

/// Sample every order of `model` on `[0, duration]`; reproducible per seed.
pub fn sample_path(model: &NoiseModel, duration: f64, step: f64, seed: u64) -> Result<NoisePath> {
    model.validate()?;
    check_grid(duration, step)?;
    let times = time_grid(duration, step);
    let mut rng = stream(seed, 0);
    let values = model.orders.iter().map(|p| p.sample(&times, &mut rng)).collect();
    Ok(NoisePath { times, values, seed })
}

/// Coefficients `x_γ⁽⁰⁾(t) … x_γ⁽Q⁾(t)`; the k-th one multiplies `(n h)^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementCoefficients(pub Vec<f64>);

impl DisplacementCoefficients {
    pub fn order(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0.get(k).copied().unwrap_or(0.0)
    }
}

/// Trapezoid of `g(s)(s − t)` over `[0, t]` on the sample grid. A trailing
/// partial interval is closed with the kernel's zero at `s = t`.
fn kernel_integral(times: &[f64], values: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for i in 1..times.len() {
        let (s0, s1) = (times[i - 1], times[i]);
        if s0 >= t {
            break;
        }
        let f0 = values[i - 1] * (s0 - t);
        if s1 <= t {
            acc += 0.5 * (s1 - s0) * (f0 + values[i] * (s1 - t));
        } else {
            // the kernel vanishes at s = t
            acc += 0.5 * (t - s0) * f0;
        }
    }
    acc
}

pub fn displacement_coefficients(path: &NoisePath, t: f64) -> Result<DisplacementCoefficients> {
    let end = path.duration();
    if !(t >= 0.0 && t <= end * (1.0 + 1e-12)) {
        return Err(Error::OutOfRange(format!("t = {t} outside the path grid [0, {end}]")));
    }
    let t = t.min(end);
    Ok(DisplacementCoefficients(
        path.values.iter().map(|v| kernel_integral(&path.times, v, t)).collect(),
    ))
}

/// `x_{γ,n} = Σ_k (n h)^k x_γ⁽ᵏ⁾`.
pub fn displacement_at_site(coeffs: &DisplacementCoefficients, n: usize, h: f64) -> f64 {
    let x = n as f64 * h;
    coeffs.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// A point mass on the array axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMassSource {
    /// kg
    pub mass: f64,
    /// Distance from the first site, m.
    pub distance: f64,
}

impl PointMassSource {
    fn field(&self, x: f64) -> f64 {
        G_NEWTON * self.mass / (self.distance - x).powi(2)
    }
}

/// `G M / R²` in m/s².
pub fn newtonian_acceleration(src: &PointMassSource) -> f64 {
    src.field(0.0)
}

/// Magnitude of the plain q-th finite difference `Σᵢ (−1)ⁱ C(q,i) g(i h)` of
/// the on-axis field across sites `0, h, …, q h`.
///
/// No `1/2^q` weight is applied: this is the acceleration difference the
/// order-q array responds to, comparable with a single device's `G M / R²`.
pub fn finite_difference_sensitivity(src: &PointMassSource, h: f64, q: usize) -> Result<f64> {
    if !(src.mass > 0.0 && src.distance > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "source needs positive mass and distance, got ({}, {})",
            src.mass, src.distance
        )));
    }
    let far = q as f64 * h;
    if far >= src.distance {
        return Err(Error::SingularGeometry { site: far, distance: src.distance });
    }
    let sum: f64 = (0..=q)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(q, i) * src.field(i as f64 * h)
        })
        .sum();
    Ok(sum.abs())
}

/// Distance at which a point mass `mass` produces a finite-difference
/// acceleration of exactly `delta_a`; bisection to 1e−12 relative width.
pub fn solve_standoff_distance(mass: f64, h: f64, q: usize, delta_a: f64) -> Result<f64> {
    if !(delta_a > 0.0 && delta_a.is_finite()) {
        return Err(Error::InvalidSpec(format!("delta_a must be positive, got {delta_a}")));
    }
    if !(mass > 0.0) || (q > 0 && !(h > 0.0)) {
        return Err(Error::InvalidSpec(format!("need mass > 0 and h > 0, got ({mass}, {h})")));
    }
    let f = |r: f64| finite_difference_sensitivity(&PointMassSource { mass, distance: r }, h, q);
    let floor = q as f64 * h;
    let mut lo = if floor > 0.0 { floor * (1.0 + 1e-9) } else { 1e-9 };
    if f(lo)? <= delta_a {
        return Err(Error::Bracket(format!("sensitivity at the closest distance {lo} is already below {delta_a:e}")));
    }
    let mut hi = (2.0 * lo).max(1.0);
    while f(hi)? > delta_a {
        lo = hi;
        hi *= 2.0;
        if hi > 1e18 {
            return Err(Error::Bracket(format!("no root below 1e18 m for delta_a = {delta_a:e}")));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > delta_a {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_model_is_zero() {
        let p = sample_path(&NoiseModel::new(vec![Process::Zero, Process::Zero]), 2.0, 0.1, 5).unwrap();
        assert!(p.values.iter().flatten().all(|&v| v == 0.0));
        let c = displacement_coefficients(&p, 1.7).unwrap();
        assert_eq!(c.0, vec![0.0, 0.0]);
    }

    #[test]
    fn grid_errors() {
        assert!(matches!(sample_path(&NoiseModel::zero(), 1.0, 2.0, 0), Err(Error::InvalidGrid(_))));
        assert!(sample_path(&NoiseModel::zero(), 0.0, 0.1, 0).is_err());
        let p = sample_path(&NoiseModel::zero(), 1.0, 0.1, 0).unwrap();
        assert_eq!(p.times[0], 0.0);
        assert_eq!(p.duration(), 1.0);
        assert!(matches!(displacement_coefficients(&p, 1.5), Err(Error::OutOfRange(_))));
        assert!(displacement_coefficients(&p, -0.1).is_err());
        let bad = NoiseModel::new(vec![Process::OrnsteinUhlenbeck { relaxation_time: 0.0, std: 1.0 }]);
        assert!(matches!(sample_path(&bad, 1.0, 0.1, 0), Err(Error::Configuration(_))));
    }

    #[test]
    fn shot_constant_is_constant_and_seeded() {
        let m = NoiseModel::new(vec![Process::ShotConstant { mean: 1.0, std: 2.0 }, Process::ShotConstant { mean: 0.0, std: 1.0 }]);
        let a = sample_path(&m, 3.0, 0.25, 42).unwrap();
        let b = sample_path(&m, 3.0, 0.25, 42).unwrap();
        assert_eq!(a, b);
        for v in &a.values {
            assert!(v.iter().all(|&x| x == v[0]));
        }
        let c = sample_path(&m, 3.0, 0.25, 43).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn shot_constant_ensemble_mean() {
        let sigma = 2.0;
        let m = NoiseModel::new(vec![Process::ShotConstant { mean: 0.0, std: sigma }]);
        let n = 100_000;
        let mean = (0..n).map(|seed| sample_path(&m, 1.0, 0.5, seed).unwrap().values[0][0]).sum::<f64>() / n as f64;
        assert!(mean.abs() <= 3.0 * sigma / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn ou_lag_tau_autocorrelation() {
        let (tau, sigma) = (0.5, 0.4);
        let m = NoiseModel::new(vec![Process::OrnsteinUhlenbeck { relaxation_time: tau, std: sigma }]);
        let n = 100_000;
        let (mut cov, mut var0, mut var1) = (0.0, 0.0, 0.0);
        for seed in 0..n {
            let p = sample_path(&m, tau, tau / 4.0, seed).unwrap();
            let (a, b) = (p.values[0][0], *p.values[0].last().unwrap());
            cov += a * b;
            var0 += a * a;
            var1 += b * b;
        }
        let s2 = sigma * sigma;
        // Var(ab) = σ⁴(1 + e⁻²) for a jointly Gaussian pair with correlation e⁻¹
        let se = s2 * ((1.0 + (-2.0f64).exp()) / n as f64).sqrt();
        assert!((cov / n as f64 - s2 * (-1.0f64).exp()).abs() <= 4.0 * se, "{}", cov / n as f64);
        for v in [var0, var1] {
            assert!((v / n as f64 - s2).abs() <= 4.0 * s2 * (2.0 / n as f64).sqrt(), "{}", v / n as f64);
        }
    }

    #[test]
    fn closed_form_kernels() {
        let (c, beta, t) = (0.7, 1.3, 2.5);
        let p = NoisePath::from_fn(3.0, 1e-3, 2, |k, s| if k == 0 { c } else { beta * s }).unwrap();
        let x = displacement_coefficients(&p, t).unwrap();
        assert_relative_eq!(x.get(0), -c * t * t / 2.0, max_relative = 1e-12);
        assert_relative_eq!(x.get(1), -beta * t.powi(3) / 6.0, max_relative = 1e-6);
        // interior time exactly on a grid node
        let x = displacement_coefficients(&p, 3.0).unwrap();
        assert_relative_eq!(x.get(0), -c * 9.0 / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn trapezoid_converges_second_order() {
        let exact = |t: f64| {
            // ∫₀ᵗ sin(3s)(s−t) ds
            (3.0 * t).sin() / 9.0 - t / 3.0
        };
        let t = 1.9;
        let mut errs = vec![];
        for step in [0.08, 0.04, 0.02, 0.01] {
            let p = NoisePath::from_fn(2.0, step, 1, |_, s| (3.0 * s).sin()).unwrap();
            errs.push((displacement_coefficients(&p, t).unwrap().get(0) - exact(t)).abs());
        }
        for w in errs.windows(2) {
            assert!(w[0] / w[1] >= 3.5, "{errs:?}");
        }
    }

    #[test]
    fn site_polynomial() {
        let c = DisplacementCoefficients(vec![1.5, -2.0]);
        assert_relative_eq!(displacement_at_site(&c, 2, 0.1), 1.5 + 0.2 * -2.0);
        let c0 = DisplacementCoefficients(vec![0.3]);
        for n in 0..5 {
            assert_eq!(displacement_at_site(&c0, n, 0.7), 0.3);
        }
        let c2 = DisplacementCoefficients(vec![0.0, 0.0, 4.0]);
        assert_relative_eq!(displacement_at_site(&c2, 3, 0.1), 0.09 * 4.0, max_relative = 1e-14);
    }

    #[test]
    fn newtonian() {
        let a = newtonian_acceleration(&PointMassSource { mass: 1.0, distance: 1000.0 });
        assert_relative_eq!(a, 6.674e-17, max_relative = 1e-12);
        assert_relative_eq!(newtonian_acceleration(&PointMassSource { mass: 1.0, distance: 1.0 }), 6.674e-11);
        assert_relative_eq!(
            newtonian_acceleration(&PointMassSource { mass: 2.0, distance: 1000.0 }),
            1.3348e-16,
            max_relative = 1e-12
        );
    }

    #[test]
    fn finite_differences() {
        let src = PointMassSource { mass: 1.0, distance: 1000.0 };
        assert_relative_eq!(finite_difference_sensitivity(&src, 3.3, 0).unwrap(), 6.674e-17, max_relative = 1e-12);
        let s1 = finite_difference_sensitivity(&PointMassSource { mass: 1.0, distance: 58.5 }, 0.1, 1).unwrap();
        let exact1 = G_NEWTON * (1.0 / (58.4f64 * 58.4) - 1.0 / (58.5f64 * 58.5));
        assert_relative_eq!(s1, exact1, max_relative = 1e-9);
        assert_relative_eq!(s1, 6.67e-17, max_relative = 5e-3);
        let s2 = finite_difference_sensitivity(&PointMassSource { mass: 1.0, distance: 15.65 }, 0.1, 2).unwrap();
        let f = |x: f64| G_NEWTON / (15.65 - x).powi(2);
        assert_relative_eq!(s2, f(0.0) - 2.0 * f(0.1) + f(0.2), max_relative = 1e-9);
        assert_relative_eq!(s2, 6.67e-17, max_relative = 2e-2);
        assert!(matches!(
            finite_difference_sensitivity(&PointMassSource { mass: 1.0, distance: 0.2 }, 0.1, 2),
            Err(Error::SingularGeometry { .. })
        ));
    }

    #[test]
    fn sensitivity_tends_to_derivative() {
        let (m, r) = (1.0, 100.0);
        for q in 1..=4usize {
            let mut last = f64::INFINITY;
            // Smaller steps cancel below double precision: the difference is (h/r)^q of each term.
            for h in [1.0f64, 0.1, 0.01].into_iter().filter(|h| (h / r).powi(q as i32) >= 1e-8) {
                let s = finite_difference_sensitivity(&PointMassSource { mass: m, distance: r }, h, q).unwrap();
                let analytic = crate::numeric::factorial(q + 1) * G_NEWTON * m * h.powi(q as i32) / r.powi(q as i32 + 2);
                let dev = (s / analytic - 1.0).abs();
                assert!(dev < 4.0 * q as f64 * h / r, "q={q} h={h} dev={dev}");
                assert!(dev < last);
                last = dev;
            }
        }
    }

    #[test]
    fn standoff_distances() {
        let r1 = solve_standoff_distance(1.0, 0.1, 1, 6.67e-17).unwrap();
        assert!((r1 - 58.5).abs() < 0.1, "{r1}");
        let r2 = solve_standoff_distance(1.0, 0.1, 2, 6.67e-17).unwrap();
        assert!((r2 - 15.7).abs() < 0.1, "{r2}");
        let r0 = solve_standoff_distance(1.0, 0.1, 0, 6.674e-17).unwrap();
        assert_relative_eq!(r0, 1000.0, max_relative = 1e-9);
        let r = finite_difference_sensitivity(&PointMassSource { mass: 1.0, distance: r2 }, 0.1, 2).unwrap();
        assert_relative_eq!(r, 6.67e-17, max_relative = 1e-9);
        assert!(solve_standoff_distance(1.0, 0.1, 1, 0.0).is_err());
    }

    #[test]
    fn combined_moments_of_shot_constant() {
        let m = NoiseModel::new(vec![
            Process::ShotConstant { mean: 1.0, std: 2.0 },
            Process::ShotConstant { mean: 0.0, std: 3.0 },
        ]);
        let (mean, std) = m.combined_moments(2.0, &[1.0, 0.5]).unwrap();
        assert_relative_eq!(mean, -2.0);
        assert_relative_eq!(std, 2.0 * (4.0f64 + 2.25).sqrt());
        let ou = NoiseModel::new(vec![Process::OrnsteinUhlenbeck { relaxation_time: 1.0, std: 1.0 }]);
        assert!(ou.combined_moments(1.0, &[1.0]).is_none());
    }
}
