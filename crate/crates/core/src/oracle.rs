//! Direct grid evolution of `H = p²/2m + m g(t) x` as an independent check
//! on the closed-form densities and the displacement functional.
//!
//! The kinetic factor is applied exactly in momentum space; the linear
//! potential enters as half-step momentum kicks at the step boundaries. With
//! the kicks placed on the noise-path grid the scheme reproduces the
//! trapezoidal displacement functional exactly, so any mismatch with the
//! analytic density is discretization of the initial state or roundoff.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::density::GridDensity;
use crate::error::{Error, Result};
use crate::noisefield::NoisePath;
use crate::wavepacket::{derive_scales, InterferometerSpec, Scales, HBAR};

/// Grid points of the reference resolution.
pub const REFERENCE_POINTS: usize = 1 << 14;
/// Largest tolerated norm drift before a step-size error.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
/// Probability allowed within the outer 10% of the grid.
pub const EDGE_MASS_LIMIT: f64 = 1e-12;

/// Uniform periodic grid `center + (i − points/2) spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub points: usize,
    pub spacing: f64,
    #[serde(default)]
    pub center: f64,
}

impl GridParams {
    /// Reference grid for `spec`: `2¹⁴` points at the coarsest spacing the
    /// resolution rule allows.
    pub fn reference(spec: &InterferometerSpec) -> Result<Self> {
        Ok(Self { points: REFERENCE_POINTS, spacing: max_spacing(spec)?, center: 0.0 })
    }

    pub fn start(&self) -> f64 {
        self.center - (self.points / 2) as f64 * self.spacing
    }

    pub fn x(&self, i: usize) -> f64 {
        self.start() + i as f64 * self.spacing
    }

    pub fn half_span(&self) -> f64 {
        0.5 * self.points as f64 * self.spacing
    }
}

/// `min(x₀/8, period/10)` with the period of the initial fringe `2α_i/x₀`.
fn max_spacing(spec: &InterferometerSpec) -> Result<f64> {
    let Scales { x0, .. } = derive_scales(spec)?;
    let k = (2.0 * spec.alpha_i / x0).abs();
    let by_fringe = if k > 0.0 { 2.0 * PI / k / 10.0 } else { f64::INFINITY };
    Ok((x0 / 8.0).min(by_fringe))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub grid: GridParams,
    pub psi: Vec<Complex64>,
    pub time: f64,
}

impl GridState {
    /// `Σ|ψ|² Δx`.
    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.spacing
    }

    pub fn density(&self) -> GridDensity {
        GridDensity {
            start: self.grid.start(),
            step: self.grid.spacing,
            values: self.psi.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    /// `⟨x⟩` of `|ψ|²`.
    pub fn centroid(&self) -> f64 {
        let w: f64 = self.psi.iter().map(|z| z.norm_sqr()).sum();
        let m: f64 = self.psi.iter().enumerate().map(|(i, z)| z.norm_sqr() * self.grid.x(i)).sum();
        m / w
    }

    /// Probability in the outer 10% of the grid on either side.
    pub fn edge_mass(&self) -> f64 {
        let band = self.psi.len().div_ceil(10);
        let n = self.psi.len();
        let sum: f64 = self.psi[..band].iter().chain(&self.psi[n - band..]).map(|z| z.norm_sqr()).sum();
        sum * self.grid.spacing
    }
}

/// Coherent-state wavefunction `⟨x|β⟩` for the mode of `spec`.
fn coherent(x: f64, x0: f64, beta_r: f64, beta_i: f64) -> Complex64 {
    let mean_x = 2.0 * x0 * beta_r;
    let mean_p = beta_i / x0 * HBAR;
    let amp = (2.0 * PI * x0 * x0).powf(-0.25);
    let env = -(x - mean_x).powi(2) / (4.0 * x0 * x0);
    let phase = (mean_p * x - 0.5 * mean_x * mean_p) / HBAR;
    Complex64::from_polar(amp * env.exp(), phase)
}

fn check_grid(spec: &InterferometerSpec, grid: &GridParams) -> Result<Scales> {
    let scales = derive_scales(spec)?;
    if grid.points < 16 || !(grid.spacing > 0.0) || !grid.center.is_finite() {
        return Err(Error::Resolution(format!("need >= 16 points and a positive spacing, got {grid:?}")));
    }
    let dx_max = max_spacing(spec)?;
    if grid.spacing > dx_max * (1.0 + 1e-12) {
        return Err(Error::Resolution(format!("spacing {} exceeds the allowed {dx_max}", grid.spacing)));
    }
    let reach = (2.0 * scales.x0 * spec.alpha_r).abs() + 8.0 * scales.x0;
    if grid.half_span() - grid.center.abs() < reach {
        return Err(Error::Resolution(format!(
            "grid half-span {} does not cover ±{reach} around the origin",
            grid.half_span()
        )));
    }
    Ok(scales)
}

/// `(|α⟩ + |−α⟩)/N_α` on `grid`, with `N_α² = 2 + 2e^{−2|α|²}`.
pub fn prepare_cat(spec: &InterferometerSpec, grid: &GridParams) -> Result<GridState> {
    let Scales { x0, .. } = check_grid(spec, grid)?;
    let (ar, ai) = (spec.alpha_r, spec.alpha_i);
    let n_alpha = (2.0 + 2.0 * (-2.0 * (ar * ar + ai * ai)).exp()).sqrt();
    let psi = (0..grid.points)
        .map(|i| {
            let x = grid.x(i);
            (coherent(x, x0, ar, ai) + coherent(x, x0, -ar, -ai)) / n_alpha
        })
        .collect();
    Ok(GridState { grid: *grid, psi, time: 0.0 })
}

/// The single coherent state `|α⟩` on `grid`.
pub fn prepare_coherent(spec: &InterferometerSpec, grid: &GridParams) -> Result<GridState> {
    let Scales { x0, .. } = check_grid(spec, grid)?;
    let psi = (0..grid.points).map(|i| coherent(grid.x(i), x0, spec.alpha_r, spec.alpha_i)).collect();
    Ok(GridState { grid: *grid, psi, time: 0.0 })
}

struct Propagator {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kinetic: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Propagator {
    fn new(points: usize, spacing: f64, mass: f64, dt: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points);
        let inverse = planner.plan_fft_inverse(points);
        let dk = 2.0 * PI / (points as f64 * spacing);
        let scale = 1.0 / points as f64;
        let kinetic = (0..points)
            .map(|j| {
                let signed = if j < points.div_ceil(2) { j as f64 } else { j as f64 - points as f64 };
                let p = HBAR * signed * dk;
                Complex64::from_polar(scale, -p * p * dt / (2.0 * mass * HBAR))
            })
            .collect();
        let scratch = vec![Complex64::new(0.0, 0.0); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];
        Self { forward, inverse, kinetic, scratch }
    }

    fn drift(&mut self, psi: &mut [Complex64]) {
        self.forward.process_with_scratch(psi, &mut self.scratch);
        psi.iter_mut().zip(&self.kinetic).for_each(|(z, k)| *z *= k);
        self.inverse.process_with_scratch(psi, &mut self.scratch);
    }
}

/// Momentum kick `exp(−i m g x τ/ħ)`.
fn kick(state: &mut GridState, mass: f64, g: f64, tau: f64) {
    if g == 0.0 {
        return;
    }
    let grid = state.grid;
    for (i, z) in state.psi.iter_mut().enumerate() {
        *z *= Complex64::from_polar(1.0, -mass * g * grid.x(i) * tau / HBAR);
    }
}

/// Evolve `state` to time `t` in `steps` Strang steps
/// (half kick, exact free drift, half kick), taking `g` from the order-0
/// coefficient of `path`.
pub fn evolve_split_step(state: GridState, path: &NoisePath, t: f64, steps: usize, mass: f64) -> Result<GridState> {
    let mut state = state;
    let t0 = state.time;
    if !(t >= t0) || !t.is_finite() {
        return Err(Error::OutOfRange(format!("target time {t} precedes the state time {t0}")));
    }
    if t > path.duration() * (1.0 + 1e-12) {
        return Err(Error::OutOfRange(format!("target time {t} beyond the path end {}", path.duration())));
    }
    if !(mass > 0.0) {
        return Err(Error::InvalidSpec(format!("mass must be positive, got {mass}")));
    }
    if steps == 0 {
        return Err(Error::StepSize("need at least one step".into()));
    }
    let dt = (t - t0) / steps as f64;
    let p_nyquist = HBAR * PI / state.grid.spacing;
    let nyquist_phase = p_nyquist * p_nyquist * dt / (2.0 * mass * HBAR);
    if nyquist_phase >= PI / 4.0 {
        return Err(Error::StepSize(format!(
            "kinetic phase {nyquist_phase:.3} rad per step at the grid Nyquist momentum exceeds π/4; use more than {} steps",
            ((t - t0) * p_nyquist * p_nyquist / (2.0 * mass * HBAR) / (PI / 4.0)).ceil()
        )));
    }
    let norm0 = state.norm();
    let mut prop = Propagator::new(state.grid.points, state.grid.spacing, mass, dt);
    let g = |s: f64| path.value_at(0, s);
    for n in 0..steps {
        let s0 = t0 + n as f64 * dt;
        let s1 = if n + 1 == steps { t } else { t0 + (n + 1) as f64 * dt };
        kick(&mut state, mass, g(s0), 0.5 * dt);
        prop.drift(&mut state.psi);
        kick(&mut state, mass, g(s1), 0.5 * dt);
        if n % 64 == 63 || n + 1 == steps {
            let drift = (state.norm() - norm0).abs();
            if drift > NORM_DRIFT_LIMIT {
                return Err(Error::StepSize(format!("norm drifted by {drift:e} after {} steps", n + 1)));
            }
            let edge = state.edge_mass();
            if edge > EDGE_MASS_LIMIT {
                return Err(Error::Resolution(format!(
                    "{edge:e} probability reached the outer 10% of the grid at t = {s1}"
                )));
            }
        }
    }
    state.time = t;
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnusResult {
    /// Displacement amplitude `γ_t` as `(re, im)`.
    pub gamma: (f64, f64),
    /// `φ(t) = Im{γ_t α*}`.
    pub phase: f64,
}

impl MagnusResult {
    /// Position shift `2x₀ Re γ + 2p₀ Im γ · t/m` produced at time `t`.
    pub fn displacement(&self, spec: &InterferometerSpec, t: f64) -> Result<f64> {
        let Scales { x0, p0 } = derive_scales(spec)?;
        Ok(2.0 * x0 * self.gamma.0 + 2.0 * p0 * self.gamma.1 * t / spec.mass)
    }
}

/// `γ_t = −(i m x₀/ħ) ∫₀ᵗ g(s)(1 + iωs) ds` by trapezoid on the path grid.
pub fn magnus_quantities(path: &NoisePath, spec: &InterferometerSpec, t: f64) -> Result<MagnusResult> {
    magnus_quantities_refined(path, spec, t, 1)
}

/// As [`magnus_quantities`] with every path interval split into
/// `subdivisions` pieces of the linearly interpolated path.
pub fn magnus_quantities_refined(
    path: &NoisePath,
    spec: &InterferometerSpec,
    t: f64,
    subdivisions: usize,
) -> Result<MagnusResult> {
    let Scales { x0, .. } = derive_scales(spec)?;
    let end = path.duration();
    if !(t >= 0.0 && t <= end * (1.0 + 1e-12)) {
        return Err(Error::OutOfRange(format!("t = {t} outside the path grid [0, {end}]")));
    }
    let t = t.min(end);
    let sub = subdivisions.max(1);
    let (mut re, mut im) = (0.0, 0.0);
    for w in path.times.windows(2) {
        if w[0] >= t {
            break;
        }
        let hi = w[1].min(t);
        let h = (hi - w[0]) / sub as f64;
        for j in 0..sub {
            let (a, b) = (w[0] + j as f64 * h, w[0] + (j + 1) as f64 * h);
            let (ga, gb) = (path.value_at(0, a), path.value_at(0, b));
            re += 0.5 * h * (ga + gb);
            im += 0.5 * h * (ga * a + gb * b) * spec.omega;
        }
    }
    // −i c (re + i im) = c im − i c re
    let c = spec.mass * x0 / HBAR;
    let gamma = (c * im, -c * re);
    let phase = gamma.1 * spec.alpha_r - gamma.0 * spec.alpha_i;
    Ok(MagnusResult { gamma, phase })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionMetrics {
    pub l1: f64,
    pub linf: f64,
    pub ks: f64,
}

/// L1, L∞ and Kolmogorov–Smirnov distances between two densities on one grid.
pub fn compare_distributions(d1: &GridDensity, d2: &GridDensity) -> Result<DistributionMetrics> {
    d1.check_aligned(d2)?;
    let h = d1.step;
    let (mut l1, mut linf, mut ks, mut c1, mut c2) = (0.0, 0.0f64, 0.0f64, 0.0, 0.0);
    for (a, b) in d1.values.iter().zip(&d2.values) {
        let d = (a - b).abs();
        l1 += d * h;
        linf = linf.max(d);
        c1 += a * h;
        c2 += b * h;
        ks = ks.max((c1 - c2).abs());
    }
    Ok(DistributionMetrics { l1, linf, ks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Density;
    use crate::noisefield::{displacement_coefficients, sample_path, NoiseModel, Process};
    use crate::wavepacket::{overlap_time, packet_geometry, position_pdf};
    use approx::assert_relative_eq;

    /// m = 1/2, ω = 1 so x₀ = 1; fringe k = 2 at t_k = 1.5.
    fn spec() -> InterferometerSpec {
        InterferometerSpec::new(0.5, 1.0, -1.5, 1.0)
    }

    fn grid() -> GridParams {
        GridParams { points: REFERENCE_POINTS, spacing: 0.125, center: 0.0 }
    }

    fn zero_path(t: f64, steps: usize) -> NoisePath {
        NoisePath::from_fn(t, t / steps as f64, 1, |_, _| 0.0).unwrap()
    }

    fn analytic_on_grid<D: Density>(d: &D, g: &GridParams) -> GridDensity {
        GridDensity::from_fn(g.start(), g.spacing, g.points, |x| d.pdf(x))
    }

    #[test]
    fn degenerate_cat_is_ground_state() {
        let s = InterferometerSpec::new(0.5, 1.0, 0.0, 0.0);
        let st = prepare_cat(&s, &GridParams { points: 1024, spacing: 0.05, center: 0.0 }).unwrap();
        assert_relative_eq!(st.norm(), 1.0, epsilon = 1e-9);
        let x = st.grid.x(512 + 20);
        let expect = (-(x * x) / 2.0).exp() / (2.0 * PI).sqrt();
        assert_relative_eq!(st.psi[512 + 20].norm_sqr(), expect, max_relative = 1e-12);
    }

    #[test]
    fn separated_cat_peaks_and_norm() {
        let s = InterferometerSpec::new(0.5, 1.0, 3.0, 0.0);
        let st = prepare_cat(&s, &GridParams { points: 4096, spacing: 0.02, center: 0.0 }).unwrap();
        assert_relative_eq!(st.norm(), 1.0, epsilon = 1e-9);
        let rho = st.density();
        let peak = |lo: f64, hi: f64| {
            rho.xs()
                .zip(&rho.values)
                .filter(|(x, _)| *x > lo && *x < hi)
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0
        };
        assert_relative_eq!(peak(0.0, 20.0), 6.0, epsilon = 1e-9);
        assert_relative_eq!(peak(-20.0, 0.0), -6.0, epsilon = 1e-9);
    }

    #[test]
    fn overlap_enters_normalization() {
        // a strongly overlapping cat only normalizes with the 2 + 2e^{−2|α|²} factor
        let s = InterferometerSpec::new(0.5, 1.0, 0.3, 0.2);
        let st = prepare_cat(&s, &GridParams { points: 2048, spacing: 0.02, center: 0.0 }).unwrap();
        assert_relative_eq!(st.norm(), 1.0, epsilon = 1e-9);
        let naive = st.norm() * (2.0 + 2.0 * (-2.0f64 * 0.13).exp()) / 2.0;
        assert!((naive - 1.0).abs() > 0.5);
    }

    #[test]
    fn resolution_errors() {
        let s = spec();
        assert!(matches!(
            prepare_cat(&s, &GridParams { points: 1 << 10, spacing: 0.5, center: 0.0 }),
            Err(Error::Resolution(_))
        ));
        assert!(matches!(
            prepare_cat(&s, &GridParams { points: 64, spacing: 0.1, center: 0.0 }),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn step_size_precondition() {
        let st = prepare_cat(&spec(), &grid()).unwrap();
        let path = zero_path(1.5, 10);
        assert!(matches!(evolve_split_step(st, &path, 1.5, 10, 0.5), Err(Error::StepSize(_))));
    }

    #[test]
    fn free_coherent_state() {
        let s = spec();
        let t = 1.0;
        let st = prepare_coherent(&s, &grid()).unwrap();
        let out = evolve_split_step(st, &zero_path(t, 1000), t, 1000, s.mass).unwrap();
        assert_relative_eq!(out.norm(), 1.0, epsilon = 1e-9);
        let geo = packet_geometry(&s, t, 0.0).unwrap();
        let (c, w) = (geo.center_plus(), geo.width);
        let gauss = GridDensity::from_fn(out.grid.start(), out.grid.spacing, out.grid.points, |x| {
            (-(x - c).powi(2) / (2.0 * w * w)).exp() / ((2.0 * PI).sqrt() * w)
        });
        let m = compare_distributions(&out.density(), &gauss).unwrap();
        assert!(m.l1 < 1e-9, "{m:?}");
    }

    #[test]
    fn constant_force_shifts_by_half_gt2() {
        let s = spec();
        let (t, g, steps) = (1.0, 0.3, 1000);
        let st = prepare_coherent(&s, &grid()).unwrap();
        let free = evolve_split_step(st.clone(), &zero_path(t, steps), t, steps, s.mass).unwrap();
        let path = NoisePath::from_fn(t, t / steps as f64, 1, |_, _| g).unwrap();
        let pushed = evolve_split_step(st, &path, t, steps, s.mass).unwrap();
        assert_relative_eq!(pushed.centroid() - free.centroid(), -0.5 * g * t * t, max_relative = 1e-9);
    }

    #[test]
    fn cat_at_overlap_matches_pattern() {
        let s = spec();
        let tk = overlap_time(&s).unwrap();
        let st = prepare_cat(&s, &grid()).unwrap();
        let out = evolve_split_step(st, &zero_path(tk, 1250), tk, 1250, s.mass).unwrap();
        assert_relative_eq!(out.norm(), 1.0, epsilon = 1e-9);
        let exact = analytic_on_grid(&position_pdf(&s, tk, 0.0).unwrap(), &out.grid);
        let m = compare_distributions(&out.density(), &exact).unwrap();
        assert!(m.l1 <= 1e-3, "{m:?}");
        assert!(m.l1 <= 1e-9, "{m:?}");
    }

    #[test]
    fn ou_path_matches_displaced_density() {
        let s = spec();
        let tk = overlap_time(&s).unwrap();
        let steps = 1250;
        let model = NoiseModel::new(vec![Process::OrnsteinUhlenbeck { relaxation_time: 0.5, std: 0.4 }]);
        let path = sample_path(&model, tk, tk / steps as f64, 17).unwrap();
        let xg = displacement_coefficients(&path, tk).unwrap().get(0);
        let out = evolve_split_step(prepare_cat(&s, &grid()).unwrap(), &path, tk, steps, s.mass).unwrap();
        let exact = analytic_on_grid(&position_pdf(&s, tk, xg).unwrap(), &out.grid);
        let m = compare_distributions(&out.density(), &exact).unwrap();
        assert!(m.l1 <= 1e-3, "{m:?}");
        assert_relative_eq!(out.centroid(), xg, max_relative = 1e-6);
        let magnus = magnus_quantities(&path, &s, tk).unwrap();
        assert_relative_eq!(magnus.displacement(&s, tk).unwrap(), xg, max_relative = 1e-9);
    }

    #[test]
    fn refinement_reduces_error_for_misaligned_steps() {
        // a path with its own grid; coarser evolution steps see an interpolated g
        let s = spec();
        let tk = overlap_time(&s).unwrap();
        let path = NoisePath::from_fn(tk, tk / 4000.0, 1, |_, t| 0.4 * (3.0 * t).sin() + 0.1).unwrap();
        let xg = displacement_coefficients(&path, tk).unwrap().get(0);
        let err = |steps: usize| {
            let out = evolve_split_step(prepare_cat(&s, &grid()).unwrap(), &path, tk, steps, s.mass).unwrap();
            let exact = analytic_on_grid(&position_pdf(&s, tk, xg).unwrap(), &out.grid);
            compare_distributions(&out.density(), &exact).unwrap().l1
        };
        let (coarse, fine) = (err(1250), err(2500));
        assert!(fine < coarse, "{coarse} {fine}");
        assert!(fine <= 1e-3);
    }

    #[test]
    fn magnus_zero_path() {
        let m = magnus_quantities(&zero_path(2.0, 100), &spec(), 2.0).unwrap();
        assert_eq!(m.gamma, (0.0, 0.0));
        assert_eq!(m.phase, 0.0);
    }

    #[test]
    fn magnus_constant_force() {
        let s = InterferometerSpec::new(0.5, 1.0, 0.7, 0.0);
        let (g, t) = (0.25, 2.0);
        let path = NoisePath::from_fn(t, 0.01, 1, |_, _| g).unwrap();
        let m = magnus_quantities(&path, &s, t).unwrap();
        let x0 = s.x0();
        // −i m x₀ g (t + iωt²/2)
        let c = s.mass * x0 * g;
        assert_relative_eq!(m.gamma.0, c * s.omega * t * t / 2.0, max_relative = 1e-12);
        assert_relative_eq!(m.gamma.1, -c * t, max_relative = 1e-12);
        assert_relative_eq!(m.phase, -s.mass * x0 * s.alpha_r * g * t, max_relative = 1e-12);
        assert_relative_eq!(m.displacement(&s, t).unwrap(), -0.5 * g * t * t, max_relative = 1e-12);
    }

    #[test]
    fn magnus_converges_second_order() {
        let s = spec();
        let path = NoisePath::from_fn(1.5, 0.05, 1, |_, t| (4.0 * t).cos()).unwrap();
        let g = |n| magnus_quantities_refined(&path, &s, 1.5, n).unwrap().gamma;
        let (a, b, c) = (g(1), g(2), g(4));
        let d1 = (a.0 - b.0).hypot(a.1 - b.1);
        let d2 = (b.0 - c.0).hypot(b.1 - c.1);
        assert!(d1 / d2 > 3.5, "{d1} {d2}");
    }

    #[test]
    fn metric_examples() {
        let g = GridParams { points: 8192, spacing: 0.005, center: 0.0 };
        let gauss = |mu: f64| {
            GridDensity::from_fn(g.start(), g.spacing, g.points, move |x| {
                (-(x - mu).powi(2) / 2.0).exp() / (2.0 * PI).sqrt()
            })
        };
        let zero = compare_distributions(&gauss(0.0), &gauss(0.0)).unwrap();
        assert_eq!(zero, DistributionMetrics { l1: 0.0, linf: 0.0, ks: 0.0 });
        let delta = 1e-3;
        let m = compare_distributions(&gauss(0.0), &gauss(delta)).unwrap();
        assert_relative_eq!(m.l1, delta * (2.0 / PI).sqrt(), max_relative = 1e-3);
        let back = compare_distributions(&gauss(delta), &gauss(0.0)).unwrap();
        assert_eq!(m, back);
        let far = compare_distributions(&gauss(-10.0), &gauss(10.0)).unwrap();
        assert_relative_eq!(far.l1, 2.0, epsilon = 1e-9);
        let other = GridDensity::from_fn(0.0, 0.1, 10, |_| 0.0);
        assert!(matches!(compare_distributions(&gauss(0.0), &other), Err(Error::Alignment(_))));
    }
}
