//! Shot-by-shot reconstruction of position distributions.
//!
//! Each shot draws one noise realization, translates every device's
//! at-overlap density by its site displacement, samples one position per
//! device and forms the order-q difference variable. Accumulating many shots
//! yields the histogram an experiment would record.

use std::f64::consts::PI;

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt, TerminationReason};
use nalgebra::{Dyn, Matrix3, Owned, OMatrix, OVector, Vector3, U6};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{difference_weights, recursive_pattern, validate_matched_wavenumbers, ArraySpec, PatternRecursion};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::noisefield::{displacement_at_site, DisplacementCoefficients, NoiseModel};
use crate::rng::{shot_stream, Substream};
use crate::wavepacket::FringePattern;

/// Default histogram resolution, bins per fringe period.
pub const BINS_PER_PERIOD: usize = 64;
/// Smallest accepted resolution, bins per fringe period.
pub const MIN_BINS_PER_PERIOD: usize = 8;
/// Default histogram half-range in envelope widths.
pub const HISTOGRAM_WIDTHS: f64 = 6.0;
/// Sampler grid resolution, points per fringe period.
const SAMPLER_POINTS_PER_PERIOD: usize = 64;
const SAMPLER_MIN_POINTS: usize = 1 << 14;

/// Inverse-CDF sampler over a tabulated density.
///
/// The density is taken piecewise linear between grid nodes; the CDF is its
/// exact integral, so inversion solves a quadratic inside one cell.
#[derive(Debug, Clone)]
pub struct InverseCdfSampler {
    start: f64,
    step: f64,
    density: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdfSampler {
    pub fn new<D: Density + ?Sized>(density: &D) -> Result<Self> {
        let (lo, hi) = density.support();
        let cells = ((hi - lo) / density.resolution_scale() * SAMPLER_POINTS_PER_PERIOD as f64).ceil();
        if !cells.is_finite() || !(hi > lo) {
            return Err(Error::Sampling(format!("degenerate support [{lo}, {hi}]")));
        }
        let n = (cells as usize).max(SAMPLER_MIN_POINTS) + 1;
        let step = (hi - lo) / (n - 1) as f64;
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let v = density.pdf(lo + i as f64 * step);
            if !v.is_finite() {
                return Err(Error::Sampling(format!("density is not finite at x = {}", lo + i as f64 * step)));
            }
            values.push(v.max(0.0));
        }
        let mut cdf = Vec::with_capacity(n);
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in values.windows(2) {
            acc += 0.5 * step * (w[0] + w[1]);
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::Sampling("density has no mass on its support".into()));
        }
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        for v in values.iter_mut() {
            *v /= acc;
        }
        Ok(Self { start: lo, step, density: values, cdf })
    }

    /// Map a uniform variate in `[0, 1)` to a position.
    pub fn invert(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1) - 1;
        let need = u - self.cdf[i];
        let (f0, f1) = (self.density[i], self.density[i + 1]);
        let slope = (f1 - f0) / self.step;
        // solve f0 d + slope d²/2 = need for d in [0, step]
        let d = if slope.abs() * self.step < 1e-12 * f0.max(1e-300) {
            if f0 > 0.0 { need / f0 } else { 0.0 }
        } else {
            let disc = (f0 * f0 + 2.0 * slope * need).max(0.0);
            2.0 * need / (f0 + disc.sqrt()).max(1e-300)
        };
        self.start + i as f64 * self.step + d.clamp(0.0, self.step)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.invert(rng.random::<f64>())
    }
}

/// Draw one position from `density` by grid inversion of its CDF.
pub fn sample_from_pdf<D: Density + ?Sized, R: Rng + ?Sized>(density: &D, rng: &mut R) -> Result<f64> {
    Ok(InverseCdfSampler::new(density)?.sample(rng))
}

/// Uniform binning of an interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramLayout {
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
}

impl HistogramLayout {
    /// 64 bins per fringe period over ±6 widths of the pattern envelope
    /// broadened by an extra Gaussian spread `extra_std` around `pattern.center + mean`.
    pub fn for_pattern(pattern: &FringePattern, mean: f64, extra_std: f64) -> Self {
        let half = HISTOGRAM_WIDTHS * pattern.width.hypot(extra_std);
        let center = pattern.center + mean;
        let span = 2.0 * half;
        let bins = if pattern.wavenumber > 0.0 {
            (span * pattern.wavenumber / (2.0 * PI) * BINS_PER_PERIOD as f64).ceil() as usize
        } else {
            2 * BINS_PER_PERIOD
        };
        Self { bins: bins.max(2 * BINS_PER_PERIOD), lo: center - half, hi: center + half }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn bins_per_period(&self, wavenumber: f64) -> f64 {
        2.0 * PI / wavenumber / self.width()
    }

    fn validate(&self) -> Result<()> {
        if self.bins == 0 || !(self.hi > self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Configuration(format!(
                "histogram needs bins >= 1 and lo < hi, got {} bins over [{}, {}]",
                self.bins, self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Counts over uniform bins. Values outside the range are tallied separately
/// and excluded from `total`, so `counts` always sums to `total`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn empty(layout: HistogramLayout) -> Result<Self> {
        layout.validate()?;
        let w = layout.width();
        let mut edges: Vec<f64> = (0..=layout.bins).map(|i| layout.lo + i as f64 * w).collect();
        edges[layout.bins] = layout.hi;
        Ok(Self { edges, counts: vec![0; layout.bins], total: 0, underflow: 0, overflow: 0 })
    }

    pub fn layout(&self) -> HistogramLayout {
        HistogramLayout { bins: self.counts.len(), lo: self.edges[0], hi: *self.edges.last().unwrap() }
    }

    pub fn bin_width(&self) -> f64 {
        self.layout().width()
    }

    pub fn push(&mut self, x: f64) {
        let (lo, hi) = (self.edges[0], *self.edges.last().unwrap());
        if !(x >= lo) {
            self.underflow += 1;
        } else if !(x < hi) {
            self.overflow += 1;
        } else {
            let bins = self.counts.len();
            let i = (((x - lo) / (hi - lo)) * bins as f64) as usize;
            self.counts[i.min(bins - 1)] += 1;
            self.total += 1;
        }
    }

    /// Add the counts of a histogram with the same layout.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.edges != other.edges {
            return Err(Error::Alignment("histograms have different bin edges".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        Ok(())
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Counts divided by `total · bin width`; integrates to 1.
    pub fn density(&self) -> Vec<f64> {
        let norm = self.total.max(1) as f64 * self.bin_width();
        self.counts.iter().map(|&c| c as f64 / norm).collect()
    }

    pub fn mean(&self) -> f64 {
        let c = self.centers();
        self.counts.iter().zip(&c).map(|(&n, x)| n as f64 * x).sum::<f64>() / self.total.max(1) as f64
    }

    pub fn std(&self) -> f64 {
        let m = self.mean();
        let c = self.centers();
        let var = self.counts.iter().zip(&c).map(|(&n, x)| n as f64 * (x - m).powi(2)).sum::<f64>()
            / self.total.max(1) as f64;
        var.sqrt()
    }

    /// Largest gap between the empirical CDF at the bin edges and `cdf`.
    pub fn ks_to_density<D: Density + ?Sized>(&self, density: &D) -> f64 {
        let expected = self.expected_fractions(density);
        let mut emp = 0.0;
        let mut model = 0.0;
        let mut worst: f64 = 0.0;
        for (&c, e) in self.counts.iter().zip(expected) {
            emp += c as f64 / self.total.max(1) as f64;
            model += e;
            worst = worst.max((emp - model).abs());
        }
        worst
    }

    /// Largest CDF gap between two histograms with the same layout.
    pub fn ks_distance(&self, other: &Histogram) -> Result<f64> {
        if self.edges != other.edges {
            return Err(Error::Alignment("histograms have different bin edges".into()));
        }
        let (na, nb) = (self.total.max(1) as f64, other.total.max(1) as f64);
        let (mut ca, mut cb, mut worst) = (0.0, 0.0, 0.0f64);
        for (&a, &b) in self.counts.iter().zip(&other.counts) {
            ca += a as f64 / na;
            cb += b as f64 / nb;
            worst = worst.max((ca - cb).abs());
        }
        Ok(worst)
    }

    /// Probability of each bin under `density`, renormalized to the range.
    pub fn expected_fractions<D: Density + ?Sized>(&self, density: &D) -> Vec<f64> {
        let raw: Vec<f64> = self
            .edges
            .windows(2)
            .map(|w| {
                let m = 0.5 * (w[0] + w[1]);
                (w[1] - w[0]) / 6.0 * (density.pdf(w[0]) + 4.0 * density.pdf(m) + density.pdf(w[1]))
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }

    /// Pearson χ² per degree of freedom against `density`, over bins
    /// expecting at least five counts.
    pub fn chi_square_per_bin<D: Density + ?Sized>(&self, density: &D) -> f64 {
        let n = self.total as f64;
        let (mut chi, mut dof) = (0.0, 0usize);
        for (&c, p) in self.counts.iter().zip(self.expected_fractions(density)) {
            let e = n * p;
            if e >= 5.0 {
                chi += (c as f64 - e).powi(2) / e;
                dof += 1;
            }
        }
        chi / dof.max(1) as f64
    }
}

pub fn build_histogram(values: &[f64], bins: usize, range: (f64, f64)) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut h = Histogram::empty(HistogramLayout { bins, lo: range.0, hi: range.1 })?;
    values.iter().for_each(|&x| h.push(x));
    Ok(h)
}

/// Kolmogorov–Smirnov distance between two samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut worst) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        worst = worst.max((i as f64 / na - j as f64 / nb).abs());
    }
    worst
}

/// Kolmogorov–Smirnov distance of a sample to a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Result of fitting `A e^{−(x−μ)²/2σ²} [1 + v cos(k(x−μ) + φ)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    /// Fitted contrast clamped to `[0, 1]`.
    pub visibility: f64,
    pub wavenumber: f64,
    pub width: f64,
    pub center: f64,
    pub amplitude: f64,
    pub phase: f64,
    /// Weighted residual norm `√Σ rᵢ²`.
    pub residual_norm: f64,
    pub evaluations: usize,
}

struct FringeProblem {
    x: Vec<f64>,
    y: Vec<f64>,
    inv_err: Vec<f64>,
    p: OVector<f64, U6>,
}

impl FringeProblem {
    fn model_and_grad(p: &OVector<f64, U6>, x: f64) -> (f64, [f64; 6]) {
        let (a, mu, s, v, k, phi) = (p[0], p[1], p[2], p[3], p[4], p[5]);
        let u = x - mu;
        let e = (-u * u / (2.0 * s * s)).exp();
        let arg = k * u + phi;
        let (sn, cs) = arg.sin_cos();
        let body = 1.0 + v * cs;
        let f = a * e * body;
        let grad = [
            e * body,
            a * e * (u / (s * s) * body + v * k * sn),
            a * e * (u * u / (s * s * s)) * body,
            a * e * cs,
            -a * e * v * sn * u,
            -a * e * v * sn,
        ];
        (f, grad)
    }
}

impl LeastSquaresProblem<f64, Dyn, U6> for FringeProblem {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U6>;
    type ParameterStorage = Owned<f64, U6>;

    fn set_params(&mut self, p: &OVector<f64, U6>) {
        self.p.copy_from(p);
    }

    fn params(&self) -> OVector<f64, U6> {
        self.p
    }

    fn residuals(&self) -> Option<OVector<f64, Dyn>> {
        let r = self
            .x
            .iter()
            .zip(&self.y)
            .zip(&self.inv_err)
            .map(|((&x, &y), &w)| (Self::model_and_grad(&self.p, x).0 - y) * w);
        Some(OVector::<f64, Dyn>::from_iterator(self.x.len(), r))
    }

    fn jacobian(&self) -> Option<OMatrix<f64, Dyn, U6>> {
        let mut j = OMatrix::<f64, Dyn, U6>::zeros(self.x.len());
        for (i, (&x, &w)) in self.x.iter().zip(&self.inv_err).enumerate() {
            let (_, g) = Self::model_and_grad(&self.p, x);
            for (c, gc) in g.iter().enumerate() {
                j[(i, c)] = gc * w;
            }
        }
        Some(j)
    }
}

/// Weighted nonlinear least-squares fit of the fringe model to a histogram,
/// started from the histogram moments and the linear cosine projection at
/// `k_hint`.
pub fn fit_fringe(hist: &Histogram, k_hint: f64) -> Result<FringeFit> {
    if hist.total == 0 {
        return Err(Error::EmptyData);
    }
    let layout = hist.layout();
    if !(k_hint > 0.0) {
        return Err(Error::Fit(format!("k_hint must be positive, got {k_hint}")));
    }
    let periods = (layout.hi - layout.lo) * k_hint / (2.0 * PI);
    if periods < 3.0 {
        return Err(Error::Fit(format!("histogram covers {periods:.2} fringe periods, need at least 3")));
    }
    let x = hist.centers();
    let y = hist.density();
    let scale = hist.total as f64 * hist.bin_width();
    let inv_err: Vec<f64> = hist.counts.iter().map(|&c| scale / (c.max(1) as f64).sqrt()).collect();

    let mu = hist.mean();
    let sigma = hist.std().max(hist.bin_width());
    // linear start: y ≈ E(u) (c0 + c1 cos ku + c2 sin ku)
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for ((&xi, &yi), &wi) in x.iter().zip(&y).zip(&inv_err) {
        let u = xi - mu;
        let e = (-u * u / (2.0 * sigma * sigma)).exp();
        let (s, c) = (k_hint * u).sin_cos();
        let basis = Vector3::new(e, e * c, e * s) * wi;
        normal += basis * basis.transpose();
        rhs += basis * (yi * wi);
    }
    let coef = normal.lu().solve(&rhs).unwrap_or_else(|| Vector3::new(y.iter().cloned().fold(0.0, f64::max), 0.0, 0.0));
    let a0 = if coef[0] > 0.0 { coef[0] } else { y.iter().cloned().fold(0.0, f64::max) };
    let v0 = (coef[1].hypot(coef[2]) / a0).clamp(1e-3, 1.0);
    let phi0 = (-coef[2]).atan2(coef[1]);

    let problem = FringeProblem {
        x,
        y,
        inv_err,
        p: OVector::<f64, U6>::from_column_slice(&[a0, mu, sigma, v0, k_hint, phi0]),
    };
    let (solved, report) = LevenbergMarquardt::new().with_patience(400).minimize(problem);
    let p = solved.p;
    let finite = p.iter().all(|v| v.is_finite());
    let failed = matches!(
        report.termination,
        TerminationReason::LostPatience
            | TerminationReason::Numerical(_)
            | TerminationReason::User(_)
            | TerminationReason::NoParameters
            | TerminationReason::NoResiduals
            | TerminationReason::WrongDimensions(_)
    );
    if failed || !finite {
        return Err(Error::Fit(format!(
            "termination {:?} after {} evaluations, objective {:e}, params {:?}",
            report.termination,
            report.number_of_evaluations,
            report.objective_function,
            p.as_slice()
        )));
    }
    let (mut v, mut phase) = (p[3], p[5]);
    if v < 0.0 {
        v = -v;
        phase += PI;
    }
    Ok(FringeFit {
        visibility: v.clamp(0.0, 1.0),
        wavenumber: p[4].abs(),
        width: p[2].abs(),
        center: p[1],
        amplitude: p[0],
        phase: phase.rem_euclid(2.0 * PI),
        residual_norm: (2.0 * report.objective_function).sqrt(),
        evaluations: report.number_of_evaluations,
    })
}

/// One experimental repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot: u64,
    pub seed: u64,
    pub displacements: DisplacementCoefficients,
    pub positions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOptions {
    /// Layout of the difference-variable histogram; derived from the order-q
    /// pattern when absent.
    pub layout: Option<HistogramLayout>,
    /// Grid step for sampling time-resolved noise processes; `t_k / 512` when absent.
    pub noise_step: Option<f64>,
    pub eta_tolerance: f64,
    pub keep_samples: bool,
    pub device_histograms: bool,
    pub chunk_size: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            layout: None,
            noise_step: None,
            eta_tolerance: crate::array::DEFAULT_ETA_TOLERANCE,
            keep_samples: false,
            device_histograms: true,
            chunk_size: 1 << 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub order: usize,
    pub shots: u64,
    pub seed: u64,
    /// Histogram of `x_{0,q}`.
    pub difference: Histogram,
    /// Per-device position histograms.
    pub devices: Vec<Histogram>,
    /// Raw `x_{0,q}` values in shot order, when requested.
    pub samples: Option<Vec<f64>>,
    /// Noise-free recursion for the order-q variable.
    pub recursion: PatternRecursion,
    pub overlap_time: f64,
}

struct Experiment<'a> {
    spec: &'a ArraySpec,
    model: &'a NoiseModel,
    seed: u64,
    tk: f64,
    step: f64,
    weights: Vec<f64>,
    samplers: Vec<InverseCdfSampler>,
}

impl Experiment<'_> {
    fn shot(&self, index: u64, positions: &mut [f64]) -> DisplacementCoefficients {
        let mut noise = shot_stream(self.seed, index, Substream::Noise);
        let coeffs = self.model.draw_displacements(self.tk, self.step, &mut noise);
        let mut meas = shot_stream(self.seed, index, Substream::Measurement);
        for (n, (slot, sampler)) in positions.iter_mut().zip(&self.samplers).enumerate() {
            *slot = sampler.sample(&mut meas) + displacement_at_site(&coeffs, n, self.spec.spacing);
        }
        coeffs
    }

    fn difference(&self, positions: &[f64]) -> f64 {
        self.weights.iter().zip(positions).map(|(w, x)| w * x).sum()
    }
}

/// Site-polynomial weights `Σᵢ wᵢ (i h)^k` seen by the combination `w`.
fn order_weights(model: &NoiseModel, spacing: f64, w: &[(usize, f64)]) -> Vec<f64> {
    (0..model.orders.len())
        .map(|k| w.iter().map(|&(n, wi)| wi * (n as f64 * spacing).powi(k as i32)).sum())
        .collect()
}

/// Closed-form mean and standard deviation of the noise displacement left in
/// `x_{0,q}` at `t_k`, when every order of `model` is zero or per-shot
/// Gaussian.
pub fn residual_moments(spec: &ArraySpec, model: &NoiseModel, q: usize) -> Result<Option<(f64, f64)>> {
    let tk = spec.overlap_time()?;
    let w: Vec<(usize, f64)> = difference_weights(q).into_iter().enumerate().collect();
    Ok(model.combined_moments(tk, &order_weights(model, spec.spacing, &w)))
}

/// As [`residual_moments`] for the position of device `n` alone.
pub fn device_moments(spec: &ArraySpec, model: &NoiseModel, n: usize) -> Result<Option<(f64, f64)>> {
    let tk = spec.overlap_time()?;
    Ok(model.combined_moments(tk, &order_weights(model, spec.spacing, &[(n, 1.0)])))
}

/// Simulate `shots` repetitions and histogram `x_{0,q}`.
///
/// Deterministic in `(spec, model, shots, q, seed)` regardless of the rayon
/// thread count: every shot has its own random streams and histogram counts
/// are merged exactly.
pub fn run_experiment(
    spec: &ArraySpec,
    model: &NoiseModel,
    shots: u64,
    q: usize,
    seed: u64,
    options: &ExperimentOptions,
) -> Result<ExperimentResult> {
    if shots == 0 {
        return Err(Error::Configuration("shots must be >= 1".into()));
    }
    validate_matched_wavenumbers(spec)?;
    model.validate()?;
    let recursion = recursive_pattern(spec, q, options.eta_tolerance)?;
    let tk = spec.overlap_time()?;
    let step = options.noise_step.unwrap_or(tk / 512.0);
    if tk > 0.0 && !(step > 0.0) {
        return Err(Error::Configuration(format!("noise step must be positive, got {step}")));
    }
    let patterns = spec.patterns()?;
    let samplers = patterns.iter().map(|p| InverseCdfSampler::new(p)).collect::<Result<Vec<_>>>()?;
    let mut weights = difference_weights(q);
    weights.resize(spec.len(), 0.0);
    let exp = Experiment { spec, model, seed, tk, step, weights: weights.clone(), samplers };

    let top = recursion.pattern();
    let layout = match options.layout {
        Some(l) => l,
        None => {
            let (mean, std) = residual_moments(spec, model, q)?.unwrap_or((0.0, 0.0));
            // the true envelope of Σ wᵢ xᵢ, wider than the recursion's for q ≥ 2
            let envelope = patterns.iter().zip(&weights).map(|(p, w)| (p.width * w).powi(2)).sum::<f64>().sqrt();
            HistogramLayout::for_pattern(&FringePattern { width: top.width.max(envelope), ..top }, mean, std)
        }
    };
    layout.validate()?;
    if top.wavenumber > 0.0 && layout.bins_per_period(top.wavenumber) < MIN_BINS_PER_PERIOD as f64 {
        return Err(Error::Configuration(format!(
            "histogram resolves {:.2} bins per fringe period, need at least {MIN_BINS_PER_PERIOD}",
            layout.bins_per_period(top.wavenumber)
        )));
    }
    let device_layouts: Vec<HistogramLayout> = if options.device_histograms {
        patterns
            .iter()
            .enumerate()
            .map(|(n, p)| {
                let (mean, std) = device_moments(spec, model, n)?.unwrap_or((0.0, 0.0));
                Ok(HistogramLayout::for_pattern(p, mean, std))
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let chunk = options.chunk_size.max(1) as u64;
    let chunks = shots.div_ceil(chunk);
    let partials: Vec<(Histogram, Vec<Histogram>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<_> {
            let mut diff = Histogram::empty(layout)?;
            let mut devs = device_layouts.iter().map(|&l| Histogram::empty(l)).collect::<Result<Vec<_>>>()?;
            let mut kept = Vec::new();
            let mut positions = vec![0.0; spec.len()];
            for s in c * chunk..((c + 1) * chunk).min(shots) {
                exp.shot(s, &mut positions);
                let x = exp.difference(&positions);
                diff.push(x);
                for (h, &p) in devs.iter_mut().zip(&positions) {
                    h.push(p);
                }
                if options.keep_samples {
                    kept.push(x);
                }
            }
            Ok((diff, devs, kept))
        })
        .collect::<Result<_>>()?;

    let mut difference = Histogram::empty(layout)?;
    let mut devices = device_layouts.iter().map(|&l| Histogram::empty(l)).collect::<Result<Vec<_>>>()?;
    let mut samples = options.keep_samples.then(|| Vec::with_capacity(shots as usize));
    for (d, devs, kept) in partials {
        difference.merge(&d)?;
        for (acc, h) in devices.iter_mut().zip(&devs) {
            acc.merge(h)?;
        }
        if let Some(s) = samples.as_mut() {
            s.extend(kept);
        }
    }
    Ok(ExperimentResult { order: q, shots, seed, difference, devices, samples, recursion, overlap_time: tk })
}

/// Replay a single shot of [`run_experiment`].
pub fn record_shot(spec: &ArraySpec, model: &NoiseModel, seed: u64, shot: u64, noise_step: Option<f64>) -> Result<ShotRecord> {
    validate_matched_wavenumbers(spec)?;
    let tk = spec.overlap_time()?;
    let samplers = spec.patterns()?.iter().map(|p| InverseCdfSampler::new(p)).collect::<Result<Vec<_>>>()?;
    let exp = Experiment {
        spec,
        model,
        seed,
        tk,
        step: noise_step.unwrap_or(tk / 512.0),
        weights: vec![],
        samplers,
    };
    let mut positions = vec![0.0; spec.len()];
    let displacements = exp.shot(shot, &mut positions);
    Ok(ShotRecord { shot, seed, displacements, positions })
}
