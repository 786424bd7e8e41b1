//! Linear arrays of interferometers and the order-q difference variables.
//!
//! Sites sit at `x = n h`. The order-q variable
//! `x_{n,q} = Σᵢ (−1)ⁱ C(q,i)/2^q x_{n+i}` annihilates every site displacement
//! that is a polynomial of degree below q in the site index. Its distribution
//! follows from repeated convolution of two fringe patterns; keeping the
//! dominant term at each step gives the update
//! `a → 2a², σ² → (σ_n² + σ_{n+1}²)/4, k → 2k`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::density::{Density, GRID_WIDTHS};
use crate::error::{Error, Result};
use crate::noisefield::DisplacementCoefficients;
use crate::numeric::{binomial, factorial, gauss_cos_integral};
use crate::wavepacket::{overlap_time, pattern_at_overlap, FringePattern, InterferometerSpec};

/// Relative tolerance for the matched-wavenumber and common-`t_k` checks.
pub const MATCH_TOLERANCE: f64 = 1e-12;
/// Default bound on the discarded cross-term weight η.
pub const DEFAULT_ETA_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArraySpec {
    pub devices: Vec<InterferometerSpec>,
    pub spacing: f64,
}

impl ArraySpec {
    /// Devices are re-indexed by their position in `devices`.
    pub fn new(devices: Vec<InterferometerSpec>, spacing: f64) -> Result<Self> {
        let devices = devices.into_iter().enumerate().map(|(n, d)| d.at_site(n)).collect();
        let spec = Self { devices, spacing };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.devices.is_empty() {
            return Err(Error::Configuration("array needs at least one device".into()));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::Configuration(format!("spacing must be positive, got {}", self.spacing)));
        }
        self.devices.iter().try_for_each(InterferometerSpec::validate)
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    /// Common overlap time of the (validated) array.
    pub fn overlap_time(&self) -> Result<f64> {
        validate_matched_wavenumbers(self)?;
        overlap_time(&self.devices[0])
    }

    pub fn patterns(&self) -> Result<Vec<FringePattern>> {
        self.devices.iter().map(pattern_at_overlap).collect()
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Every device must share `t_k` and the at-overlap wavenumber `2α_i/x₀`.
pub fn validate_matched_wavenumbers(spec: &ArraySpec) -> Result<()> {
    spec.validate()?;
    let first = &spec.devices[0];
    let t0 = overlap_time(first)?;
    let k0 = pattern_at_overlap(first)?.wavenumber;
    for (n, d) in spec.devices.iter().enumerate().skip(1) {
        let t = overlap_time(d)?;
        if relative_gap(t, t0) > MATCH_TOLERANCE {
            return Err(Error::Configuration(format!(
                "devices 0 and {n} overlap at different times ({t0} vs {t})"
            )));
        }
        let k = pattern_at_overlap(d)?.wavenumber;
        if relative_gap(k, k0) > MATCH_TOLERANCE {
            return Err(Error::Configuration(format!(
                "devices 0 and {n} have mismatched wavenumbers ({k0} vs {k}); \
                 choose alpha_i proportional to 1/sqrt(m omega)"
            )));
        }
    }
    Ok(())
}

/// Binomial weights `(−1)ⁱ C(q,i) / 2^q`, i = 0..=q.
pub fn difference_weights(q: usize) -> Vec<f64> {
    let scale = 0.5f64.powi(q as i32);
    (0..=q)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(q, i) * scale
        })
        .collect()
}

fn check_span(len: usize, n: usize, q: usize) -> Result<()> {
    if n + q >= len {
        return Err(Error::OutOfRange(format!(
            "order {q} at base index {n} needs {} sites, have {len}",
            n + q + 1
        )));
    }
    Ok(())
}

/// `x_{n,q}` as a weighted sum over `positions[n..=n+q]`.
pub fn difference_variable(positions: &[f64], n: usize, q: usize) -> Result<f64> {
    check_span(positions.len(), n, q)?;
    Ok(difference_weights(q)
        .iter()
        .zip(&positions[n..=n + q])
        .map(|(w, x)| w * x)
        .sum())
}

/// `x_{n,q}` through the pairwise recursion `(x_{n,q−1} − x_{n+1,q−1}) / 2`.
pub fn difference_variable_recursive(positions: &[f64], n: usize, q: usize) -> Result<f64> {
    check_span(positions.len(), n, q)?;
    let mut level: Vec<f64> = positions[n..=n + q].to_vec();
    for _ in 0..q {
        level = level.windows(2).map(|w| 0.5 * (w[0] - w[1])).collect();
    }
    Ok(level[0])
}

/// Leading-order shift of `x_{n,q}`: `q! h^q x_γ⁽ᵠ⁾ / 2^q`.
pub fn residual_fluctuation(coeffs: &DisplacementCoefficients, h: f64, q: usize) -> Result<f64> {
    if q > coeffs.order() {
        return Err(Error::OutOfRange(format!(
            "order {q} exceeds the expansion order {} of the coefficients",
            coeffs.order()
        )));
    }
    Ok(factorial(q) * h.powi(q as i32) * coeffs.get(q) / 2f64.powi(q as i32))
}

/// Exact distribution of `(x₁ − x₂)/2` for two independent fringe patterns
/// with a common wavenumber:
///
/// `exp(−u²/2σ₊²) { 2a₁a₂ + cos 2ku + 2η [a₂ cos(σ₁²ku/2σ₊²) + a₁ cos(σ₂²ku/2σ₊²)]
///  + η⁴ cos((σ₁²−σ₂²)ku/2σ₊²) } / N₋` with `u = x − (μ₁ − μ₂)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveTermDistribution {
    pub first: FringePattern,
    pub second: FringePattern,
    /// σ₊ with σ₊² = (σ₁² + σ₂²)/4.
    pub width: f64,
    pub eta: f64,
    pub center: f64,
    pub normalization: f64,
}

impl FiveTermDistribution {
    fn terms(&self) -> [(f64, f64); 5] {
        let (p1, p2) = (&self.first, &self.second);
        let k = p1.wavenumber;
        let s2 = self.width * self.width;
        let (v1, v2) = (p1.width * p1.width, p2.width * p2.width);
        [
            (2.0 * p1.offset * p2.offset, 0.0),
            (1.0, 2.0 * k),
            (2.0 * self.eta * p2.offset, k * v1 / (2.0 * s2)),
            (2.0 * self.eta * p1.offset, k * v2 / (2.0 * s2)),
            (self.eta.powi(4), k * (v1 - v2) / (2.0 * s2)),
        ]
    }

    fn raw(&self, u: f64) -> f64 {
        let env = (-u * u / (2.0 * self.width * self.width)).exp();
        env * self.terms().iter().map(|(c, b)| c * (b * u).cos()).sum::<f64>()
    }

    /// The dominant-term pattern obtained by dropping everything carrying η.
    pub fn truncated(&self) -> FringePattern {
        FringePattern {
            offset: 2.0 * self.first.offset * self.second.offset,
            width: self.width,
            wavenumber: 2.0 * self.first.wavenumber,
            center: self.center,
        }
    }
}

impl Density for FiveTermDistribution {
    fn pdf(&self, x: f64) -> f64 {
        self.raw(x - self.center) / self.normalization
    }

    fn support(&self) -> (f64, f64) {
        let r = GRID_WIDTHS * self.width;
        (self.center - r, self.center + r)
    }

    fn resolution_scale(&self) -> f64 {
        let k = self.first.wavenumber;
        if k > 0.0 {
            (PI / k).min(self.width)
        } else {
            self.width
        }
    }
}

fn check_matched(p1: &FringePattern, p2: &FringePattern) -> Result<()> {
    p1.validate()?;
    p2.validate()?;
    if relative_gap(p1.wavenumber, p2.wavenumber) > MATCH_TOLERANCE {
        return Err(Error::Configuration(format!(
            "convolution needs matched wavenumbers, got {} and {}",
            p1.wavenumber, p2.wavenumber
        )));
    }
    Ok(())
}

/// Overlap weight `η = exp(−k² σ₁² σ₂² / (8 σ₊²))`.
pub fn overlap_eta(p1: &FringePattern, p2: &FringePattern) -> f64 {
    let (v1, v2) = (p1.width * p1.width, p2.width * p2.width);
    let s2 = 0.25 * (v1 + v2);
    let k = p1.wavenumber;
    (-k * k * v1 * v2 / (8.0 * s2)).exp()
}

pub fn convolve_patterns(p1: &FringePattern, p2: &FringePattern) -> Result<FiveTermDistribution> {
    check_matched(p1, p2)?;
    let width = (0.25 * (p1.width * p1.width + p2.width * p2.width)).sqrt();
    let mut out = FiveTermDistribution {
        first: *p1,
        second: *p2,
        width,
        eta: overlap_eta(p1, p2),
        center: 0.5 * (p1.center - p2.center),
        normalization: 1.0,
    };
    out.normalization = out.terms().iter().map(|(c, b)| c * gauss_cos_integral(width, *b)).sum();
    Ok(out)
}

/// One step of the order recursion. Fails when the discarded η exceeds
/// `eta_tolerance`.
pub fn reduce_order(p1: &FringePattern, p2: &FringePattern, eta_tolerance: f64) -> Result<Reduction> {
    let full = convolve_patterns(p1, p2)?;
    if full.eta > eta_tolerance {
        return Err(Error::TruncationInvalid { eta: full.eta, tolerance: eta_tolerance });
    }
    Ok(Reduction { pattern: full.truncated(), eta: full.eta })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduction {
    pub pattern: FringePattern,
    pub eta: f64,
}

/// All levels of the triangular scheme: `levels[q][n]` is the pattern of `x_{n,q}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternRecursion {
    pub levels: Vec<Vec<FringePattern>>,
    /// `etas[q][n]` is the weight discarded while forming `levels[q + 1][n]`.
    pub etas: Vec<Vec<f64>>,
}

impl PatternRecursion {
    pub fn order(&self) -> usize {
        self.levels.len() - 1
    }

    /// Pattern of `x_{0,q}` at the top of the recursion.
    pub fn pattern(&self) -> FringePattern {
        self.levels[self.order()][0]
    }

    pub fn max_eta(&self) -> f64 {
        self.etas.iter().flatten().copied().fold(0.0, f64::max)
    }
}

/// Fold [`reduce_order`] across devices `0..=q`.
pub fn recursive_pattern(spec: &ArraySpec, q: usize, eta_tolerance: f64) -> Result<PatternRecursion> {
    validate_matched_wavenumbers(spec)?;
    check_span(spec.len(), 0, q)?;
    let base: Vec<FringePattern> = spec.devices[..=q].iter().map(pattern_at_overlap).collect::<Result<_>>()?;
    let mut levels = vec![base];
    let mut etas = Vec::with_capacity(q);
    for _ in 0..q {
        let prev = levels.last().unwrap();
        let steps: Vec<Reduction> = prev
            .windows(2)
            .map(|w| reduce_order(&w[0], &w[1], eta_tolerance))
            .collect::<Result<_>>()?;
        etas.push(steps.iter().map(|r| r.eta).collect());
        levels.push(steps.into_iter().map(|r| r.pattern).collect());
    }
    Ok(PatternRecursion { levels, etas })
}

/// Largest device count accepted by [`WeightedSumDensity::new`]; the
/// expansion has `3^n` terms before merging.
pub const MAX_EXACT_DEVICES: usize = 12;

/// Exact density of `Σ wᵢ xᵢ + ξ` for independent fringe-pattern outcomes
/// `xᵢ` and an optional independent Gaussian `ξ`.
///
/// Each pattern's characteristic function is a sum of three Gaussians, so the
/// sum's density is one Gaussian envelope times a cosine series:
/// `G(y − center; width) · Σ wⱼ cos(fⱼ (y − center))`.
///
/// Unlike [`recursive_pattern`], this does not assume that consecutive
/// difference variables are independent. For `q ≥ 2` they share devices and
/// the two answers differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSumDensity {
    pub center: f64,
    pub width: f64,
    /// `(frequency, weight)` with distinct non-negative frequencies, ascending.
    pub terms: Vec<(f64, f64)>,
}

impl WeightedSumDensity {
    pub fn new(patterns: &[FringePattern], weights: &[f64], noise: Option<(f64, f64)>) -> Result<Self> {
        if patterns.len() != weights.len() || patterns.is_empty() {
            return Err(Error::Configuration(format!(
                "need one weight per pattern, got {} patterns and {} weights",
                patterns.len(),
                weights.len()
            )));
        }
        if patterns.len() > MAX_EXACT_DEVICES {
            return Err(Error::Capacity { devices: patterns.len(), limit: MAX_EXACT_DEVICES });
        }
        let (noise_mean, noise_std) = noise.unwrap_or((0.0, 0.0));
        let mut var = noise_std * noise_std;
        let mut center = noise_mean;
        for (p, &w) in patterns.iter().zip(weights) {
            p.validate()?;
            var += (p.width * w).powi(2);
            center += w * p.center;
        }
        if !(var > 0.0 && var.is_finite()) {
            return Err(Error::Configuration("weighted sum has zero width".into()));
        }
        // (B, C, coefficient) per sign vector s ∈ {−1, 0, 1}ⁿ, with
        // B = Σ σᵢ² wᵢ sᵢ kᵢ and C = Σ σᵢ² sᵢ² kᵢ².
        let mut combos = vec![(0.0, 0.0, 1.0)];
        for (p, &w) in patterns.iter().zip(weights) {
            let s2 = p.width * p.width;
            let norm = p.offset + (-0.5 * s2 * p.wavenumber * p.wavenumber).exp();
            let mut next = Vec::with_capacity(combos.len() * 3);
            for &(b, c, coef) in &combos {
                next.push((b, c, coef * p.offset / norm));
                for sign in [-1.0, 1.0] {
                    next.push((b + s2 * w * sign * p.wavenumber, c + s2 * p.wavenumber * p.wavenumber, coef * 0.5 / norm));
                }
            }
            combos = next;
        }
        let mut raw: Vec<(f64, f64)> = combos
            .into_iter()
            .map(|(b, c, coef)| ((b / var).abs(), coef * (-0.5 * (c - b * b / var).max(0.0)).exp()))
            .collect();
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let scale = raw.iter().map(|t| t.0).fold(0.0, f64::max).max(1.0 / var.sqrt());
        let mut terms: Vec<(f64, f64)> = Vec::new();
        for (f, w) in raw {
            match terms.last_mut() {
                Some(last) if (f - last.0).abs() <= 1e-12 * scale => last.1 += w,
                _ => terms.push((f, w)),
            }
        }
        let floor = 1e-17 * terms.iter().map(|t| t.1).fold(0.0, f64::max);
        terms.retain(|t| t.1 > floor);
        Ok(Self { center, width: var.sqrt(), terms })
    }

    /// Strongest oscillating term as `(wavenumber, visibility)`, where the
    /// visibility is its weight relative to the constant term. `None` when no
    /// term oscillates.
    pub fn dominant_fringe(&self) -> Option<(f64, f64)> {
        let base = self.terms.iter().find(|t| t.0 == 0.0).map_or(0.0, |t| t.1);
        self.terms
            .iter()
            .filter(|t| t.0 > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|&(f, w)| (f, if base > 0.0 { w / base } else { f64::INFINITY }))
    }
}

impl Density for WeightedSumDensity {
    fn pdf(&self, x: f64) -> f64 {
        let z = x - self.center;
        let series: f64 = self.terms.iter().map(|&(f, w)| w * (f * z).cos()).sum();
        (-z * z / (2.0 * self.width * self.width)).exp() / ((2.0 * PI).sqrt() * self.width) * series
    }

    fn support(&self) -> (f64, f64) {
        (self.center - GRID_WIDTHS * self.width, self.center + GRID_WIDTHS * self.width)
    }

    fn resolution_scale(&self) -> f64 {
        let fmax = self.terms.iter().map(|t| t.0).fold(0.0, f64::max);
        if fmax > 0.0 {
            (2.0 * PI / fmax).min(self.width)
        } else {
            self.width
        }
    }
}

/// Exact density of `x_{0,q}` for the devices of `spec`, optionally convolved
/// with a Gaussian residual displacement `(mean, std)`.
pub fn exact_difference_density(spec: &ArraySpec, q: usize, noise: Option<(f64, f64)>) -> Result<WeightedSumDensity> {
    check_span(spec.len(), 0, q)?;
    let patterns: Vec<FringePattern> = spec.devices[..=q].iter().map(pattern_at_overlap).collect::<Result<_>>()?;
    WeightedSumDensity::new(&patterns, &difference_weights(q), noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::integrate;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn device(mass: f64) -> InterferometerSpec {
        // k = 2α_i/x₀ = 2 for every mass; t_k = 10
        let x0 = (1.0 / (2.0 * mass)).sqrt();
        InterferometerSpec::new(mass, 1.0, -10.0 * x0, x0)
    }

    #[test]
    fn matched_wavenumber_checks() {
        let same = ArraySpec::new(vec![device(1.0), device(1.0)], 0.1).unwrap();
        validate_matched_wavenumbers(&same).unwrap();
        let scaled = ArraySpec::new(vec![device(1.0), device(4.0)], 0.1).unwrap();
        assert_relative_eq!(scaled.devices[1].alpha_i, scaled.devices[0].alpha_i / 2.0);
        validate_matched_wavenumbers(&scaled).unwrap();
        let mut naive = device(1.0);
        naive.mass = 4.0;
        let bad = ArraySpec::new(vec![device(1.0), naive], 0.1).unwrap();
        let err = validate_matched_wavenumbers(&bad).unwrap_err();
        assert!(matches!(err, Error::Configuration(ref m) if m.contains("devices 0 and 1")), "{err}");
        let mut late = device(1.0);
        late.alpha_r *= 2.0;
        assert!(validate_matched_wavenumbers(&ArraySpec::new(vec![device(1.0), late], 0.1).unwrap()).is_err());
        assert!(ArraySpec::new(vec![], 0.1).is_err());
        assert!(ArraySpec::new(vec![device(1.0)], 0.0).is_err());
    }

    #[test]
    fn weights() {
        assert_eq!(difference_weights(0), vec![1.0]);
        assert_eq!(difference_weights(1), vec![0.5, -0.5]);
        assert_eq!(difference_weights(2), vec![0.25, -0.5, 0.25]);
        assert_eq!(difference_weights(3), vec![0.125, -0.375, 0.375, -0.125]);
        for q in 1..12 {
            assert_eq!(difference_weights(q).iter().sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn difference_examples() {
        assert_eq!(difference_variable(&[2.5, 2.5, 2.5], 0, 1).unwrap(), 0.0);
        assert_eq!(difference_variable(&[1.0, 2.0, 3.0], 0, 2).unwrap(), 0.0);
        assert_eq!(difference_variable(&[0.0, 1.0, 4.0], 0, 2).unwrap(), 0.5);
        assert!(matches!(difference_variable(&[0.0, 1.0], 0, 2), Err(Error::OutOfRange(_))));
        assert!(difference_variable(&[0.0, 1.0, 2.0], 1, 2).is_err());
    }

    #[test]
    fn residuals() {
        let c = DisplacementCoefficients(vec![0.3, 1.2, -4.0]);
        assert_relative_eq!(residual_fluctuation(&c, 0.1, 1).unwrap(), 0.1 * 1.2 / 2.0);
        assert_relative_eq!(residual_fluctuation(&c, 0.1, 2).unwrap(), 0.005 * -4.0, max_relative = 1e-14);
        assert_eq!(residual_fluctuation(&c, 0.1, 0).unwrap(), 0.3);
        assert!(residual_fluctuation(&c, 0.1, 3).is_err());
    }

    #[test]
    fn residual_is_the_leading_shift() {
        // x_{γ,n} = c_q (n h)^q only: the order-q variable moves by exactly the residual
        let h = 0.3;
        for q in 0..6usize {
            let mut coeffs = vec![0.0; q + 1];
            coeffs[q] = 1.7;
            let c = DisplacementCoefficients(coeffs);
            let xs: Vec<f64> = (0..=q).map(|n| crate::noisefield::displacement_at_site(&c, n, h)).collect();
            let got = difference_variable(&xs, 0, q).unwrap();
            let want = residual_fluctuation(&c, h, q).unwrap() * if q % 2 == 0 { 1.0 } else { -1.0 };
            assert_relative_eq!(got, want, max_relative = 1e-10);
        }
    }

    proptest! {
        #[test]
        fn polynomial_cancellation(q in 1usize..=6, coeffs in prop::collection::vec(-10.0f64..10.0, 6), base in 0usize..4) {
            let xs: Vec<f64> = (0..base + q + 1)
                .map(|n| coeffs.iter().take(q).enumerate().map(|(p, c)| c * (n as f64).powi(p as i32)).sum())
                .collect();
            let v = difference_variable(&xs, base, q).unwrap();
            prop_assert!(v.abs() <= 1e-12 * xs.iter().fold(1.0f64, |m, x| m.max(x.abs())), "q={} v={}", q, v);
        }

        #[test]
        fn recursion_equals_weights(q in 0usize..=10, xs in prop::collection::vec(-5.0f64..5.0, 11)) {
            let a = difference_variable(&xs, 0, q).unwrap();
            let b = difference_variable_recursive(&xs, 0, q).unwrap();
            prop_assert!((a - b).abs() <= 1e-14);
        }
    }

    fn numeric_convolution(p1: &FringePattern, p2: &FringePattern, x: f64) -> f64 {
        let (lo, hi) = p2.support();
        let panels = ((hi - lo) / p2.resolution_scale()).ceil() as usize * 2;
        2.0 * integrate(|y| p1.pdf(2.0 * x + y) * p2.pdf(y), lo, hi, panels, 1e-16)
    }

    #[test]
    fn five_term_matches_quadrature() {
        for (p1, p2) in [
            (FringePattern::new(1.0, 1.0, 2.0, 0.0).unwrap(), FringePattern::new(1.0, 1.0, 2.0, 0.0).unwrap()),
            (FringePattern::new(1.0, 0.6, 3.0, 0.2).unwrap(), FringePattern::new(2.0, 1.1, 3.0, -0.4).unwrap()),
            (FringePattern::new(1.0, 1e4, 1.414e-3, 0.0).unwrap(), FringePattern::new(1.0, 1e4 * 5f64.sqrt(), 1.414e-3, 0.0).unwrap()),
        ] {
            let d = convolve_patterns(&p1, &p2).unwrap();
            let (lo, hi) = d.support();
            let mut worst: f64 = 0.0;
            for i in 0..=40 {
                let x = lo + (hi - lo) * i as f64 / 40.0;
                worst = worst.max((d.pdf(x) - numeric_convolution(&p1, &p2, x)).abs());
            }
            let peak = d.pdf(d.center);
            assert!(worst <= 1e-8 * peak.max(1.0), "worst {worst} peak {peak}");
        }
    }

    #[test]
    fn five_term_is_normalized() {
        let p1 = FringePattern::new(1.0, 0.8, 1.5, 0.0).unwrap();
        let p2 = FringePattern::new(1.0, 1.3, 1.5, 0.0).unwrap();
        let d = convolve_patterns(&p1, &p2).unwrap();
        let (lo, hi) = d.support();
        assert_relative_eq!(integrate(|x| d.pdf(x), lo, hi, 400, 1e-14), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn symmetric_case_degenerates() {
        let p = FringePattern::new(1.0, 2.0, 5.0, 0.0).unwrap();
        let d = convolve_patterns(&p, &p).unwrap();
        let t = d.terms();
        assert_eq!(t[4].1, 0.0);
        assert_eq!(t[4].0, d.eta.powi(4));
        assert_eq!(t[0].0, 2.0);
        assert_eq!(t[1], (1.0, 10.0));
        assert!(convolve_patterns(&p, &FringePattern::new(1.0, 2.0, 5.1, 0.0).unwrap()).is_err());
    }

    #[test]
    fn reduction_step() {
        let p = FringePattern::new(1.0, 10.0, 1.0, 0.0).unwrap();
        let r = reduce_order(&p, &p, DEFAULT_ETA_TOLERANCE).unwrap();
        assert_eq!(r.pattern.offset, 2.0);
        assert_eq!(r.pattern.wavenumber, 2.0);
        assert_relative_eq!(r.pattern.width, 10.0 / 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(r.eta, (-25f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(r.eta, 1.39e-11, max_relative = 1e-2);
        let loose = FringePattern::new(1.0, 1.0, 1.0, 0.0).unwrap();
        assert!(matches!(reduce_order(&loose, &loose, 1e-6), Err(Error::TruncationInvalid { .. })));
    }

    #[test]
    fn ladder() {
        let spec = ArraySpec::new(vec![device(1.0); 4], 0.1).unwrap();
        let k0 = spec.patterns().unwrap()[0].wavenumber;
        let s0 = spec.patterns().unwrap()[0].width;
        let rec = recursive_pattern(&spec, 3, 1e-3).unwrap();
        let offsets: Vec<f64> = rec.levels.iter().map(|l| l[0].offset).collect();
        assert_eq!(offsets, vec![1.0, 2.0, 8.0, 128.0]);
        for (q, level) in rec.levels.iter().enumerate() {
            assert_eq!(level[0].wavenumber, k0 * 2f64.powi(q as i32));
            assert_relative_eq!(level[0].width.powi(2), s0 * s0 / 2f64.powi(q as i32), max_relative = 1e-14);
        }
        assert_eq!(recursive_pattern(&spec, 0, 1e-6).unwrap().pattern(), spec.patterns().unwrap()[0]);
        let two = recursive_pattern(&spec, 2, 1e-3).unwrap().pattern();
        assert_eq!((two.offset, two.wavenumber), (8.0, 4.0 * k0));
        assert!(matches!(recursive_pattern(&spec, 4, 1e-6), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn truncation_total_variation() {
        for ks in [5.0, 7.0, 10.0] {
            for ratio in [1.0, 1.5, 5f64.sqrt()] {
                let p1 = FringePattern::new(1.0, 1.0, ks, 0.0).unwrap();
                let p2 = FringePattern::new(1.0, ratio, ks, 0.0).unwrap();
                let full = convolve_patterns(&p1, &p2).unwrap();
                let cut = full.truncated();
                let (lo, hi) = full.support();
                let tv = 0.5 * integrate(|x| (full.pdf(x) - cut.pdf(x)).abs(), lo, hi, 2000, 1e-15);
                assert!(tv <= 10.0 * full.eta, "ks={ks} ratio={ratio} tv={tv} eta={}", full.eta);
            }
        }
    }

    fn pattern_spec(n: usize, k: f64, sigma: f64) -> ArraySpec {
        let d = InterferometerSpec::for_pattern(0.5, 1.0, k, sigma).unwrap();
        ArraySpec::new(vec![d; n], 1.0).unwrap()
    }

    #[test]
    fn exact_pair_matches_five_term() {
        for sigma in [1.2, 2.0, 10.0] {
            let spec = pattern_spec(2, 1.0, sigma);
            let p = spec.patterns().unwrap();
            let five = convolve_patterns(&p[0], &p[1]).unwrap();
            let exact = exact_difference_density(&spec, 1, None).unwrap();
            for i in -40..=40 {
                let x = i as f64 * sigma / 10.0;
                assert_relative_eq!(exact.pdf(x), five.pdf(x), max_relative = 1e-10, epsilon = 1e-300);
            }
        }
    }

    /// Density of `Σ wᵢ xᵢ` by nested grid convolution.
    fn brute_force_sum(patterns: &[FringePattern], weights: &[f64], xs: &[f64]) -> Vec<f64> {
        let step = 0.01;
        let reach = 9.0 * patterns.iter().map(|p| p.width).fold(0.0, f64::max);
        let n = (2.0 * reach / step) as usize;
        let grid: Vec<f64> = (0..=n).map(|i| -reach + i as f64 * step).collect();
        // density of w·X on the grid, then convolve successively
        let scaled = |p: &FringePattern, w: f64, y: f64| p.pdf(y / w) / w.abs();
        let mut acc: Vec<f64> = grid.iter().map(|&y| scaled(&patterns[0], weights[0], y)).collect();
        for (p, &w) in patterns.iter().zip(weights).skip(1) {
            let g: Vec<f64> = grid.iter().map(|&y| scaled(p, w, y)).collect();
            let mut out = vec![0.0; grid.len()];
            for (i, o) in out.iter_mut().enumerate() {
                for (j, gj) in g.iter().enumerate() {
                    // out(y_i) = Σ acc(y_i − y_j) g(y_j) step, grid symmetric about 0
                    let m = i as isize + (n / 2) as isize - j as isize;
                    if m >= 0 && (m as usize) < acc.len() {
                        *o += acc[m as usize] * gj * step;
                    }
                }
            }
            acc = out;
        }
        xs.iter()
            .map(|&x| {
                let i = ((x + reach) / step).round() as usize;
                acc[i]
            })
            .collect()
    }

    #[test]
    fn exact_second_order_matches_brute_force() {
        let spec = pattern_spec(3, 1.0, 1.5);
        let p = spec.patterns().unwrap();
        let exact = exact_difference_density(&spec, 2, None).unwrap();
        let xs: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.1).collect();
        let brute = brute_force_sum(&p, &difference_weights(2), &xs);
        let peak = brute.iter().cloned().fold(0.0, f64::max);
        for (x, b) in xs.iter().zip(brute) {
            assert!((exact.pdf(*x) - b).abs() < 1e-4 * peak, "x={x} exact={} brute={b}", exact.pdf(*x));
        }
    }

    #[test]
    fn exact_density_is_normalized() {
        for q in 0..=4 {
            let spec = pattern_spec(q + 1, 1.0, 3.0);
            let d = exact_difference_density(&spec, q, Some((0.3, 0.2))).unwrap();
            let (lo, hi) = d.support();
            let mass = integrate(|x| d.pdf(x), lo, hi, 400, 1e-12);
            assert_relative_eq!(mass, 1.0, max_relative = 1e-9);
            assert_relative_eq!(d.center, 0.3, epsilon = 1e-12);
        }
    }

    #[test]
    fn shared_devices_wash_out_second_order_fringes() {
        // the recursion predicts visibility 1/8 at 4k; the exact density has no such term
        let spec = pattern_spec(3, 1.0, 10.0);
        let rec = recursive_pattern(&spec, 2, DEFAULT_ETA_TOLERANCE).unwrap();
        assert_relative_eq!(rec.pattern().visibility(), 0.125, max_relative = 1e-12);
        let exact = exact_difference_density(&spec, 2, None).unwrap();
        let (_, v) = exact.dominant_fringe().unwrap();
        assert!(v < 1e-6, "v={v}");
        let pair = exact_difference_density(&spec, 1, None).unwrap();
        let (k, v) = pair.dominant_fringe().unwrap();
        assert_relative_eq!(k, 2.0, max_relative = 1e-12);
        assert_relative_eq!(v, 0.5, max_relative = 1e-12);
    }
}
