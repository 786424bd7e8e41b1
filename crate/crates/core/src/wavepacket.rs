//! Closed-form physics of a single cat-state interferometer.
//!
//! Units are dimensionless with ħ = 1. A device prepares `(|α⟩ + |−α⟩)/N_α`
//! with respect to a reference mode of frequency ω; the free evolution in a
//! uniform, time-dependent acceleration only translates the position density
//! by the displacement functional `x_γ(t)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::density::{Density, GRID_WIDTHS};
use crate::error::{Error, Result};
use crate::numeric::gauss_cos_integral;

pub const HBAR: f64 = 1.0;

/// Mass, reference frequency and coherent amplitude of one interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerSpec {
    pub mass: f64,
    pub omega: f64,
    pub alpha_r: f64,
    pub alpha_i: f64,
    /// Position index in an array; 0 for a lone device.
    #[serde(default)]
    pub site: usize,
}

impl InterferometerSpec {
    pub fn new(mass: f64, omega: f64, alpha_r: f64, alpha_i: f64) -> Self {
        Self { mass, omega, alpha_r, alpha_i, site: 0 }
    }

    pub fn at_site(mut self, site: usize) -> Self {
        self.site = site;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidSpec(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidSpec(format!("omega must be positive, got {}", self.omega)));
        }
        if !(self.alpha_r.is_finite() && self.alpha_i.is_finite()) {
            return Err(Error::InvalidSpec("alpha must be finite".into()));
        }
        Ok(())
    }

    pub fn x0(&self) -> f64 {
        (HBAR / (2.0 * self.mass * self.omega)).sqrt()
    }

    /// A device whose at-overlap pattern has wavenumber `k` and width
    /// `sigma` (both in ħ = 1 units), for the given mass and frequency.
    pub fn for_pattern(mass: f64, omega: f64, k: f64, sigma: f64) -> Result<Self> {
        let probe = Self::new(mass, omega, 0.0, 1.0);
        probe.validate()?;
        let x0 = probe.x0();
        if !(sigma >= x0) {
            return Err(Error::InvalidSpec(format!(
                "envelope width {sigma} is below the packet width x0 = {x0}"
            )));
        }
        let alpha_i = 0.5 * k * x0;
        let tk = ((sigma / x0).powi(2) - 1.0).sqrt() / omega;
        Ok(Self::new(mass, omega, -alpha_i * omega * tk, alpha_i))
    }

    /// A device of another mass sharing this one's frequency, overlap time
    /// and at-overlap wavenumber.
    pub fn matched_to(&self, mass: f64) -> Result<Self> {
        let tk = overlap_time(self)?;
        let k = 2.0 * self.alpha_i / self.x0();
        let probe = Self::new(mass, self.omega, 0.0, 1.0);
        probe.validate()?;
        let alpha_i = 0.5 * k * probe.x0();
        Ok(Self::new(mass, self.omega, -alpha_i * self.omega * tk, alpha_i))
    }
}

/// Position and momentum scales of the reference mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub x0: f64,
    pub p0: f64,
}

pub fn derive_scales(spec: &InterferometerSpec) -> Result<Scales> {
    spec.validate()?;
    let x0 = spec.x0();
    Ok(Scales { x0, p0: HBAR / (2.0 * x0) })
}

/// Time `t_k = −α_r/(ω α_i)` at which both cat components coincide.
pub fn overlap_time(spec: &InterferometerSpec) -> Result<f64> {
    spec.validate()?;
    if spec.alpha_i == 0.0 {
        return Err(Error::NoOverlapTime);
    }
    let tk = -spec.alpha_r / (spec.omega * spec.alpha_i);
    if tk < 0.0 {
        return Err(Error::NonphysicalTime(tk));
    }
    // folds -0.0 into 0.0
    Ok(tk + 0.0)
}

/// Centers, width and fringe wavenumber of the evolved cat at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketGeometry {
    /// Center of the `+α` component, `x_{+α}(t)`; the `−α` component sits at its negative.
    pub center: f64,
    pub width: f64,
    pub wavenumber: f64,
    pub displacement: f64,
}

impl PacketGeometry {
    pub fn center_plus(&self) -> f64 {
        self.center
    }

    pub fn center_minus(&self) -> f64 {
        -self.center
    }
}

pub fn packet_geometry(spec: &InterferometerSpec, t: f64, x_gamma: f64) -> Result<PacketGeometry> {
    let Scales { x0, .. } = derive_scales(spec)?;
    if !(t >= 0.0) {
        return Err(Error::OutOfRange(format!("time must be non-negative, got {t}")));
    }
    let wt = spec.omega * t;
    let drift = spec.alpha_r + spec.alpha_i * wt;
    let spread = 1.0 + wt * wt;
    Ok(PacketGeometry {
        center: 2.0 * x0 * drift,
        width: x0 * spread.sqrt(),
        wavenumber: 2.0 / x0 * (spec.alpha_i + wt / spread * drift),
        displacement: x_gamma,
    })
}

/// Position density of the evolved, displaced cat state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionDensity {
    pub geometry: PacketGeometry,
    /// Envelope factor `exp(−x_α²/2σ_t²)` of the interference term.
    pub overlap: f64,
    pub normalization: f64,
}

impl PositionDensity {
    /// Density before normalization, as a function of `x − x_γ`.
    fn raw(&self, u: f64) -> f64 {
        let g = &self.geometry;
        let two_s2 = 2.0 * g.width * g.width;
        let a = u - g.center;
        let b = u + g.center;
        (-a * a / two_s2).exp()
            + (-b * b / two_s2).exp()
            + 2.0 * self.overlap * (-u * u / two_s2).exp() * (g.wavenumber * u).cos()
    }
}

impl Density for PositionDensity {
    fn pdf(&self, x: f64) -> f64 {
        self.raw(x - self.geometry.displacement) / self.normalization
    }

    fn support(&self) -> (f64, f64) {
        let g = &self.geometry;
        let reach = g.center.abs() + GRID_WIDTHS * g.width;
        (g.displacement - reach, g.displacement + reach)
    }

    fn resolution_scale(&self) -> f64 {
        let g = &self.geometry;
        if g.wavenumber.abs() > 0.0 {
            (2.0 * PI / g.wavenumber.abs()).min(g.width)
        } else {
            g.width
        }
    }
}

pub fn position_pdf(spec: &InterferometerSpec, t: f64, x_gamma: f64) -> Result<PositionDensity> {
    let geometry = packet_geometry(spec, t, x_gamma)?;
    let s = geometry.width;
    let overlap = (-geometry.center * geometry.center / (2.0 * s * s)).exp();
    let normalization = 2.0 * (2.0 * PI).sqrt() * s
        + 2.0 * overlap * gauss_cos_integral(s, geometry.wavenumber);
    Ok(PositionDensity { geometry, overlap, normalization })
}

/// The fringe family `exp(−(x−μ)²/2σ²) [a + cos(k(x−μ))] / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringePattern {
    pub offset: f64,
    pub width: f64,
    pub wavenumber: f64,
    #[serde(default)]
    pub center: f64,
}

impl FringePattern {
    pub fn new(offset: f64, width: f64, wavenumber: f64, center: f64) -> Result<Self> {
        let p = Self { offset, width, wavenumber, center };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::InvalidSpec(format!("envelope width must be positive, got {}", self.width)));
        }
        if !(self.wavenumber >= 0.0 && self.wavenumber.is_finite()) {
            return Err(Error::InvalidSpec(format!("wavenumber must be >= 0, got {}", self.wavenumber)));
        }
        if !(self.offset >= 1.0 && self.offset.is_finite()) {
            return Err(Error::InvalidSpec(format!("offset must be >= 1, got {}", self.offset)));
        }
        Ok(())
    }

    pub fn normalization(&self) -> f64 {
        pattern_normalization(self)
    }

    /// Fringe contrast `1/a`.
    pub fn visibility(&self) -> f64 {
        1.0 / self.offset
    }

    pub fn profile(&self) -> FringeProfile {
        FringeProfile {
            offset: self.offset,
            amplitude: 1.0,
            width: self.width,
            wavenumber: self.wavenumber,
            center: self.center,
        }
    }

    pub fn shifted(mut self, by: f64) -> Self {
        self.center += by;
        self
    }
}

impl Density for FringePattern {
    fn pdf(&self, x: f64) -> f64 {
        let u = x - self.center;
        (-u * u / (2.0 * self.width * self.width)).exp() * (self.offset + (self.wavenumber * u).cos())
            / self.normalization()
    }

    fn support(&self) -> (f64, f64) {
        self.profile().support()
    }

    fn resolution_scale(&self) -> f64 {
        self.profile().resolution_scale()
    }
}

/// `N = √(2π) σ (a + exp(−σ²k²/2))`.
pub fn pattern_normalization(pattern: &FringePattern) -> f64 {
    (2.0 * PI).sqrt() * pattern.width * pattern.offset + gauss_cos_integral(pattern.width, pattern.wavenumber)
}

/// Gaussian envelope times `a + b cos(k(x−μ))`, the shape of a noise-averaged
/// pattern. Visibility is `b/a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeProfile {
    pub offset: f64,
    pub amplitude: f64,
    pub width: f64,
    pub wavenumber: f64,
    pub center: f64,
}

impl FringeProfile {
    pub fn normalization(&self) -> f64 {
        (2.0 * PI).sqrt() * self.width * self.offset
            + self.amplitude * gauss_cos_integral(self.width, self.wavenumber)
    }

    pub fn visibility(&self) -> f64 {
        self.amplitude / self.offset
    }
}

impl Density for FringeProfile {
    fn pdf(&self, x: f64) -> f64 {
        let u = x - self.center;
        (-u * u / (2.0 * self.width * self.width)).exp()
            * (self.offset + self.amplitude * (self.wavenumber * u).cos())
            / self.normalization()
    }

    fn support(&self) -> (f64, f64) {
        let r = GRID_WIDTHS * self.width;
        (self.center - r, self.center + r)
    }

    fn resolution_scale(&self) -> f64 {
        if self.wavenumber > 0.0 {
            (2.0 * PI / self.wavenumber).min(self.width)
        } else {
            self.width
        }
    }
}

/// The cos² pattern at `t_k`, written with offset `a = 1`.
pub fn pattern_at_overlap(spec: &InterferometerSpec) -> Result<FringePattern> {
    let tk = overlap_time(spec)?;
    let g = packet_geometry(spec, tk, 0.0)?;
    FringePattern::new(1.0, g.width, (2.0 * spec.alpha_i / spec.x0()).abs(), 0.0)
}

/// Closed-form average of `pattern` over a Gaussian displacement with
/// standard deviation `sigma_gamma`.
pub fn averaged_pdf(pattern: &FringePattern, sigma_gamma: f64) -> Result<FringeProfile> {
    pattern.validate()?;
    if !(sigma_gamma >= 0.0 && sigma_gamma.is_finite()) {
        return Err(Error::OutOfRange(format!("sigma_gamma must be >= 0, got {sigma_gamma}")));
    }
    let s2 = pattern.width * pattern.width;
    let g2 = sigma_gamma * sigma_gamma;
    let total = s2 + g2;
    let k = pattern.wavenumber;
    Ok(FringeProfile {
        offset: pattern.offset,
        amplitude: (-k * k * s2 * g2 / (2.0 * total)).exp(),
        width: total.sqrt(),
        wavenumber: k * s2 / total,
        center: pattern.center,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::integrate;
    use approx::assert_relative_eq;

    fn unit() -> InterferometerSpec {
        InterferometerSpec::new(1.0, 1.0, -2.0, 1.0)
    }

    fn quad_mass<D: Density>(d: &D) -> f64 {
        let (lo, hi) = d.support();
        let panels = ((hi - lo) / d.resolution_scale()).ceil() as usize * 4;
        integrate(|x| d.pdf(x), lo, hi, panels, 1e-13)
    }

    #[test]
    fn scales() {
        let s = derive_scales(&InterferometerSpec::new(1.0, 1.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(s.x0, 0.7071068, epsilon = 1e-7);
        assert_relative_eq!(s.p0, 0.7071068, epsilon = 1e-7);
        let s = derive_scales(&InterferometerSpec::new(4.0, 1.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(s.x0, 0.3535534, epsilon = 1e-7);
        assert_relative_eq!(s.x0 * s.p0, 0.5 * HBAR, epsilon = 1e-15);
        assert!(matches!(
            derive_scales(&InterferometerSpec::new(0.0, 1.0, 0.0, 1.0)),
            Err(Error::InvalidSpec(_))
        ));
        assert!(derive_scales(&InterferometerSpec::new(1.0, -1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn overlap_times() {
        assert_eq!(overlap_time(&unit()).unwrap(), 2.0);
        assert_eq!(overlap_time(&InterferometerSpec::new(1.0, 1.0, 0.0, 1.0)).unwrap(), 0.0);
        assert_eq!(
            overlap_time(&InterferometerSpec::new(1.0, 1.0, 1.0, 0.0)),
            Err(Error::NoOverlapTime)
        );
        assert!(matches!(
            overlap_time(&InterferometerSpec::new(1.0, 1.0, 1.0, 1.0)),
            Err(Error::NonphysicalTime(_))
        ));
    }

    #[test]
    fn geometry_examples() {
        let spec = InterferometerSpec::new(1.0, 1.0, 3.0, 0.0);
        let x0 = spec.x0();
        let g = packet_geometry(&spec, 0.0, 0.0).unwrap();
        assert_relative_eq!(g.center_plus(), 6.0 * x0);
        assert_relative_eq!(g.center_minus(), -6.0 * x0);
        assert_relative_eq!(g.width, x0);

        let spec = unit();
        let x0 = spec.x0();
        let g = packet_geometry(&spec, 2.0, 0.0).unwrap();
        assert_eq!(g.center, 0.0);
        assert_relative_eq!(g.wavenumber, 2.0 / x0, epsilon = 1e-14);
        let g = packet_geometry(&spec, 1.0, 0.0).unwrap();
        assert_relative_eq!(g.center_plus(), -2.0 * x0, epsilon = 1e-14);
        assert_relative_eq!(g.width, x0 * 2f64.sqrt(), epsilon = 1e-14);
        assert!(packet_geometry(&spec, -1.0, 0.0).is_err());
    }

    #[test]
    fn width_is_monotone() {
        let spec = unit();
        let mut last = 0.0;
        for i in 0..200 {
            let w = packet_geometry(&spec, i as f64 * 0.05, 0.0).unwrap().width;
            assert!(w >= last);
            last = w;
        }
        assert_eq!(packet_geometry(&spec, 0.0, 0.0).unwrap().width, spec.x0());
    }

    #[test]
    fn well_separated_cat_has_tiny_cross_term() {
        let d = position_pdf(&InterferometerSpec::new(1.0, 1.0, 3.0, 0.0), 0.0, 0.0).unwrap();
        assert_relative_eq!(d.overlap, (-18f64).exp(), max_relative = 1e-12);
        assert!(d.overlap < 1.6e-8);
    }

    #[test]
    fn position_pdf_normalized() {
        for &(spec, t, xg) in &[
            (unit(), 0.0, 0.0),
            (unit(), 1.0, 0.3),
            (unit(), 2.0, -4.0),
            (InterferometerSpec::new(3.0, 0.5, -0.7, 2.5), 0.37, 1.0),
            (InterferometerSpec::new(1.0, 1.0, 0.0, 0.2), 0.0, 0.0),
        ] {
            let d = position_pdf(&spec, t, xg).unwrap();
            assert_relative_eq!(quad_mass(&d), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn constant_acceleration_translates_density() {
        let (g, t) = (0.8, 2.0);
        let shifted = position_pdf(&unit(), t, -g * t * t / 2.0).unwrap();
        let free = position_pdf(&unit(), t, 0.0).unwrap();
        for i in -50..50 {
            let x = i as f64 * 0.11;
            assert_eq!(shifted.pdf(x), free.pdf(x + g * t * t / 2.0));
        }
    }

    #[test]
    fn overlap_reduces_to_cos_squared() {
        let spec = InterferometerSpec::new(2.0, 1.5, -3.0, 1.2);
        let tk = overlap_time(&spec).unwrap();
        let d = position_pdf(&spec, tk, 0.0).unwrap();
        let p = pattern_at_overlap(&spec).unwrap();
        let n2 = 2.0 * p.normalization();
        for i in -80..80 {
            let x = i as f64 * 0.05;
            let cos2 = (0.5 * p.wavenumber * x).cos().powi(2);
            let eq2 = 4.0 / n2 * (-x * x / (2.0 * p.width * p.width)).exp() * cos2;
            let got = d.pdf(x);
            assert!((got - eq2).abs() <= 1e-12 * eq2.abs().max(1e-300) + 1e-300, "{x}: {got} vs {eq2}");
        }
    }

    #[test]
    fn pattern_at_overlap_examples() {
        let spec = InterferometerSpec::new(1.0, 1.0, -1e4 * 5e-4, 5e-4);
        let p = pattern_at_overlap(&spec).unwrap();
        assert_eq!(p.offset, 1.0);
        assert_relative_eq!(p.wavenumber, 1.414e-3, max_relative = 1e-3);
        assert_relative_eq!(p.wavenumber * spec.x0(), 1e-3, max_relative = 1e-12);
        assert_relative_eq!(p.width / spec.x0(), 1e4, max_relative = 1e-8);
        assert_relative_eq!(p.wavenumber * p.width, 10.0, max_relative = 1e-8);
        assert_eq!(pattern_at_overlap(&InterferometerSpec::new(1.0, 1.0, 1.0, 0.0)), Err(Error::NoOverlapTime));
    }

    #[test]
    fn for_pattern_inverts_overlap() {
        let spec = InterferometerSpec::for_pattern(5.0, 1.0, 1e-3 / 0.5f64.sqrt(), 1e4 * 0.1).unwrap();
        let p = pattern_at_overlap(&spec).unwrap();
        assert_relative_eq!(p.wavenumber, 1e-3 / 0.5f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(p.width, 1e3, max_relative = 1e-12);
    }

    #[test]
    fn matched_device_shares_time_and_wavenumber() {
        let a = InterferometerSpec::for_pattern(0.5, 1.0, 1e-3, 1e4).unwrap();
        let b = a.matched_to(0.1).unwrap();
        assert_relative_eq!(overlap_time(&b).unwrap(), overlap_time(&a).unwrap(), max_relative = 1e-14);
        let (pa, pb) = (pattern_at_overlap(&a).unwrap(), pattern_at_overlap(&b).unwrap());
        assert_relative_eq!(pb.wavenumber, pa.wavenumber, max_relative = 1e-14);
        // lighter packets spread faster: σ scales as 1/√m at fixed t_k ≫ 1/ω
        assert_relative_eq!(pb.width / pa.width, 5f64.sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn normalization_examples() {
        let n = pattern_normalization(&FringePattern::new(1.0, 1.0, 10.0, 0.0).unwrap());
        assert_relative_eq!(n, 2.5066283, epsilon = 1e-7);
        let n = pattern_normalization(&FringePattern::new(1.0, 1.0, 0.0, 0.0).unwrap());
        assert_relative_eq!(n, 5.0132565, epsilon = 1e-7);
        let n = pattern_normalization(&FringePattern::new(2.0, 3.0, 40.0, 0.0).unwrap());
        assert_relative_eq!(n, 15.0397696, epsilon = 1e-7);
        for p in [
            FringePattern::new(1.0, 1.0, 10.0, 0.5).unwrap(),
            FringePattern::new(3.0, 0.2, 1.0, -1.0).unwrap(),
        ] {
            assert_relative_eq!(quad_mass(&p), 1.0, epsilon = 1e-9);
        }
        assert!(FringePattern::new(0.5, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn averaged_limits() {
        let p = FringePattern::new(1.0, 2.0, 3.0, 0.0).unwrap();
        let same = averaged_pdf(&p, 0.0).unwrap();
        for i in -40..40 {
            let x = i as f64 * 0.2;
            assert_relative_eq!(same.pdf(x), p.pdf(x), max_relative = 1e-14);
        }
        let wide = FringePattern::new(1.0, 1e3, 5e-3 * 1e3, 0.0).unwrap();
        let a = averaged_pdf(&wide, 1.0).unwrap();
        assert_relative_eq!(a.amplitude, (-12.5f64 * 1e6 / (1e6 + 1.0)).exp(), max_relative = 1e-12);
        assert_relative_eq!(a.amplitude, 3.73e-6, max_relative = 1e-3);
        let narrow = FringePattern::new(1.0, 1.0, 5.0, 0.0).unwrap();
        let a = averaged_pdf(&narrow, 1e4).unwrap();
        assert_relative_eq!(a.amplitude, (-12.5f64).exp(), max_relative = 1e-6);
        assert_relative_eq!(quad_mass(&averaged_pdf(&narrow, 0.7).unwrap()), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn averaged_matches_direct_convolution() {
        let p = FringePattern::new(1.0, 1.0, 4.0, 0.0).unwrap();
        let sg = 0.4;
        let avg = averaged_pdf(&p, sg).unwrap();
        for &x in &[-1.3, -0.2, 0.0, 0.45, 2.0] {
            let direct = integrate(
                |y| {
                    (-y * y / (2.0 * sg * sg)).exp() / ((2.0 * PI).sqrt() * sg) * p.pdf(x - y)
                },
                -10.0 * sg,
                10.0 * sg,
                200,
                1e-14,
            );
            assert_relative_eq!(avg.pdf(x), direct, epsilon = 1e-11);
        }
    }
}
