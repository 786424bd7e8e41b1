//! Phase-noisy entangled arm states of interferometer pairs, their dephasing
//! averages and logarithmic negativity across the A|B cut.
//!
//! Each device holds two interferometers A and B with arms `L` (bit 0) and
//! `R` (bit 1). A state over `d` devices lives on `2d` qubits ordered
//! `[A₁ … A_d, B₁ … B_d]`, most significant first, so a basis index is
//! `(a << d) | b` with `a` the A-side bits and `b` the B-side bits.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Most devices any state may span.
pub const MAX_DEVICES: usize = 8;
/// Most devices a dense density matrix may span (dimension `4^d`).
pub const MAX_MIXED_DEVICES: usize = 5;
/// Tolerance for Hermiticity, trace and positivity checks.
pub const STATE_TOLERANCE: f64 = 1e-12;

type C = Complex64;

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Pure(DVector<C>),
    Mixed(DMatrix<C>),
}

/// Joint state of the arms of `devices` devices.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmState {
    devices: usize,
    repr: Repr,
}

fn check_capacity(devices: usize, limit: usize) -> Result<()> {
    if devices == 0 || devices > limit {
        return Err(Error::Capacity { devices, limit });
    }
    Ok(())
}

impl ArmState {
    pub fn pure(devices: usize, amplitudes: DVector<C>) -> Result<Self> {
        check_capacity(devices, MAX_DEVICES)?;
        if amplitudes.len() != 1 << (2 * devices) {
            return Err(Error::InvalidState(format!(
                "{} amplitudes for {devices} devices, expected {}",
                amplitudes.len(),
                1usize << (2 * devices)
            )));
        }
        let norm = amplitudes.norm();
        if !((norm - 1.0).abs() <= 1e-10) {
            return Err(Error::InvalidState(format!("state norm is {norm}, expected 1")));
        }
        Ok(Self { devices, repr: Repr::Pure(amplitudes) })
    }

    /// A density matrix, checked for Hermiticity, unit trace and positivity.
    pub fn mixed(devices: usize, rho: DMatrix<C>) -> Result<Self> {
        check_capacity(devices, MAX_MIXED_DEVICES)?;
        let dim = 1 << (2 * devices);
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::InvalidState(format!("density matrix is {}x{}, expected {dim}x{dim}", rho.nrows(), rho.ncols())));
        }
        let state = Self { devices, repr: Repr::Mixed(rho) };
        state.validate()?;
        Ok(state)
    }

    pub fn devices(&self) -> usize {
        self.devices
    }

    pub fn dim(&self) -> usize {
        1 << (2 * self.devices)
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&DVector<C>> {
        match &self.repr {
            Repr::Pure(v) => Some(v),
            Repr::Mixed(_) => None,
        }
    }

    pub fn density_matrix(&self) -> Result<DMatrix<C>> {
        match &self.repr {
            Repr::Pure(v) => {
                check_capacity(self.devices, MAX_MIXED_DEVICES)?;
                Ok(v * v.adjoint())
            }
            Repr::Mixed(m) => Ok(m.clone()),
        }
    }

    /// Hermitian, unit trace, eigenvalues ≥ −1e−12.
    pub fn validate(&self) -> Result<()> {
        let rho = match &self.repr {
            Repr::Pure(v) => {
                let n = v.norm();
                return if (n - 1.0).abs() <= 1e-10 {
                    Ok(())
                } else {
                    Err(Error::InvalidState(format!("state norm is {n}")))
                };
            }
            Repr::Mixed(m) => m,
        };
        let asym = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > 1e-10 {
            return Err(Error::InvalidState(format!("density matrix is not Hermitian (deviation {asym:e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let low = hermitian_eigenvalues(rho)?.into_iter().fold(f64::INFINITY, f64::min);
        if low < -STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("density matrix has eigenvalue {low:e}")));
        }
        Ok(())
    }

    fn into_mixed(self) -> Result<Self> {
        Ok(match self.repr {
            Repr::Pure(ref v) => {
                check_capacity(self.devices, MAX_MIXED_DEVICES)?;
                Self { devices: self.devices, repr: Repr::Mixed(v * v.adjoint()) }
            }
            Repr::Mixed(_) => self,
        })
    }

    /// `⟨φ|ρ|φ⟩` for a pure target.
    pub fn fidelity_with(&self, target: &DVector<C>) -> f64 {
        match &self.repr {
            Repr::Pure(v) => target.dotc(v).norm_sqr(),
            Repr::Mixed(m) => target.dotc(&(m * target)).re,
        }
    }

    /// Apply `u ⊗ 𝟙` with `u` acting on the A side (`2^d × 2^d`).
    pub fn apply_local_a(&self, u: &DMatrix<C>) -> Result<Self> {
        let full = kron(u, &DMatrix::identity(1 << self.devices, 1 << self.devices));
        self.apply(&full)
    }

    /// Apply `𝟙 ⊗ u` with `u` acting on the B side.
    pub fn apply_local_b(&self, u: &DMatrix<C>) -> Result<Self> {
        let full = kron(&DMatrix::identity(1 << self.devices, 1 << self.devices), u);
        self.apply(&full)
    }

    fn apply(&self, full: &DMatrix<C>) -> Result<Self> {
        if full.nrows() != self.dim() {
            return Err(Error::InvalidState(format!("operator of size {} on a {}-dimensional state", full.nrows(), self.dim())));
        }
        Ok(Self {
            devices: self.devices,
            repr: match &self.repr {
                Repr::Pure(v) => Repr::Pure(full * v),
                Repr::Mixed(m) => Repr::Mixed(full * m * full.adjoint()),
            },
        })
    }
}

fn kron(a: &DMatrix<C>, b: &DMatrix<C>) -> DMatrix<C> {
    a.kronecker(b)
}

/// Spectrum of a Hermitian matrix, ascending. Uses faer: the nalgebra
/// symmetric solver returns NaN on some of the sparse dephased states.
fn hermitian_eigenvalues(m: &DMatrix<C>) -> Result<Vec<f64>> {
    let n = m.nrows();
    // symmetrize so roundoff asymmetry cannot leak into the spectrum
    let h = faer::Mat::<C>::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
    let mut e = h
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|err| Error::InvalidState(format!("eigendecomposition failed: {err:?}")))?;
    if e.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidState("eigendecomposition produced non-finite values".into()));
    }
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Basis vector from arm labels, e.g. `ket("LR", "LR")` for `|LR⟩_A|LR⟩_B`.
pub fn ket(a: &str, b: &str) -> Result<DVector<C>> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidState(format!("arm labels {a:?} and {b:?} need equal non-zero length")));
    }
    let bits = |s: &str| -> Result<usize> {
        s.chars().try_fold(0usize, |acc, c| match c {
            'L' => Ok(acc << 1),
            'R' => Ok(acc << 1 | 1),
            _ => Err(Error::InvalidState(format!("arm label {c:?} is not L or R"))),
        })
    };
    let d = a.len();
    let mut v = DVector::zeros(1 << (2 * d));
    v[(bits(a)? << d) | bits(b)?] = C::new(1.0, 0.0);
    Ok(v)
}

/// `(|L⟩_A|L⟩_B + e^{i[ϕ+(j−1)Δϕ]}|R⟩_A|R⟩_B)/√2` for device `j ≥ 1`.
pub fn device_state(j: usize, phi: f64, delta_phi: f64) -> Result<ArmState> {
    if j == 0 {
        return Err(Error::InvalidSpec("device index j starts at 1".into()));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = DVector::zeros(4);
    v[0b00] = C::new(s, 0.0);
    v[0b11] = C::from_polar(s, phi + (j - 1) as f64 * delta_phi);
    ArmState::pure(1, v)
}

/// Split combined index `i` of a `total`-device state into the index of the
/// sub-state covering devices `offset .. offset + d`.
fn sub_index(i: usize, total: usize, offset: usize, d: usize) -> usize {
    let a = i >> total;
    let b = i & ((1 << total) - 1);
    let shift = total - offset - d;
    let mask = (1 << d) - 1;
    (((a >> shift) & mask) << d) | ((b >> shift) & mask)
}

/// Tensor product with the A factors and B factors each kept together, so
/// the result uses the same `[A…, B…]` ordering.
pub fn tensor_combine(states: &[ArmState]) -> Result<ArmState> {
    if states.is_empty() {
        return Err(Error::InvalidState("nothing to combine".into()));
    }
    let total: usize = states.iter().map(|s| s.devices).sum();
    check_capacity(total, MAX_DEVICES)?;
    let dim = 1usize << (2 * total);
    let offsets: Vec<usize> = states
        .iter()
        .scan(0, |acc, s| {
            let o = *acc;
            *acc += s.devices;
            Some(o)
        })
        .collect();
    if states.iter().all(ArmState::is_pure) {
        let v = DVector::from_fn(dim, |i, _| {
            states.iter().zip(&offsets).fold(C::new(1.0, 0.0), |acc, (s, &o)| {
                acc * s.amplitudes().unwrap()[sub_index(i, total, o, s.devices)]
            })
        });
        return ArmState::pure(total, v);
    }
    check_capacity(total, MAX_MIXED_DEVICES)?;
    let mats = states.iter().map(|s| s.clone().into_mixed().map(|m| m.density_matrix())).collect::<Result<Result<Vec<_>>>>()??;
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        states.iter().zip(&offsets).zip(&mats).fold(C::new(1.0, 0.0), |acc, ((s, &o), r)| {
            acc * r[(sub_index(i, total, o, s.devices), sub_index(j, total, o, s.devices))]
        })
    });
    ArmState::mixed(total, m)
}

/// Linear-gradient family: devices `1 … d` with phases `ϕ + (j−1)Δϕ`.
pub fn chain_state(devices: usize, phi: f64, delta_phi: f64) -> Result<ArmState> {
    check_capacity(devices, MAX_DEVICES)?;
    let parts = (1..=devices).map(|j| device_state(j, phi, delta_phi)).collect::<Result<Vec<_>>>()?;
    tensor_combine(&parts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseKind {
    /// Uniform on `[0, 2π)`.
    Uniform,
    Gaussian { mean: f64, std: f64 },
    Point { value: f64 },
}

/// A random phase, either one value shared by all devices or drawn
/// independently per device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseDistribution {
    #[serde(flatten)]
    pub kind: PhaseKind,
    #[serde(default = "shared_default")]
    pub shared: bool,
}

fn shared_default() -> bool {
    true
}

impl PhaseDistribution {
    pub fn uniform() -> Self {
        Self { kind: PhaseKind::Uniform, shared: true }
    }

    pub fn gaussian(mean: f64, std: f64) -> Self {
        Self { kind: PhaseKind::Gaussian { mean, std }, shared: true }
    }

    pub fn point(value: f64) -> Self {
        Self { kind: PhaseKind::Point { value }, shared: true }
    }

    pub fn independent(mut self) -> Self {
        self.shared = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PhaseKind::Gaussian { mean, std } if !(std >= 0.0 && std.is_finite() && mean.is_finite()) => {
                Err(Error::Configuration(format!("gaussian phase needs finite mean and std >= 0, got ({mean}, {std})")))
            }
            PhaseKind::Point { value } if !value.is_finite() => {
                Err(Error::Configuration(format!("point phase must be finite, got {value}")))
            }
            _ => Ok(()),
        }
    }

    /// `E[e^{ikϕ}]`.
    pub fn characteristic(&self, k: i64) -> C {
        match self.kind {
            PhaseKind::Uniform => {
                if k == 0 {
                    C::new(1.0, 0.0)
                } else {
                    C::new(0.0, 0.0)
                }
            }
            PhaseKind::Gaussian { mean, std } => {
                let k = k as f64;
                C::from_polar((-0.5 * k * k * std * std).exp(), k * mean)
            }
            PhaseKind::Point { value } => C::from_polar(1.0, k as f64 * value),
        }
    }

    /// Nodes and weights integrating trigonometric polynomials against the
    /// distribution.
    fn quadrature(&self) -> Vec<(f64, f64)> {
        match self.kind {
            PhaseKind::Uniform => {
                let n = 64;
                (0..n).map(|i| (2.0 * PI * i as f64 / n as f64, 1.0 / n as f64)).collect()
            }
            PhaseKind::Gaussian { std, mean } if std > 0.0 => {
                let n = 241;
                let half = 12.0 * std;
                let h = 2.0 * half / (n - 1) as f64;
                let raw: Vec<(f64, f64)> = (0..n)
                    .map(|i| {
                        let x = -half + i as f64 * h;
                        (mean + x, (-0.5 * (x / std).powi(2)).exp())
                    })
                    .collect();
                let total: f64 = raw.iter().map(|p| p.1).sum();
                raw.into_iter().map(|(x, w)| (x, w / total)).collect()
            }
            PhaseKind::Gaussian { mean, .. } => vec![(mean, 1.0)],
            PhaseKind::Point { value } => vec![(value, 1.0)],
        }
    }
}

/// `Σ_j r_j` and `Σ_j r_j (j−1)` over the R bits of a device register.
fn phase_counts(bits: usize, devices: usize) -> (i64, i64) {
    (0..devices).fold((0, 0), |(n, m), j| {
        let r = ((bits >> (devices - 1 - j)) & 1) as i64;
        (n + r, m + r * j as i64)
    })
}

/// Closed-form average of the linear-gradient family over `ϕ ~ phi` and
/// `Δϕ ~ delta`. Coherence between `|r⟩` and `|r'⟩` picks up the
/// characteristic functions at the frequency differences of the two branches.
pub fn dephased_chain(devices: usize, phi: &PhaseDistribution, delta: &PhaseDistribution) -> Result<ArmState> {
    check_capacity(devices, MAX_MIXED_DEVICES)?;
    phi.validate()?;
    delta.validate()?;
    let dim = 1usize << (2 * devices);
    let weight = 1.0 / (1u64 << devices) as f64;
    let mut rho = DMatrix::<C>::zeros(dim, dim);
    for r in 0..1usize << devices {
        for s in 0..1usize << devices {
            let (nr, mr) = phase_counts(r, devices);
            let (ns, ms) = phase_counts(s, devices);
            let phase_part = if phi.shared {
                phi.characteristic(nr - ns)
            } else {
                (0..devices).fold(C::new(1.0, 0.0), |acc, j| {
                    let bit = |x: usize| ((x >> (devices - 1 - j)) & 1) as i64;
                    acc * phi.characteristic(bit(r) - bit(s))
                })
            };
            let value = phase_part * delta.characteristic(mr - ms) * weight;
            rho[((r << devices) | r, (s << devices) | s)] = value;
        }
    }
    ArmState::mixed(devices, rho)
}

/// Average a shared-phase family `(ϕ, Δϕ) ↦ state` by quadrature.
pub fn average_over_phases<F>(family: F, phi: &PhaseDistribution, delta: &PhaseDistribution) -> Result<ArmState>
where
    F: Fn(f64, f64) -> Result<ArmState>,
{
    phi.validate()?;
    delta.validate()?;
    if !phi.shared {
        return Err(Error::Configuration("quadrature averaging needs a shared phase".into()));
    }
    let mut acc: Option<(usize, DMatrix<C>)> = None;
    for &(p, wp) in &phi.quadrature() {
        for &(q, wq) in &delta.quadrature() {
            let s = family(p, q)?;
            let w = C::new(wp * wq, 0.0);
            let term = match &s.repr {
                Repr::Pure(v) => {
                    check_capacity(s.devices, MAX_MIXED_DEVICES)?;
                    v * v.adjoint() * w
                }
                Repr::Mixed(m) => m * w,
            };
            match acc.as_mut() {
                Some((_, m)) => *m += term,
                None => acc = Some((s.devices, term)),
            }
        }
    }
    let (d, m) = acc.expect("quadrature has nodes");
    ArmState::mixed(d, m)
}

fn partial_transpose_a(rho: &DMatrix<C>, devices: usize) -> DMatrix<C> {
    let dim = rho.nrows();
    let bmask = (1usize << devices) - 1;
    DMatrix::from_fn(dim, dim, |i, j| {
        let (a, b) = (i >> devices, i & bmask);
        let (a2, b2) = (j >> devices, j & bmask);
        rho[((a2 << devices) | b, (a << devices) | b2)]
    })
}

/// `log₂ ‖ρ^{T_A}‖₁` across the A|B cut. Pure states use their Schmidt
/// coefficients, `E_N = 2 log₂ Σᵢ sᵢ`.
pub fn log_negativity(state: &ArmState) -> Result<f64> {
    state.validate()?;
    let d = state.devices;
    let value = match &state.repr {
        Repr::Pure(v) => {
            let side = 1usize << d;
            let m = DMatrix::from_fn(side, side, |a, b| v[(a << d) | b]);
            let s: f64 = m.singular_values().iter().sum();
            2.0 * s.log2()
        }
        Repr::Mixed(rho) => {
            let trace_norm: f64 = hermitian_eigenvalues(&partial_transpose_a(rho, d))?.iter().map(|e| e.abs()).sum();
            trace_norm.log2()
        }
    };
    Ok(value.max(0.0))
}

/// Spectrum of the A-side partial transpose, ascending.
pub fn partial_transpose_spectrum(state: &ArmState) -> Result<Vec<f64>> {
    let rho = state.density_matrix()?;
    let mut e = hermitian_eigenvalues(&partial_transpose_a(&rho, state.devices))?;
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// One branch of a projective measurement on the A side.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    pub label: usize,
    pub probability: f64,
    /// Normalized post-measurement state; absent for zero-probability outcomes.
    pub state: Option<ArmState>,
}

/// Project the A register onto each set of computational A values in
/// `outcomes` (which must partition `0 .. 2^d`).
pub fn measure_a_side(state: &ArmState, outcomes: &[(usize, Vec<usize>)]) -> Result<Vec<MeasurementOutcome>> {
    let d = state.devices;
    let side = 1usize << d;
    let mut seen = vec![false; side];
    for a in outcomes.iter().flat_map(|o| &o.1) {
        if *a >= side || std::mem::replace(&mut seen[*a], true) {
            return Err(Error::InvalidState(format!("A value {a} is repeated or out of range")));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidState("measurement projectors do not sum to the identity".into()));
    }
    let rho = state.density_matrix()?;
    let dim = state.dim();
    outcomes
        .iter()
        .map(|(label, set)| {
            let mut keep = vec![false; side];
            set.iter().for_each(|&a| keep[a] = true);
            let inside = |i: usize| keep[i >> d];
            let projected = DMatrix::from_fn(dim, dim, |i, j| if inside(i) && inside(j) { rho[(i, j)] } else { C::new(0.0, 0.0) });
            let p = projected.trace().re;
            let post = if p > 1e-14 { Some(ArmState::mixed(d, projected / C::new(p, 0.0))?) } else { None };
            Ok(MeasurementOutcome { label: *label, probability: p.max(0.0), state: post })
        })
        .collect()
}

/// Outcome classes of `|LL⟩⟨LL| + 2(|LR⟩⟨LR| + |RL⟩⟨RL|) + 3|RR⟩⟨RR|` on a
/// two-qubit register.
fn pair_classes() -> Vec<(usize, Vec<usize>)> {
    vec![(1, vec![0b00]), (2, vec![0b01, 0b10]), (3, vec![0b11])]
}

/// Measure `O_A = |LL⟩⟨LL| + 2(|LR⟩⟨LR| + |RL⟩⟨RL|) + 3|RR⟩⟨RR|` on a
/// two-device state; outcomes are labelled 1, 2, 3.
pub fn local_measurement(state: &ArmState) -> Result<Vec<MeasurementOutcome>> {
    if state.devices != 2 {
        return Err(Error::InvalidState(format!("the pair observable needs 2 devices, got {}", state.devices)));
    }
    measure_a_side(state, &pair_classes())
}

/// Nested pair measurement on four devices: `O_A` on pairs (1,2) and (3,4);
/// when both give 2, `O_A` again on the effective qubits `LR ↦ 0, RL ↦ 1`.
fn nested_classes() -> Vec<(usize, Vec<usize>)> {
    let mut out = Vec::new();
    for (c12, s12) in pair_classes() {
        for (c34, s34) in pair_classes() {
            let set: Vec<usize> = s12.iter().flat_map(|&x| s34.iter().map(move |&y| (x << 2) | y)).collect();
            if c12 == 2 && c34 == 2 {
                let eff = |x: usize| usize::from(x == 0b10);
                for (c, _) in pair_classes() {
                    let sub: Vec<usize> = set
                        .iter()
                        .copied()
                        .filter(|&v| {
                            let e = (eff(v >> 2) << 1) | eff(v & 0b11);
                            pair_classes().iter().find(|(cc, _)| *cc == c).unwrap().1.contains(&e)
                        })
                        .collect();
                    out.push((100 + c, sub));
                }
            } else {
                out.push((10 * c12 + c34, set));
            }
        }
    }
    out
}

/// `E_N` across the global A|B cut of the averaged linear-gradient family.
pub fn recovered_entanglement(copies: usize, phi: &PhaseDistribution, delta: &PhaseDistribution) -> Result<f64> {
    check_copies(copies)?;
    log_negativity(&dephased_chain(copies, phi, delta)?)
}

/// Entanglement certified by local A-side measurement: `Σ p · E_N(post)`
/// over the pair observable (2 copies) or its nested form (4 copies).
pub fn measured_recovery(copies: usize, phi: &PhaseDistribution, delta: &PhaseDistribution) -> Result<f64> {
    check_copies(copies)?;
    let state = dephased_chain(copies, phi, delta)?;
    let outcomes = match copies {
        1 => return log_negativity(&state),
        2 => local_measurement(&state)?,
        _ => measure_a_side(&state, &nested_classes())?,
    };
    outcomes
        .iter()
        .filter_map(|o| o.state.as_ref().map(|s| log_negativity(s).map(|e| o.probability * e)))
        .sum()
}

fn check_copies(copies: usize) -> Result<()> {
    if !matches!(copies, 1 | 2 | 4) {
        return Err(Error::Configuration(format!("copies must be 1, 2 or 4, got {copies}")));
    }
    Ok(())
}

/// Pair Bell target `(|LR⟩_A|LR⟩_B + |RL⟩_A|RL⟩_B)/√2`, the post-state of outcome 2.
pub fn pair_bell_target() -> Result<DVector<C>> {
    Ok((ket("LR", "LR")? + ket("RL", "RL")?) * C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0))
}
