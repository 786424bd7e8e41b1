//! C ABI over the `mwarray` core.
//!
//! Conventions: every fallible function returns an [`MwStatus`] and writes its
//! result through an out-pointer. On failure the out-pointer is untouched and
//! [`mw_last_error_message`] describes the error for the calling thread.
//! Handles are created by `mw_*_new`/`mw_run_experiment` and released with the
//! matching `mw_*_free`; freeing NULL is a no-op. Panics never cross the
//! boundary; they surface as `MW_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mwarray::array::{recursive_pattern, ArraySpec};
use mwarray::entangle::{measured_recovery, recovered_entanglement, PhaseDistribution};
use mwarray::error::{Error, ErrorKind};
use mwarray::montecarlo::{fit_fringe, run_experiment, ExperimentOptions, Histogram};
use mwarray::noisefield::{solve_standoff_distance, NoiseModel};
use mwarray::wavepacket::{derive_scales, overlap_time, pattern_at_overlap, FringePattern, InterferometerSpec};

/// Result codes. `CONFIG_ERROR` and `NUMERICAL_ERROR` match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwStatus {
    Ok = 0,
    ConfigError = 2,
    NumericalError = 3,
    NullPointer = 10,
    InvalidArgument = 11,
    Panic = 12,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(e: Error) -> MwStatus {
    set_error(e.to_string());
    match e.kind() {
        ErrorKind::Config => MwStatus::ConfigError,
        ErrorKind::Numerical => MwStatus::NumericalError,
    }
}

/// Run `f`, converting panics into `MW_STATUS_PANIC`.
fn guard<F: FnOnce() -> MwStatus>(f: F) -> MwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let what = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {what}"));
            MwStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            set_error(concat!("null pointer: ", stringify!($p)));
            return MwStatus::NullPointer;
        })+
    };
}

macro_rules! try_mw {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return fail(e),
        }
    };
}

/// Interferometer parameters in units with ħ = 1.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwDevice {
    pub mass: f64,
    pub omega: f64,
    pub alpha_r: f64,
    pub alpha_i: f64,
}

impl From<MwDevice> for InterferometerSpec {
    fn from(d: MwDevice) -> Self {
        InterferometerSpec::new(d.mass, d.omega, d.alpha_r, d.alpha_i)
    }
}

impl From<InterferometerSpec> for MwDevice {
    fn from(s: InterferometerSpec) -> Self {
        Self { mass: s.mass, omega: s.omega, alpha_r: s.alpha_r, alpha_i: s.alpha_i }
    }
}

/// Density `∝ exp(−(x−center)²/2width²) (offset + cos(wavenumber (x−center)))`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwPattern {
    pub offset: f64,
    pub width: f64,
    pub wavenumber: f64,
    pub center: f64,
}

impl From<FringePattern> for MwPattern {
    fn from(p: FringePattern) -> Self {
        Self { offset: p.offset, width: p.width, wavenumber: p.wavenumber, center: p.center }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwScales {
    pub x0: f64,
    pub p0: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwFringeFit {
    pub visibility: f64,
    pub wavenumber: f64,
    pub width: f64,
    pub center: f64,
    pub residual_norm: f64,
}

/// Opaque array of interferometers.
pub struct MwArray {
    inner: ArraySpec,
}

/// Opaque noise model.
pub struct MwNoise {
    inner: NoiseModel,
}

/// Opaque histogram of a simulated variable.
pub struct MwHistogram {
    inner: Histogram,
}

/// Length in bytes of the calling thread's last error message, excluding the
/// terminating NUL; 0 when there is none.
#[no_mangle]
pub extern "C" fn mw_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |s| s.as_bytes().len()))
}

/// Copy the last error message, NUL-terminated and truncated to `capacity`.
/// Returns the full message length, so a return value `>= capacity` means
/// the copy was truncated.
///
/// # Safety
/// `buffer` must be NULL or valid for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn mw_last_error_message(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |s| s.as_bytes());
        if !buffer.is_null() && capacity > 0 {
            let n = bytes.len().min(capacity - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buffer, n);
            *buffer.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `device` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mw_overlap_time(device: *const MwDevice, out: *mut f64) -> MwStatus {
    non_null!(device, out);
    guard(|| {
        *out = try_mw!(overlap_time(&(*device).into()));
        MwStatus::Ok
    })
}

/// # Safety
/// `device` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mw_derive_scales(device: *const MwDevice, out: *mut MwScales) -> MwStatus {
    non_null!(device, out);
    guard(|| {
        let s = try_mw!(derive_scales(&(*device).into()));
        *out = MwScales { x0: s.x0, p0: s.p0 };
        MwStatus::Ok
    })
}

/// Device whose pattern at the overlap time has wavenumber `k` and envelope
/// width `sigma`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_device_for_pattern(mass: f64, omega: f64, k: f64, sigma: f64, out: *mut MwDevice) -> MwStatus {
    non_null!(out);
    guard(|| {
        *out = try_mw!(InterferometerSpec::for_pattern(mass, omega, k, sigma)).into();
        MwStatus::Ok
    })
}

/// A device of another mass with the same overlap time and wavenumber.
///
/// # Safety
/// `device` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mw_device_matched(device: *const MwDevice, mass: f64, out: *mut MwDevice) -> MwStatus {
    non_null!(device, out);
    guard(|| {
        let spec: InterferometerSpec = (*device).into();
        *out = try_mw!(spec.matched_to(mass)).into();
        MwStatus::Ok
    })
}

/// # Safety
/// `device` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mw_pattern_at_overlap(device: *const MwDevice, out: *mut MwPattern) -> MwStatus {
    non_null!(device, out);
    guard(|| {
        *out = try_mw!(pattern_at_overlap(&(*device).into())).into();
        MwStatus::Ok
    })
}

/// Array of `count` devices at sites `0, spacing, 2·spacing, …`.
///
/// # Safety
/// `devices` must point to `count` devices; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_array_new(devices: *const MwDevice, count: usize, spacing: f64, out: *mut *mut MwArray) -> MwStatus {
    non_null!(devices, out);
    guard(|| {
        let specs = std::slice::from_raw_parts(devices, count)
            .iter()
            .enumerate()
            .map(|(n, d)| InterferometerSpec::from(*d).at_site(n))
            .collect();
        let inner = try_mw!(ArraySpec::new(specs, spacing));
        *out = Box::into_raw(Box::new(MwArray { inner }));
        MwStatus::Ok
    })
}

/// # Safety
/// `array` must be NULL or a handle from [`mw_array_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mw_array_free(array: *mut MwArray) {
    if !array.is_null() {
        drop(Box::from_raw(array));
    }
}

/// Order-`q` pattern from the pairwise recursion.
///
/// # Safety
/// `array` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_recursive_pattern(array: *const MwArray, q: usize, eta_tolerance: f64, out: *mut MwPattern) -> MwStatus {
    non_null!(array, out);
    guard(|| {
        *out = try_mw!(recursive_pattern(&(*array).inner, q, eta_tolerance)).pattern().into();
        MwStatus::Ok
    })
}

/// Noise model from JSON, e.g.
/// `{"orders":[{"kind":"ornstein_uhlenbeck","relaxation_time":0.5,"std":0.4}]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_noise_from_json(json: *const c_char, out: *mut *mut MwNoise) -> MwStatus {
    non_null!(json, out);
    guard(|| {
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(e) => {
                set_error(format!("noise json is not UTF-8: {e}"));
                return MwStatus::InvalidArgument;
            }
        };
        let inner: NoiseModel = match serde_json::from_str(text) {
            Ok(m) => m,
            Err(e) => {
                set_error(format!("noise json: {e}"));
                return MwStatus::InvalidArgument;
            }
        };
        try_mw!(inner.validate());
        *out = Box::into_raw(Box::new(MwNoise { inner }));
        MwStatus::Ok
    })
}

/// Per-shot Gaussian common-mode displacement with standard deviation
/// `sigma_gamma` at time `t`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_noise_common_mode(sigma_gamma: f64, t: f64, out: *mut *mut MwNoise) -> MwStatus {
    non_null!(out);
    guard(|| {
        if !(sigma_gamma >= 0.0 && t > 0.0) {
            set_error(format!("need sigma_gamma >= 0 and t > 0, got ({sigma_gamma}, {t})"));
            return MwStatus::InvalidArgument;
        }
        let inner = NoiseModel::common_mode_displacement(sigma_gamma, t);
        try_mw!(inner.validate());
        *out = Box::into_raw(Box::new(MwNoise { inner }));
        MwStatus::Ok
    })
}

/// # Safety
/// `noise` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mw_noise_free(noise: *mut MwNoise) {
    if !noise.is_null() {
        drop(Box::from_raw(noise));
    }
}

/// Simulate `shots` repetitions and histogram `x_{0,q}`. `noise` may be NULL
/// for noiseless runs.
///
/// # Safety
/// `array` must be a live handle, `noise` NULL or a live handle, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mw_run_experiment(
    array: *const MwArray,
    noise: *const MwNoise,
    shots: u64,
    q: usize,
    seed: u64,
    out: *mut *mut MwHistogram,
) -> MwStatus {
    non_null!(array, out);
    guard(|| {
        let zero = NoiseModel::zero();
        let model = if noise.is_null() { &zero } else { &(*noise).inner };
        let opts = ExperimentOptions { device_histograms: false, ..ExperimentOptions::default() };
        let r = try_mw!(run_experiment(&(*array).inner, model, shots, q, seed, &opts));
        *out = Box::into_raw(Box::new(MwHistogram { inner: r.difference }));
        MwStatus::Ok
    })
}

/// # Safety
/// `histogram` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mw_histogram_free(histogram: *mut MwHistogram) {
    if !histogram.is_null() {
        drop(Box::from_raw(histogram));
    }
}

/// Number of bins; 0 for NULL.
///
/// # Safety
/// `histogram` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mw_histogram_bins(histogram: *const MwHistogram) -> usize {
    if histogram.is_null() {
        0
    } else {
        (*histogram).inner.counts.len()
    }
}

/// Total samples, including those outside the binned range.
///
/// # Safety
/// `histogram` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mw_histogram_total(histogram: *const MwHistogram) -> u64 {
    if histogram.is_null() {
        0
    } else {
        (*histogram).inner.total
    }
}

/// Copy bin centers and normalized densities into caller buffers of length
/// `len`, which must equal [`mw_histogram_bins`].
///
/// # Safety
/// `centers` and `density` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mw_histogram_copy(histogram: *const MwHistogram, centers: *mut f64, density: *mut f64, len: usize) -> MwStatus {
    non_null!(histogram, centers, density);
    guard(|| {
        let h = &(*histogram).inner;
        if len != h.counts.len() {
            set_error(format!("buffer length {len} differs from the {} bins", h.counts.len()));
            return MwStatus::InvalidArgument;
        }
        std::slice::from_raw_parts_mut(centers, len).copy_from_slice(&h.centers());
        std::slice::from_raw_parts_mut(density, len).copy_from_slice(&h.density());
        MwStatus::Ok
    })
}

/// Least-squares fringe fit starting from wavenumber `k_hint`.
///
/// # Safety
/// `histogram` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_fit_fringe(histogram: *const MwHistogram, k_hint: f64, out: *mut MwFringeFit) -> MwStatus {
    non_null!(histogram, out);
    guard(|| {
        let f = try_mw!(fit_fringe(&(*histogram).inner, k_hint));
        *out = MwFringeFit {
            visibility: f.visibility,
            wavenumber: f.wavenumber,
            width: f.width,
            center: f.center,
            residual_norm: f.residual_norm,
        };
        MwStatus::Ok
    })
}

/// Distance (m) at which a point mass (kg) produces an order-`q` finite
/// difference of `delta_a` (m/s²) across sites spaced `h` (m).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_standoff_distance(mass: f64, h: f64, q: usize, delta_a: f64, out: *mut f64) -> MwStatus {
    non_null!(out);
    guard(|| {
        *out = try_mw!(solve_standoff_distance(mass, h, q, delta_a));
        MwStatus::Ok
    })
}

/// Logarithmic negativity of `copies` ∈ {1, 2, 4} devices after averaging
/// over a uniform common phase and, when `uniform_gradient` is non-zero, a
/// uniform phase gradient (otherwise a zero gradient).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_recovered_entanglement(copies: usize, uniform_gradient: bool, out: *mut f64) -> MwStatus {
    non_null!(out);
    guard(|| {
        let delta = if uniform_gradient { PhaseDistribution::uniform() } else { PhaseDistribution::point(0.0) };
        *out = try_mw!(recovered_entanglement(copies, &PhaseDistribution::uniform(), &delta));
        MwStatus::Ok
    })
}

/// Entanglement certified by local measurement on the same states as
/// [`mw_recovered_entanglement`].
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_measured_recovery(copies: usize, uniform_gradient: bool, out: *mut f64) -> MwStatus {
    non_null!(out);
    guard(|| {
        let delta = if uniform_gradient { PhaseDistribution::uniform() } else { PhaseDistribution::point(0.0) };
        *out = try_mw!(measured_recovery(copies, &PhaseDistribution::uniform(), &delta));
        MwStatus::Ok
    })
}
