//! C ABI for the hill-octant spectral toolkit.
//!
//! Every fallible call returns an [`HoStatus`]; on failure the message is
//! kept per thread and read back with [`ho_last_error_message`]. Handles are
//! opaque and owned by the caller, who releases them with the matching
//! `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hill_octant::{halfsolid, BandSolver, BandStructure, Potential, SpectralError};

/// Status codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    InvalidSpec = 4,
    Numerical = 5,
    NoConvergence = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// Opaque periodic potential.
pub struct HoPotential {
    inner: Potential,
}

/// Opaque band structure computed for gaps `1..=n`.
pub struct HoBandStructure {
    inner: BandStructure,
}

/// One gap as plain data.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HoGap {
    pub lower: f64,
    pub upper: f64,
    pub mu: f64,
    /// `+1`, `-1`, or `0` when `mu` sits on an edge.
    pub sign: c_int,
    pub xi1: f64,
    pub xi2: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &SpectralError) -> HoStatus {
    match e {
        SpectralError::InvalidArgument(_) | SpectralError::NonFiniteInput(_) => HoStatus::InvalidArgument,
        SpectralError::InvalidSpec(_) => HoStatus::InvalidSpec,
        SpectralError::NoConvergence { .. } => HoStatus::NoConvergence,
        _ => HoStatus::Numerical,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (HoStatus, String)>) -> HoStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HoStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            HoStatus::Panic
        }
    }
}

fn spectral(e: SpectralError) -> (HoStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (HoStatus, String) {
    (HoStatus::NullPointer, format!("{name} is null"))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn ho_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a JSON potential spec.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ho_potential_from_json(json: *const c_char, out: *mut *mut HoPotential) -> HoStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| (HoStatus::InvalidUtf8, e.to_string()))?;
        let p = Potential::from_json(text).map_err(spectral)?;
        *out = Box::into_raw(Box::new(HoPotential { inner: p }));
        Ok(())
    })
}

/// `v(x) = c_0 + Σ_k cos[k-1] cos(2πkx) + sin[k-1] sin(2πkx)`, `k = 1..=len`.
///
/// # Safety
/// `cos` and `sin` must each point to `len` doubles (either may be null when
/// `len` is zero); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ho_potential_fourier(
    constant: f64,
    cos: *const f64,
    sin: *const f64,
    len: usize,
    out: *mut *mut HoPotential,
) -> HoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if len > 0 && (cos.is_null() || sin.is_null()) {
            return Err(null("coefficients"));
        }
        let (c, s) = if len == 0 {
            (&[][..], &[][..])
        } else {
            (std::slice::from_raw_parts(cos, len), std::slice::from_raw_parts(sin, len))
        };
        let p = Potential::from_coefficients(c, s).map_err(spectral)?.add_constant(constant);
        *out = Box::into_raw(Box::new(HoPotential { inner: p }));
        Ok(())
    })
}

/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ho_potential_free(p: *mut HoPotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Serializes the potential; release the string with [`ho_string_free`].
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ho_potential_to_json(p: *const HoPotential, out: *mut *mut c_char) -> HoStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("potential"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = CString::new(p.inner.to_json()).map_err(|e| (HoStatus::Numerical, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ho_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Floquet discriminant at `lambda`. Deep wells may overflow to infinity.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ho_discriminant(p: *const HoPotential, lambda: f64, out: *mut f64) -> HoStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("potential"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = hill_octant::monodromy::discriminant(&p.inner, lambda).map_err(spectral)?;
        Ok(())
    })
}

/// Band edges and Dirichlet data for gaps `1..=n`, with Neumann data when
/// `with_neumann` is non-zero.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ho_bands_compute(
    p: *const HoPotential,
    n: usize,
    with_neumann: c_int,
    out: *mut *mut HoBandStructure,
) -> HoStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("potential"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if n == 0 {
            return Err((HoStatus::InvalidArgument, "n must be at least 1".into()));
        }
        let bs = BandSolver::new(&p.inner).and_then(|s| s.structure(n, with_neumann != 0, None)).map_err(spectral)?;
        *out = Box::into_raw(Box::new(HoBandStructure { inner: bs }));
        Ok(())
    })
}

/// # Safety
/// `bs` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ho_bands_free(bs: *mut HoBandStructure) {
    if !bs.is_null() {
        drop(Box::from_raw(bs));
    }
}

/// Number of gaps held, or zero for a null handle.
///
/// # Safety
/// `bs` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ho_bands_gap_count(bs: *const HoBandStructure) -> usize {
    bs.as_ref().map_or(0, |b| b.inner.n_gaps())
}

/// Bottom of the spectrum, `λ_0^+`.
///
/// # Safety
/// `bs` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ho_bands_ground_edge(bs: *const HoBandStructure, out: *mut f64) -> HoStatus {
    guard(|| {
        let b = bs.as_ref().ok_or_else(|| null("band structure"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = b.inner.lambda0_plus;
        Ok(())
    })
}

/// Gap `n`, counted from 1.
///
/// # Safety
/// `bs` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ho_bands_gap(bs: *const HoBandStructure, n: usize, out: *mut HoGap) -> HoStatus {
    guard(|| {
        let b = bs.as_ref().ok_or_else(|| null("band structure"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if n == 0 || n > b.inner.n_gaps() {
            return Err((HoStatus::OutOfRange, format!("gap {n} outside 1..={}", b.inner.n_gaps())));
        }
        let g = b.inner.gap(n);
        *out = HoGap { lower: g.lower, upper: g.upper, mu: g.mu, sign: g.sign as c_int, xi1: g.xi.0, xi2: g.xi.1 };
        Ok(())
    })
}

/// Neumann eigenvalue `ν_n`, `n = 0..=gap_count`. Fails when the structure
/// was computed without Neumann data.
///
/// # Safety
/// `bs` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ho_bands_neumann(bs: *const HoBandStructure, n: usize, out: *mut f64) -> HoStatus {
    guard(|| {
        let b = bs.as_ref().ok_or_else(|| null("band structure"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = *b.inner.neumann.get(n).ok_or_else(|| (HoStatus::OutOfRange, format!("no Neumann eigenvalue {n}")))?;
        Ok(())
    })
}

/// Eigenvalues of the half-solid operator with step `tau` in gaps `1..=n`.
/// Writes at most `cap` pairs into `gaps`/`values` and the number found
/// into `found`; call again with a larger buffer if `found > cap`.
///
/// # Safety
/// `p` must be a live handle; `gaps` and `values` must hold `cap` entries
/// (they may be null when `cap` is zero); `found` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ho_halfsolid_eigenvalues(
    p: *const HoPotential,
    tau: f64,
    n: usize,
    gaps: *mut usize,
    values: *mut f64,
    cap: usize,
    found: *mut usize,
) -> HoStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("potential"))?;
        if found.is_null() {
            return Err(null("found"));
        }
        if cap > 0 && (gaps.is_null() || values.is_null()) {
            return Err(null("output buffer"));
        }
        let eig = halfsolid::gap_eigenvalues(&p.inner, tau, n).map_err(spectral)?;
        for (i, &(g, e)) in eig.iter().take(cap).enumerate() {
            *gaps.add(i) = g;
            *values.add(i) = e;
        }
        *found = eig.len();
        Ok(())
    })
}
