//! C ABI over the pulsepqc toolkit.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_parse`
//! and released by the matching `*_free`. Every fallible call returns a
//! [`PqcStatus`]; on failure a message is kept per thread and can be copied
//! out with [`pqc_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pulsepqc::cr::{cr_unitary, CrCoefficients, EntanglerKind};
use pulsepqc::pqc::{build_pqc, Ansatz, RotationSet};
use pulsepqc::sim::PauliSum;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    DimensionMismatch = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqcEntangler {
    Cnot = 0,
    /// Bare CR tone calibrated to a π/4 ZX rotation.
    CrAngle = 1,
    /// Bare CR tone of 150 ns.
    CrDuration = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqcRotations {
    Ry = 0,
    RyRz = 1,
}

/// CR Hamiltonian coefficients in MHz.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PqcCrCoefficients {
    pub zi: f64,
    pub zx: f64,
    pub zy: f64,
    pub zz: f64,
    pub ix: f64,
    pub iy: f64,
    pub iz: f64,
}

impl From<PqcCrCoefficients> for CrCoefficients {
    fn from(c: PqcCrCoefficients) -> Self {
        CrCoefficients {
            zi: c.zi,
            zx: c.zx,
            zy: c.zy,
            zz: c.zz,
            ix: c.ix,
            iy: c.iy,
            iz: c.iz,
        }
    }
}

/// Opaque ansatz handle.
pub struct PqcAnsatz(Ansatz);

/// Opaque Pauli-sum handle.
pub struct PqcHamiltonian(PauliSum);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: PqcStatus, msg: impl Into<String>) -> PqcStatus {
    set_error(msg);
    status
}

fn from_error(e: pulsepqc::Error) -> PqcStatus {
    let status = match e {
        pulsepqc::Error::Parse { .. } | pulsepqc::Error::Json(_) | pulsepqc::Error::Csv(_) => PqcStatus::Parse,
        pulsepqc::Error::Dimension(_) => PqcStatus::DimensionMismatch,
        _ => PqcStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> PqcStatus) -> PqcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == PqcStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(PqcStatus::Panic, "internal panic"),
    }
}

/// # Safety
/// `ptr` must be null or point to `len` readable doubles.
unsafe fn slice<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if len == 0 {
        Some(&[])
    } else if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the buffer size needed for the full message.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pqc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len() + 1
    })
}

/// NUL-terminated library version. The pointer is static.
#[no_mangle]
pub extern "C" fn pqc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Device-average CR coefficients.
#[no_mangle]
pub extern "C" fn pqc_default_coefficients() -> PqcCrCoefficients {
    let c = CrCoefficients::device_average();
    PqcCrCoefficients {
        zi: c.zi,
        zx: c.zx,
        zy: c.zy,
        zz: c.zz,
        ix: c.ix,
        iy: c.iy,
        iz: c.iz,
    }
}

/// `exp(−iHt)` for a CR tone of `duration_ns`, written row-major into `out`
/// as 16 interleaved `(re, im)` pairs. `out_len` must be at least 32.
///
/// # Safety
/// `coefficients` must point to a valid struct; `out` to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pqc_cr_unitary(
    coefficients: *const PqcCrCoefficients,
    duration_ns: f64,
    out: *mut f64,
    out_len: usize,
) -> PqcStatus {
    guard(|| {
        if coefficients.is_null() || out.is_null() {
            return fail(PqcStatus::NullPointer, "null argument");
        }
        if out_len < 32 {
            return fail(PqcStatus::BufferTooSmall, format!("need 32 doubles, got {out_len}"));
        }
        let u = match cr_unitary(&(*coefficients).into(), duration_ns) {
            Ok(u) => u,
            Err(e) => return from_error(e),
        };
        let out = std::slice::from_raw_parts_mut(out, 32);
        for r in 0..4 {
            for c in 0..4 {
                let z = u.entry(r, c);
                out[2 * (4 * r + c)] = z.re;
                out[2 * (4 * r + c) + 1] = z.im;
            }
        }
        PqcStatus::Ok
    })
}

/// Linear-chain ansatz with `layers` layers plus a trailing rotation layer.
/// `coefficients` may be null, meaning the device average; it is ignored
/// for CNOT.
///
/// # Safety
/// `coefficients` must be null or valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pqc_ansatz_new(
    n_qubits: usize,
    layers: usize,
    rotations: PqcRotations,
    entangler: PqcEntangler,
    coefficients: *const PqcCrCoefficients,
    out: *mut *mut PqcAnsatz,
) -> PqcStatus {
    guard(|| {
        if out.is_null() {
            return fail(PqcStatus::NullPointer, "null output handle");
        }
        *out = ptr::null_mut();
        let c = if coefficients.is_null() {
            CrCoefficients::device_average()
        } else {
            (*coefficients).into()
        };
        let kind = match entangler {
            PqcEntangler::Cnot => EntanglerKind::Cnot,
            PqcEntangler::CrAngle => EntanglerKind::cr_angle(c),
            PqcEntangler::CrDuration => EntanglerKind::cr_duration(c),
        };
        let rot = match rotations {
            PqcRotations::Ry => RotationSet::Ry,
            PqcRotations::RyRz => RotationSet::RyRz,
        };
        match build_pqc(n_qubits, layers, rot, kind).and_then(|s| Ansatz::new(&s)) {
            Ok(a) => {
                *out = Box::into_raw(Box::new(PqcAnsatz(a)));
                PqcStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `ansatz` must be null or a handle from [`pqc_ansatz_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pqc_ansatz_free(ansatz: *mut PqcAnsatz) {
    if !ansatz.is_null() {
        drop(Box::from_raw(ansatz));
    }
}

/// Number of rotation angles, or 0 for a null handle.
///
/// # Safety
/// `ansatz` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pqc_ansatz_parameter_count(ansatz: *const PqcAnsatz) -> usize {
    ansatz.as_ref().map_or(0, |a| a.0.parameter_count())
}

/// Number of qubits, or 0 for a null handle.
///
/// # Safety
/// `ansatz` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pqc_ansatz_qubit_count(ansatz: *const PqcAnsatz) -> usize {
    ansatz.as_ref().map_or(0, |a| a.0.n_qubits())
}

/// Prepares the state for `params` and writes its `2^n` amplitudes as
/// interleaved `(re, im)` pairs; `out_len` must be at least `2·2^n`.
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn pqc_ansatz_prepare_state(
    ansatz: *const PqcAnsatz,
    params: *const f64,
    n_params: usize,
    out: *mut f64,
    out_len: usize,
) -> PqcStatus {
    guard(|| {
        let (Some(a), Some(p)) = (ansatz.as_ref(), slice(params, n_params)) else {
            return fail(PqcStatus::NullPointer, "null argument");
        };
        if out.is_null() {
            return fail(PqcStatus::NullPointer, "null output buffer");
        }
        let need = 2usize << a.0.n_qubits();
        if out_len < need {
            return fail(PqcStatus::BufferTooSmall, format!("need {need} doubles, got {out_len}"));
        }
        let psi = match a.0.prepare_state(p) {
            Ok(s) => s,
            Err(e) => return from_error(e),
        };
        let out = std::slice::from_raw_parts_mut(out, need);
        for (i, z) in psi.amplitudes().iter().enumerate() {
            out[2 * i] = z.re;
            out[2 * i + 1] = z.im;
        }
        PqcStatus::Ok
    })
}

/// Parses a Pauli-sum text (`<coefficient> <pauli string>` per line).
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pqc_hamiltonian_parse(text: *const c_char, out: *mut *mut PqcHamiltonian) -> PqcStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(PqcStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let Ok(s) = CStr::from_ptr(text).to_str() else {
            return fail(PqcStatus::Parse, "Hamiltonian text is not UTF-8");
        };
        match PauliSum::parse(s, "<ffi>") {
            Ok(h) => {
                *out = Box::into_raw(Box::new(PqcHamiltonian(h)));
                PqcStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `h` must be null or a handle from [`pqc_hamiltonian_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pqc_hamiltonian_free(h: *mut PqcHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pqc_hamiltonian_qubit_count(h: *const PqcHamiltonian) -> usize {
    h.as_ref().map_or(0, |h| h.0.n_qubits())
}

/// Exact `⟨ψ(params)|H|ψ(params)⟩`.
///
/// # Safety
/// Handles must be live; `params` valid for `n_params`; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn pqc_expectation(
    ansatz: *const PqcAnsatz,
    h: *const PqcHamiltonian,
    params: *const f64,
    n_params: usize,
    value: *mut f64,
) -> PqcStatus {
    guard(|| {
        let (Some(a), Some(h), Some(p)) = (ansatz.as_ref(), h.as_ref(), slice(params, n_params)) else {
            return fail(PqcStatus::NullPointer, "null argument");
        };
        if value.is_null() {
            return fail(PqcStatus::NullPointer, "null output");
        }
        match a.0.prepare_state(p).and_then(|psi| h.0.expectation(&psi)) {
            Ok(v) => {
                *value = v;
                PqcStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
