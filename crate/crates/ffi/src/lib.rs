//! C ABI over `systole`.
//!
//! Every fallible call returns a [`SystoleStatus`] and writes results through
//! out-pointers. On failure the message is kept per thread and can be read
//! with [`systole_last_error_message`]. Handles are opaque and must be released
//! with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use systole::calibration::{integrate_form_over_m, CutoffProfile};
use systole::cylinder::CylinderMetric;
use systole::discrete::{
    build_complex, certificate_check, minimize_mass, reference_cycle_m, LpSettings, MassCertificate, Resolution,
};
use systole::flat_torus::{loewner_ratio, shortest_vector, torus_diameter, GramMatrix2};
use systole::metric::Point3;
use systole::torus3::{report, AssemblyConfig, Sys1Constants};
use systole::SystoleError;

pub const SYSTOLE_ABI_VERSION: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystoleStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonConvergence = 3,
    Internal = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: SystoleStatus, msg: impl Into<String>) -> SystoleStatus {
    set_error(msg);
    status
}

fn from_error(e: SystoleError) -> SystoleStatus {
    let status = match e {
        SystoleError::QuadratureNonConvergence { .. } | SystoleError::LinearProgram(_) => SystoleStatus::NonConvergence,
        SystoleError::Io(_) => SystoleStatus::Internal,
        _ => SystoleStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

/// Runs `f`, converting panics into `Internal`.
fn guard(f: impl FnOnce() -> SystoleStatus) -> SystoleStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(SystoleStatus::Internal, "panic inside systole"),
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(SystoleStatus::NullPointer, concat!("null pointer: ", stringify!($p)));
        })+
    };
}

macro_rules! attempt {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(e),
        }
    };
}

#[no_mangle]
pub extern "C" fn systole_abi_version() -> u32 {
    SYSTOLE_ABI_VERSION
}

/// Message for the last failed call on this thread, or null if there was
/// none. Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn systole_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn systole_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

// Cylinder

/// Opaque cylinder `Y_j`.
pub struct SystoleCylinder(CylinderMetric);

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn systole_cylinder_new(j: u32, out: *mut *mut SystoleCylinder) -> SystoleStatus {
    non_null!(out);
    guard(|| {
        let m = attempt!(CylinderMetric::new(j));
        *out = Box::into_raw(Box::new(SystoleCylinder(m)));
        SystoleStatus::Ok
    })
}

/// # Safety
/// `c` must come from [`systole_cylinder_new`] and not be freed twice. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn systole_cylinder_free(c: *mut SystoleCylinder) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `c` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn systole_cylinder_j(c: *const SystoleCylinder, out: *mut u32) -> SystoleStatus {
    non_null!(c, out);
    *out = (*c).0.j();
    SystoleStatus::Ok
}

/// # Safety
/// `c` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn systole_cylinder_volume(c: *const SystoleCylinder, tol: f64, out: *mut f64) -> SystoleStatus {
    non_null!(c, out);
    guard(|| {
        *out = attempt!((*c).0.volume(tol));
        SystoleStatus::Ok
    })
}

/// Area of the surface `M = {y = 0}`.
///
/// # Safety
/// `c` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn systole_cylinder_area_m(c: *const SystoleCylinder, tol: f64, out: *mut f64) -> SystoleStatus {
    non_null!(c, out);
    guard(|| {
        *out = attempt!((*c).0.area_m(tol));
        SystoleStatus::Ok
    })
}

/// Writes the Gram matrix at `(x, y, z)` row-major into `out[0..9]`.
///
/// # Safety
/// `c` must be a live handle; `out` valid for 9 writes.
#[no_mangle]
pub unsafe extern "C" fn systole_cylinder_metric_at(
    c: *const SystoleCylinder,
    x: f64,
    y: f64,
    z: f64,
    out: *mut f64,
) -> SystoleStatus {
    non_null!(c, out);
    let m = &(*c).0;
    let p = Point3::new(x, y, z);
    if !m.contains(p) {
        return fail(SystoleStatus::InvalidArgument, format!("x = {x} outside [0, {}]", m.length()));
    }
    let g = m.metric_at(p).0;
    let out = std::slice::from_raw_parts_mut(out, 9);
    for r in 0..3 {
        for k in 0..3 {
            out[3 * r + k] = g[(r, k)];
        }
    }
    SystoleStatus::Ok
}

/// `int_M phi_j alpha` for the standard cutoff.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn systole_calibration_integral(j: u32, tol: f64, out: *mut f64) -> SystoleStatus {
    non_null!(out);
    guard(|| {
        let phi = attempt!(CutoffProfile::standard(j));
        *out = attempt!(integrate_form_over_m(&phi, tol));
        SystoleStatus::Ok
    })
}

// Flat tori, Gram matrix [[a, b], [b, d]]

/// # Safety
/// `length` valid for writes; `coefficients` valid for 2 writes or null.
#[no_mangle]
pub unsafe extern "C" fn systole_flat_torus_systole(
    a: f64,
    b: f64,
    d: f64,
    length: *mut f64,
    coefficients: *mut i64,
) -> SystoleStatus {
    non_null!(length);
    guard(|| {
        let g = attempt!(GramMatrix2::new(a, b, d));
        let (len, v) = shortest_vector(&g);
        *length = len;
        if !coefficients.is_null() {
            *coefficients = v[0];
            *coefficients.add(1) = v[1];
        }
        SystoleStatus::Ok
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn systole_flat_torus_diameter(a: f64, b: f64, d: f64, out: *mut f64) -> SystoleStatus {
    non_null!(out);
    guard(|| {
        *out = torus_diameter(&attempt!(GramMatrix2::new(a, b, d)));
        SystoleStatus::Ok
    })
}

/// `systole^2 / area`; at most `2 / sqrt(3)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn systole_flat_torus_loewner_ratio(a: f64, b: f64, d: f64, out: *mut f64) -> SystoleStatus {
    non_null!(out);
    guard(|| {
        *out = loewner_ratio(&attempt!(GramMatrix2::new(a, b, d)));
        SystoleStatus::Ok
    })
}

// Assembled T^3

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SystoleFreedomReport {
    pub j: u32,
    pub volume: f64,
    pub sys1_estimate: f64,
    pub sys2_lower: f64,
    /// `volume / (sys1_estimate * sys2_lower)`
    pub ratio: f64,
    /// False if loop shortening hit its iteration cap; the report is still
    /// written and the call returns `NonConvergence`.
    pub sys1_converged: bool,
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn systole_torus3_report(
    j: u32,
    restarts: u32,
    seed: u64,
    out: *mut SystoleFreedomReport,
) -> SystoleStatus {
    non_null!(out);
    guard(|| {
        if restarts == 0 {
            return fail(SystoleStatus::InvalidArgument, "restarts must be positive");
        }
        let sys1 = attempt!(Sys1Constants::estimate(restarts as usize, seed));
        let r = attempt!(report(&AssemblyConfig::standard(j), &sys1));
        *out = SystoleFreedomReport {
            j: r.j,
            volume: r.volume,
            sys1_estimate: r.sys1_estimate,
            sys2_lower: r.sys2_lower,
            ratio: r.ratio,
            sys1_converged: sys1.converged,
        };
        if sys1.converged {
            SystoleStatus::Ok
        } else {
            fail(SystoleStatus::NonConvergence, "loop shortening did not converge")
        }
    })
}

// Discrete mass

/// Opaque result of the minimal-mass LP for `[M]` in `Y_j`.
pub struct SystoleMassCertificate {
    cert: MassCertificate,
    reference_mass: f64,
    certificate_ok: bool,
}

/// Solves the LP on an `nx x ny x nz` grid; zero sizes pick the default
/// `8j x 8 x 8`. A handle is written even when the solver stops early or the
/// certificate is rejected; the status is then `NonConvergence`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn systole_lp_solve(
    j: u32,
    nx: usize,
    ny: usize,
    nz: usize,
    tol: f64,
    out: *mut *mut SystoleMassCertificate,
) -> SystoleStatus {
    non_null!(out);
    guard(|| {
        let m = attempt!(CylinderMetric::new(j));
        let res = if nx == 0 && ny == 0 && nz == 0 { Resolution::default_for(j) } else { Resolution::new(nx, ny, nz) };
        let c = attempt!(build_complex(&m, res));
        let r = reference_cycle_m(&c, 0);
        let cert = attempt!(minimize_mass(&c, &r, &LpSettings { tolerance: tol, ..LpSettings::default() }));
        let check = certificate_check(&cert, &c, 1e-6);
        let status = match (&check, cert.converged) {
            (Ok(()), true) => SystoleStatus::Ok,
            (Err(v), _) => fail(SystoleStatus::NonConvergence, format!("certificate rejected: {v}")),
            (Ok(()), false) => fail(SystoleStatus::NonConvergence, "LP solver stopped early"),
        };
        *out = Box::into_raw(Box::new(SystoleMassCertificate {
            reference_mass: r.mass(&c),
            certificate_ok: check.is_ok(),
            cert,
        }));
        status
    })
}

/// # Safety
/// `h` must come from [`systole_lp_solve`] and not be freed twice. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn systole_lp_free(h: *mut SystoleMassCertificate) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn systole_lp_primal_mass(h: *const SystoleMassCertificate) -> f64 {
    h.as_ref().map_or(f64::NAN, |h| h.cert.primal_mass)
}

/// # Safety
/// `h` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn systole_lp_dual_pairing(h: *const SystoleMassCertificate) -> f64 {
    h.as_ref().map_or(f64::NAN, |h| h.cert.pairing)
}

/// # Safety
/// `h` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn systole_lp_gap(h: *const SystoleMassCertificate) -> f64 {
    h.as_ref().map_or(f64::NAN, |h| h.cert.gap)
}

/// # Safety
/// `h` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn systole_lp_reference_mass(h: *const SystoleMassCertificate) -> f64 {
    h.as_ref().map_or(f64::NAN, |h| h.reference_mass)
}

/// # Safety
/// `h` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn systole_lp_certificate_ok(h: *const SystoleMassCertificate) -> bool {
    h.as_ref().is_some_and(|h| h.certificate_ok && h.cert.converged)
}

/// Number of faces, i.e. the length of the chain and dual vectors.
///
/// # Safety
/// `h` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn systole_lp_num_faces(h: *const SystoleMassCertificate) -> usize {
    h.as_ref().map_or(0, |h| h.cert.chain.len())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> SystoleStatus {
    non_null!(buf);
    if len < src.len() {
        return fail(SystoleStatus::InvalidArgument, format!("buffer holds {len}, need {}", src.len()));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    SystoleStatus::Ok
}

/// Copies the minimizing chain (one coefficient per face) into `buf`.
///
/// # Safety
/// `h` must be a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn systole_lp_copy_chain(
    h: *const SystoleMassCertificate,
    buf: *mut f64,
    len: usize,
) -> SystoleStatus {
    non_null!(h);
    copy_out(&(*h).cert.chain, buf, len)
}

/// Copies the dual calibration (one value per face) into `buf`.
///
/// # Safety
/// `h` must be a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn systole_lp_copy_dual(
    h: *const SystoleMassCertificate,
    buf: *mut f64,
    len: usize,
) -> SystoleStatus {
    non_null!(h);
    copy_out(&(*h).cert.dual, buf, len)
}
