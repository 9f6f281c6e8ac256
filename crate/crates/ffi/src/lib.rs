//! C ABI over the `nckant` library.
//!
//! Objects cross the boundary as opaque handles returned through out-pointers
//! and released with the matching `nck_*_free`. Every fallible
//! call returns an [`NckStatus`]; the message of the last failure on the
//! calling thread is available from [`nck_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nckant::connes::{SolverOptions, SpectralDistanceSolver};
use nckant::linalg::Complex;
use nckant::models::{
    bloch_to_density, m2_diagonal_triple, moyal_ball_cost, two_point_triple, two_sheet_cost, BlochPoint,
    MoyalCostParams,
};
use nckant::transport::{kantorovich_dual, make_cost_space, wasserstein_primal, FiniteCostSpace, ProbabilityVector, SpaceSpec};
use nckant::triple::{DensityState, FiniteSpectralTriple};
use nckant::Error;

#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum NckStatus {
    Ok = 0,
    InvalidArgument = 1,
    /// Output was written but the solver did not reach the requested gap.
    NotConverged = 2,
    /// No feasible coupling; the value written is `+inf`.
    Infeasible = 3,
    NullPointer = 4,
    Internal = 5,
}

/// Opaque finite spectral triple.
pub struct NckTriple(FiniteSpectralTriple);

/// Opaque density matrix.
pub struct NckState(DensityState);

/// Opaque finite cost space.
pub struct NckCostSpace(FiniteCostSpace);

#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct NckSolverOptions {
    pub tol: f64,
    pub max_iter: u64,
    pub restarts: u64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct NckDistance {
    pub finite: bool,
    /// `+inf` when `finite` is false.
    pub value: f64,
    pub gap: f64,
    pub iterations: u64,
    pub converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NckStatus {
    match e {
        Error::Infeasible(_) => NckStatus::Infeasible,
        Error::IterationLimit(_) => NckStatus::NotConverged,
        _ => NckStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and converting panics.
fn guard(f: impl FnOnce() -> Result<NckStatus, Error>) -> NckStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(e)) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            NckStatus::Internal
        }
    }
}

fn null_error(what: &str) -> NckStatus {
    set_error(format!("null pointer: {what}"));
    NckStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Error> {
    CStr::from_ptr(p).to_str().map_err(|_| Error::Parse("string is not valid UTF-8".into()))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> NckStatus {
    *out = Box::into_raw(Box::new(value));
    NckStatus::Ok
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nck_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nck_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn nck_solver_options_default() -> NckSolverOptions {
    let d = SolverOptions::default();
    NckSolverOptions { tol: d.tol, max_iter: d.max_iter as u64, restarts: d.restarts as u64, seed: d.seed }
}

/// Parses a triple from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nck_triple_from_json(json: *const c_char, out: *mut *mut NckTriple) -> NckStatus {
    if json.is_null() || out.is_null() {
        return null_error("nck_triple_from_json");
    }
    guard(|| {
        let t: FiniteSpectralTriple = serde_json::from_str(str_arg(json)?).map_err(Error::from)?;
        Ok(put(out, NckTriple(t)))
    })
}

/// Two-point triple `C²` with off-diagonal Dirac entry `m`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nck_triple_two_point(m_re: f64, m_im: f64, out: *mut *mut NckTriple) -> NckStatus {
    if out.is_null() {
        return null_error("nck_triple_two_point");
    }
    guard(|| {
        if !(m_re.is_finite() && m_im.is_finite()) {
            return Err(Error::Validation("m must be finite".into()));
        }
        Ok(put(out, NckTriple(two_point_triple(Complex::new(m_re, m_im), false))))
    })
}

/// `M₂(C)` with Dirac operator `diag(d1, d2)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nck_triple_m2_diagonal(d1: f64, d2: f64, out: *mut *mut NckTriple) -> NckStatus {
    if out.is_null() {
        return null_error("nck_triple_m2_diagonal");
    }
    guard(|| Ok(put(out, NckTriple(m2_diagonal_triple(d1, d2)?))))
}

/// Hilbert-space dimension, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nck_triple_hilbert_dim(t: *const NckTriple) -> usize {
    t.as_ref().map_or(0, |t| t.0.hilbert_dim())
}

/// # Safety
/// `t` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nck_triple_free(t: *mut NckTriple) {
    free(t)
}

/// Qubit state with Bloch vector `(x, y, z)`, `x² + y² + z² ≤ 1`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nck_state_from_bloch(x: f64, y: f64, z: f64, out: *mut *mut NckState) -> NckStatus {
    if out.is_null() {
        return null_error("nck_state_from_bloch");
    }
    guard(|| Ok(put(out, NckState(bloch_to_density(&BlochPoint::new(x, y, z)?)?))))
}

/// Projector on the `k`-th (0-based) basis vector of `C^dim`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nck_state_basis(dim: usize, k: usize, out: *mut *mut NckState) -> NckStatus {
    if out.is_null() {
        return null_error("nck_state_basis");
    }
    guard(|| Ok(put(out, NckState(DensityState::basis_projector(dim, k)?))))
}

/// Parses `{"matrix": ...}` or `{"bloch": [x, y, z]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nck_state_from_json(json: *const c_char, out: *mut *mut NckState) -> NckStatus {
    if json.is_null() || out.is_null() {
        return null_error("nck_state_from_json");
    }
    guard(|| {
        let s: DensityState = serde_json::from_str(str_arg(json)?).map_err(Error::from)?;
        Ok(put(out, NckState(s)))
    })
}

/// # Safety
/// `s` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nck_state_free(s: *mut NckState) {
    free(s)
}

/// Spectral distance between two states. `opts` may be null for defaults.
/// Returns `NotConverged` (with `out` filled) when the gap target was missed.
///
/// # Safety
/// Handles must be live; `opts` null or valid; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn nck_spectral_distance(
    t: *const NckTriple,
    a: *const NckState,
    b: *const NckState,
    opts: *const NckSolverOptions,
    out: *mut NckDistance,
) -> NckStatus {
    if t.is_null() || a.is_null() || b.is_null() || out.is_null() {
        return null_error("nck_spectral_distance");
    }
    guard(|| {
        let o = opts.as_ref().copied().unwrap_or_else(|| nck_solver_options_default());
        let opts = SolverOptions {
            tol: o.tol,
            max_iter: o.max_iter as usize,
            restarts: o.restarts as usize,
            seed: o.seed,
        };
        let solver = SpectralDistanceSolver::new(&(*t).0, opts)?;
        let d = solver.distance(&(*a).0, &(*b).0)?;
        *out = NckDistance {
            finite: d.finite,
            value: if d.finite { d.value } else { f64::INFINITY },
            gap: d.gap_estimate,
            iterations: d.iterations as u64,
            converged: d.converged,
        };
        Ok(if d.converged { NckStatus::Ok } else { NckStatus::NotConverged })
    })
}

unsafe fn space_out(spec: SpaceSpec, out: *mut *mut NckCostSpace) -> Result<NckStatus, Error> {
    Ok(put(out, NckCostSpace(make_cost_space(spec)?)))
}

/// `n` equally spaced points on the unit circle.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nck_cost_space_cycle(n: usize, out: *mut *mut NckCostSpace) -> NckStatus {
    if out.is_null() {
        return null_error("nck_cost_space_cycle");
    }
    guard(|| space_out(SpaceSpec::Cycle(n), out))
}

/// `n` interior points `k/(n+1)` of the unit interval.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nck_cost_space_interval(n: usize, out: *mut *mut NckCostSpace) -> NckStatus {
    if out.is_null() {
        return null_error("nck_cost_space_interval");
    }
    guard(|| space_out(SpaceSpec::Interval(n), out))
}

/// Two copies of `base` joined with crossing cost `√(d² + inv_m²)`.
///
/// # Safety
/// `base` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn nck_cost_space_two_sheet(
    base: *const NckCostSpace,
    inv_m: f64,
    out: *mut *mut NckCostSpace,
) -> NckStatus {
    if base.is_null() || out.is_null() {
        return null_error("nck_cost_space_two_sheet");
    }
    guard(|| space_out(SpaceSpec::TwoSheet { base: Box::new((*base).0.clone()), inv_m }, out))
}

/// Parses `{"points", "cost", "metric"}`; infinite costs are the string `"inf"`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nck_cost_space_from_json(json: *const c_char, out: *mut *mut NckCostSpace) -> NckStatus {
    if json.is_null() || out.is_null() {
        return null_error("nck_cost_space_from_json");
    }
    guard(|| {
        let s: FiniteCostSpace = serde_json::from_str(str_arg(json)?).map_err(Error::from)?;
        Ok(put(out, NckCostSpace(s)))
    })
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nck_cost_space_size(s: *const NckCostSpace) -> usize {
    s.as_ref().map_or(0, |s| s.0.size())
}

/// # Safety
/// `s` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nck_cost_space_free(s: *mut NckCostSpace) {
    free(s)
}

unsafe fn marginals<'a>(
    s: *const NckCostSpace,
    mu: *const f64,
    nu: *const f64,
    len: usize,
) -> Result<(&'a FiniteCostSpace, ProbabilityVector, ProbabilityVector), Error> {
    let space = &(*s).0;
    if len != space.size() {
        return Err(Error::DimensionMismatch(format!("{len} weights for {} points", space.size())));
    }
    let mu = ProbabilityVector::new(std::slice::from_raw_parts(mu, len).to_vec())?;
    let nu = ProbabilityVector::new(std::slice::from_raw_parts(nu, len).to_vec())?;
    Ok((space, mu, nu))
}

/// Wasserstein-1 distance. `plan` may be null, otherwise it receives the
/// row-major `len × len` optimal coupling.
///
/// # Safety
/// `mu`, `nu` must hold `len` doubles and `plan` (if not null) `len * len`.
#[no_mangle]
pub unsafe extern "C" fn nck_wasserstein(
    space: *const NckCostSpace,
    mu: *const f64,
    nu: *const f64,
    len: usize,
    plan: *mut f64,
    value: *mut f64,
) -> NckStatus {
    if space.is_null() || mu.is_null() || nu.is_null() || value.is_null() {
        return null_error("nck_wasserstein");
    }
    guard(|| {
        let (s, mu, nu) = marginals(space, mu, nu, len)?;
        let p = wasserstein_primal(s, &mu, &nu)?;
        *value = p.value;
        if !plan.is_null() {
            let dst = std::slice::from_raw_parts_mut(plan, len * len);
            dst.fill(0.0);
            for (i, row) in p.plan.iter().enumerate() {
                dst[i * len..(i + 1) * len].copy_from_slice(row);
            }
        }
        Ok(if p.value.is_infinite() { NckStatus::Infeasible } else { NckStatus::Ok })
    })
}

/// Kantorovich dual value and potential. On non-metric spaces
/// `target_potential` (if not null) receives the second potential; on metric
/// spaces it is filled with the negated potential.
///
/// # Safety
/// `mu`, `nu` must hold `len` doubles; `potential` and `target_potential`
/// must be null or hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nck_kantorovich_dual(
    space: *const NckCostSpace,
    mu: *const f64,
    nu: *const f64,
    len: usize,
    potential: *mut f64,
    target_potential: *mut f64,
    value: *mut f64,
) -> NckStatus {
    if space.is_null() || mu.is_null() || nu.is_null() || value.is_null() {
        return null_error("nck_kantorovich_dual");
    }
    guard(|| {
        let (s, mu, nu) = marginals(space, mu, nu, len)?;
        let w = kantorovich_dual(s, &mu, &nu)?;
        *value = w.value;
        if w.value.is_infinite() {
            return Ok(NckStatus::Infeasible);
        }
        if !potential.is_null() {
            std::slice::from_raw_parts_mut(potential, len).copy_from_slice(&w.potential);
        }
        if !target_potential.is_null() {
            let dst = std::slice::from_raw_parts_mut(target_potential, len);
            match &w.target_potential {
                Some(v) => dst.copy_from_slice(v),
                None => dst.iter_mut().zip(&w.potential).for_each(|(d, f)| *d = -f),
            }
        }
        Ok(NckStatus::Ok)
    })
}

/// Moyal-ball cost between Bloch points `p[3]` and `q[3]`.
///
/// # Safety
/// `p`, `q` must hold 3 doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn nck_moyal_ball_cost(p: *const f64, q: *const f64, theta: f64, out: *mut f64) -> NckStatus {
    if p.is_null() || q.is_null() || out.is_null() {
        return null_error("nck_moyal_ball_cost");
    }
    guard(|| {
        let point = |v: *const f64| {
            let s = std::slice::from_raw_parts(v, 3);
            BlochPoint::new(s[0], s[1], s[2])
        };
        *out = moyal_ball_cost(&point(p)?, &point(q)?, &MoyalCostParams::new(theta)?);
        Ok(NckStatus::Ok)
    })
}

/// Crossing cost `√(d² + inv_m²)` of the two-sheet model.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nck_two_sheet_cost(base_distance: f64, inv_m: f64, out: *mut f64) -> NckStatus {
    if out.is_null() {
        return null_error("nck_two_sheet_cost");
    }
    guard(|| {
        *out = two_sheet_cost(base_distance, inv_m)?;
        Ok(NckStatus::Ok)
    })
}
