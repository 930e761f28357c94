//! C ABI for the periodic heat solver.
//!
//! Objects are opaque handles created by `ph_*_new*` functions and released
//! with the matching `ph_*_free`. Every fallible function returns a
//! [`PhStatus`]; on failure a description is available from
//! [`ph_last_error_message`] on the same thread. No function unwinds across
//! the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use periodic_heat::bounds::{bound_report, kappa1_checked, BoundInputs};
use periodic_heat::fem::assemble;
use periodic_heat::linalg::SpdMatrix;
use periodic_heat::periodic::{
    FieldForcing, Forcing, FullDiscreteSolution, SemidiscreteSystem, TimeGrid, TimeQuadrature,
    DEFAULT_TIME_QUAD_ORDER,
};
use periodic_heat::Error;

/// Result codes. `PH_STATUS_OK` is zero; everything else is a failure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotPositiveDefinite = 4,
    EigenNoConvergence = 5,
    ExpOverflow = 6,
    NonContraction = 7,
    KappaNotContractive = 8,
    KappaMismatch = 9,
    ForcingEvaluation = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// Space-time forcing `f(x, t)` on `(0, 1)`. Must return a finite value.
pub type PhFieldFn = Option<unsafe extern "C" fn(x: f64, t: f64, user_data: *mut c_void) -> f64>;

/// Writes the load vector at time `t` into `out[0..dim]`. Returns 0 on
/// success and nonzero on failure.
pub type PhLoadFn =
    Option<unsafe extern "C" fn(t: f64, out: *mut f64, dim: usize, user_data: *mut c_void) -> c_int>;

struct FieldCallback {
    f: unsafe extern "C" fn(f64, f64, *mut c_void) -> f64,
    user_data: *mut c_void,
}

impl FieldCallback {
    fn call(&self, x: f64, t: f64) -> f64 {
        // SAFETY: the caller of ph_solver_new_1d promised a valid callback and
        // user pointer for the solver's lifetime.
        unsafe { (self.f)(x, t, self.user_data) }
    }
}

struct LoadCallback {
    f: unsafe extern "C" fn(f64, *mut f64, usize, *mut c_void) -> c_int,
    user_data: *mut c_void,
}

impl Forcing for LoadCallback {
    fn load(&self, t: f64, out: &mut [f64]) -> periodic_heat::Result<()> {
        // SAFETY: as above; `out` is a valid buffer of `out.len()` doubles.
        let rc = unsafe { (self.f)(t, out.as_mut_ptr(), out.len(), self.user_data) };
        if rc != 0 || out.iter().any(|v| !v.is_finite()) {
            return Err(Error::LoadEvaluation { t });
        }
        Ok(())
    }
}

type FieldSystem = SemidiscreteSystem<FieldForcing<Box<dyn Fn(f64, f64) -> f64>>>;

enum System {
    Field(FieldSystem),
    Matrices(SemidiscreteSystem<LoadCallback>),
}

/// Opaque solver handle.
pub struct PhSolver {
    system: System,
}

/// Opaque handle to a sampled periodic trajectory.
pub struct PhSolution {
    solution: FullDiscreteSolution,
}

/// Inputs of the a priori bounds.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PhBoundInputs {
    pub nu: f64,
    pub period: f64,
    pub lambda1: f64,
    pub c_p: f64,
    pub c_omega: f64,
    pub c_inv: f64,
    pub c_j: f64,
    pub f_norm: f64,
}

/// A priori bound constants and values. All values are plain floating point,
/// without rigorous rounding control.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PhBoundReport {
    pub kappa1: f64,
    pub k1: f64,
    pub k2: f64,
    pub h1_bound: f64,
    pub l2_bound: f64,
    pub u0_l2_a: f64,
    pub u0_l2_b: f64,
    pub u0_grad: f64,
    pub ut_norm: f64,
    pub energy: f64,
    /// Nonzero when `exp(-nu lambda1 T)` underflowed and was treated as zero.
    pub underflow_clamped: c_int,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PhStatus {
    match err {
        Error::InvalidArgument(_) | Error::Config(_) | Error::Io { .. } => PhStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => PhStatus::DimensionMismatch,
        Error::NotPositiveDefinite { .. } => PhStatus::NotPositiveDefinite,
        Error::EigenNoConvergence { .. } => PhStatus::EigenNoConvergence,
        Error::ExpOverflow { .. } => PhStatus::ExpOverflow,
        Error::NonContraction { .. } => PhStatus::NonContraction,
        Error::KappaNotContractive(_) => PhStatus::KappaNotContractive,
        Error::KappaMismatch { .. } => PhStatus::KappaMismatch,
        Error::ForcingEvaluation { .. } | Error::LoadEvaluation { .. } => PhStatus::ForcingEvaluation,
        Error::Study { source, .. } => status_of(source),
    }
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), (PhStatus, String)>) -> PhStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PhStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            PhStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (PhStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PhStatus, String) {
    (PhStatus::NullPointer, format!("{what} is null"))
}

impl PhSolver {
    fn dim(&self) -> usize {
        match &self.system {
            System::Field(s) => s.dim(),
            System::Matrices(s) => s.dim(),
        }
    }

    fn kappa1(&self) -> periodic_heat::Result<f64> {
        match &self.system {
            System::Field(s) => kappa1_checked(s.mass(), s.stiffness(), s.decomp(), s.nu(), s.period()),
            System::Matrices(s) => kappa1_checked(s.mass(), s.stiffness(), s.decomp(), s.nu(), s.period()),
        }
    }

    fn solve(&self, grid: &TimeGrid, quad: &TimeQuadrature) -> periodic_heat::Result<FullDiscreteSolution> {
        match &self.system {
            System::Field(s) => s.solve_periodic(grid, quad),
            System::Matrices(s) => s.solve_periodic(grid, quad),
        }
    }

    fn period(&self) -> f64 {
        match &self.system {
            System::Field(s) => s.period(),
            System::Matrices(s) => s.period(),
        }
    }
}

/// Creates a solver for `n_elements` uniform P1 elements on `(0, 1)`.
///
/// `quad_order` is the Gauss–Legendre order used for the load vectors (0
/// selects the default). `f` and `user_data` must stay valid until the
/// solver is freed.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ph_solver_new_1d(
    n_elements: usize,
    nu: f64,
    period: f64,
    f: PhFieldFn,
    user_data: *mut c_void,
    quad_order: usize,
    out: *mut *mut PhSolver,
) -> PhStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null above.
        unsafe { *out = ptr::null_mut() };
        let f = f.ok_or_else(|| null("f"))?;
        let cb = FieldCallback { f, user_data };
        let field: Box<dyn Fn(f64, f64) -> f64> = Box::new(move |x, t| cb.call(x, t));
        let fem = assemble(n_elements).map_err(lib_err)?;
        let order = if quad_order == 0 { periodic_heat::fem::DEFAULT_SPACE_QUAD_ORDER } else { quad_order };
        let system = SemidiscreteSystem::with_space_quad_order(&fem, nu, period, field, order).map_err(lib_err)?;
        let handle = Box::new(PhSolver { system: System::Field(system) });
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(handle) };
        Ok(())
    })
}

/// Creates a solver from an externally assembled symmetric positive definite
/// pair. `mass` and `stiffness` are `dim * dim` row-major arrays and are
/// copied. `load` and `user_data` must stay valid until the solver is freed.
///
/// # Safety
/// `mass` and `stiffness` must point to `dim * dim` readable doubles; `out`
/// must be valid for one handle.
#[no_mangle]
pub unsafe extern "C" fn ph_solver_new_matrices(
    dim: usize,
    mass: *const f64,
    stiffness: *const f64,
    nu: f64,
    period: f64,
    load: PhLoadFn,
    user_data: *mut c_void,
    out: *mut *mut PhSolver,
) -> PhStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null above.
        unsafe { *out = ptr::null_mut() };
        if mass.is_null() || stiffness.is_null() {
            return Err(null("matrix pointer"));
        }
        let f = load.ok_or_else(|| null("load"))?;
        if dim == 0 {
            return Err((PhStatus::InvalidArgument, "dim must be positive".into()));
        }
        let len = dim.checked_mul(dim).ok_or((PhStatus::InvalidArgument, "dim too large".into()))?;
        // SAFETY: the caller guarantees `len` readable doubles at each pointer.
        let (m, k) = unsafe { (std::slice::from_raw_parts(mass, len), std::slice::from_raw_parts(stiffness, len)) };
        let mass = SpdMatrix::new(nalgebra::DMatrix::from_row_slice(dim, dim, m)).map_err(lib_err)?;
        let stiffness = SpdMatrix::new(nalgebra::DMatrix::from_row_slice(dim, dim, k)).map_err(lib_err)?;
        let system = SemidiscreteSystem::from_matrices(mass, stiffness, nu, period, LoadCallback { f, user_data })
            .map_err(lib_err)?;
        let handle = Box::new(PhSolver { system: System::Matrices(system) });
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(handle) };
        Ok(())
    })
}

/// Releases a solver. Null is ignored.
///
/// # Safety
/// `solver` must be null or a handle from a `ph_solver_new*` function that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ph_solver_free(solver: *mut PhSolver) {
    if !solver.is_null() {
        // SAFETY: see the function contract.
        drop(unsafe { Box::from_raw(solver) });
    }
}

/// Number of unknowns, or 0 for a null handle.
///
/// # Safety
/// `solver` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ph_solver_dim(solver: *const PhSolver) -> usize {
    // SAFETY: see the function contract.
    unsafe { solver.as_ref() }.map_or(0, PhSolver::dim)
}

/// Contraction factor of the discrete period map in the energy norm.
///
/// # Safety
/// `solver` must be a live handle and `out` valid for one double.
#[no_mangle]
pub unsafe extern "C" fn ph_solver_kappa1(solver: *const PhSolver, out: *mut f64) -> PhStatus {
    guard(|| {
        // SAFETY: see the function contract.
        let solver = unsafe { solver.as_ref() }.ok_or_else(|| null("solver"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let k = solver.kappa1().map_err(lib_err)?;
        // SAFETY: checked non-null above.
        unsafe { *out = k };
        Ok(())
    })
}

/// Samples the periodic solution at `t_j = j T / m`, `j = 0..=m`.
///
/// The forcing integrals use `panels` composite Gauss–Legendre panels of
/// order `quad_order`; 0 selects the defaults (`m` panels, order 5).
/// `panels` must be a multiple of `m`.
///
/// # Safety
/// `solver` must be a live handle and `out` valid for one handle.
#[no_mangle]
pub unsafe extern "C" fn ph_solver_solve(
    solver: *const PhSolver,
    m: usize,
    quad_order: usize,
    panels: usize,
    out: *mut *mut PhSolution,
) -> PhStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null above.
        unsafe { *out = ptr::null_mut() };
        // SAFETY: see the function contract.
        let solver = unsafe { solver.as_ref() }.ok_or_else(|| null("solver"))?;
        let grid = TimeGrid::new(m, solver.period()).map_err(lib_err)?;
        let order = if quad_order == 0 { DEFAULT_TIME_QUAD_ORDER } else { quad_order };
        let quad = TimeQuadrature::new(order, if panels == 0 { m } else { panels }).map_err(lib_err)?;
        let solution = solver.solve(&grid, &quad).map_err(lib_err)?;
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(Box::new(PhSolution { solution })) };
        Ok(())
    })
}

/// Releases a solution. Null is ignored.
///
/// # Safety
/// `solution` must be null or a live handle from [`ph_solver_solve`].
#[no_mangle]
pub unsafe extern "C" fn ph_solution_free(solution: *mut PhSolution) {
    if !solution.is_null() {
        // SAFETY: see the function contract.
        drop(unsafe { Box::from_raw(solution) });
    }
}

/// Number of unknowns and number of time samples (`m + 1`).
///
/// # Safety
/// `solution` must be a live handle; `dim` and `samples` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn ph_solution_shape(solution: *const PhSolution, dim: *mut usize, samples: *mut usize) -> PhStatus {
    guard(|| {
        // SAFETY: see the function contract.
        let s = unsafe { solution.as_ref() }.ok_or_else(|| null("solution"))?;
        if dim.is_null() || samples.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null above.
        unsafe {
            *dim = s.solution.coeffs.nrows();
            *samples = s.solution.coeffs.ncols();
        }
        Ok(())
    })
}

/// Copies the coefficients into `buf`, one time sample after another:
/// `buf[j * dim + i]` is unknown `i` at `t_j`. `len` is the capacity of
/// `buf` in doubles and must be at least `dim * samples`.
///
/// # Safety
/// `solution` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ph_solution_coeffs(solution: *const PhSolution, buf: *mut f64, len: usize) -> PhStatus {
    guard(|| {
        // SAFETY: see the function contract.
        let s = unsafe { solution.as_ref() }.ok_or_else(|| null("solution"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        // nalgebra storage is column-major, which is exactly this layout.
        let data = s.solution.coeffs.as_slice();
        if len < data.len() {
            return Err((PhStatus::BufferTooSmall, format!("need {} doubles, got {len}", data.len())));
        }
        // SAFETY: `buf` holds at least `data.len()` doubles.
        unsafe { ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len()) };
        Ok(())
    })
}

/// Evaluates the a priori bounds for the given inputs and contraction factor.
///
/// # Safety
/// `inputs` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ph_bounds(inputs: *const PhBoundInputs, kappa1: f64, out: *mut PhBoundReport) -> PhStatus {
    guard(|| {
        // SAFETY: see the function contract.
        let i = unsafe { inputs.as_ref() }.ok_or_else(|| null("inputs"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let input = BoundInputs {
            nu: i.nu,
            period: i.period,
            lambda1: i.lambda1,
            c_p: i.c_p,
            c_omega: i.c_omega,
            c_inv: i.c_inv,
            c_j: i.c_j,
            f_norm: i.f_norm,
        };
        let r = bound_report(&input, kappa1).map_err(lib_err)?;
        let report = PhBoundReport {
            kappa1: r.kappa1,
            k1: r.k1,
            k2: r.k2,
            h1_bound: r.h1_bound,
            l2_bound: r.l2_bound,
            u0_l2_a: r.continuous.u0_l2_a,
            u0_l2_b: r.continuous.u0_l2_b,
            u0_grad: r.continuous.u0_grad,
            ut_norm: r.continuous.ut_norm,
            energy: r.continuous.energy,
            underflow_clamped: c_int::from(r.underflow_clamped),
        };
        // SAFETY: checked non-null above.
        unsafe { *out = report };
        Ok(())
    })
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn ph_status_message(status: PhStatus) -> *const c_char {
    let s: &'static CStr = match status {
        PhStatus::Ok => c"ok",
        PhStatus::NullPointer => c"null pointer argument",
        PhStatus::InvalidArgument => c"invalid argument",
        PhStatus::DimensionMismatch => c"dimension mismatch",
        PhStatus::NotPositiveDefinite => c"matrix is not positive definite",
        PhStatus::EigenNoConvergence => c"eigensolver did not converge",
        PhStatus::ExpOverflow => c"matrix exponential overflow",
        PhStatus::NonContraction => c"period map is not a contraction",
        PhStatus::KappaNotContractive => c"kappa1 is not below 1",
        PhStatus::KappaMismatch => c"kappa1 cross-check failed",
        PhStatus::ForcingEvaluation => c"forcing evaluation failed",
        PhStatus::BufferTooSmall => c"buffer too small",
        PhStatus::Panic => c"internal error",
    };
    s.as_ptr()
}

/// Message of the most recent failure on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ph_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
