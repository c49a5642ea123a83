//! C ABI for `picard-afem`.
//!
//! Meshes and traces are opaque heap handles released with their `*_free`
//! function. Every fallible call returns a [`PafStatus`]; on failure the
//! message is available from [`paf_last_error_message`] on the same thread.
//! Output parameters are only written on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use picard_afem::bench::{zshape, ProblemKind, ProblemSpec};
use picard_afem::{
    fit_rate, AdaptiveTrace, DriverConfig, DriverError, MeshError, PicardConfig, RateAxis, Termination, Triangulation,
};
use thiserror::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PafStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Mesh = 4,
    Solver = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PafProblem {
    ZshapeKnown = 0,
    ZshapeUnknown = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PafTermination {
    BudgetReached = 0,
    LuckyBreakdown = 1,
    PicardNontermination = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PafRateAxis {
    Elements = 0,
    Dofs = 1,
    Work = 2,
}

/// Adaptive loop parameters. A zero `max_elements` or `max_levels` means no limit.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PafDriverConfig {
    pub theta: f64,
    pub lambda: f64,
    pub nested: bool,
    pub max_dofs: usize,
    pub max_elements: usize,
    pub max_levels: usize,
    pub max_picard_iterations: usize,
}

/// One level of an adaptive run; `h1_error` is NaN when the exact solution is unknown.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PafLevelRecord {
    pub level: usize,
    pub n_elements: usize,
    pub n_dofs: usize,
    pub estimator: f64,
    pub picard_count: usize,
    pub h1_error: f64,
    pub cum_work: u64,
}

/// Opaque triangulation handle.
pub struct PafMesh {
    mesh: Triangulation,
}

/// Opaque adaptive trace handle.
pub struct PafTrace {
    trace: AdaptiveTrace,
}

#[derive(Debug, Error)]
enum FfiError {
    #[error("null pointer passed as {0}")]
    Null(&'static str),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FfiError {
    fn status(&self) -> PafStatus {
        match self {
            FfiError::Null(_) => PafStatus::NullPointer,
            FfiError::Invalid(_) => PafStatus::InvalidArgument,
            FfiError::Mesh(MeshError::Io(_)) | FfiError::Io(_) | FfiError::Driver(DriverError::Io(_)) => PafStatus::Io,
            FfiError::Mesh(_) => PafStatus::Mesh,
            FfiError::Driver(DriverError::Config(_)) => PafStatus::InvalidArgument,
            FfiError::Driver(_) => PafStatus::Solver,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), FfiError>) -> PafStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PafStatus::Ok
        }
        Ok(Err(e)) => {
            set_last_error(e.to_string());
            e.status()
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            PafStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, FfiError> {
    p.as_ref().ok_or(FfiError::Null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &'static str) -> Result<(), FfiError> {
    if out.is_null() {
        return Err(FfiError::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn path_arg(path: *const c_char) -> Result<String, FfiError> {
    if path.is_null() {
        return Err(FfiError::Null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| FfiError::Invalid("path is not valid UTF-8".into()))
}

fn problem_kind(p: PafProblem) -> ProblemKind {
    match p {
        PafProblem::ZshapeKnown => ProblemKind::ZshapeKnown,
        PafProblem::ZshapeUnknown => ProblemKind::ZshapeUnknown,
    }
}

fn nonzero(v: usize) -> Option<usize> {
    (v > 0).then_some(v)
}

/// Message of the last failed call on this thread, or NULL after a successful call.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn paf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn paf_driver_config_default() -> PafDriverConfig {
    let d = DriverConfig::default();
    PafDriverConfig {
        theta: d.theta,
        lambda: d.lambda,
        nested: d.nested,
        max_dofs: d.max_dofs,
        max_elements: d.max_elements.unwrap_or(0),
        max_levels: d.max_levels.unwrap_or(0),
        max_picard_iterations: d.picard.max_iter,
    }
}

/// The built-in Z-shaped initial mesh; `neumann_corner` tags the edges at the reentrant corner as Neumann.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn paf_mesh_zshape(neumann_corner: bool, out: *mut *mut PafMesh) -> PafStatus {
    guard(|| {
        let h = Box::into_raw(Box::new(PafMesh { mesh: zshape(neumann_corner) }));
        write_out(out, h, "out").inspect_err(|_| drop(Box::from_raw(h)))
    })
}

/// Reads a mesh in the plain-text mesh format.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn paf_mesh_read(path: *const c_char, out: *mut *mut PafMesh) -> PafStatus {
    guard(|| {
        if out.is_null() {
            return Err(FfiError::Null("out"));
        }
        let mesh = Triangulation::read_file(path_arg(path)?)?;
        out.write(Box::into_raw(Box::new(PafMesh { mesh })));
        Ok(())
    })
}

/// # Safety
/// `mesh` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn paf_mesh_write(mesh: *const PafMesh, path: *const c_char) -> PafStatus {
    guard(|| {
        let m = as_ref(mesh, "mesh")?;
        m.mesh.write_file(path_arg(path)?)?;
        Ok(())
    })
}

/// Newest vertex bisection of the `n_marked` elements in `marked`, with closure.
///
/// # Safety
/// `mesh` must be a live handle, `marked` must point to `n_marked` ids (or be NULL when `n_marked` is 0)
/// and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn paf_mesh_refine(
    mesh: *const PafMesh,
    marked: *const usize,
    n_marked: usize,
    out: *mut *mut PafMesh,
) -> PafStatus {
    guard(|| {
        let m = as_ref(mesh, "mesh")?;
        if out.is_null() {
            return Err(FfiError::Null("out"));
        }
        let ids: &[usize] = if n_marked == 0 {
            &[]
        } else if marked.is_null() {
            return Err(FfiError::Null("marked"));
        } else {
            std::slice::from_raw_parts(marked, n_marked)
        };
        let fine = m.mesh.refine(ids)?;
        out.write(Box::into_raw(Box::new(PafMesh { mesh: fine })));
        Ok(())
    })
}

/// # Safety
/// `mesh` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn paf_mesh_num_elements(mesh: *const PafMesh, out: *mut usize) -> PafStatus {
    guard(|| write_out(out, as_ref(mesh, "mesh")?.mesh.num_elements(), "out"))
}

/// # Safety
/// `mesh` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn paf_mesh_num_vertices(mesh: *const PafMesh, out: *mut usize) -> PafStatus {
    guard(|| write_out(out, as_ref(mesh, "mesh")?.mesh.num_vertices(), "out"))
}

/// # Safety
/// `mesh` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn paf_mesh_free(mesh: *mut PafMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Runs the adaptive algorithm for a built-in benchmark. `initial_mesh` may be NULL to
/// use the benchmark's own initial mesh; otherwise it must be a refinement of it.
///
/// # Safety
/// `config` and `out` must be valid pointers; `initial_mesh` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn paf_run_adaptive(
    problem: PafProblem,
    initial_mesh: *const PafMesh,
    config: *const PafDriverConfig,
    out: *mut *mut PafTrace,
) -> PafStatus {
    guard(|| {
        let c = as_ref(config, "config")?;
        if out.is_null() {
            return Err(FfiError::Null("out"));
        }
        let spec = ProblemSpec::new(problem_kind(problem));
        let spec = match initial_mesh.as_ref() {
            Some(m) if m.mesh.is_refinement_of(&spec.mesh) => ProblemSpec { mesh: m.mesh.clone(), ..spec },
            Some(_) => return Err(FfiError::Invalid("initial mesh is not a refinement of the benchmark mesh".into())),
            None => spec,
        };
        let cfg = DriverConfig {
            theta: c.theta,
            lambda: c.lambda,
            nested: c.nested,
            max_dofs: c.max_dofs,
            max_elements: nonzero(c.max_elements),
            max_levels: nonzero(c.max_levels),
            picard: PicardConfig { lambda: c.lambda, max_iter: c.max_picard_iterations, ..Default::default() },
            keep_solutions: false,
        };
        let trace = spec.run(&cfg)?;
        out.write(Box::into_raw(Box::new(PafTrace { trace })));
        Ok(())
    })
}

/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn paf_trace_len(trace: *const PafTrace, out: *mut usize) -> PafStatus {
    guard(|| write_out(out, as_ref(trace, "trace")?.trace.records.len(), "out"))
}

/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn paf_trace_record(trace: *const PafTrace, index: usize, out: *mut PafLevelRecord) -> PafStatus {
    guard(|| {
        let t = &as_ref(trace, "trace")?.trace;
        let r = t
            .records
            .get(index)
            .ok_or_else(|| FfiError::Invalid(format!("level {index} out of range ({} levels)", t.records.len())))?;
        let rec = PafLevelRecord {
            level: r.level,
            n_elements: r.n_elements,
            n_dofs: r.n_dofs,
            estimator: r.estimator,
            picard_count: r.picard_count,
            h1_error: r.h1_error.unwrap_or(f64::NAN),
            cum_work: r.cum_work,
        };
        write_out(out, rec, "out")
    })
}

/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn paf_trace_termination(trace: *const PafTrace, out: *mut PafTermination) -> PafStatus {
    guard(|| {
        let t = match as_ref(trace, "trace")?.trace.termination {
            Termination::BudgetReached => PafTermination::BudgetReached,
            Termination::LuckyBreakdown => PafTermination::LuckyBreakdown,
            Termination::PicardNontermination => PafTermination::PicardNontermination,
        };
        write_out(out, t, "out")
    })
}

/// Fitted estimator rate `s` in `η ≈ C x^{−s}` over the trailing `window` fraction of levels.
///
/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn paf_trace_rate(
    trace: *const PafTrace,
    axis: PafRateAxis,
    window: f64,
    out: *mut f64,
) -> PafStatus {
    guard(|| {
        let t = &as_ref(trace, "trace")?.trace;
        let axis = match axis {
            PafRateAxis::Elements => RateAxis::Elements,
            PafRateAxis::Dofs => RateAxis::Dofs,
            PafRateAxis::Work => RateAxis::Work,
        };
        write_out(out, fit_rate(t, axis, window)?, "out")
    })
}

/// Writes the trace as CSV with the header `level,n_elements,n_dofs,estimator,picard_count,h1_error,cum_work`.
///
/// # Safety
/// `trace` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn paf_trace_write_csv(trace: *const PafTrace, path: *const c_char) -> PafStatus {
    guard(|| {
        let t = &as_ref(trace, "trace")?.trace;
        let f = File::create(path_arg(path)?)?;
        t.write_csv(BufWriter::new(f))?;
        Ok(())
    })
}

/// # Safety
/// `trace` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn paf_trace_free(trace: *mut PafTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}
