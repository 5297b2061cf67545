//! C interface to the `pmlde` solver.
//!
//! A simulation lives behind an opaque `PmldeSimulation` handle. Every call
//! returns a `PmldeStatus`; on failure the message is available from
//! `pmlde_last_error_message` on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pmlde::config::parse_config;
use pmlde::driver::Simulation;
use pmlde::io::EnergyRow;
use pmlde::{presets, Error};

/// Opaque simulation handle.
pub struct PmldeSimulation {
    sim: Simulation,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PmldeStatus {
    Ok = 0,
    InvalidArgument = 1,
    Config = 2,
    Solver = 3,
    Geometry = 4,
    Io = 5,
    Panic = 6,
}

/// One row of the energy ledger.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PmldeEnergyRow {
    pub n: u64,
    pub t: f64,
    pub e_embed: f64,
    pub dissipation: f64,
    pub remainder: f64,
    pub residual: f64,
    pub e_phys_level0: f64,
    pub e_phys_all: f64,
    pub solver_iters: u64,
}

impl From<EnergyRow> for PmldeEnergyRow {
    fn from(r: EnergyRow) -> Self {
        Self {
            n: r.n,
            t: r.t,
            e_embed: r.e_embed,
            dissipation: r.d,
            remainder: r.r,
            residual: r.residual,
            e_phys_level0: r.e_phys_level0,
            e_phys_all: r.e_phys_all,
            solver_iters: r.solver_iters as u64,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PmldeStatus {
    match e {
        Error::InvalidArgument(_) => PmldeStatus::InvalidArgument,
        Error::Config(_) | Error::OutOfDomain { .. } => PmldeStatus::Config,
        Error::SolverDivergence { .. } => PmldeStatus::Solver,
        Error::GeometryEscape { .. } | Error::UnsupportedMotion(_) => PmldeStatus::Geometry,
        Error::Format { .. } | Error::Io { .. } => PmldeStatus::Io,
    }
}

fn invalid(msg: &str) -> PmldeStatus {
    set_error(msg.to_string());
    PmldeStatus::InvalidArgument
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), PmldeStatus>) -> PmldeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PmldeStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            PmldeStatus::Panic
        }
    }
}

fn lift<T>(r: pmlde::Result<T>) -> Result<T, PmldeStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, PmldeStatus> {
    if p.is_null() {
        return Err(invalid("null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid("string argument is not UTF-8"))
}

unsafe fn handle<'a>(h: *const PmldeSimulation) -> Result<&'a PmldeSimulation, PmldeStatus> {
    h.as_ref().ok_or_else(|| invalid("null simulation handle"))
}

unsafe fn handle_mut<'a>(h: *mut PmldeSimulation) -> Result<&'a mut PmldeSimulation, PmldeStatus> {
    h.as_mut().ok_or_else(|| invalid("null simulation handle"))
}

unsafe fn store(out: *mut *mut PmldeSimulation, sim: Simulation) -> Result<(), PmldeStatus> {
    *out = Box::into_raw(Box::new(PmldeSimulation { sim }));
    Ok(())
}

/// Creates a simulation from a shipped preset name.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pmlde_simulation_from_preset(name: *const c_char, out: *mut *mut PmldeSimulation) -> PmldeStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("null output pointer"));
        }
        *out = ptr::null_mut();
        let name = read_str(name)?;
        let cfg = presets::preset(name).ok_or_else(|| {
            set_error(format!("unknown preset {name:?}"));
            PmldeStatus::Config
        })?;
        store(out, lift(Simulation::new(cfg))?)
    })
}

/// Creates a simulation from TOML configuration text.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pmlde_simulation_from_toml(toml: *const c_char, out: *mut *mut PmldeSimulation) -> PmldeStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("null output pointer"));
        }
        *out = ptr::null_mut();
        let cfg = lift(parse_config(read_str(toml)?))?;
        store(out, lift(Simulation::new(cfg))?)
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `sim` must come from one of the constructors and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pmlde_simulation_free(sim: *mut PmldeSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances one step; `row` may be null.
///
/// # Safety
/// `sim` must be a live handle; `row`, when non-null, must be writable.
#[no_mangle]
pub unsafe extern "C" fn pmlde_simulation_step(sim: *mut PmldeSimulation, row: *mut PmldeEnergyRow) -> PmldeStatus {
    guard(|| {
        let h = handle_mut(sim)?;
        let r = lift(h.sim.step())?;
        if !row.is_null() {
            *row = r.into();
        }
        Ok(())
    })
}

/// Advances until the configured end time.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pmlde_simulation_run(sim: *mut PmldeSimulation) -> PmldeStatus {
    guard(|| lift(handle_mut(sim)?.sim.run(None)))
}

/// Current simulated time and step index.
///
/// # Safety
/// `sim` must be a live handle; `t` and `n` may be null.
#[no_mangle]
pub unsafe extern "C" fn pmlde_simulation_time(sim: *const PmldeSimulation, t: *mut f64, n: *mut u64) -> PmldeStatus {
    guard(|| {
        let h = handle(sim)?;
        if !t.is_null() {
            *t = h.sim.time();
        }
        if !n.is_null() {
            *n = h.sim.step_index();
        }
        Ok(())
    })
}

/// Writes 1 to `done` once the end time is reached, else 0.
///
/// # Safety
/// `sim` must be a live handle and `done` writable.
#[no_mangle]
pub unsafe extern "C" fn pmlde_simulation_is_done(sim: *const PmldeSimulation, done: *mut i32) -> PmldeStatus {
    guard(|| {
        let h = handle(sim)?;
        if done.is_null() {
            return Err(invalid("null output pointer"));
        }
        *done = i32::from(h.sim.is_done());
        Ok(())
    })
}

/// Base grid size and number of refinement levels currently in use.
///
/// # Safety
/// `sim` must be a live handle; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn pmlde_simulation_dims(
    sim: *const PmldeSimulation,
    nx: *mut usize,
    ny: *mut usize,
    levels: *mut usize,
) -> PmldeStatus {
    guard(|| {
        let h = handle(sim)?;
        let g = h.sim.hierarchy.base();
        for (p, v) in [(nx, g.nx), (ny, g.ny), (levels, h.sim.hierarchy.n_levels())] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Copies the base-level pressure, row-major with `x` fastest, into `buf`.
///
/// # Safety
/// `sim` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pmlde_simulation_copy_pressure(sim: *const PmldeSimulation, buf: *mut f64, len: usize) -> PmldeStatus {
    guard(|| {
        let h = handle(sim)?;
        let p = &h.sim.hierarchy.levels[0].state.p_curr.data;
        if buf.is_null() || len != p.len() {
            return Err(invalid(&format!("buffer must hold exactly {} values", p.len())));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(p);
        Ok(())
    })
}

/// Last ledger row; fails before the first step.
///
/// # Safety
/// `sim` must be a live handle and `row` writable.
#[no_mangle]
pub unsafe extern "C" fn pmlde_simulation_last_row(sim: *const PmldeSimulation, row: *mut PmldeEnergyRow) -> PmldeStatus {
    guard(|| {
        let h = handle(sim)?;
        if row.is_null() {
            return Err(invalid("null output pointer"));
        }
        let r = h.sim.ledger.last().ok_or_else(|| invalid("no step taken yet"))?;
        *row = (*r).into();
        Ok(())
    })
}

/// Writes a checkpoint file.
///
/// # Safety
/// `sim` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pmlde_simulation_save_checkpoint(sim: *const PmldeSimulation, path: *const c_char) -> PmldeStatus {
    guard(|| {
        let h = handle(sim)?;
        lift(h.sim.save_checkpoint(Path::new(read_str(path)?)))
    })
}

/// Indicator profile `1 / (exp(6 r / eps) + 1)`; NaN for non-positive `eps`.
#[no_mangle]
pub extern "C" fn pmlde_psi_eps(r: f64, eps: f64) -> f64 {
    if eps > 0.0 {
        pmlde::geometry::psi_eps(r, eps)
    } else {
        f64::NAN
    }
}

/// Message of the last failure on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn pmlde_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pmlde_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
