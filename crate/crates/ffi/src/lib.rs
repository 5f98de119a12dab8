//! C ABI for the `ips` simulator.
//!
//! Every fallible function returns an [`IpsStatus`]; on failure the message
//! is available from [`ips_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ips::coupling::coupled_run;
use ips::dynamics::{Recording, Simulation, Trajectory};
use ips::randomness::{ModelKind, ModelParams, PoissonField};
use ips::topology::{Graph, LatticeBox, Point};
use ips::tree_survival::{lambda_star, threshold_row, w_membership};
use ips::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IpsStatus {
    Ok = 0,
    NullPointer = 1,
    /// An argument is outside the domain of the operation.
    InvalidArgument = 2,
    Unsupported = 3,
    /// A pathwise invariant failed; indicates a bug.
    Invariant = 4,
    Io = 5,
    Other = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IpsModelKind {
    Rm = 0,
    Cp = 1,
    Rms = 2,
    Cps = 3,
}

/// Model rates; `gamma` is ignored without healing, `nu` without stirring.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct IpsModel {
    pub kind: IpsModelKind,
    pub lambda: f64,
    pub gamma: f64,
    pub nu: f64,
}

/// Threshold bounds on the `d`-ary tree for one stirring rate.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct IpsThresholdRow {
    pub d: u32,
    pub nu: f64,
    pub rms_lo: f64,
    pub rms_hi: f64,
    pub cps_lo: f64,
    pub cps_hi: f64,
    pub cps_weak_hi: f64,
    pub in_w: bool,
}

/// A box `{-R..R}^d`.
pub struct IpsLattice {
    graph: LatticeBox,
}

/// The outcome of one run.
pub struct IpsTrajectory {
    dim: usize,
    traj: Trajectory<Point>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IpsStatus {
    match e {
        Error::Domain(_) | Error::Config(_) => IpsStatus::InvalidArgument,
        Error::Unsupported(_) => IpsStatus::Unsupported,
        Error::Invariant(_) => IpsStatus::Invariant,
        Error::Io(_) => IpsStatus::Io,
        _ => IpsStatus::Other,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), IpsStatus>>(f: F) -> IpsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IpsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            IpsStatus::Panic
        }
    }
}

fn check(r: ips::Result<()>) -> Result<(), IpsStatus> {
    r.map_err(|e| {
        let s = status_of(&e);
        set_error(e.to_string());
        s
    })
}

fn lift<T>(r: ips::Result<T>) -> Result<T, IpsStatus> {
    match r {
        Ok(v) => Ok(v),
        Err(e) => {
            let s = status_of(&e);
            set_error(e.to_string());
            Err(s)
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), IpsStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        Err(IpsStatus::NullPointer)
    } else {
        Ok(())
    }
}

fn params_of(m: &IpsModel) -> Result<ModelParams, IpsStatus> {
    let p = match m.kind {
        IpsModelKind::Rm => ModelParams::rm(m.lambda),
        IpsModelKind::Cp => ModelParams::cp(m.lambda, m.gamma),
        IpsModelKind::Rms => ModelParams::rms_with(m.lambda, m.nu),
        IpsModelKind::Cps => ModelParams::cps(m.lambda, m.gamma, m.nu),
    };
    check(p.validate())?;
    Ok(p)
}

unsafe fn read_sites(graph: &LatticeBox, coords: *const i32, n: usize) -> Result<Vec<Point>, IpsStatus> {
    if n == 0 {
        return Ok(vec![Point::origin()]);
    }
    non_null(coords, "initial coordinates")?;
    let d = graph.dim();
    let flat = std::slice::from_raw_parts(coords, n * d);
    let sites: Vec<Point> = flat.chunks(d).map(Point::new).collect();
    if let Some(bad) = sites.iter().find(|&&p| !graph.contains(p)) {
        set_error(format!("initial site {} is outside the box", graph.format_site(*bad)));
        return Err(IpsStatus::InvalidArgument);
    }
    Ok(sites)
}

/// Last error message on this thread, or null. Valid until the next call
/// into the library from the same thread.
#[no_mangle]
pub extern "C" fn ips_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates the box `{-radius..radius}^d`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ips_lattice_new(d: u32, radius: u32, out: *mut *mut IpsLattice) -> IpsStatus {
    guard(|| {
        non_null(out, "out")?;
        let graph = lift(LatticeBox::new(d as usize, radius))?;
        *out = Box::into_raw(Box::new(IpsLattice { graph }));
        Ok(())
    })
}

/// # Safety
/// `lattice` must come from [`ips_lattice_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn ips_lattice_free(lattice: *mut IpsLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

/// Number of sites of the box, 0 for a null handle.
///
/// # Safety
/// `lattice` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ips_lattice_site_count(lattice: *const IpsLattice) -> usize {
    lattice.as_ref().map_or(0, |l| l.graph.dense_len().unwrap_or(0))
}

/// Runs one model from `n_initial` sites given as `n_initial * d`
/// row-major coordinates (the origin when `n_initial` is 0).
///
/// # Safety
/// Pointers must be valid; `initial` must hold `n_initial * d` integers.
#[no_mangle]
pub unsafe extern "C" fn ips_simulate(
    lattice: *const IpsLattice,
    model: *const IpsModel,
    initial: *const i32,
    n_initial: usize,
    horizon: f64,
    seed: u64,
    out: *mut *mut IpsTrajectory,
) -> IpsStatus {
    guard(|| {
        non_null(lattice, "lattice")?;
        non_null(model, "model")?;
        non_null(out, "out")?;
        let graph = &(*lattice).graph;
        let params = params_of(&*model)?;
        let init = read_sites(graph, initial, n_initial)?;
        let field = lift(PoissonField::new(graph, params, horizon, seed))?;
        let rec = Recording { deltas: false, hits: false, snapshots: vec![] };
        let traj = lift(Simulation::new(&field, &init).recording(rec).run(horizon))?;
        *out = Box::into_raw(Box::new(IpsTrajectory { dim: graph.dim(), traj }));
        Ok(())
    })
}

/// # Safety
/// `traj` must come from [`ips_simulate`] or be null.
#[no_mangle]
pub unsafe extern "C" fn ips_trajectory_free(traj: *mut IpsTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of infected sites at the end of the run.
///
/// # Safety
/// `traj` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ips_trajectory_final_size(traj: *const IpsTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.traj.final_config.len())
}

/// Copies the final infected sites as row-major coordinates into `coords`
/// (capacity `cap` integers) and stores the number of sites in `written`.
///
/// # Safety
/// `coords` must hold `cap` integers; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ips_trajectory_final_sites(
    traj: *const IpsTrajectory,
    coords: *mut i32,
    cap: usize,
    written: *mut usize,
) -> IpsStatus {
    guard(|| {
        non_null(traj, "trajectory")?;
        non_null(written, "written")?;
        let t = &*traj;
        let need = t.traj.final_config.len() * t.dim;
        if need > 0 {
            non_null(coords, "coords")?;
        }
        if cap < need {
            set_error(format!("buffer holds {cap} integers, {need} needed"));
            *written = 0;
            return Err(IpsStatus::InvalidArgument);
        }
        let buf = std::slice::from_raw_parts_mut(coords, need);
        for (chunk, p) in buf.chunks_mut(t.dim.max(1)).zip(&t.traj.final_config) {
            chunk.copy_from_slice(p.coords(t.dim));
        }
        *written = t.traj.final_config.len();
        Ok(())
    })
}

/// Extinction time, or a negative value if the process survived the run.
///
/// # Safety
/// `traj` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ips_trajectory_extinction(traj: *const IpsTrajectory) -> f64 {
    traj.as_ref().and_then(|t| t.traj.extinction).unwrap_or(-1.0)
}

/// Runs the coupled lower, middle and upper processes of a stirring model
/// from the origin and reports in `contained` whether they stayed nested.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ips_containment_check(
    lattice: *const IpsLattice,
    model: *const IpsModel,
    horizon: f64,
    seed: u64,
    contained: *mut bool,
) -> IpsStatus {
    guard(|| {
        non_null(lattice, "lattice")?;
        non_null(model, "model")?;
        non_null(contained, "contained")?;
        let graph = &(*lattice).graph;
        let params = params_of(&*model)?;
        if params.kind != ModelKind::RMS && params.kind != ModelKind::CPS {
            set_error(format!("coupling needs a stirring model, got {}", params.kind));
            return Err(IpsStatus::InvalidArgument);
        }
        let o = [graph.origin()];
        match coupled_run(graph, &o, &o, &o, params, horizon, seed) {
            Ok(_) => *contained = true,
            Err(Error::Invariant(m)) => {
                set_error(m);
                *contained = false;
            }
            Err(e) => return check(Err(e)),
        }
        Ok(())
    })
}

/// `(d+1)/(2√d) − 1`, or NaN for `d < 2`.
#[no_mangle]
pub extern "C" fn ips_tree_lambda_star(d: u32) -> f64 {
    if d < 2 {
        f64::NAN
    } else {
        lambda_star(d)
    }
}

/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ips_tree_threshold_row(d: u32, nu: f64, out: *mut IpsThresholdRow) -> IpsStatus {
    guard(|| {
        non_null(out, "out")?;
        let r = lift(threshold_row(d, nu))?;
        *out = IpsThresholdRow {
            d: r.d,
            nu: r.nu,
            rms_lo: r.rms_lo,
            rms_hi: r.rms_hi,
            cps_lo: r.cps_lo,
            cps_hi: r.cps_hi,
            cps_weak_hi: r.cps_weak_hi,
            in_w: r.in_w,
        };
        Ok(())
    })
}

/// Whether the CPS weak-survival upper bound falls below its
/// strong-survival lower bound at `(d, nu)`, i.e. `nu f(d) > 2√d`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ips_tree_in_w(d: u32, nu: f64, out: *mut bool) -> IpsStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = lift(w_membership(d, nu))?;
        Ok(())
    })
}
