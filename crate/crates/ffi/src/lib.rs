//! C ABI for dtncap.
//!
//! Every fallible function returns a [`DtnStatus`] and writes its result
//! through an out-pointer. On failure the message is available from
//! [`dtn_last_error`] on the same thread until the next failing call.
//! Handles are opaque; release them with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dtncap::bounds::{critical_capacity, upper_bound_speed, BoundQuery};
use dtncap::contacts::{contact_stream, ContactTrace};
use dtncap::dissemination::{run_epidemic_on_trace, verify_journeys, CapacityQuery, InformedLog};
use dtncap::meetings::{meeting_duration_pdf, meeting_duration_tail, Density};
use dtncap::{Error, ScenarioParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtnStatus {
    Ok = 0,
    /// A parameter violates a model invariant.
    Validation = 1,
    /// A numeric argument lies outside the function's domain.
    Domain = 2,
    /// A node or contact index is out of range.
    OutOfRange = 3,
    /// A recorded broadcast failed its journey check.
    Verification = 4,
    NullPointer = 5,
    /// Internal panic caught at the boundary.
    Panic = 6,
    Runtime = 7,
}

pub struct DtnScenario(ScenarioParams);

pub struct DtnTrace(ContactTrace);

pub struct DtnLog(InformedLog);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DtnBound {
    pub capacity_y: f64,
    pub gamma: f64,
    /// NaN when the bound is infinite.
    pub rho_star: f64,
    pub theta_star: f64,
    /// `+inf` when the bound is infinite.
    pub speed_upper: f64,
    pub finite: bool,
    /// `speed_upper * capacity_y`.
    pub capacity_product: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DtnContact {
    pub node_a: usize,
    pub node_b: usize,
    pub t_begin: f64,
    pub t_end: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DtnStatus {
    match e {
        Error::NodeOutOfRange { .. } => DtnStatus::OutOfRange,
        Error::Domain { .. } | Error::NonPositiveTime(_) | Error::KernelDomain { .. } => DtnStatus::Domain,
        e if e.is_validation() => DtnStatus::Validation,
        _ => DtnStatus::Runtime,
    }
}

fn fail(status: DtnStatus, msg: impl Into<String>) -> DtnStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> DtnStatus) -> DtnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            fail(DtnStatus::Panic, msg)
        }
    }
}

fn write<T>(out: *mut T, value: T) -> DtnStatus {
    if out.is_null() {
        return fail(DtnStatus::NullPointer, "null out-pointer");
    }
    // SAFETY: caller guarantees `out` is valid for writes when non-null.
    unsafe { out.write(value) };
    DtnStatus::Ok
}

fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, DtnStatus> {
    if p.is_null() {
        return Err(fail(DtnStatus::NullPointer, format!("null {what} handle")));
    }
    // SAFETY: non-null handles come from this library and are live until freed.
    Ok(unsafe { &*p })
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

fn lift<T>(r: dtncap::Result<T>) -> Result<T, DtnStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

/// Message of the last failure on this thread, or NULL. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn dtn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dtn_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains a nul byte"),
    };
    VERSION.as_ptr()
}

#[no_mangle]
pub extern "C" fn dtn_scenario_new(
    n: usize,
    side: f64,
    range: f64,
    rate: f64,
    speed: f64,
    tau: f64,
    out: *mut *mut DtnScenario,
) -> DtnStatus {
    guard(|| {
        let s = tri!(lift(ScenarioParams::new(n, side, range, rate, speed, tau)));
        write(out, Box::into_raw(Box::new(DtnScenario(s))))
    })
}

/// # Safety
/// `scenario` must be NULL or a handle from [`dtn_scenario_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dtn_scenario_free(scenario: *mut DtnScenario) {
    if !scenario.is_null() {
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// Mean number of nodes within range, `pi nu R^2`.
#[no_mangle]
pub extern "C" fn dtn_scenario_mean_degree(scenario: *const DtnScenario, out: *mut f64) -> DtnStatus {
    guard(|| {
        let s = tri!(handle(scenario, "scenario"));
        write(out, s.0.mean_degree())
    })
}

/// Speed upper bound for capacity `y`.
#[no_mangle]
pub extern "C" fn dtn_bound_speed(scenario: *const DtnScenario, y: f64, out: *mut DtnBound) -> DtnStatus {
    guard(|| {
        let s = tri!(handle(scenario, "scenario"));
        let q = tri!(lift(BoundQuery::new(s.0, y)));
        let b = upper_bound_speed(&q);
        write(
            out,
            DtnBound {
                capacity_y: b.capacity_y,
                gamma: b.gamma,
                rho_star: b.rho_star,
                theta_star: b.theta_star,
                speed_upper: b.speed_upper,
                finite: b.finite,
                capacity_product: b.capacity_product,
            },
        )
    })
}

/// Capacity below which the speed bound is infinite (0 when it never is).
#[no_mangle]
pub extern "C" fn dtn_critical_capacity(scenario: *const DtnScenario, out: *mut f64) -> DtnStatus {
    guard(|| {
        let s = tri!(handle(scenario, "scenario"));
        write(out, critical_capacity(&s.0))
    })
}

/// `P(T > t)` for straight-line motion.
#[no_mangle]
pub extern "C" fn dtn_meeting_duration_tail(t: f64, speed: f64, range: f64, out: *mut f64) -> DtnStatus {
    guard(|| {
        if !(t >= 0.0 && speed > 0.0 && range > 0.0) {
            return fail(DtnStatus::Domain, format!("need t >= 0, speed > 0, range > 0 (got {t}, {speed}, {range})"));
        }
        write(out, meeting_duration_tail(t, speed, range))
    })
}

/// Density of the meeting duration; `+inf` at the singular point `t = R/v`.
#[no_mangle]
pub extern "C" fn dtn_meeting_duration_pdf(t: f64, speed: f64, range: f64, out: *mut f64) -> DtnStatus {
    guard(|| {
        let d = tri!(lift(meeting_duration_pdf(t, speed, range)));
        write(
            out,
            match d {
                Density::Value(v) => v,
                Density::Singular => f64::INFINITY,
            },
        )
    })
}

/// Simulates one replication and records its contacts over `[0, horizon]`.
#[no_mangle]
pub extern "C" fn dtn_trace_new(
    scenario: *const DtnScenario,
    horizon: f64,
    seed: u64,
    replication: u32,
    out: *mut *mut DtnTrace,
) -> DtnStatus {
    guard(|| {
        let s = tri!(handle(scenario, "scenario"));
        if !(horizon.is_finite() && horizon > 0.0) {
            return fail(DtnStatus::Validation, format!("horizon must be finite and > 0 (got {horizon})"));
        }
        let trace = contact_stream(&s.0, horizon, seed, replication);
        write(out, Box::into_raw(Box::new(DtnTrace(trace))))
    })
}

/// # Safety
/// `trace` must be NULL or a handle from [`dtn_trace_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dtn_trace_free(trace: *mut DtnTrace) {
    if !trace.is_null() {
        drop(unsafe { Box::from_raw(trace) });
    }
}

#[no_mangle]
pub extern "C" fn dtn_trace_contact_count(trace: *const DtnTrace, out: *mut usize) -> DtnStatus {
    guard(|| {
        let t = tri!(handle(trace, "trace"));
        write(out, t.0.stream.len())
    })
}

/// Contact `index` in `(t_begin, node_a, node_b)` order.
#[no_mangle]
pub extern "C" fn dtn_trace_contact(trace: *const DtnTrace, index: usize, out: *mut DtnContact) -> DtnStatus {
    guard(|| {
        let t = tri!(handle(trace, "trace"));
        let Some(c) = t.0.stream.contacts.get(index) else {
            return fail(DtnStatus::OutOfRange, format!("contact {index} out of range ({})", t.0.stream.len()));
        };
        write(
            out,
            DtnContact {
                node_a: c.node_a,
                node_b: c.node_b,
                t_begin: c.t_begin,
                t_end: c.t_end,
            },
        )
    })
}

/// Capacity-constrained broadcast from `source` at `emit_time` over the trace.
#[no_mangle]
pub extern "C" fn dtn_epidemic_run(
    trace: *const DtnTrace,
    y: f64,
    source: usize,
    emit_time: f64,
    out: *mut *mut DtnLog,
) -> DtnStatus {
    guard(|| {
        let t = tri!(handle(trace, "trace"));
        let q = tri!(lift(CapacityQuery::for_scenario(&t.0.scenario, y, source, emit_time)));
        let log = tri!(lift(run_epidemic_on_trace(&t.0, &q)));
        write(out, Box::into_raw(Box::new(DtnLog(log))))
    })
}

/// # Safety
/// `log` must be NULL or a handle from [`dtn_epidemic_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dtn_log_free(log: *mut DtnLog) {
    if !log.is_null() {
        drop(unsafe { Box::from_raw(log) });
    }
}

#[no_mangle]
pub extern "C" fn dtn_log_informed_count(log: *const DtnLog, out: *mut usize) -> DtnStatus {
    guard(|| {
        let l = tri!(handle(log, "log"));
        write(out, l.0.informed_count())
    })
}

/// Informed time of `node`; `+inf` when never reached.
#[no_mangle]
pub extern "C" fn dtn_log_informed_time(log: *const DtnLog, node: usize, out: *mut f64) -> DtnStatus {
    guard(|| {
        let l = tri!(handle(log, "log"));
        match l.0.informed_time.get(node) {
            Some(&t) => write(out, t),
            None => fail(DtnStatus::OutOfRange, format!("node {node} out of range ({})", l.0.n())),
        }
    })
}

/// Distance from the source's emit position at which `node` was informed; NaN when never reached.
#[no_mangle]
pub extern "C" fn dtn_log_distance(log: *const DtnLog, node: usize, out: *mut f64) -> DtnStatus {
    guard(|| {
        let l = tri!(handle(log, "log"));
        match l.0.distance_from_origin.get(node) {
            Some(&d) => write(out, d),
            None => fail(DtnStatus::OutOfRange, format!("node {node} out of range ({})", l.0.n())),
        }
    })
}

/// Re-checks every journey in `log` against the contacts of `trace`.
#[no_mangle]
pub extern "C" fn dtn_log_verify(log: *const DtnLog, trace: *const DtnTrace) -> DtnStatus {
    guard(|| {
        let l = tri!(handle(log, "log"));
        let t = tri!(handle(trace, "trace"));
        match verify_journeys(&l.0, &t.0.stream, &l.0.query) {
            Ok(()) => DtnStatus::Ok,
            Err(v) => fail(DtnStatus::Verification, v.to_string()),
        }
    })
}
