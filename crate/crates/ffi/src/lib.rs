//! C ABI for the `vvlc-sim` channel simulator.
//!
//! Scenarios are opaque handles created by `vvlc_scenario_preset`,
//! `vvlc_scenario_parse` or `vvlc_scenario_load` and released with
//! `vvlc_scenario_free`. Every fallible call returns a [`VvlcStatus`];
//! on failure `vvlc_last_error_message` describes the error for the
//! calling thread. Strings returned by the library must be released with
//! `vvlc_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use vvlc_sim::cir::Link;
use vvlc_sim::geometry::Side;
use vvlc_sim::scenario_io::{self, SweepSpec};
use vvlc_sim::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VvlcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Runtime = 4,
    Panic = 5,
}

/// Headlight selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VvlcSide {
    Left = 0,
    Right = 1,
}

/// Opaque scenario handle.
pub struct VvlcScenario {
    link: Link,
}

/// Received-power breakdown for one instant. Two-element arrays are indexed
/// by headlight, left first.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VvlcPower {
    pub time_s: f64,
    pub distance_m: f64,
    pub los_w: [f64; 2],
    pub sb1_w: [f64; 2],
    pub sb2_w: [f64; 2],
    pub sb3_w: [f64; 2],
    pub total_w: f64,
    pub total_bare_w: f64,
    pub noise_total_a2: f64,
    pub snr_db: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> VvlcStatus {
    if e.is_config_error() {
        VvlcStatus::Config
    } else {
        VvlcStatus::Runtime
    }
}

/// Run `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (VvlcStatus, String)>>(f: F) -> VvlcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VvlcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            VvlcStatus::Panic
        }
    }
}

fn sim<T>(r: vvlc_sim::Result<T>) -> Result<T, (VvlcStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (VvlcStatus, String) {
    (VvlcStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, (VvlcStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    // SAFETY: the caller guarantees a valid NUL-terminated string.
    unsafe { CStr::from_ptr(s) }
        .to_str()
        .map_err(|_| (VvlcStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

/// # Safety
/// `out` must be null or valid for a pointer write.
unsafe fn emit_handle(scn: vvlc_sim::scenario_io::ScenarioConfig, out: *mut *mut VvlcScenario) -> Result<(), (VvlcStatus, String)> {
    let link = sim(Link::new(&scn))?;
    let handle = Box::into_raw(Box::new(VvlcScenario { link }));
    // SAFETY: checked non-null by the caller of this helper.
    unsafe { *out = handle };
    Ok(())
}

/// Create a scenario from a named preset (`"paper-table"`).
///
/// # Safety
/// `name` must be a valid NUL-terminated string; `out` must be valid for writes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn vvlc_scenario_preset(name: *const c_char, out: *mut *mut VvlcScenario) -> VvlcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: forwarded caller guarantees.
        let name = unsafe { text(name, "name") }?;
        let scn = sim(scenario_io::preset(name))?;
        // SAFETY: `out` checked above.
        unsafe { emit_handle(scn, out) }
    })
}

/// Create a scenario from configuration text.
///
/// # Safety
/// `config` must be a valid NUL-terminated string; `out` must be valid for writes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn vvlc_scenario_parse(config: *const c_char, out: *mut *mut VvlcScenario) -> VvlcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: forwarded caller guarantees.
        let config = unsafe { text(config, "config") }?;
        let scn = sim(scenario_io::parse(config))?;
        // SAFETY: `out` checked above.
        unsafe { emit_handle(scn, out) }
    })
}

/// Create a scenario from a configuration file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be valid for writes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn vvlc_scenario_load(path: *const c_char, out: *mut *mut VvlcScenario) -> VvlcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: forwarded caller guarantees.
        let path = unsafe { text(path, "path") }?;
        let scn = sim(scenario_io::load_scenario(path))?;
        // SAFETY: `out` checked above.
        unsafe { emit_handle(scn, out) }
    })
}

/// Release a scenario. Null is accepted.
///
/// # Safety
/// `scn` must be null or a handle returned by this library and not yet freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn vvlc_scenario_free(scn: *mut VvlcScenario) {
    if !scn.is_null() {
        // SAFETY: the handle came from Box::into_raw and is freed once.
        drop(unsafe { Box::from_raw(scn) });
    }
}

/// # Safety
/// `scn` must be null or a live handle.
unsafe fn handle<'a>(scn: *const VvlcScenario) -> Result<&'a VvlcScenario, (VvlcStatus, String)> {
    // SAFETY: the caller guarantees the pointer is a live handle when non-null.
    unsafe { scn.as_ref() }.ok_or_else(|| null("scenario"))
}

fn finite(x: f64, what: &str) -> Result<f64, (VvlcStatus, String)> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err((VvlcStatus::InvalidArgument, format!("{what} must be finite")))
    }
}

fn power(r: &vvlc_sim::cir::LinkResult) -> VvlcPower {
    VvlcPower {
        time_s: r.time,
        distance_m: r.distance,
        los_w: r.power_los,
        sb1_w: r.power_sb1,
        sb2_w: r.power_sb2,
        sb3_w: r.power_sb3,
        total_w: r.power_total,
        total_bare_w: r.power_total_bare,
        noise_total_a2: r.noise.total,
        snr_db: r.snr_db,
    }
}

/// Received power at time `t_s` along the scenario trajectory.
///
/// # Safety
/// `scn` must be a live handle; `out` must be valid for writes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn vvlc_received_power(scn: *const VvlcScenario, t_s: f64, out: *mut VvlcPower) -> VvlcStatus {
    guard(|| {
        // SAFETY: forwarded caller guarantees.
        let h = unsafe { handle(scn) }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = sim(h.link.received_power(finite(t_s, "time")?))?;
        // SAFETY: `out` checked above.
        unsafe { *out = power(&r) };
        Ok(())
    })
}

/// Received power at link length `distance_m`.
///
/// # Safety
/// `scn` must be a live handle; `out` must be valid for writes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn vvlc_received_power_at_distance(
    scn: *const VvlcScenario,
    distance_m: f64,
    out: *mut VvlcPower,
) -> VvlcStatus {
    guard(|| {
        // SAFETY: forwarded caller guarantees.
        let h = unsafe { handle(scn) }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = sim(h.link.at_distance(finite(distance_m, "distance")?))?;
        // SAFETY: `out` checked above.
        unsafe { *out = power(&r) };
        Ok(())
    })
}

/// LoS impulse gain of one headlight at link length `distance_m`.
/// `side` is 0 for the left headlight and 1 for the right.
///
/// # Safety
/// `scn` must be a live handle; `out` must be valid for writes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn vvlc_los_gain(scn: *const VvlcScenario, distance_m: f64, side: i32, out: *mut f64) -> VvlcStatus {
    guard(|| {
        // SAFETY: forwarded caller guarantees.
        let h = unsafe { handle(scn) }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let side = match side {
            0 => Side::Left,
            1 => Side::Right,
            other => return Err((VvlcStatus::InvalidArgument, format!("side {other} is not 0 or 1"))),
        };
        let c = sim(h.link.los_cir_at_distance(finite(distance_m, "distance")?, side))?;
        // SAFETY: `out` checked above.
        unsafe { *out = c.gain };
        Ok(())
    })
}

/// SNR in dB at link length `distance_m`; `-inf` when no power is received.
///
/// # Safety
/// `scn` must be a live handle; `out` must be valid for writes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn vvlc_snr_db(scn: *const VvlcScenario, distance_m: f64, out: *mut f64) -> VvlcStatus {
    guard(|| {
        // SAFETY: forwarded caller guarantees.
        let h = unsafe { handle(scn) }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = sim(h.link.at_distance(finite(distance_m, "distance")?))?;
        // SAFETY: `out` checked above.
        unsafe { *out = r.snr_db };
        Ok(())
    })
}

/// Trajectory sweep as CSV text. Release the result with `vvlc_string_free`.
///
/// # Safety
/// `scn` must be a live handle; `out` must be valid for writes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn vvlc_sweep_csv(scn: *const VvlcScenario, out: *mut *mut c_char) -> VvlcStatus {
    guard(|| {
        // SAFETY: forwarded caller guarantees.
        let h = unsafe { handle(scn) }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let csv = sim(scenario_io::run_sweep(h.link.scenario(), &SweepSpec::trajectory()))?;
        let c = CString::new(csv).map_err(|_| (VvlcStatus::Runtime, "CSV contains a NUL byte".to_string()))?;
        // SAFETY: `out` checked above.
        unsafe { *out = c.into_raw() };
        Ok(())
    })
}

/// Release a string returned by this library. Null is accepted.
///
/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn vvlc_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: the string came from CString::into_raw and is freed once.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Message for the most recent failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[unsafe(no_mangle)]
pub extern "C" fn vvlc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
