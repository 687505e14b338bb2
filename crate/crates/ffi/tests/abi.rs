use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::ptr;
use vvlc_sim_ffi::*;

fn preset() -> *mut VvlcScenario {
    let mut h = ptr::null_mut();
    let name = CString::new("paper-table").unwrap();
    assert_eq!(unsafe { vvlc_scenario_preset(name.as_ptr(), &mut h) }, VvlcStatus::Ok);
    assert!(!h.is_null());
    h
}

fn last_error() -> String {
    let p = vvlc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn zero_power() -> VvlcPower {
    VvlcPower {
        time_s: 0.0,
        distance_m: 0.0,
        los_w: [0.0; 2],
        sb1_w: [0.0; 2],
        sb2_w: [0.0; 2],
        sb3_w: [0.0; 2],
        total_w: 0.0,
        total_bare_w: 0.0,
        noise_total_a2: 0.0,
        snr_db: 0.0,
    }
}

#[test]
fn power_matches_library() {
    let h = preset();
    let mut p = zero_power();
    assert_eq!(unsafe { vvlc_received_power(h, 10.0, &mut p) }, VvlcStatus::Ok);
    let lib = vvlc_sim::cir::received_power(&vvlc_sim::scenario_io::paper_table(), 10.0).unwrap();
    assert_eq!(p.distance_m, 50.0);
    assert_eq!(p.total_w, lib.power_total);
    assert_eq!(p.los_w, lib.power_los);
    assert_eq!(p.snr_db, lib.snr_db);

    let mut q = zero_power();
    assert_eq!(unsafe { vvlc_received_power_at_distance(h, 50.0, &mut q) }, VvlcStatus::Ok);
    assert_eq!(q.total_w, p.total_w);

    let mut snr = 0.0;
    assert_eq!(unsafe { vvlc_snr_db(h, 50.0, &mut snr) }, VvlcStatus::Ok);
    assert_eq!(snr, p.snr_db);
    unsafe { vvlc_scenario_free(h) };
}

#[test]
fn los_gain_sides_and_bad_side() {
    let h = preset();
    let (mut l, mut r) = (0.0, 0.0);
    assert_eq!(unsafe { vvlc_los_gain(h, 20.0, VvlcSide::Left as i32, &mut l) }, VvlcStatus::Ok);
    assert_eq!(unsafe { vvlc_los_gain(h, 20.0, VvlcSide::Right as i32, &mut r) }, VvlcStatus::Ok);
    assert!(l > 0.0);
    assert_eq!(l, r);
    assert_eq!(unsafe { vvlc_los_gain(h, 20.0, 7, &mut l) }, VvlcStatus::InvalidArgument);
    assert!(last_error().contains('7'));
    unsafe { vvlc_scenario_free(h) };
}

#[test]
fn null_pointers_are_rejected() {
    let mut p = zero_power();
    assert_eq!(unsafe { vvlc_received_power(ptr::null(), 1.0, &mut p) }, VvlcStatus::NullPointer);
    let h = preset();
    assert_eq!(unsafe { vvlc_received_power(h, 1.0, ptr::null_mut()) }, VvlcStatus::NullPointer);
    assert_eq!(unsafe { vvlc_scenario_preset(ptr::null(), &mut ptr::null_mut()) }, VvlcStatus::NullPointer);
    assert_eq!(unsafe { vvlc_sweep_csv(h, ptr::null_mut()) }, VvlcStatus::NullPointer);
    unsafe {
        vvlc_scenario_free(ptr::null_mut());
        vvlc_string_free(ptr::null_mut());
        vvlc_scenario_free(h);
    }
}

#[test]
fn config_errors_carry_message() {
    let mut h = ptr::null_mut();
    let text = CString::new("lamp.mode_number = 2\nnot_a_key = 1\n").unwrap();
    assert_eq!(unsafe { vvlc_scenario_parse(text.as_ptr(), &mut h) }, VvlcStatus::Config);
    assert!(h.is_null());
    assert!(last_error().contains("line 2"));

    let name = CString::new("no-such-preset").unwrap();
    assert_eq!(unsafe { vvlc_scenario_preset(name.as_ptr(), &mut h) }, VvlcStatus::Config);
    let path = CString::new("/nonexistent/scenario.cfg").unwrap();
    assert_eq!(unsafe { vvlc_scenario_load(path.as_ptr(), &mut h) }, VvlcStatus::Config);
}

#[test]
fn runtime_errors_past_stop_time() {
    let h = preset();
    let mut p = zero_power();
    assert_eq!(unsafe { vvlc_received_power(h, 1e6, &mut p) }, VvlcStatus::Runtime);
    assert!(last_error().contains("scenario ended"));
    unsafe { vvlc_scenario_free(h) };
}

#[test]
fn parsed_scenario_and_csv() {
    let mut h = ptr::null_mut();
    let text = CString::new("lamp.mode_number = 2\n").unwrap();
    assert_eq!(unsafe { vvlc_scenario_parse(text.as_ptr(), &mut h) }, VvlcStatus::Ok);
    let mut s: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { vvlc_sweep_csv(h, &mut s) }, VvlcStatus::Ok);
    let csv = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    assert!(csv.starts_with("value,time_s,distance_m"));
    assert!(csv.lines().count() > 300);
    unsafe {
        vvlc_string_free(s);
        vvlc_scenario_free(h);
    }
}
