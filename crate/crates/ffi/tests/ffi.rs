use std::ffi::{CStr, CString};
use std::ptr;

use smc_land::config::preset;
use smc_land::guidance::compute_command;
use smc_land::kinematics::relative_rates;
use smc_land::{run_scenario, EngagementState, Phase, TargetCommand};
use smc_land_ffi::*;

fn scenario(name: &str) -> *mut SmcScenario {
    let name = CString::new(name).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { smc_scenario_from_preset(name.as_ptr(), &mut out) }, SmcStatus::Ok);
    assert!(!out.is_null());
    out
}

fn last_error() -> String {
    let p = smc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

#[test]
fn run_lifecycle_matches_core() {
    let sc = scenario("table1-stationary");
    let mut run = ptr::null_mut();
    unsafe {
        assert_eq!(smc_run(sc, &mut run), SmcStatus::Ok);
        assert!(smc_last_error().is_null());
        let core = run_scenario(&preset("table1-stationary").unwrap()).unwrap();
        assert_eq!(smc_run_len(run), core.log.len());

        let mut summary = SmcSummary::default();
        assert_eq!(smc_run_summary(run, &mut summary), SmcStatus::Ok);
        assert_eq!(summary.outcome, SMC_OUTCOME_TOUCHDOWN);
        assert_eq!(summary.touchdown_time, core.metrics.touchdown_time.unwrap());
        assert_eq!(summary.peak_speed, core.metrics.peak_speed);
        assert_eq!(summary.steps, core.metrics.steps as u64);

        let last = core.log.last().unwrap();
        let mut rec = SmcRecord::default();
        assert_eq!(smc_run_record(run, core.log.len() - 1, &mut rec), SmcStatus::Ok);
        assert_eq!(rec.t, last.t);
        assert_eq!(rec.uav, last.uav);
        assert_eq!(rec.command, last.command);
        assert_eq!(rec.phase, u32::from(last.phase));

        assert_eq!(smc_run_record(run, core.log.len(), &mut rec), SmcStatus::OutOfRange);
        assert!(last_error().contains("record"));

        smc_run_free(run);
        smc_scenario_free(sc);
    }
}

#[test]
fn timeout_is_reported_in_the_summary() {
    let sc = scenario("table1-sline");
    let mut run = ptr::null_mut();
    let mut summary = SmcSummary::default();
    unsafe {
        assert_eq!(smc_scenario_set_t_max(sc, 2.0), SmcStatus::Ok);
        assert_eq!(smc_run(sc, &mut run), SmcStatus::Ok);
        assert_eq!(smc_run_summary(run, &mut summary), SmcStatus::Ok);
        smc_run_free(run);
        smc_scenario_free(sc);
    }
    assert_eq!(summary.outcome, SMC_OUTCOME_TIMEOUT);
    assert!(summary.touchdown_time.is_nan());
}

#[test]
fn null_pointers_are_rejected() {
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(smc_scenario_from_preset(ptr::null(), &mut out), SmcStatus::NullPointer);
        assert!(last_error().contains("name"));
        assert_eq!(smc_run(ptr::null(), &mut ptr::null_mut()), SmcStatus::NullPointer);
        assert_eq!(smc_run_summary(ptr::null(), ptr::null_mut()), SmcStatus::NullPointer);
        assert_eq!(smc_scenario_set_dt(ptr::null_mut(), 0.01), SmcStatus::NullPointer);
        assert_eq!(smc_run_len(ptr::null()), 0);
        smc_run_free(ptr::null_mut());
        smc_scenario_free(ptr::null_mut());
        smc_string_free(ptr::null_mut());

        let sc = scenario("table1-sline");
        assert_eq!(smc_run(sc, ptr::null_mut()), SmcStatus::NullPointer);
        smc_scenario_free(sc);
    }
    assert!(out.is_null());
}

#[test]
fn errors_map_to_status_codes() {
    let mut out = ptr::null_mut();
    let bad = CString::new("no-such-preset").unwrap();
    unsafe {
        assert_eq!(smc_scenario_from_preset(bad.as_ptr(), &mut out), SmcStatus::UnknownPreset);
        assert!(last_error().contains("no-such-preset"));

        let junk = CString::new("{ not json").unwrap();
        assert_eq!(smc_scenario_from_json(junk.as_ptr(), &mut out), SmcStatus::Config);

        let sc = scenario("table1-sline");
        assert_eq!(smc_scenario_set_dt(sc, -1.0), SmcStatus::InvalidArgument);
        assert!(last_error().contains("dt"));
        assert_eq!(smc_scenario_set_t_max(sc, f64::NAN), SmcStatus::InvalidArgument);
        assert_eq!(smc_scenario_set_mode(sc, 7), SmcStatus::InvalidArgument);
        assert_eq!(smc_scenario_params(sc, 3, &mut SmcParams::default()), SmcStatus::InvalidArgument);
        // a successful call clears the message
        assert_eq!(smc_scenario_set_dt(sc, 0.002), SmcStatus::Ok);
        assert!(smc_last_error().is_null());
        smc_scenario_free(sc);
    }
    assert!(out.is_null());
}

#[test]
fn json_round_trips_through_handles() {
    let sc = scenario("table2-circular");
    unsafe {
        assert_eq!(smc_scenario_set_mode(sc, SMC_MODE_SINGLE), SmcStatus::Ok);
        let mut text = ptr::null_mut();
        assert_eq!(smc_scenario_to_json(sc, &mut text), SmcStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(smc_scenario_from_json(text, &mut back), SmcStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(smc_scenario_to_json(back, &mut again), SmcStatus::Ok);
        assert_eq!(CStr::from_ptr(text), CStr::from_ptr(again));
        assert!(CStr::from_ptr(text).to_str().unwrap().contains("\"single\""));
        smc_string_free(text);
        smc_string_free(again);
        smc_scenario_free(back);
        smc_scenario_free(sc);
    }
}

#[test]
fn csv_is_written_to_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let sc = scenario("table1-circular");
    let mut run = ptr::null_mut();
    unsafe {
        smc_scenario_set_t_max(sc, 1.0);
        assert_eq!(smc_run(sc, &mut run), SmcStatus::Ok);
        assert_eq!(smc_run_write_csv(run, cpath.as_ptr()), SmcStatus::Ok);
        let rows = std::fs::read_to_string(&path).unwrap().lines().count();
        assert_eq!(rows, smc_run_len(run) + 1);

        let missing = CString::new(dir.path().join("nope/run.csv").to_str().unwrap()).unwrap();
        assert_eq!(smc_run_write_csv(run, missing.as_ptr()), SmcStatus::Io);
        smc_run_free(run);
        smc_scenario_free(sc);
    }
}

#[test]
fn one_shot_guidance_matches_core() {
    let cfg = preset("table2-sinusoidal").unwrap();
    let sc = scenario("table2-sinusoidal");
    let tgt = TargetCommand::from_rates(0.1, 0.2, -0.05);
    let rates_c = SmcTargetRates { speed_rate: 0.1, heading_rate: 0.2, heading_accel: -0.05 };
    for (phase, core_phase) in
        [(SMC_PHASE_FIXED_AZIMUTH, Phase::FixedAzimuth), (SMC_PHASE_TARGET_RELATIVE, Phase::TargetRelative)]
    {
        let mut params = SmcParams::default();
        assert_eq!(unsafe { smc_scenario_params(sc, phase, &mut params) }, SmcStatus::Ok);
        let state = SmcState {
            range_xy: 40.0,
            range_z: -30.0,
            azimuth: 0.3,
            speed: 4.0,
            heading: 2.0,
            flight_path: -0.1,
            target_speed: 3.0,
            target_heading: 0.7,
        };
        let mut out = SmcGuidance::default();
        assert_eq!(unsafe { smc_guidance_command(&state, &rates_c, &params, phase, &mut out) }, SmcStatus::Ok);

        let s = EngagementState::from_relative(40.0, -30.0, 0.3, 4.0, 2.0, -0.1, 3.0, 0.7);
        let rates = relative_rates(&s, &tgt).unwrap();
        let sol = compute_command(&s, &rates, &tgt, cfg.phases.params_for(core_phase), core_phase).unwrap();
        assert_eq!(out.sliding, sol.sliding.as_array());
        assert_eq!(out.raw, sol.raw.as_array());
        assert_eq!(out.command, sol.command.as_array());
        assert_eq!(out.clamp_bits, sol.command.flags.bits());
    }
    unsafe { smc_scenario_free(sc) };
}

#[test]
fn degenerate_geometry_is_an_error() {
    let sc = scenario("table1-sline");
    let mut params = SmcParams::default();
    unsafe { smc_scenario_params(sc, SMC_PHASE_TARGET_RELATIVE, &mut params) };
    let state = SmcState { range_xy: 0.0, range_z: 0.0, speed: 4.0, ..SmcState::default() };
    let mut out = SmcGuidance::default();
    let status = unsafe { smc_guidance_command(&state, &SmcTargetRates::default(), &params, 2, &mut out) };
    assert_eq!(status, SmcStatus::DegenerateGeometry);
    assert!(!last_error().is_empty());
    unsafe { smc_scenario_free(sc) };
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(smc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/smc_land.h")).unwrap();
    for name in [
        "smc_run",
        "smc_run_free",
        "smc_scenario_from_preset",
        "smc_guidance_command",
        "SMC_STATUS_OK",
        "typedef struct SmcScenario SmcScenario",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
