//! C ABI for `smc-land`.
//!
//! Scenarios and finished runs are opaque handles created and destroyed by
//! this library. Every function returns an [`SmcStatus`]; on failure a
//! description is available from [`smc_last_error`] on the same thread.
//! Strings returned through `char **` must be released with
//! [`smc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use smc_land::config::{emit_config, parse_config_str, preset, write_csv_file};
use smc_land::guidance::compute_command;
use smc_land::kinematics::relative_rates;
use smc_land::sim::{Outcome, Record, RunResult};
use smc_land::{run_scenario, EngagementState, Error, GuidanceParams, Phase, PhaseMode, ScenarioConfig, TargetCommand};

/// Far-field phase tracking a fixed azimuth.
pub const SMC_PHASE_FIXED_AZIMUTH: u32 = 1;
/// Target-relative phase (also used throughout single-phase runs).
pub const SMC_PHASE_TARGET_RELATIVE: u32 = 2;
pub const SMC_MODE_SINGLE: u32 = 0;
pub const SMC_MODE_TWO_PHASE: u32 = 1;
pub const SMC_OUTCOME_TOUCHDOWN: u32 = 0;
pub const SMC_OUTCOME_TIMEOUT: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Validation = 4,
    UnknownPreset = 5,
    Singular = 6,
    DegenerateGeometry = 7,
    Diverged = 8,
    Io = 9,
    OutOfRange = 10,
    Panic = 11,
}

/// Opaque scenario configuration.
pub struct SmcScenario {
    cfg: ScenarioConfig,
}

/// Opaque finished run: trajectory log plus summary.
pub struct SmcRun {
    result: RunResult,
}

/// One logged step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SmcRecord {
    pub t: f64,
    pub uav: [f64; 3],
    pub target: [f64; 2],
    pub range_xy: f64,
    pub range_z: f64,
    pub range: f64,
    pub azimuth: f64,
    pub elevation: f64,
    pub speed: f64,
    pub heading: f64,
    pub flight_path: f64,
    pub target_speed: f64,
    pub target_heading: f64,
    pub range_xy_rate: f64,
    pub range_z_rate: f64,
    pub azimuth_rate: f64,
    pub sliding: [f64; 3],
    /// Unclamped `(V̇p, α̇p, γ̇)`.
    pub raw: [f64; 3],
    /// Applied `(V̇p, α̇p, γ̇)`.
    pub command: [f64; 3],
    pub clamp_bits: u32,
    pub phase: u32,
    pub stage: u32,
}

/// Run summary. Times that do not apply are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SmcSummary {
    pub outcome: u32,
    pub final_time: f64,
    pub touchdown_time: f64,
    pub steps: u64,
    pub terminal_range_xy: f64,
    pub terminal_range_z: f64,
    pub terminal_range_xy_rate: f64,
    pub terminal_range_z_rate: f64,
    pub terminal_azimuth_error: f64,
    pub terminal_elevation_error: f64,
    pub terminal_speed: f64,
    pub terminal_speed_error: f64,
    pub terminal_heading_error: f64,
    pub terminal_flight_path: f64,
    pub peak_speed: f64,
    pub peak_speed_rate: f64,
    pub peak_heading_rate: f64,
    pub peak_flight_path_rate: f64,
    pub peak_range_xy_rate: f64,
    pub reach_time: [f64; 3],
    pub clamped_steps: u64,
    pub singular_steps: u64,
    pub max_pose_range_error: f64,
}

/// Relative engagement state for a one-shot guidance evaluation.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SmcState {
    pub range_xy: f64,
    /// Target altitude minus UAV altitude, m.
    pub range_z: f64,
    pub azimuth: f64,
    pub speed: f64,
    pub heading: f64,
    pub flight_path: f64,
    pub target_speed: f64,
    pub target_heading: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SmcTargetRates {
    pub speed_rate: f64,
    pub heading_rate: f64,
    pub heading_accel: f64,
}

/// Guidance parameters; field meanings match the JSON schema.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SmcParams {
    pub k_a: f64,
    pub k_b: f64,
    pub k_c: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub m: u32,
    pub n: u32,
    pub desired_azimuth_offset: f64,
    pub desired_elevation: f64,
    pub phase1_azimuth: f64,
    pub min_speed: f64,
    pub min_cos_flight_path: f64,
    pub max_speed_rate: f64,
    pub max_heading_rate: f64,
    pub max_flight_path_rate: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SmcGuidance {
    pub sliding: [f64; 3],
    pub raw: [f64; 3],
    pub command: [f64; 3],
    pub clamp_bits: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SmcStatus, msg: impl Into<String>) -> SmcStatus {
    set_error(msg.into());
    status
}

fn status_of(e: &Error) -> SmcStatus {
    match e {
        Error::DegenerateGeometry { .. } => SmcStatus::DegenerateGeometry,
        Error::Singular { .. } => SmcStatus::Singular,
        Error::Diverged { .. } => SmcStatus::Diverged,
        Error::Config(_) => SmcStatus::Config,
        Error::Validation(_) | Error::InvalidGain(_) | Error::UndefinedRatio => SmcStatus::Validation,
        Error::UnknownPreset(_) => SmcStatus::UnknownPreset,
        Error::Io(_) => SmcStatus::Io,
        Error::InsufficientHistory { .. } => SmcStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), SmcStatus>) -> SmcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SmcStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(SmcStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: smc_land::Result<T>) -> Result<T, SmcStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

/// # Safety
/// `p` is null or points to a valid `T`.
unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, SmcStatus> {
    p.as_ref().ok_or_else(|| fail(SmcStatus::NullPointer, format!("{what} is null")))
}

/// # Safety
/// `p` is null or points to a NUL-terminated string.
unsafe fn get_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, SmcStatus> {
    if p.is_null() {
        return Err(fail(SmcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(SmcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// # Safety
/// `out` is null or valid for a write of `T`.
unsafe fn put<T>(out: *mut T, value: T) -> Result<(), SmcStatus> {
    if out.is_null() {
        return Err(fail(SmcStatus::NullPointer, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn smc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn smc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` is NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn smc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds the named preset, e.g. `"table1-sline"`.
///
/// # Safety
/// `name` is a NUL-terminated string; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn smc_scenario_from_preset(name: *const c_char, out: *mut *mut SmcScenario) -> SmcStatus {
    guard(|| {
        let name = get_str(name, "name")?;
        let cfg = lift(preset(name))?;
        put(out, Box::into_raw(Box::new(SmcScenario { cfg })))
    })
}

/// Parses and validates a JSON scenario document.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn smc_scenario_from_json(json: *const c_char, out: *mut *mut SmcScenario) -> SmcStatus {
    guard(|| {
        let text = get_str(json, "json")?;
        let cfg = lift(parse_config_str(text))?;
        put(out, Box::into_raw(Box::new(SmcScenario { cfg })))
    })
}

/// Serializes the scenario as pretty JSON; free with [`smc_string_free`].
///
/// # Safety
/// `scenario` is a live handle; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn smc_scenario_to_json(scenario: *const SmcScenario, out: *mut *mut c_char) -> SmcStatus {
    guard(|| {
        let s = get(scenario, "scenario")?;
        let text = lift(emit_config(&s.cfg))?;
        let c = CString::new(text).map_err(|_| fail(SmcStatus::Config, "JSON contains NUL"))?;
        put(out, c.into_raw())
    })
}

/// Sets the integration step, s.
///
/// # Safety
/// `scenario` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn smc_scenario_set_dt(scenario: *mut SmcScenario, dt: f64) -> SmcStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| fail(SmcStatus::NullPointer, "scenario is null"))?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(fail(SmcStatus::InvalidArgument, format!("dt must be positive, got {dt}")));
        }
        s.cfg.dt = dt;
        Ok(())
    })
}

/// Sets the run horizon, s.
///
/// # Safety
/// `scenario` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn smc_scenario_set_t_max(scenario: *mut SmcScenario, t_max: f64) -> SmcStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| fail(SmcStatus::NullPointer, "scenario is null"))?;
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(fail(SmcStatus::InvalidArgument, format!("t_max must be positive, got {t_max}")));
        }
        s.cfg.t_max = t_max;
        Ok(())
    })
}

/// Selects `SMC_MODE_SINGLE` or `SMC_MODE_TWO_PHASE`.
///
/// # Safety
/// `scenario` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn smc_scenario_set_mode(scenario: *mut SmcScenario, mode: u32) -> SmcStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| fail(SmcStatus::NullPointer, "scenario is null"))?;
        let mode = match mode {
            SMC_MODE_SINGLE => PhaseMode::SinglePhase,
            SMC_MODE_TWO_PHASE => PhaseMode::TwoPhase,
            _ => return Err(fail(SmcStatus::InvalidArgument, format!("unknown mode {mode}"))),
        };
        let mut cfg = s.cfg.clone();
        cfg.phases.mode = mode;
        lift(cfg.validate())?;
        s.cfg = cfg;
        Ok(())
    })
}

/// # Safety
/// `scenario` is NULL or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn smc_scenario_free(scenario: *mut SmcScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the scenario to touchdown or timeout. A timeout is not an error;
/// check the summary outcome.
///
/// # Safety
/// `scenario` is a live handle; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn smc_run(scenario: *const SmcScenario, out: *mut *mut SmcRun) -> SmcStatus {
    guard(|| {
        let s = get(scenario, "scenario")?;
        if out.is_null() {
            return Err(fail(SmcStatus::NullPointer, "output pointer is null"));
        }
        let result = lift(run_scenario(&s.cfg))?;
        put(out, Box::into_raw(Box::new(SmcRun { result })))
    })
}

/// Number of logged steps, 0 for NULL.
///
/// # Safety
/// `run` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn smc_run_len(run: *const SmcRun) -> usize {
    run.as_ref().map_or(0, |r| r.result.log.len())
}

fn c_record(r: &Record) -> SmcRecord {
    SmcRecord {
        t: r.t,
        uav: r.uav,
        target: r.target,
        range_xy: r.range_xy,
        range_z: r.range_z,
        range: r.range,
        azimuth: r.azimuth,
        elevation: r.elevation,
        speed: r.speed,
        heading: r.heading,
        flight_path: r.flight_path,
        target_speed: r.target_speed,
        target_heading: r.target_heading,
        range_xy_rate: r.range_xy_rate,
        range_z_rate: r.range_z_rate,
        azimuth_rate: r.azimuth_rate,
        sliding: r.sliding,
        raw: r.raw,
        command: r.command,
        clamp_bits: r.clamp_bits,
        phase: u32::from(r.phase),
        stage: r.stage,
    }
}

/// Copies record `index` into `out`.
///
/// # Safety
/// `run` is a live handle; `out` is valid for a write of [`SmcRecord`].
#[no_mangle]
pub unsafe extern "C" fn smc_run_record(run: *const SmcRun, index: usize, out: *mut SmcRecord) -> SmcStatus {
    guard(|| {
        let r = get(run, "run")?;
        let rec = r
            .result
            .log
            .records
            .get(index)
            .ok_or_else(|| fail(SmcStatus::OutOfRange, format!("record {index} of {}", r.result.log.len())))?;
        put(out, c_record(rec))
    })
}

/// # Safety
/// `run` is a live handle; `out` is valid for a write of [`SmcSummary`].
#[no_mangle]
pub unsafe extern "C" fn smc_run_summary(run: *const SmcRun, out: *mut SmcSummary) -> SmcStatus {
    guard(|| {
        let m = &get(run, "run")?.result.metrics;
        let or_nan = |t: Option<f64>| t.unwrap_or(f64::NAN);
        put(
            out,
            SmcSummary {
                outcome: match m.outcome {
                    Outcome::Touchdown => SMC_OUTCOME_TOUCHDOWN,
                    Outcome::Timeout => SMC_OUTCOME_TIMEOUT,
                },
                final_time: m.final_time,
                touchdown_time: or_nan(m.touchdown_time),
                steps: m.steps as u64,
                terminal_range_xy: m.terminal_range_xy,
                terminal_range_z: m.terminal_range_z,
                terminal_range_xy_rate: m.terminal_range_xy_rate,
                terminal_range_z_rate: m.terminal_range_z_rate,
                terminal_azimuth_error: m.terminal_azimuth_error,
                terminal_elevation_error: m.terminal_elevation_error,
                terminal_speed: m.terminal_speed,
                terminal_speed_error: m.terminal_speed_error,
                terminal_heading_error: m.terminal_heading_error,
                terminal_flight_path: m.terminal_flight_path,
                peak_speed: m.peak_speed,
                peak_speed_rate: m.peak_speed_rate,
                peak_heading_rate: m.peak_heading_rate,
                peak_flight_path_rate: m.peak_flight_path_rate,
                peak_range_xy_rate: m.peak_range_xy_rate,
                reach_time: [or_nan(m.reach_time_s1), or_nan(m.reach_time_s2), or_nan(m.reach_time_s3)],
                clamped_steps: m.clamped_steps as u64,
                singular_steps: m.singular_steps as u64,
                max_pose_range_error: m.max_pose_range_error,
            },
        )
    })
}

/// Writes the trajectory CSV to `path`.
///
/// # Safety
/// `run` is a live handle; `path` is a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn smc_run_write_csv(run: *const SmcRun, path: *const c_char) -> SmcStatus {
    guard(|| {
        let r = get(run, "run")?;
        let path = get_str(path, "path")?;
        lift(write_csv_file(&r.result.log, path))
    })
}

/// # Safety
/// `run` is NULL or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn smc_run_free(run: *mut SmcRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

impl From<&SmcParams> for GuidanceParams {
    fn from(p: &SmcParams) -> Self {
        GuidanceParams {
            k_a: p.k_a,
            k_b: p.k_b,
            k_c: p.k_c,
            k1: p.k1,
            k2: p.k2,
            k3: p.k3,
            m: p.m,
            n: p.n,
            desired_azimuth_offset: p.desired_azimuth_offset,
            desired_elevation: p.desired_elevation,
            phase1_azimuth: p.phase1_azimuth,
            min_speed: p.min_speed,
            min_cos_flight_path: p.min_cos_flight_path,
            max_speed_rate: p.max_speed_rate,
            max_heading_rate: p.max_heading_rate,
            max_flight_path_rate: p.max_flight_path_rate,
        }
    }
}

impl From<&GuidanceParams> for SmcParams {
    fn from(p: &GuidanceParams) -> Self {
        SmcParams {
            k_a: p.k_a,
            k_b: p.k_b,
            k_c: p.k_c,
            k1: p.k1,
            k2: p.k2,
            k3: p.k3,
            m: p.m,
            n: p.n,
            desired_azimuth_offset: p.desired_azimuth_offset,
            desired_elevation: p.desired_elevation,
            phase1_azimuth: p.phase1_azimuth,
            min_speed: p.min_speed,
            min_cos_flight_path: p.min_cos_flight_path,
            max_speed_rate: p.max_speed_rate,
            max_heading_rate: p.max_heading_rate,
            max_flight_path_rate: p.max_flight_path_rate,
        }
    }
}

/// Copies the parameter set active in `phase` of the scenario.
///
/// # Safety
/// `scenario` is a live handle; `out` is valid for a write of [`SmcParams`].
#[no_mangle]
pub unsafe extern "C" fn smc_scenario_params(
    scenario: *const SmcScenario,
    phase: u32,
    out: *mut SmcParams,
) -> SmcStatus {
    guard(|| {
        let s = get(scenario, "scenario")?;
        let phase = phase_of(phase)?;
        put(out, SmcParams::from(s.cfg.phases.params_for(phase)))
    })
}

fn phase_of(phase: u32) -> Result<Phase, SmcStatus> {
    match phase {
        SMC_PHASE_FIXED_AZIMUTH => Ok(Phase::FixedAzimuth),
        SMC_PHASE_TARGET_RELATIVE => Ok(Phase::TargetRelative),
        _ => Err(fail(SmcStatus::InvalidArgument, format!("unknown phase {phase}"))),
    }
}

/// Evaluates the guidance law once: sliding vector, unclamped solve and
/// limited command. Parameters are not validated.
///
/// # Safety
/// Pointers are valid for their types.
#[no_mangle]
pub unsafe extern "C" fn smc_guidance_command(
    state: *const SmcState,
    target: *const SmcTargetRates,
    params: *const SmcParams,
    phase: u32,
    out: *mut SmcGuidance,
) -> SmcStatus {
    guard(|| {
        let st = get(state, "state")?;
        let tr = get(target, "target")?;
        let p = GuidanceParams::from(get(params, "params")?);
        let phase = phase_of(phase)?;
        let s = EngagementState::from_relative(
            st.range_xy,
            st.range_z,
            st.azimuth,
            st.speed,
            st.heading,
            st.flight_path,
            st.target_speed,
            st.target_heading,
        );
        let tgt = TargetCommand::from_rates(tr.speed_rate, tr.heading_rate, tr.heading_accel);
        let rates = lift(relative_rates(&s, &tgt))?;
        let sol = lift(compute_command(&s, &rates, &tgt, &p, phase))?;
        put(
            out,
            SmcGuidance {
                sliding: sol.sliding.as_array(),
                raw: sol.raw.as_array(),
                command: sol.command.as_array(),
                clamp_bits: sol.command.flags.bits(),
            },
        )
    })
}
