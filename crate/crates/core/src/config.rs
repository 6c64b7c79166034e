//! JSON scenario schema, named presets and the trajectory CSV writer.
//!
//! All angles are radians, distances meters and times seconds.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::guidance::GuidanceParams;
use crate::phase::{Phase, PhaseConfig, PhaseMode, RetunePolicy};
use crate::sim::{
    generated_gains, Estimator, InitialConditions, Record, ScenarioConfig, TouchdownThresholds, TrajectoryLog,
    DEFAULT_DT, DEFAULT_T_MAX,
};
use crate::target::TargetProfile;
use crate::{Error, Result};

/// Fixed CSV header of the trajectory log.
pub const CSV_HEADER: [&str; 27] = [
    "t",
    "x_p",
    "y_p",
    "z_p",
    "x_t",
    "y_t",
    "R_xy",
    "R_z",
    "R",
    "psi",
    "theta",
    "V_p",
    "alpha_p",
    "gamma",
    "V_t",
    "alpha_t",
    "S1",
    "S2",
    "S3",
    "dVp_raw",
    "dalphap_raw",
    "dgamma_raw",
    "dVp_cmd",
    "dalphap_cmd",
    "dgamma_cmd",
    "phase",
    "stage",
];

/// Parses and validates a scenario document. Unknown keys are rejected.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = serde_json::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

pub fn emit_config(cfg: &ScenarioConfig) -> Result<String> {
    Ok(serde_json::to_string_pretty(cfg)?)
}

/// Writes the log with the fixed header. Floats use shortest round-trip form.
pub fn write_csv<W: Write>(log: &TrajectoryLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &log.records {
        w.write_record(csv_row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(log: &TrajectoryLog, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path.as_ref())?;
    write_csv(log, std::io::BufWriter::new(file))
}

fn csv_row(r: &Record) -> Vec<String> {
    let floats = [
        r.t,
        r.uav[0],
        r.uav[1],
        r.uav[2],
        r.target[0],
        r.target[1],
        r.range_xy,
        r.range_z,
        r.range,
        r.azimuth,
        r.elevation,
        r.speed,
        r.heading,
        r.flight_path,
        r.target_speed,
        r.target_heading,
        r.sliding[0],
        r.sliding[1],
        r.sliding[2],
        r.raw[0],
        r.raw[1],
        r.raw[2],
        r.command[0],
        r.command[1],
        r.command[2],
    ];
    let mut row: Vec<String> = floats.iter().map(|v| v.to_string()).collect();
    row.push(r.phase.to_string());
    row.push(r.stage.to_string());
    row
}

pub const PRESET_TABLES: [&str; 3] = ["table1", "table2", "table3"];
pub const PRESET_CASES: [&str; 4] = ["stationary", "sline", "circular", "sinusoidal"];

/// Names of every shipped preset.
pub fn preset_names() -> Vec<String> {
    PRESET_TABLES.iter().flat_map(|t| PRESET_CASES.iter().map(move |c| format!("{t}-{c}"))).collect()
}

#[derive(Clone, Copy)]
enum Case {
    Stationary,
    Sline,
    Circular,
    Sinusoidal,
}

impl Case {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "stationary" => Case::Stationary,
            "sline" => Case::Sline,
            "circular" => Case::Circular,
            "sinusoidal" => Case::Sinusoidal,
            _ => return None,
        })
    }

    fn index(self) -> usize {
        self as usize
    }
}

const TARGET_SPEED: f64 = 3.0;
const SWITCH_RANGE: f64 = 7.5;

// Reaching gains per case: k1, k2, k3.
const SINGLE_GAINS: [[f64; 3]; 4] =
    [[0.1395, 0.1784, 0.0442], [0.0914, 0.1297, 0.0323], [0.0914, 0.1297, 0.0641], [0.0914, 0.1297, 0.0169]];
const PHASE1_K3: [f64; 4] = [0.0363, 0.0169, 0.0169, 0.0169];
// Near-field set per case: k_a, k_b, k_c, k1, k2, k3.
const PHASE2_GAINS: [[f64; 6]; 4] = [
    [0.2001, 0.6002, 0.4001, 0.3543, 0.1256, 0.3442],
    [0.2000, 0.6001, 0.4001, 0.3542, 0.1231, 0.2828],
    [0.2000, 0.6000, 0.4000, 0.3542, 0.1263, 0.2564],
    [0.2000, 0.6001, 0.4000, 0.3542, 0.1242, 0.1869],
];

fn base_params(desired_azimuth_offset: f64) -> GuidanceParams {
    GuidanceParams {
        k_a: 0.0150,
        k_b: 0.0450,
        k_c: 0.0300,
        k1: 0.0,
        k2: 0.0,
        k3: 0.0,
        m: 5,
        n: 3,
        desired_azimuth_offset,
        desired_elevation: FRAC_PI_4,
        phase1_azimuth: 0.0,
        min_speed: 0.1,
        min_cos_flight_path: 0.15,
        max_speed_rate: 10.0,
        max_heading_rate: FRAC_PI_2,
        max_flight_path_rate: FRAC_PI_2,
    }
}

fn with_reaching(p: GuidanceParams, [k1, k2, k3]: [f64; 3]) -> GuidanceParams {
    GuidanceParams { k1, k2, k3, ..p }
}

fn simulation_target(case: Case, heading: f64) -> TargetProfile {
    match case {
        Case::Stationary => TargetProfile::stationary(),
        Case::Sline => TargetProfile::constant_velocity(TARGET_SPEED, heading),
        Case::Circular => TargetProfile::constant_turn(TARGET_SPEED, heading, FRAC_PI_6),
        Case::Sinusoidal => TargetProfile::sinusoidal_turn(TARGET_SPEED, heading, FRAC_PI_6, FRAC_PI_4),
    }
}

fn point_mass_preset(case: Case, mode: PhaseMode) -> ScenarioConfig {
    let zeta = [PI, FRAC_PI_2, FRAC_PI_2, 0.0][case.index()];
    let base = base_params(zeta);
    let single = with_reaching(base, SINGLE_GAINS[case.index()]);
    let [k1, k2, _] = SINGLE_GAINS[case.index()];
    let phase1 = with_reaching(base, [k1, k2, PHASE1_K3[case.index()]]);
    let [k_a, k_b, k_c, k1, k2, k3] = PHASE2_GAINS[case.index()];
    let phase2 = GuidanceParams { k_a, k_b, k_c, k1, k2, k3, ..base };
    ScenarioConfig {
        name: String::new(),
        initial: InitialConditions {
            range_xy: 100.0,
            range_z: -100.0 * 3f64.sqrt(),
            azimuth: -FRAC_PI_3,
            speed: 5.0,
            heading: -FRAC_PI_3,
            flight_path: 0.0,
        },
        target: simulation_target(case, 0.0),
        phases: PhaseConfig { mode, switch_range: SWITCH_RANGE, single, phase1: Some(phase1), phase2: Some(phase2) },
        retune: RetunePolicy::default(),
        dt: DEFAULT_DT,
        t_max: DEFAULT_T_MAX,
        touchdown: TouchdownThresholds::default(),
        estimator: Estimator::Exact,
        guidance_hold_steps: 1,
        allow_violations: false,
    }
}

/// Short-range two-phase cases with stage-wise re-tuning. Gains come from
/// the generating rules at the initial state; the near-field set is
/// regenerated on phase entry.
fn short_range_preset(case: Case) -> Result<ScenarioConfig> {
    let i = case.index();
    let zeta = [PI, FRAC_PI_2, FRAC_PI_2, -3.0 * FRAC_PI_4][i];
    let heading = [0.0, FRAC_PI_4, 0.0, 0.0][i];
    let target = match case {
        Case::Circular => TargetProfile::constant_turn(TARGET_SPEED, heading, PI / 12.0),
        _ => simulation_target(case, heading),
    };
    let base = base_params(zeta);
    let mut cfg = ScenarioConfig {
        initial: InitialConditions {
            range_xy: 20.0,
            range_z: -20.0,
            azimuth: 0.0,
            speed: 5.0,
            heading: PI,
            flight_path: 0.0,
        },
        target,
        phases: PhaseConfig {
            mode: PhaseMode::TwoPhase,
            switch_range: SWITCH_RANGE,
            single: base,
            phase1: None,
            phase2: None,
        },
        retune: RetunePolicy::enabled(),
        ..point_mass_preset(case, PhaseMode::TwoPhase)
    };
    let state = cfg.initial_state();
    let gen = |phase| generated_gains(&base, &state, &cfg.target, phase);
    cfg.phases.single = gen(Phase::TargetRelative)?;
    cfg.phases.phase1 = Some(gen(Phase::FixedAzimuth)?);
    cfg.phases.phase2 = Some(cfg.phases.single);
    Ok(cfg)
}

/// Builds the named preset `table{1|2|3}-{stationary|sline|circular|sinusoidal}`.
///
/// The `table1-*` and `table2-*` presets share initial conditions and carry both the
/// single-phase and the two-phase parameter sets; they differ only in mode.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let unknown = || Error::UnknownPreset(name.to_string());
    let (table, case) = name.split_once('-').ok_or_else(unknown)?;
    let case = Case::parse(case).ok_or_else(unknown)?;
    let mut cfg = match table {
        "table1" => point_mass_preset(case, PhaseMode::SinglePhase),
        "table2" => point_mass_preset(case, PhaseMode::TwoPhase),
        "table3" => short_range_preset(case)?,
        _ => return Err(unknown()),
    };
    cfg.name = name.to_string();
    Ok(cfg)
}
