use smc_land::config::preset;
use smc_land::phase::{active_phase, PhaseMode};
use smc_land::sim::{compare_phases, Outcome, TouchdownThresholds};
use smc_land::{run_scenario, ScenarioConfig, TrajectoryLog};

fn log_of(cfg: &ScenarioConfig) -> TrajectoryLog {
    run_scenario(cfg).unwrap().log
}

#[test]
fn identical_configs_give_identical_logs() {
    let cfg = ScenarioConfig { t_max: 60.0, ..preset("table2-circular").unwrap() };
    assert_eq!(run_scenario(&cfg).unwrap(), run_scenario(&cfg.clone()).unwrap());
}

#[test]
fn time_is_uniformly_spaced() {
    let cfg = ScenarioConfig { t_max: 30.0, ..preset("table1-sinusoidal").unwrap() };
    let log = log_of(&cfg);
    assert_eq!(log.len(), 30_001);
    for (i, r) in log.records.iter().enumerate() {
        assert_eq!(r.t, i as f64 * cfg.dt);
    }
}

#[test]
fn halving_dt_barely_moves_terminal_metrics() {
    for name in ["table1-stationary", "table1-sline"] {
        let cfg = preset(name).unwrap();
        let coarse = run_scenario(&cfg).unwrap().metrics;
        let fine = run_scenario(&ScenarioConfig { dt: cfg.dt / 2.0, ..cfg }).unwrap().metrics;
        let pairs = [
            ("touchdown time", coarse.final_time, fine.final_time),
            ("terminal speed", coarse.terminal_speed, fine.terminal_speed),
            ("peak speed", coarse.peak_speed, fine.peak_speed),
        ];
        for (label, a, b) in pairs {
            assert!(((a - b) / b).abs() < 1e-3, "{name} {label}: {a} vs {b}");
        }
    }
}

#[test]
fn range_decreases_once_on_the_surface() {
    for name in ["table1-stationary", "table1-sline", "table1-circular"] {
        let log = log_of(&preset(name).unwrap());
        let recs = &log.records;
        let entry: Vec<usize> =
            (0..3).map(|i| recs.iter().position(|r| r.sliding[i].abs() <= 1e-3).expect("surface reached")).collect();
        let start = *entry.iter().max().unwrap();
        for w in recs[start..].windows(2) {
            assert!(w[1].range_xy < w[0].range_xy, "{name}: range grew at t = {}", w[1].t);
        }
    }
}

/// On the sliding surface `|Ṙxy| = k_a Rxy` and
/// `|Ṙz| <= T k_a Rxy + k_b |Rz + T Rxy|`, so the terminal rates are bounded
/// linearly in the touchdown thresholds.
#[test]
fn terminal_rates_shrink_with_thresholds() {
    let cfg = preset("table1-sline").unwrap();
    let p = cfg.phases.single;
    let tan_el = p.desired_elevation.tan();
    let at = |th: f64| {
        let res = run_scenario(&ScenarioConfig {
            touchdown: TouchdownThresholds { range_xy: th, range_z: th },
            ..cfg.clone()
        })
        .unwrap();
        assert_eq!(res.metrics.outcome, Outcome::Touchdown);
        let last = res.log.last().unwrap();
        let (xy, z) = (res.metrics.terminal_range_xy_rate, res.metrics.terminal_range_z_rate);
        let residual = last.sliding[0].abs().max(last.sliding[1].abs());
        assert!(xy <= p.k_a * th + residual, "threshold {th}: |dRxy| {xy}");
        assert!(z <= (tan_el * p.k_a + p.k_b * (1.0 + tan_el)) * th + 2.0 * residual, "threshold {th}: |dRz| {z}");
        (xy, z)
    };
    let (xy, z) = at(0.3);
    let (xy_half, z_half) = at(0.15);
    assert!(xy_half / xy <= 0.5 + 1e-3, "{xy_half} vs {xy}");
    assert!(z_half / z <= 0.5 + 1e-3, "{z_half} vs {z}");
}

#[test]
fn moving_targets_are_matched_at_touchdown() {
    let names = ["table1-sline", "table1-circular", "table2-sline", "table2-circular", "table2-sinusoidal"];
    for name in names {
        let m = run_scenario(&preset(name).unwrap()).unwrap().metrics;
        assert_eq!(m.outcome, Outcome::Touchdown, "{name}");
        assert!(m.terminal_speed_error <= 0.2, "{name}: {}", m.terminal_speed_error);
        assert!(m.terminal_heading_error <= 0.05, "{name}: {}", m.terminal_heading_error);
        assert!(m.terminal_flight_path <= 0.05, "{name}: {}", m.terminal_flight_path);
    }
}

#[test]
fn stationary_target_speed_settles_at_floor() {
    for name in ["table1-stationary", "table2-stationary"] {
        let cfg = preset(name).unwrap();
        let m = run_scenario(&cfg).unwrap().metrics;
        assert_eq!(m.outcome, Outcome::Touchdown, "{name}");
        assert!(m.terminal_speed <= cfg.phases.single.min_speed + 0.05, "{name}: {}", m.terminal_speed);
    }
}

#[test]
fn held_commands_change_only_on_refresh() {
    let cfg = ScenarioConfig { guidance_hold_steps: 16, t_max: 5.0, ..preset("table1-circular").unwrap() };
    let log = log_of(&cfg);
    for (i, w) in log.records.windows(2).enumerate() {
        if (i + 1) % 16 != 0 {
            assert_eq!(w[0].command, w[1].command, "step {}", i + 1);
        }
    }
}

#[test]
fn phase_follows_range_and_switch_is_atomic() {
    let cfg = preset("table2-sline").unwrap();
    let log = log_of(&cfg);
    let mut switches = 0;
    for w in log.records.windows(2) {
        assert_eq!(w[1].phase, active_phase(w[1].range_xy, &cfg.phases).number());
        if w[0].phase != w[1].phase {
            switches += 1;
            let p2 = cfg.phases.phase2.unwrap();
            assert_eq!(w[1].gains, [p2.k_a, p2.k_b, p2.k_c, p2.k1, p2.k2, p2.k3]);
        }
        assert!(w[1].stage >= w[0].stage);
    }
    assert_eq!(switches, 1);
}

#[test]
fn retuned_stages_increase_with_shrinking_range() {
    let cfg = preset("table3-sline").unwrap();
    let log = log_of(&cfg);
    let mut last = (0, log.records[0].range_xy);
    for r in &log.records {
        if r.stage != last.0 {
            assert_eq!(r.stage, last.0 + 1);
            assert!(r.range_xy <= 0.5 * last.1 || r.range_xy >= last.1 + 5.0 || r.phase != 1);
            last = (r.stage, r.range_xy);
        }
    }
    assert!(last.0 >= 2, "expected several stages, got {}", last.0);
}

#[test]
fn comparison_deltas_are_two_phase_minus_single() {
    let cmp = compare_phases(&preset("table1-stationary").unwrap()).unwrap();
    assert_eq!(cmp.single.outcome, Outcome::Touchdown);
    assert_eq!(cmp.two_phase.outcome, Outcome::Touchdown);
    assert_eq!(cmp.deltas.peak_speed, cmp.two_phase.peak_speed - cmp.single.peak_speed);
    let dt = cmp.deltas.touchdown_time.unwrap();
    assert!(dt < 0.0, "two-phase should land first, delta {dt}");
    let single = run_scenario(&preset("table1-stationary").unwrap().with_mode(PhaseMode::SinglePhase)).unwrap();
    assert_eq!(single.metrics, cmp.single);
}
