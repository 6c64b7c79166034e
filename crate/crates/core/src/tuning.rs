//! Gain selection criteria and parameter validation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::guidance::{sliding_vector, GuidanceParams};
use crate::kinematics::{relative_rates, EngagementState};
use crate::phase::Phase;
use crate::target::TargetCommand;
use crate::{Error, Result};

/// Largest `m` accepted; keeps `|S|^{n/m}` well conditioned.
pub const MAX_EXPONENT_DENOMINATOR: u32 = 99;

/// Time for `Ṡ = -k S^{n/m}` to bring `S0` to zero.
pub fn reach_time(s0: f64, k: f64, m: u32, n: u32) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::InvalidGain(format!("reaching gain must be positive, got {k}")));
    }
    let r = f64::from(m - n) / f64::from(m);
    Ok(s0.abs().powf(r) / (r * k))
}

/// Upper bound on `|Ṙxy|` while S1 follows the reaching law.
pub fn rxy_rate_bound(range_xy_rate0: f64, range_xy0: f64, k_a: f64) -> f64 {
    range_xy_rate0.abs() + k_a * range_xy0
}

/// Lower bound on the time for the horizontal range to vanish.
pub fn t_r1_lower_bound(range_xy0: f64, range_xy_rate0: f64, k_a: f64) -> f64 {
    if range_xy0 <= 0.0 {
        return 0.0;
    }
    range_xy0 / rxy_rate_bound(range_xy_rate0, range_xy0, k_a)
}

/// Smallest `k1` for which S1 provably reaches zero before the range does.
pub fn k1_sufficient(s10: f64, range_xy0: f64, range_xy_rate0: f64, k_a: f64, m: u32, n: u32) -> f64 {
    let r = f64::from(m - n) / f64::from(m);
    s10.abs().powf(r) / r * rxy_rate_bound(range_xy_rate0, range_xy0, k_a) / range_xy0
}

/// `k2`, `k3` such that all three sliding variables reach zero together.
pub fn ratio_gains(k1: f64, s10: f64, s20: f64, s30: f64, m: u32, n: u32) -> Result<(f64, f64)> {
    if s10 == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    let r = f64::from(m - n) / f64::from(m);
    let scale = |s: f64| k1 * (s.abs() / s10.abs()).powf(r);
    Ok((scale(s20), scale(s30)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    MNotOdd,
    NNotOdd,
    NotCoprime,
    ExponentOrder,
    ExponentTooLarge,
    KbNotAboveKa,
    KcNotAboveKa,
    NonPositiveLimit(&'static str),
    ElevationOutOfRange,
    NonFinite(&'static str),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MNotOdd => write!(f, "m not odd"),
            Violation::NNotOdd => write!(f, "n not odd"),
            Violation::NotCoprime => write!(f, "m and n must be coprime"),
            Violation::ExponentOrder => write!(f, "require 0 < n < m"),
            Violation::ExponentTooLarge => {
                write!(f, "m must not exceed {MAX_EXPONENT_DENOMINATOR}")
            }
            Violation::KbNotAboveKa => write!(f, "k_b must exceed k_a"),
            Violation::KcNotAboveKa => write!(f, "k_c must exceed k_a"),
            Violation::NonPositiveLimit(name) => write!(f, "{name} must be positive"),
            Violation::ElevationOutOfRange => write!(f, "|desired_elevation| must be below pi/2"),
            Violation::NonFinite(name) => write!(f, "{name} is not finite"),
        }
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn validate(p: &GuidanceParams) -> Vec<Violation> {
    let mut v = Vec::new();
    if p.m.is_multiple_of(2) {
        v.push(Violation::MNotOdd);
    }
    if p.n.is_multiple_of(2) {
        v.push(Violation::NNotOdd);
    }
    if !(0 < p.n && p.n < p.m) {
        v.push(Violation::ExponentOrder);
    }
    if gcd(p.m, p.n) != 1 {
        v.push(Violation::NotCoprime);
    }
    if p.m > MAX_EXPONENT_DENOMINATOR {
        v.push(Violation::ExponentTooLarge);
    }
    let named = [
        ("k_a", p.k_a),
        ("k_b", p.k_b),
        ("k_c", p.k_c),
        ("k1", p.k1),
        ("k2", p.k2),
        ("k3", p.k3),
        ("desired_azimuth_offset", p.desired_azimuth_offset),
        ("desired_elevation", p.desired_elevation),
        ("phase1_azimuth", p.phase1_azimuth),
    ];
    v.extend(named.iter().filter(|(_, x)| !x.is_finite()).map(|(n, _)| Violation::NonFinite(n)));
    if !(p.k_b > p.k_a) {
        v.push(Violation::KbNotAboveKa);
    }
    if !(p.k_c > p.k_a) {
        v.push(Violation::KcNotAboveKa);
    }
    let limits = [
        ("min_speed", p.min_speed),
        ("min_cos_flight_path", p.min_cos_flight_path),
        ("max_speed_rate", p.max_speed_rate),
        ("max_heading_rate", p.max_heading_rate),
        ("max_flight_path_rate", p.max_flight_path_rate),
    ];
    v.extend(limits.iter().filter(|(_, x)| !(*x > 0.0)).map(|(n, _)| Violation::NonPositiveLimit(n)));
    if !(p.desired_elevation.abs() < std::f64::consts::FRAC_PI_2) {
        v.push(Violation::ElevationOutOfRange);
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub s0: [f64; 3],
    /// Predicted reach time per sliding variable, s.
    pub t_reach: [f64; 3],
    pub rxy_rate_bound: f64,
    pub t_r1_lower: f64,
    pub k1_min: f64,
    pub suggested_k2: Option<f64>,
    pub suggested_k3: Option<f64>,
    pub violations: Vec<String>,
    /// Informational findings that do not invalidate the params.
    pub notes: Vec<String>,
}

/// Evaluates the selection criteria for `params` at `state`.
pub fn tuning_report(
    state: &EngagementState,
    tgt: &TargetCommand,
    params: &GuidanceParams,
    phase: Phase,
) -> Result<TuningReport> {
    let rates = relative_rates(state, tgt)?;
    let s = sliding_vector(state, &rates, tgt, params, phase).as_array();
    let (m, n) = (params.m, params.n);
    let violations: Vec<String> = validate(params).iter().map(ToString::to_string).collect();
    let t_reach = if violations.is_empty() {
        let gains = params.reaching_gains();
        let mut t = [f64::INFINITY; 3];
        for i in 0..3 {
            if gains[i] > 0.0 {
                t[i] = reach_time(s[i], gains[i], m, n)?;
            }
        }
        t
    } else {
        [f64::NAN; 3]
    };
    let k1_min = if violations.is_empty() {
        k1_sufficient(s[0], state.range_xy, rates.range_xy, params.k_a, m, n)
    } else {
        f64::NAN
    };
    let (suggested_k2, suggested_k3) = match ratio_gains(params.k1, s[0], s[1], s[2], m, n) {
        Ok((a, b)) if violations.is_empty() => (Some(a), Some(b)),
        _ => (None, None),
    };
    let mut notes = Vec::new();
    if params.k1 < k1_min {
        notes.push(format!(
            "k1 = {} is below the sufficient value {k1_min:.4}; S1 is not guaranteed to reach zero before Rxy",
            params.k1
        ));
    }
    Ok(TuningReport {
        s0: s,
        t_reach,
        rxy_rate_bound: rxy_rate_bound(rates.range_xy, state.range_xy, params.k_a),
        t_r1_lower: t_r1_lower_bound(state.range_xy, rates.range_xy, params.k_a),
        k1_min,
        suggested_k2,
        suggested_k3,
        violations,
        notes,
    })
}
