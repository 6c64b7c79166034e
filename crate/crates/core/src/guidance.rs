//! Sliding-mode landing guidance.
//!
//! Three sliding variables are driven to zero with the power-rate reaching
//! law `Ṡᵢ = -kᵢ Sᵢ^{n/m}`:
//!
//! ```text
//! S1 = Ṙxy + ka Rxy
//! S2 = Ṙz + tanθd Ṙxy + kb (Rz + tanθd Rxy)
//! S3 = (ψ̇ - ω_ref) + kc wrap(ψ - ψ_ref)
//! ```
//!
//! where the azimuth reference is `αt + ζd` (tracking the target heading) or a
//! fixed `ξ` during the far-field phase of the two-phase scheme. Because the
//! second derivatives of the ranges and azimuth are affine in the command
//! `U = (V̇p, α̇p, γ̇)`, enforcing the reaching law yields a linear system
//! `A U = B` with `det A = Vp² cos γ`.

use serde::{Deserialize, Serialize};

use crate::angle::wrap;
use crate::kinematics::{EngagementState, RateVector};
use crate::phase::Phase;
use crate::target::TargetCommand;
use crate::{Error, Result};

/// Default threshold below which `A` is treated as singular.
pub const DET_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuidanceParams {
    /// Horizontal range decay rate on the sliding surface, 1/s.
    pub k_a: f64,
    /// Elevation-combined range decay rate, 1/s.
    pub k_b: f64,
    /// Azimuth error decay rate, 1/s.
    pub k_c: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// Reaching-law exponent is `n / m`; both odd and coprime, `0 < n < m`.
    pub m: u32,
    pub n: u32,
    /// Desired `ψ - αt` at touchdown, rad.
    pub desired_azimuth_offset: f64,
    /// Desired LOS elevation at touchdown, rad.
    pub desired_elevation: f64,
    /// Fixed azimuth tracked in the far-field phase, rad.
    #[serde(default)]
    pub phase1_azimuth: f64,
    /// Below this speed, deceleration commands are dropped, m/s.
    pub min_speed: f64,
    /// Below this `cos γ`, commands steepening γ are dropped.
    pub min_cos_flight_path: f64,
    /// Saturation of `|V̇p|`, m/s².
    pub max_speed_rate: f64,
    /// Saturation of `|α̇p|`, rad/s.
    pub max_heading_rate: f64,
    /// Saturation of `|γ̇|`, rad/s.
    pub max_flight_path_rate: f64,
}

impl GuidanceParams {
    /// Exponent `n / m` as a float.
    pub fn exponent(&self) -> f64 {
        f64::from(self.n) / f64::from(self.m)
    }

    pub fn reaching_gains(&self) -> [f64; 3] {
        [self.k1, self.k2, self.k3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SlidingVector {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl SlidingVector {
    pub fn as_array(&self) -> [f64; 3] {
        [self.s1, self.s2, self.s3]
    }
}

/// Which limiter rules modified a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClampFlags {
    pub slow_speed_floor: bool,
    pub flight_path_limit: bool,
    pub speed_rate_saturated: bool,
    pub heading_rate_saturated: bool,
    pub flight_path_rate_saturated: bool,
}

impl ClampFlags {
    pub fn any(&self) -> bool {
        self.slow_speed_floor
            || self.flight_path_limit
            || self.speed_rate_saturated
            || self.heading_rate_saturated
            || self.flight_path_rate_saturated
    }

    pub fn bits(&self) -> u32 {
        [
            self.slow_speed_floor,
            self.flight_path_limit,
            self.speed_rate_saturated,
            self.heading_rate_saturated,
            self.flight_path_rate_saturated,
        ]
        .iter()
        .enumerate()
        .map(|(i, &b)| u32::from(b) << i)
        .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GuidanceCommand {
    /// V̇p, m/s².
    pub speed_rate: f64,
    /// α̇p, rad/s.
    pub heading_rate: f64,
    /// γ̇, rad/s.
    pub flight_path_rate: f64,
    pub flags: ClampFlags,
}

impl GuidanceCommand {
    pub fn new(speed_rate: f64, heading_rate: f64, flight_path_rate: f64) -> Self {
        Self { speed_rate, heading_rate, flight_path_rate, flags: ClampFlags::default() }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.speed_rate, self.heading_rate, self.flight_path_rate]
    }
}

/// Real odd-root power `sign(s) |s|^{n/m}`.
pub fn signed_frac_pow(s: f64, n: u32, m: u32) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    s.signum() * s.abs().powf(f64::from(n) / f64::from(m))
}

/// Azimuth reference for the active phase: `(angle, rate, accel)`.
pub fn azimuth_reference(
    state: &EngagementState,
    tgt: &TargetCommand,
    params: &GuidanceParams,
    phase: Phase,
) -> (f64, f64, f64) {
    match phase {
        Phase::FixedAzimuth => (params.phase1_azimuth, 0.0, 0.0),
        Phase::TargetRelative => {
            (state.target_heading + params.desired_azimuth_offset, tgt.heading_rate, tgt.heading_accel)
        }
    }
}

pub fn sliding_vector(
    state: &EngagementState,
    rates: &RateVector,
    tgt: &TargetCommand,
    params: &GuidanceParams,
    phase: Phase,
) -> SlidingVector {
    let tan_el = params.desired_elevation.tan();
    let (psi_ref, rate_ref, _) = azimuth_reference(state, tgt, params, phase);
    SlidingVector {
        s1: rates.range_xy + params.k_a * state.range_xy,
        s2: rates.range_z + tan_el * rates.range_xy + params.k_b * (state.range_z + tan_el * state.range_xy),
        s3: (rates.azimuth - rate_ref) + params.k_c * wrap(state.azimuth - psi_ref),
    }
}

pub type Matrix3 = [[f64; 3]; 3];

/// Control-effectiveness matrix `A = L A_p`, with `L` adding `tan θd` times
/// the horizontal row to the vertical row.
pub fn assemble_a(state: &EngagementState, desired_elevation: f64) -> Matrix3 {
    let v = state.speed;
    let (sg, cg) = state.flight_path.sin_cos();
    let (s, c) = (state.heading - state.azimuth).sin_cos();
    let horizontal = [-c * cg, v * s * cg, v * c * sg];
    let vertical = [-sg, 0.0, -v * cg];
    let lateral = [-s * cg, -v * c * cg, v * s * sg];
    let tan_el = desired_elevation.tan();
    [horizontal, std::array::from_fn(|j| tan_el * horizontal[j] + vertical[j]), lateral]
}

/// Right-hand side of `A U = B` for the active phase.
pub fn assemble_b(
    state: &EngagementState,
    rates: &RateVector,
    tgt: &TargetCommand,
    params: &GuidanceParams,
    phase: Phase,
    sliding: &SlidingVector,
) -> [f64; 3] {
    let (n, m) = (params.n, params.m);
    let vp = state.speed;
    let vt = state.target_speed;
    let rxy = state.range_xy;
    let dpsi = rates.azimuth;
    let (sg, cg) = state.flight_path.sin_cos();
    let (sp, cp) = (state.heading - state.azimuth).sin_cos();
    let (st, ct) = (state.target_heading - state.azimuth).sin_cos();
    let (_, rate_ref, accel_ref) = azimuth_reference(state, tgt, params, phase);
    let tan_el = params.desired_elevation.tan();

    // Terms of R̈xy that do not involve the command.
    let drift_xy = vp * sp * cg * dpsi - tgt.speed_rate * ct + vt * st * (tgt.heading_rate - dpsi);

    let b1 = -params.k1 * signed_frac_pow(sliding.s1, n, m) + drift_xy - params.k_a * rates.range_xy;
    let b2 = tan_el * (drift_xy - params.k_b * rates.range_xy) - params.k2 * signed_frac_pow(sliding.s2, n, m)
        + params.k_b * vp * sg;
    let b3 = -rxy * params.k3 * signed_frac_pow(sliding.s3, n, m) - params.k_c * rxy * (dpsi - rate_ref)
        + accel_ref * rxy
        + rates.range_xy * dpsi
        - vp * cp * cg * dpsi
        - vt * ct * (tgt.heading_rate - dpsi)
        - tgt.speed_rate * st;
    [b1, b2, b3]
}

pub fn det3(a: &Matrix3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Solves `A U = B` by Cramer's rule.
pub fn raw_command(a: &Matrix3, b: &[f64; 3]) -> Result<GuidanceCommand> {
    let det = det3(a);
    if !(det.abs() > DET_EPSILON) {
        return Err(Error::Singular { det });
    }
    let column_swapped = |j: usize| -> f64 {
        let mut m = *a;
        for (row, bi) in m.iter_mut().zip(b) {
            row[j] = *bi;
        }
        det3(&m) / det
    };
    Ok(GuidanceCommand::new(column_swapped(0), column_swapped(1), column_swapped(2)))
}

/// Speed floor, flight-path guard and symmetric saturation.
pub fn clamp_command(raw: &GuidanceCommand, state: &EngagementState, params: &GuidanceParams) -> GuidanceCommand {
    let mut out = GuidanceCommand::new(raw.speed_rate, raw.heading_rate, raw.flight_path_rate);
    let flags = &mut out.flags;

    if state.speed < params.min_speed && out.speed_rate < 0.0 {
        out.speed_rate = 0.0;
        flags.slow_speed_floor = true;
    }
    if state.flight_path.cos() < params.min_cos_flight_path && out.flight_path_rate * state.flight_path > 0.0 {
        out.flight_path_rate = 0.0;
        flags.flight_path_limit = true;
    }

    let saturate = |v: f64, limit: f64, hit: &mut bool| {
        if v.abs() > limit {
            *hit = true;
            v.clamp(-limit, limit)
        } else {
            v
        }
    };
    out.speed_rate = saturate(out.speed_rate, params.max_speed_rate, &mut flags.speed_rate_saturated);
    out.heading_rate = saturate(out.heading_rate, params.max_heading_rate, &mut flags.heading_rate_saturated);
    out.flight_path_rate =
        saturate(out.flight_path_rate, params.max_flight_path_rate, &mut flags.flight_path_rate_saturated);
    out
}

/// Everything one guidance evaluation produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceSolution {
    pub sliding: SlidingVector,
    pub raw: GuidanceCommand,
    pub command: GuidanceCommand,
}

/// Full guidance evaluation: sliding vector, solve and limiter.
pub fn compute_command(
    state: &EngagementState,
    rates: &RateVector,
    tgt: &TargetCommand,
    params: &GuidanceParams,
    phase: Phase,
) -> Result<GuidanceSolution> {
    let sliding = sliding_vector(state, rates, tgt, params, phase);
    let a = assemble_a(state, params.desired_elevation);
    let b = assemble_b(state, rates, tgt, params, phase, &sliding);
    let raw = raw_command(&a, &b)?;
    let command = clamp_command(&raw, state, params);
    Ok(GuidanceSolution { sliding, raw, command })
}

/// Closed-form command from the scalar expansion of `A⁻¹ B`.
///
/// The horizontal and lateral rows are rotated into the velocity frame, which
/// decouples the heading rate; speed and flight-path rates then follow from a
/// 2×2 rotation. Kept as an independent route to cross-check
/// [`assemble_b`] and [`raw_command`].
pub fn expanded_command(
    state: &EngagementState,
    rates: &RateVector,
    tgt: &TargetCommand,
    params: &GuidanceParams,
    phase: Phase,
    sliding: &SlidingVector,
) -> Result<[f64; 3]> {
    let det = state.speed * state.speed * state.flight_path.cos();
    if !(det.abs() > DET_EPSILON) {
        return Err(Error::Singular { det });
    }
    let (n, m) = (params.n, params.m);
    let q1 = params.k1 * signed_frac_pow(sliding.s1, n, m);
    let q2 = params.k2 * signed_frac_pow(sliding.s2, n, m);
    let q3 = params.k3 * signed_frac_pow(sliding.s3, n, m);
    let (_, rate_ref, accel_ref) = azimuth_reference(state, tgt, params, phase);

    let vp = state.speed;
    let vt = state.target_speed;
    let rxy = state.range_xy;
    let dr = rates.range_xy;
    let dpsi = rates.azimuth;
    let (ka, kb, kc) = (params.k_a, params.k_b, params.k_c);
    let tan_el = params.desired_elevation.tan();
    let (sg, cg) = state.flight_path.sin_cos();
    let (s, c) = (state.heading - state.azimuth).sin_cos();
    let (s_pt, c_pt) = (state.heading - state.target_heading).sin_cos();
    let dvt = tgt.speed_rate;
    let dat = tgt.heading_rate;

    let speed_rate = cg
        * (q1 * c + ka * dr * c + q3 * rxy * s + kc * rxy * (dpsi - rate_ref) * s
            - accel_ref * rxy * s
            - dr * dpsi * s
            + dvt * c_pt
            + vt * (dat - dpsi) * s_pt)
        + sg * (q2 + tan_el * (kb - ka) * dr - tan_el * q1)
        - kb * vp * sg * sg;

    let heading_rate = (-q1 * s - ka * dr * s + vp * cg * dpsi + q3 * rxy * c - accel_ref * rxy * c
        + kc * rxy * (dpsi - rate_ref) * c
        - dr * dpsi * c
        - dvt * s_pt
        + vt * c_pt * (dat - dpsi))
        / (vp * cg);

    let flight_path_rate = (-q1 * (c * sg + tan_el * cg) - q3 * rxy * s * sg - dvt * sg * c_pt
        + q2 * cg
        + dr * (-ka * c * sg + dpsi * s * sg + (kb - ka) * tan_el * cg)
        - kc * rxy * (dpsi - rate_ref) * s * sg
        + accel_ref * rxy * s * sg
        - kb * vp * sg * cg
        - vt * sg * (dat - dpsi) * s_pt)
        / vp;

    Ok([speed_rate, heading_rate, flight_path_rate])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::relative_rates;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    pub(crate) fn table1_stationary() -> GuidanceParams {
        GuidanceParams {
            k_a: 0.015,
            k_b: 0.045,
            k_c: 0.03,
            k1: 0.1395,
            k2: 0.1784,
            k3: 0.0442,
            m: 5,
            n: 3,
            desired_azimuth_offset: PI,
            desired_elevation: FRAC_PI_4,
            phase1_azimuth: 0.0,
            min_speed: 0.1,
            min_cos_flight_path: 0.15,
            max_speed_rate: 10.0,
            max_heading_rate: FRAC_PI_2,
            max_flight_path_rate: FRAC_PI_2,
        }
    }

    fn stationary_state() -> EngagementState {
        EngagementState::from_relative(100.0, -100.0 * 3f64.sqrt(), -FRAC_PI_3, 5.0, -FRAC_PI_3, 0.0, 0.0, 0.0)
    }

    #[test]
    fn frac_pow_values() {
        assert!((signed_frac_pow(-3.5, 3, 5) + 2.120_512_4).abs() < 1e-7);
        assert_eq!(signed_frac_pow(0.0, 3, 5), 0.0);
        assert_eq!(signed_frac_pow(1.0, 3, 5), 1.0);
    }

    #[test]
    fn stationary_sliding_vector() {
        let s = stationary_state();
        let tgt = TargetCommand::default();
        let r = relative_rates(&s, &tgt).unwrap();
        let sv = sliding_vector(&s, &r, &tgt, &table1_stationary(), Phase::TargetRelative);
        assert!((sv.s1 + 3.5).abs() < 1e-12);
        assert!((sv.s2 + 8.29423).abs() < 1e-5);
        assert!((sv.s3 - 0.0628319).abs() < 1e-7);
    }

    #[test]
    fn fixed_azimuth_phase_uses_xi() {
        let s = stationary_state();
        let tgt = TargetCommand::from_rates(0.0, 0.4, 0.1);
        let r = relative_rates(&s, &tgt).unwrap();
        let p = GuidanceParams { phase1_azimuth: 0.25, ..table1_stationary() };
        let sv = sliding_vector(&s, &r, &tgt, &p, Phase::FixedAzimuth);
        assert!((sv.s3 - (r.azimuth + 0.03 * (-FRAC_PI_3 - 0.25))).abs() < 1e-15);
    }

    #[test]
    fn determinant_examples() {
        let s = stationary_state();
        assert!((det3(&assemble_a(&s, FRAC_PI_4)) - 25.0).abs() < 1e-12);
        let stopped = EngagementState { speed: 0.0, ..s };
        assert_eq!(det3(&assemble_a(&stopped, FRAC_PI_4)), 0.0);
        let b = [1.0, 2.0, 3.0];
        assert!(matches!(raw_command(&assemble_a(&stopped, FRAC_PI_4), &b), Err(Error::Singular { .. })));
    }

    #[test]
    fn stationary_target_b_ignores_target_terms() {
        let s = stationary_state();
        let tgt = TargetCommand::default();
        let r = relative_rates(&s, &tgt).unwrap();
        let p = table1_stationary();
        let sv = sliding_vector(&s, &r, &tgt, &p, Phase::TargetRelative);
        let b = assemble_b(&s, &r, &tgt, &p, Phase::TargetRelative, &sv);
        // moving the (zero-speed) target heading must not change B
        let turned = EngagementState { target_heading: 1.3, ..s };
        let b2 = assemble_b(&turned, &r, &tgt, &p, Phase::TargetRelative, &sv);
        assert_eq!(b, b2);
    }

    #[test]
    fn clamp_rules() {
        let p = table1_stationary();
        let slow = EngagementState { speed: 0.05, ..stationary_state() };
        let c = clamp_command(&GuidanceCommand::new(-2.0, 0.0, 0.0), &slow, &p);
        assert_eq!(c.speed_rate, 0.0);
        assert!(c.flags.slow_speed_floor);

        let steep = EngagementState { flight_path: 1.45, ..stationary_state() };
        assert!(steep.flight_path.cos() < 0.15);
        let c = clamp_command(&GuidanceCommand::new(0.0, 0.0, 0.3), &steep, &p);
        assert_eq!(c.flight_path_rate, 0.0);
        assert!(c.flags.flight_path_limit);
        // pulling out of the dive is allowed
        let c = clamp_command(&GuidanceCommand::new(0.0, 0.0, -0.3), &steep, &p);
        assert_eq!(c.flight_path_rate, -0.3);

        let c = clamp_command(&GuidanceCommand::new(15.0, -3.0, 0.1), &stationary_state(), &p);
        assert_eq!(c.speed_rate, 10.0);
        assert_eq!(c.heading_rate, -FRAC_PI_2);
        assert_eq!(c.flight_path_rate, 0.1);
        assert!(c.flags.speed_rate_saturated && c.flags.heading_rate_saturated);
        assert!(!c.flags.flight_path_rate_saturated);
        assert_eq!(c.flags.bits(), 0b01100);
    }
}
