//! Relative engagement kinematics between the UAV and a ground vehicle.
//!
//! The relative state (horizontal range, vertical range, azimuth) is
//! propagated alongside the inertial positions of both vehicles so the two
//! descriptions can be cross-checked at any time.

use serde::{Deserialize, Serialize};

use crate::angle::{clamp_elevation, wrap};
use crate::guidance::GuidanceCommand;
use crate::target::{target_command, TargetCommand, TargetProfile};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngagementState {
    /// Time, s.
    pub t: f64,
    /// Horizontal range, m.
    pub range_xy: f64,
    /// Target altitude minus UAV altitude, m. Negative while the UAV is above.
    pub range_z: f64,
    /// Azimuth of the line of sight, rad.
    pub azimuth: f64,
    /// UAV speed, m/s.
    pub speed: f64,
    /// UAV heading, rad.
    pub heading: f64,
    /// UAV flight path angle, rad.
    pub flight_path: f64,
    pub target_speed: f64,
    pub target_heading: f64,
    /// UAV inertial position (x, y, z), m.
    pub uav: [f64; 3],
    /// Target inertial position on the ground plane (x, y), m.
    pub target: [f64; 2],
}

impl EngagementState {
    /// Places the UAV above the origin and the target at the given relative
    /// geometry.
    #[allow(clippy::too_many_arguments)]
    pub fn from_relative(
        range_xy: f64,
        range_z: f64,
        azimuth: f64,
        speed: f64,
        heading: f64,
        flight_path: f64,
        target_speed: f64,
        target_heading: f64,
    ) -> Self {
        Self {
            t: 0.0,
            range_xy,
            range_z,
            azimuth: wrap(azimuth),
            speed,
            heading: wrap(heading),
            flight_path: clamp_elevation(flight_path),
            target_speed,
            target_heading: wrap(target_heading),
            uav: [0.0, 0.0, -range_z],
            target: [range_xy * azimuth.cos(), range_xy * azimuth.sin()],
        }
    }

    /// Horizontal range recomputed from the inertial positions.
    pub fn pose_range_xy(&self) -> f64 {
        (self.target[0] - self.uav[0]).hypot(self.target[1] - self.uav[1])
    }

    /// Azimuth recomputed from the inertial positions.
    pub fn pose_azimuth(&self) -> f64 {
        (self.target[1] - self.uav[1]).atan2(self.target[0] - self.uav[0])
    }

    pub fn slant_range(&self) -> f64 {
        self.range_xy.hypot(self.range_z)
    }

    /// Elevation of the line of sight, `atan(-R_z / R_xy)`.
    pub fn elevation(&self) -> f64 {
        (-self.range_z).atan2(self.range_xy)
    }

    fn is_finite(&self) -> bool {
        self.as_vector().iter().all(|v| v.is_finite())
    }

    fn as_vector(&self) -> [f64; DIM] {
        [
            self.range_xy,
            self.range_z,
            self.azimuth,
            self.speed,
            self.heading,
            self.flight_path,
            self.target_speed,
            self.target_heading,
            self.uav[0],
            self.uav[1],
            self.uav[2],
            self.target[0],
            self.target[1],
        ]
    }

    fn from_vector(t: f64, v: &[f64; DIM]) -> Self {
        Self {
            t,
            range_xy: v[0],
            range_z: v[1],
            azimuth: v[2],
            speed: v[3],
            heading: v[4],
            flight_path: v[5],
            target_speed: v[6],
            target_heading: v[7],
            uav: [v[8], v[9], v[10]],
            target: [v[11], v[12]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RateVector {
    pub range_xy: f64,
    pub range_z: f64,
    pub azimuth: f64,
    pub target_speed: f64,
    pub target_heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedGeometry {
    /// Slant range, m.
    pub range: f64,
    /// LOS elevation, rad.
    pub elevation: f64,
    pub range_rate: f64,
    pub elevation_rate: f64,
}

pub fn relative_rates(state: &EngagementState, tgt: &TargetCommand) -> Result<RateVector> {
    if !(state.range_xy > 0.0) {
        return Err(Error::DegenerateGeometry { range_xy: state.range_xy });
    }
    Ok(signed_range_rates(state, tgt))
}

/// Rate equations for a signed horizontal range; valid on either side of the
/// target as long as the range is nonzero.
fn signed_range_rates(state: &EngagementState, tgt: &TargetCommand) -> RateVector {
    let los = state.azimuth;
    let horiz = state.speed * state.flight_path.cos();
    let (t_sin, t_cos) = (state.target_heading - los).sin_cos();
    let (p_sin, p_cos) = (state.heading - los).sin_cos();
    RateVector {
        range_xy: state.target_speed * t_cos - horiz * p_cos,
        range_z: -state.speed * state.flight_path.sin(),
        azimuth: (state.target_speed * t_sin - horiz * p_sin) / state.range_xy,
        target_speed: tgt.speed_rate,
        target_heading: tgt.heading_rate,
    }
}

/// Slant range, elevation and their rates. `None` at zero slant range.
pub fn derived_geometry(state: &EngagementState, rates: &RateVector) -> Option<DerivedGeometry> {
    let range = state.slant_range();
    if !(range > 0.0) {
        return None;
    }
    let elevation = state.elevation();
    Some(DerivedGeometry {
        range,
        elevation,
        range_rate: (state.range_xy * rates.range_xy + state.range_z * rates.range_z) / range,
        elevation_rate: (state.speed * state.flight_path.sin() * elevation.cos() - rates.range_xy * elevation.sin())
            / range,
    })
}

/// Transverse relative velocity; zero when the LOS does not rotate.
pub fn collision_course_residual(state: &EngagementState) -> f64 {
    state.target_speed * (state.target_heading - state.azimuth).sin()
        - state.speed * state.flight_path.cos() * (state.heading - state.azimuth).sin()
}

const DIM: usize = 13;

fn derivative(t: f64, x: &[f64; DIM], u: &GuidanceCommand, profile: &TargetProfile) -> Result<[f64; DIM]> {
    let s = EngagementState::from_vector(t, x);
    if s.range_xy == 0.0 || !s.range_xy.is_finite() {
        return Err(Error::DegenerateGeometry { range_xy: s.range_xy });
    }
    let tgt = target_command(profile, t);
    let r = signed_range_rates(&s, &tgt);
    let horiz = s.speed * s.flight_path.cos();
    Ok([
        r.range_xy,
        r.range_z,
        r.azimuth,
        u.speed_rate,
        u.heading_rate,
        u.flight_path_rate,
        r.target_speed,
        r.target_heading,
        horiz * s.heading.cos(),
        horiz * s.heading.sin(),
        s.speed * s.flight_path.sin(),
        s.target_speed * s.target_heading.cos(),
        s.target_speed * s.target_heading.sin(),
    ])
}

fn axpy(x: &[f64; DIM], h: f64, k: &[f64; DIM]) -> [f64; DIM] {
    std::array::from_fn(|i| x[i] + h * k[i])
}

/// Advances the engagement by one classical RK4 step with the command held
/// constant over the step.
pub fn step(state: &EngagementState, u: &GuidanceCommand, profile: &TargetProfile, dt: f64) -> Result<EngagementState> {
    if dt == 0.0 {
        return Ok(*state);
    }
    let t = state.t;
    let x = state.as_vector();
    let half = 0.5 * dt;
    let k1 = derivative(t, &x, u, profile)?;
    let k2 = derivative(t + half, &axpy(&x, half, &k1), u, profile)?;
    let k3 = derivative(t + half, &axpy(&x, half, &k2), u, profile)?;
    let k4 = derivative(t + dt, &axpy(&x, dt, &k3), u, profile)?;
    let next: [f64; DIM] = std::array::from_fn(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));

    let mut s = EngagementState::from_vector(t + dt, &next);
    if !s.is_finite() {
        return Err(Error::Diverged { t: s.t });
    }
    // Passing over the target: a negative range along ψ is a positive range
    // along ψ + π.
    if s.range_xy < 0.0 {
        s.range_xy = -s.range_xy;
        s.azimuth += std::f64::consts::PI;
    }
    s.azimuth = wrap(s.azimuth);
    s.heading = wrap(s.heading);
    s.target_heading = wrap(s.target_heading);
    s.flight_path = clamp_elevation(s.flight_path);
    s.speed = s.speed.max(0.0);
    s.target_speed = s.target_speed.max(0.0);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, PI};

    fn stationary() -> EngagementState {
        EngagementState::from_relative(100.0, -100.0 * 3f64.sqrt(), -FRAC_PI_3, 5.0, -FRAC_PI_3, 0.0, 0.0, 0.0)
    }

    fn non_maneuvering() -> EngagementState {
        EngagementState { target_speed: 3.0, ..stationary() }
    }

    #[test]
    fn stationary_initial_rates() {
        let r = relative_rates(&stationary(), &TargetCommand::default()).unwrap();
        assert!((r.range_xy + 5.0).abs() < 1e-12);
        assert_eq!(r.range_z, 0.0);
        assert!(r.azimuth.abs() < 1e-15);
    }

    #[test]
    fn non_maneuvering_initial_rates() {
        let r = relative_rates(&non_maneuvering(), &TargetCommand::default()).unwrap();
        assert!((r.range_xy + 3.5).abs() < 1e-12);
        assert!((r.azimuth - 0.0259808).abs() < 1e-7);
    }

    #[test]
    fn level_flight_has_no_vertical_rate() {
        let s = EngagementState { heading: 2.0, speed: 7.0, ..non_maneuvering() };
        assert_eq!(relative_rates(&s, &TargetCommand::default()).unwrap().range_z, 0.0);
    }

    #[test]
    fn zero_range_is_degenerate() {
        let s = EngagementState { range_xy: 0.0, ..stationary() };
        assert!(matches!(relative_rates(&s, &TargetCommand::default()), Err(Error::DegenerateGeometry { .. })));
    }

    #[test]
    fn initial_geometry() {
        let s = stationary();
        let r = relative_rates(&s, &TargetCommand::default()).unwrap();
        let g = derived_geometry(&s, &r).unwrap();
        assert!((g.range - 200.0).abs() < 1e-12);
        assert!((g.elevation - FRAC_PI_3).abs() < 1e-12);
        // closing horizontally steepens the line of sight
        assert!((g.elevation_rate - 0.021_650_635).abs() < 1e-9);
    }

    #[test]
    fn flat_geometry_has_zero_elevation() {
        let s = EngagementState { range_z: 0.0, uav: [0.0, 0.0, 0.0], ..stationary() };
        let r = relative_rates(&s, &TargetCommand::default()).unwrap();
        let g = derived_geometry(&s, &r).unwrap();
        assert_eq!(g.elevation, 0.0);
        assert_eq!(g.elevation_rate, 0.0);
    }

    #[test]
    fn zero_slant_range_has_no_geometry() {
        let s = EngagementState { range_xy: 0.0, range_z: 0.0, ..stationary() };
        assert!(derived_geometry(&s, &RateVector::default()).is_none());
    }

    #[test]
    fn collision_course_residuals() {
        assert_eq!(collision_course_residual(&stationary()), 0.0);
        assert!((collision_course_residual(&non_maneuvering()) - 2.5980762).abs() < 1e-6);
        let matched = EngagementState {
            speed: 4.0,
            flight_path: 0.4,
            target_speed: 4.0 * 0.4f64.cos(),
            target_heading: 1.1,
            heading: 1.1,
            ..stationary()
        };
        assert!(collision_course_residual(&matched).abs() < 1e-15);
    }

    #[test]
    fn zero_step_is_identity() {
        let s = non_maneuvering();
        let u = GuidanceCommand::new(1.0, 0.2, 0.1);
        let next = step(&s, &u, &TargetProfile::constant_velocity(3.0, 0.0), 0.0).unwrap();
        assert_eq!(next, s);
    }

    #[test]
    fn single_step_against_fine_euler() {
        let s = stationary();
        let u = GuidanceCommand::new(0.0, 0.0, 0.0);
        let p = TargetProfile::stationary();
        let rk = step(&s, &u, &p, 1e-3).unwrap();
        // explicit Euler at 1e-6 over the same interval
        let mut e = s;
        for _ in 0..1000 {
            let r = relative_rates(&e, &TargetCommand::default()).unwrap();
            e.range_xy += 1e-6 * r.range_xy;
            e.range_z += 1e-6 * r.range_z;
            e.azimuth += 1e-6 * r.azimuth;
        }
        assert!((rk.range_xy - (100.0 - 5e-3)).abs() < 1e-6);
        assert!((rk.range_xy - e.range_xy).abs() < 1e-6);
    }

    #[test]
    fn folding_through_zero_range() {
        // 0.05 m short of overflying the target at 5 m/s
        let s = EngagementState::from_relative(0.05, -1.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0);
        let next = step(&s, &GuidanceCommand::default(), &TargetProfile::stationary(), 0.03).unwrap();
        assert!((next.range_xy - 0.1).abs() < 1e-9);
        assert!((wrap(next.azimuth - PI)).abs() < 1e-9);
        assert!((next.range_xy - next.pose_range_xy()).abs() < 1e-9);
    }
}
