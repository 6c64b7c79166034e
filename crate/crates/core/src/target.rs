//! Ground-vehicle motion models.
//!
//! Every model is a function of time only: it yields the speed rate, the
//! heading rate and the exact heading acceleration the guidance law consumes.
//! Speed and heading themselves are integrated with the engagement state.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Stationary,
    ConstantVelocity,
    /// Constant heading rate, circular track.
    ConstantTurn,
    /// Heading rate `A sin(ω t)`.
    SinusoidalTurn,
    /// Piecewise-constant thrust magnitude and direction.
    ThrustManeuver,
}

/// One piece of a [`TargetKind::ThrustManeuver`] profile, active from `start`
/// until the next segment begins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThrustSegment {
    pub start: f64,
    /// Thrust acceleration magnitude, m/s².
    pub accel: f64,
    /// Angle between thrust and heading, rad.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetProfile {
    pub kind: TargetKind,
    /// Initial speed, m/s.
    pub speed: f64,
    /// Initial heading, rad.
    pub heading: f64,
    #[serde(default)]
    pub turn_rate: f64,
    #[serde(default)]
    pub turn_amplitude: f64,
    #[serde(default)]
    pub turn_frequency: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<ThrustSegment>,
}

impl TargetProfile {
    pub fn stationary() -> Self {
        Self::moving(TargetKind::Stationary, 0.0, 0.0)
    }

    pub fn constant_velocity(speed: f64, heading: f64) -> Self {
        Self::moving(TargetKind::ConstantVelocity, speed, heading)
    }

    pub fn constant_turn(speed: f64, heading: f64, turn_rate: f64) -> Self {
        Self { turn_rate, ..Self::moving(TargetKind::ConstantTurn, speed, heading) }
    }

    pub fn sinusoidal_turn(speed: f64, heading: f64, amplitude: f64, frequency: f64) -> Self {
        Self {
            turn_amplitude: amplitude,
            turn_frequency: frequency,
            ..Self::moving(TargetKind::SinusoidalTurn, speed, heading)
        }
    }

    pub fn thrust_maneuver(speed: f64, heading: f64, segments: Vec<ThrustSegment>) -> Self {
        Self { segments, ..Self::moving(TargetKind::ThrustManeuver, speed, heading) }
    }

    fn moving(kind: TargetKind, speed: f64, heading: f64) -> Self {
        Self { kind, speed, heading, turn_rate: 0.0, turn_amplitude: 0.0, turn_frequency: 0.0, segments: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.speed >= 0.0) || !self.speed.is_finite() {
            return Err(Error::Config(format!("target speed must be >= 0, got {}", self.speed)));
        }
        if self.kind == TargetKind::Stationary && self.speed != 0.0 {
            return Err(Error::Config("stationary target must have zero speed".into()));
        }
        if self.kind == TargetKind::ThrustManeuver && self.segments.windows(2).any(|w| w[1].start <= w[0].start) {
            return Err(Error::Config("thrust segments must have increasing start times".into()));
        }
        Ok(())
    }
}

/// Target rates at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TargetCommand {
    /// Speed rate, m/s².
    pub speed_rate: f64,
    /// Heading rate, rad/s.
    pub heading_rate: f64,
    /// Heading acceleration, rad/s².
    pub heading_accel: f64,
    /// Thrust acceleration magnitude, m/s².
    pub accel: f64,
    /// Thrust direction relative to heading, rad.
    pub delta: f64,
}

impl TargetCommand {
    /// Builds a command from speed and heading rates, filling in the
    /// equivalent thrust polar form.
    pub fn from_rates(speed_rate: f64, heading_rate: f64, heading_accel: f64) -> Self {
        Self {
            speed_rate,
            heading_rate,
            heading_accel,
            accel: speed_rate.hypot(heading_rate),
            delta: heading_rate.atan2(speed_rate),
        }
    }

    /// Builds a command from thrust magnitude and direction.
    pub fn from_thrust(accel: f64, delta: f64, heading_accel: f64) -> Self {
        Self { speed_rate: accel * delta.cos(), heading_rate: accel * delta.sin(), heading_accel, accel, delta }
    }
}

pub fn target_command(profile: &TargetProfile, t: f64) -> TargetCommand {
    match profile.kind {
        TargetKind::Stationary | TargetKind::ConstantVelocity => TargetCommand::from_rates(0.0, 0.0, 0.0),
        TargetKind::ConstantTurn => TargetCommand::from_rates(0.0, profile.turn_rate, 0.0),
        TargetKind::SinusoidalTurn => {
            let (a, w) = (profile.turn_amplitude, profile.turn_frequency);
            TargetCommand::from_rates(0.0, a * (w * t).sin(), a * w * (w * t).cos())
        }
        TargetKind::ThrustManeuver => match profile.segments.iter().rev().find(|s| s.start <= t) {
            Some(seg) => TargetCommand::from_thrust(seg.accel, seg.delta, 0.0),
            None => TargetCommand::from_rates(0.0, 0.0, 0.0),
        },
    }
}

/// Backward first difference of the two most recent `(t, heading_rate)`
/// samples.
pub fn estimate_heading_accel(history: &[(f64, f64)]) -> Result<f64> {
    match history {
        [.., (t0, w0), (t1, w1)] if t1 != t0 => Ok((w1 - w0) / (t1 - t0)),
        _ => Err(Error::InsufficientHistory { have: history.len() }),
    }
}

/// Streaming form of [`estimate_heading_accel`] with a two-sample buffer.
#[derive(Debug, Clone, Default)]
pub struct HeadingAccelEstimator {
    history: VecDeque<(f64, f64)>,
}

impl HeadingAccelEstimator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: f64, heading_rate: f64) {
        if self.history.back().is_some_and(|&(tb, _)| tb == t) {
            self.history.pop_back();
        }
        self.history.push_back((t, heading_rate));
        while self.history.len() > 2 {
            self.history.pop_front();
        }
    }

    pub fn estimate(&self) -> Result<f64> {
        let (a, b) = self.history.as_slices();
        let samples: Vec<(f64, f64)> = a.iter().chain(b).copied().collect();
        estimate_heading_accel(&samples)
    }
}

#[cfg(test)]
#[allow(clippy::approx_constant)] // rounded reference values
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    #[test]
    fn constant_turn_rates() {
        let p = TargetProfile::constant_turn(3.0, 0.0, FRAC_PI_6);
        for t in [0.0, 1.7, 40.0] {
            let c = target_command(&p, t);
            assert!((c.heading_rate - 0.523599).abs() < 1e-6);
            assert_eq!(c.heading_accel, 0.0);
            assert_eq!(c.speed_rate, 0.0);
        }
    }

    #[test]
    fn sinusoidal_turn_at_two_seconds() {
        let p = TargetProfile::sinusoidal_turn(3.0, 0.0, FRAC_PI_6, FRAC_PI_4);
        let c = target_command(&p, 2.0);
        assert!((c.heading_rate - 0.523599).abs() < 1e-6);
        assert!(c.heading_accel.abs() < 1e-12);
    }

    #[test]
    fn stationary_is_all_zero() {
        let c = target_command(&TargetProfile::stationary(), 12.0);
        assert_eq!((c.speed_rate, c.heading_rate, c.heading_accel), (0.0, 0.0, 0.0));
    }

    #[test]
    fn thrust_segments_select_latest_start() {
        let p = TargetProfile::thrust_maneuver(
            2.0,
            0.0,
            vec![
                ThrustSegment { start: 0.0, accel: 1.0, delta: 0.0 },
                ThrustSegment { start: 5.0, accel: 0.5, delta: 1.0 },
            ],
        );
        assert_eq!(target_command(&p, 1.0).speed_rate, 1.0);
        let c = target_command(&p, 6.0);
        assert!((c.speed_rate - 0.5 * 1f64.cos()).abs() < 1e-15);
        assert!((c.heading_rate - 0.5 * 1f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn backward_difference() {
        assert!((estimate_heading_accel(&[(0.0, 0.0), (0.1, 0.05)]).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(estimate_heading_accel(&[(0.0, 0.3), (0.5, 0.3), (1.0, 0.3)]).unwrap(), 0.0);
        assert_eq!(estimate_heading_accel(&[(0.0, 1.0)]), Err(Error::InsufficientHistory { have: 1 }));
        assert!(estimate_heading_accel(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn sampled_sinusoid_matches_analytic_derivative() {
        let p = TargetProfile::sinusoidal_turn(3.0, 0.0, FRAC_PI_6, FRAC_PI_4);
        let dt = 1e-3;
        let mut est = HeadingAccelEstimator::new();
        for k in 990..=1000 {
            let t = k as f64 * dt;
            est.push(t, target_command(&p, t).heading_rate);
        }
        let exact = target_command(&p, 1.0).heading_accel;
        assert!((est.estimate().unwrap() - exact).abs() < 1e-2);
    }

    #[test]
    fn estimator_error_is_first_order() {
        let p = TargetProfile::sinusoidal_turn(3.0, 0.0, FRAC_PI_6, FRAC_PI_4);
        let err = |dt: f64| {
            let h =
                [(1.0 - dt, target_command(&p, 1.0 - dt).heading_rate), (1.0, target_command(&p, 1.0).heading_rate)];
            (estimate_heading_accel(&h).unwrap() - target_command(&p, 1.0).heading_accel).abs()
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((ratio - 2.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn polar_reconstruction() {
        let profiles = [
            TargetProfile::stationary(),
            TargetProfile::constant_velocity(3.0, 0.2),
            TargetProfile::constant_turn(3.0, 0.0, FRAC_PI_6),
            TargetProfile::sinusoidal_turn(3.0, 0.0, FRAC_PI_6, FRAC_PI_4),
            TargetProfile::thrust_maneuver(3.0, 0.0, vec![ThrustSegment { start: 0.0, accel: 0.7, delta: -2.0 }]),
        ];
        for p in &profiles {
            for k in 0..50 {
                let c = target_command(p, k as f64 * 0.37);
                assert!((c.accel * c.delta.cos() - c.speed_rate).abs() < 1e-15);
                assert!((c.accel * c.delta.sin() - c.heading_rate).abs() < 1e-15);
            }
        }
    }
}
