use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Wraps an angle into (-π, π].
pub fn wrap(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a > PI {
        a - TAU
    } else {
        a
    }
}

/// Clamps a flight path angle into [-π/2, π/2].
pub fn clamp_elevation(angle: f64) -> f64 {
    angle.clamp(-FRAC_PI_2, FRAC_PI_2)
}
