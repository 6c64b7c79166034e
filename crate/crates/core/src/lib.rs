//! Sliding-mode landing guidance for a UAV approaching a ground vehicle at
//! prescribed azimuth and elevation approach angles.
//!
//! The crate is split along the guidance loop:
//!
//! * [`kinematics`] holds the relative engagement state, its rate equations
//!   and a fixed-step RK4 propagator that also carries inertial poses.
//! * [`target`] generates ground-vehicle motion for the supported target
//!   classes, plus a backward-difference turn-acceleration estimator.
//! * [`guidance`] builds the sliding vector, assembles and solves `A U = B`
//!   and applies the command limiter.
//! * [`phase`] selects single/two-phase sliding variables and re-tunes gains
//!   over range stages.
//! * [`tuning`] evaluates the gain selection criteria and validates params.
//! * [`sim`] closes the loop, detects touchdown and computes run metrics.
//! * [`config`] is the JSON scenario schema, the presets and the CSV writer.

// negated comparisons are used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angle;
pub mod config;
pub mod error;
pub mod guidance;
pub mod kinematics;
pub mod phase;
pub mod sim;
pub mod target;
pub mod tuning;

pub use error::{Error, Result};
pub use guidance::{ClampFlags, GuidanceCommand, GuidanceParams, SlidingVector};
pub use kinematics::{DerivedGeometry, EngagementState, RateVector};
pub use phase::{Phase, PhaseConfig, PhaseMode, RetunePolicy, StageState};
pub use sim::{run_scenario, ScenarioConfig, SummaryMetrics, TrajectoryLog};
pub use target::{TargetCommand, TargetProfile};
