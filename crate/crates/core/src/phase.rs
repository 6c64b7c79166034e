//! Phase selection for the two-phase scheme and stage-wise gain re-tuning.

use serde::{Deserialize, Serialize};

use crate::guidance::{sliding_vector, GuidanceParams};
use crate::kinematics::{relative_rates, EngagementState};
use crate::target::TargetCommand;
use crate::tuning::{k1_sufficient, ratio_gains};
use crate::{Error, Result};

/// Which azimuth reference the third sliding variable tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Far field: fixed azimuth `ξ`.
    FixedAzimuth,
    /// Near field (and single-phase mode): `αt + ζd`.
    TargetRelative,
}

impl Phase {
    /// 1 for the far-field phase, 2 for the target-relative phase.
    pub fn number(self) -> u8 {
        match self {
            Phase::FixedAzimuth => 1,
            Phase::TargetRelative => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    SinglePhase,
    TwoPhase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub mode: PhaseMode,
    /// Horizontal range below which the target-relative phase is active, m.
    #[serde(default)]
    pub switch_range: f64,
    /// Params used in single-phase mode.
    pub single: GuidanceParams,
    /// Far-field params of the two-phase scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase1: Option<GuidanceParams>,
    /// Near-field params of the two-phase scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase2: Option<GuidanceParams>,
}

impl PhaseConfig {
    pub fn single(params: GuidanceParams) -> Self {
        Self { mode: PhaseMode::SinglePhase, switch_range: 0.0, single: params, phase1: None, phase2: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == PhaseMode::TwoPhase {
            if !(self.switch_range > 0.0) {
                return Err(Error::Config("two-phase mode needs switch_range > 0".into()));
            }
            if self.phase1.is_none() || self.phase2.is_none() {
                return Err(Error::Config("two-phase mode needs phase1 and phase2 params".into()));
            }
        }
        Ok(())
    }

    /// Params for `phase` under the configured mode.
    pub fn params_for(&self, phase: Phase) -> &GuidanceParams {
        match (self.mode, phase) {
            (PhaseMode::SinglePhase, _) => &self.single,
            (PhaseMode::TwoPhase, Phase::FixedAzimuth) => self.phase1.as_ref().unwrap_or(&self.single),
            (PhaseMode::TwoPhase, Phase::TargetRelative) => self.phase2.as_ref().unwrap_or(&self.single),
        }
    }

    /// All parameter sets in use under the configured mode.
    pub fn active_param_sets(&self) -> Vec<(&'static str, &GuidanceParams)> {
        match self.mode {
            PhaseMode::SinglePhase => vec![("single", &self.single)],
            PhaseMode::TwoPhase => [("phase1", &self.phase1), ("phase2", &self.phase2)]
                .into_iter()
                .filter_map(|(name, p)| p.as_ref().map(|p| (name, p)))
                .collect(),
        }
    }
}

pub fn active_phase(range_xy: f64, cfg: &PhaseConfig) -> Phase {
    match cfg.mode {
        PhaseMode::TwoPhase if range_xy > cfg.switch_range => Phase::FixedAzimuth,
        _ => Phase::TargetRelative,
    }
}

/// Stage-wise gain re-tuning. A new stage starts whenever the horizontal range
/// halves or grows by `increase_trigger` relative to the stage start; gains are
/// then regenerated at the current state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetunePolicy {
    pub enabled: bool,
    /// `k_a = range_gain / R_stage`.
    #[serde(default = "RetunePolicy::default_range_gain")]
    pub range_gain: f64,
    /// `k_b = kb_ratio * k_a`.
    #[serde(default = "RetunePolicy::default_kb_ratio")]
    pub kb_ratio: f64,
    /// `k_c = kc_ratio * k_a`.
    #[serde(default = "RetunePolicy::default_kc_ratio")]
    pub kc_ratio: f64,
    /// Multiplier on the sufficient `k1`.
    #[serde(default = "RetunePolicy::default_k1_margin")]
    pub k1_margin: f64,
    /// Range growth that starts a new stage, m.
    #[serde(default = "RetunePolicy::default_increase_trigger")]
    pub increase_trigger: f64,
}

impl RetunePolicy {
    fn default_range_gain() -> f64 {
        1.5
    }
    fn default_kb_ratio() -> f64 {
        3.0
    }
    fn default_kc_ratio() -> f64 {
        2.0
    }
    fn default_k1_margin() -> f64 {
        1.0
    }
    fn default_increase_trigger() -> f64 {
        5.0
    }

    pub fn enabled() -> Self {
        Self { enabled: true, ..Self::default() }
    }

    /// Regenerates the gains of `base` at `state`.
    ///
    /// Angles, exponent and limits are kept. If S1 is already zero the
    /// reaching gains are left unchanged since the ratio rule is undefined.
    pub fn retune(
        &self,
        base: &GuidanceParams,
        state: &EngagementState,
        tgt: &TargetCommand,
        phase: Phase,
    ) -> Result<GuidanceParams> {
        let range = state.range_xy;
        let k_a = self.range_gain / range;
        let mut p = GuidanceParams { k_a, k_b: self.kb_ratio * k_a, k_c: self.kc_ratio * k_a, ..*base };
        let rates = relative_rates(state, tgt)?;
        let s = sliding_vector(state, &rates, tgt, &p, phase);
        let k1 = self.k1_margin * k1_sufficient(s.s1, range, rates.range_xy, k_a, p.m, p.n);
        if s.s1.abs() > 1e-9 && k1 > 0.0 {
            let (k2, k3) = ratio_gains(k1, s.s1, s.s2, s.s3, p.m, p.n)?;
            p.k1 = k1;
            p.k2 = k2;
            p.k3 = k3;
        }
        Ok(p)
    }
}

impl Default for RetunePolicy {
    fn default() -> Self {
        Self {
            enabled: false,
            range_gain: Self::default_range_gain(),
            kb_ratio: Self::default_kb_ratio(),
            kc_ratio: Self::default_kc_ratio(),
            k1_margin: Self::default_k1_margin(),
            increase_trigger: Self::default_increase_trigger(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageState {
    pub stage_index: u32,
    pub stage_start_range: f64,
    pub params: GuidanceParams,
}

impl StageState {
    pub fn new(params: GuidanceParams, range_xy: f64) -> Self {
        Self { stage_index: 0, stage_start_range: range_xy, params }
    }

    /// Starts the next stage at the current range with `params`.
    pub fn advance(&self, params: GuidanceParams, range_xy: f64) -> Self {
        Self { stage_index: self.stage_index + 1, stage_start_range: range_xy, params }
    }
}

/// Whether `range_xy` triggers a new stage relative to `stage_start`.
pub fn stage_triggered(range_xy: f64, stage_start: f64, policy: &RetunePolicy) -> bool {
    range_xy <= 0.5 * stage_start || range_xy >= stage_start + policy.increase_trigger
}

/// Advances to a re-tuned stage when the range trigger fires; otherwise
/// returns `stage` unchanged. Disabled policies never advance.
pub fn stage_update(
    stage: &StageState,
    state: &EngagementState,
    tgt: &TargetCommand,
    phase: Phase,
    policy: &RetunePolicy,
) -> Result<StageState> {
    if !policy.enabled || !stage_triggered(state.range_xy, stage.stage_start_range, policy) {
        return Ok(*stage);
    }
    let params = policy.retune(&stage.params, state, tgt, phase)?;
    Ok(stage.advance(params, state.range_xy))
}
