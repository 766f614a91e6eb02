//! Feasibility rules for walking and cycling alternatives.
//!
//! Distances are compared in meters. All applicable rules are conjoined; at
//! a current length of exactly 3 km both detour-slack rules apply, so the
//! tighter 250 m slack governs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{RouteMetrics, TravelMode};

const CYCLE_CURRENT_MAX_M: f64 = 2_500.0;
const CYCLE_CANDIDATE_MAX_M: f64 = 3_000.0;
const WALK_CURRENT_MAX_M: f64 = 1_000.0;
const WALK_CANDIDATE_MAX_M: f64 = 1_250.0;
const SHORT_TRIP_BOUNDARY_M: f64 = 3_000.0;
const SHORT_TRIP_SLACK_M: f64 = 250.0;
const LONG_TRIP_SLACK_M: f64 = 500.0;
const MIN_BIKE_LANE_FRACTION: f64 = 0.5;
const MAX_CROSSINGS: u32 = 3;
const MAX_MEAN_GRADIENT_PCT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleId {
    /// Cycling candidate at most 3 km when the current trip is at most 2.5 km.
    R1,
    /// Walking candidate at most 1.25 km when the current trip is at most 1 km.
    R2,
    /// Detour at most 250 m when the current trip is at most 3 km.
    R3,
    /// Detour at most 500 m when the current trip is at least 3 km.
    R4,
    /// Walking: footpath along the whole route.
    R5,
    /// Cycling: segregated bike lane along at least half the route.
    R6,
    /// At most 3 crossings.
    R7,
    /// Mean gradient at most 10%.
    R8,
}

impl RuleId {
    pub const ALL: [RuleId; 8] = [
        RuleId::R1,
        RuleId::R2,
        RuleId::R3,
        RuleId::R4,
        RuleId::R5,
        RuleId::R6,
        RuleId::R7,
        RuleId::R8,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    fn check(applicable: bool, ok: bool) -> Self {
        match (applicable, ok) {
            (false, _) => Verdict::NotApplicable,
            (true, true) => Verdict::Pass,
            (true, false) => Verdict::Fail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub verdicts: BTreeMap<RuleId, Verdict>,
    /// True iff no applicable rule failed.
    pub overall: bool,
}

impl FeasibilityReport {
    pub fn verdict(&self, rule: RuleId) -> Verdict {
        self.verdicts[&rule]
    }

    pub fn failed(&self) -> impl Iterator<Item = RuleId> + '_ {
        self.verdicts
            .iter()
            .filter(|(_, v)| **v == Verdict::Fail)
            .map(|(r, _)| *r)
    }
}

/// Screens a candidate against a current trip of `current_length_m`.
///
/// Only the current trip's length matters, so the current trip may be any
/// mode (including a recorded car trip).
pub fn screen_feasible(
    current_length_m: f64,
    candidate_mode: TravelMode,
    candidate: &RouteMetrics,
) -> FeasibilityReport {
    let walk = candidate_mode == TravelMode::Walk;
    let cycle = candidate_mode == TravelMode::Cycle;
    let cand = candidate.length_m;
    let detour = cand - current_length_m;

    let verdicts: BTreeMap<RuleId, Verdict> = [
        (
            RuleId::R1,
            Verdict::check(
                cycle && current_length_m <= CYCLE_CURRENT_MAX_M,
                cand <= CYCLE_CANDIDATE_MAX_M,
            ),
        ),
        (
            RuleId::R2,
            Verdict::check(
                walk && current_length_m <= WALK_CURRENT_MAX_M,
                cand <= WALK_CANDIDATE_MAX_M,
            ),
        ),
        (
            RuleId::R3,
            Verdict::check(
                current_length_m <= SHORT_TRIP_BOUNDARY_M,
                detour <= SHORT_TRIP_SLACK_M,
            ),
        ),
        (
            RuleId::R4,
            Verdict::check(
                current_length_m >= SHORT_TRIP_BOUNDARY_M,
                detour <= LONG_TRIP_SLACK_M,
            ),
        ),
        (
            RuleId::R5,
            Verdict::check(walk, candidate.footpath_fraction >= 1.0),
        ),
        (
            RuleId::R6,
            Verdict::check(
                cycle,
                candidate.bike_lane_fraction >= MIN_BIKE_LANE_FRACTION,
            ),
        ),
        (
            RuleId::R7,
            Verdict::check(true, candidate.total_crossings <= MAX_CROSSINGS),
        ),
        (
            RuleId::R8,
            Verdict::check(true, candidate.mean_gradient_pct <= MAX_MEAN_GRADIENT_PCT),
        ),
    ]
    .into_iter()
    .collect();

    let overall = verdicts.values().all(|v| *v != Verdict::Fail);
    FeasibilityReport { verdicts, overall }
}
