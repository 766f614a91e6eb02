//! Records persisted by the platform.

use std::collections::BTreeMap;

use cleanroute_core::benefit::BenefitReport;
use cleanroute_core::exposure::ExposureSummary;
use cleanroute_core::geometry::Coord;
use cleanroute_core::netmodel::{EdgeId, NodeId};
use cleanroute_core::package::InfoPackage;
use cleanroute_core::routegen::{FeasibilityReport, Route, RouteMetrics, TravelMode};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlatformError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    /// Malformed or invariant-violating input.
    #[error("{0}")]
    Invalid(String),
    /// Valid input the analysis cannot handle (e.g. a route off the raster).
    #[error("{0}")]
    Domain(String),
    #[error("storage: {0}")]
    Storage(String),
}

impl PlatformError {
    pub fn kind(&self) -> &'static str {
        match self {
            PlatformError::NotFound(_) => "not_found",
            PlatformError::Conflict(_) => "conflict",
            PlatformError::Invalid(_) => "invalid_input",
            PlatformError::Domain(_) => "domain",
            PlatformError::Storage(_) => "storage",
        }
    }

    pub fn status(&self) -> u16 {
        match self {
            PlatformError::NotFound(_) => 404,
            PlatformError::Conflict(_) => 409,
            PlatformError::Invalid(_) | PlatformError::Domain(_) => 422,
            PlatformError::Storage(_) => 500,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "error": { "kind": self.kind(), "message": self.to_string() } })
    }
}

pub type Result<T, E = PlatformError> = std::result::Result<T, E>;

/// How the participant currently travels. Alternatives are always walk or
/// cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurrentMode {
    Walk,
    Cycle,
    Car,
}

impl CurrentMode {
    pub fn candidate_modes(self) -> &'static [TravelMode] {
        match self {
            CurrentMode::Walk => &[TravelMode::Walk],
            CurrentMode::Cycle => &[TravelMode::Cycle],
            CurrentMode::Car => &TravelMode::ALL,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CurrentMode::Walk => "walk",
            CurrentMode::Cycle => "cycle",
            CurrentMode::Car => "car",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    /// Intro questionnaire, stored verbatim.
    #[serde(default)]
    pub questionnaire: BTreeMap<String, String>,
    pub consent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteRecord {
    pub project_id: String,
    pub route_id: String,
    pub participant_id: String,
    pub home: Coord,
    pub school: Coord,
    pub mode: CurrentMode,
    pub geometry: Vec<Coord>,
    /// Client-supplied, opaque (RFC 3339 recommended).
    #[serde(default)]
    pub timestamp: String,
}

impl RouteRecord {
    /// Store key, `project:route`.
    pub fn key(&self) -> String {
        route_key(&self.project_id, &self.route_id)
    }
}

pub fn route_key(project_id: &str, route_id: &str) -> String {
    format!("{project_id}:{route_id}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub answer: bool,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub participant_id: String,
    /// Did you learn something new?
    pub q1_learned: Answer,
    /// Will you change your route?
    pub q2_will_change: Answer,
    /// Do you feel able to act on the advice?
    pub q3_can_act: Answer,
    /// 1 to 5.
    pub q4_rating: u8,
    #[serde(default)]
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentRouteAnalysis {
    pub mode: CurrentMode,
    pub length_m: f64,
    pub summary: ExposureSummary,
    /// Graph edges the recorded trace follows, when it could be matched.
    /// Candidates with exactly this edge sequence are excluded.
    pub matched_edges: Option<Vec<EdgeId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredAlternative {
    /// 1 = cleanest.
    pub rank: usize,
    pub route: Route,
    pub metrics: RouteMetrics,
    pub feasibility: FeasibilityReport,
    pub summary: ExposureSummary,
    /// Current mean minus this route's mean.
    pub delta_ugm3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub route_id: String,
    pub participant_id: String,
    pub k: usize,
    pub hour: u8,
    pub origin: NodeId,
    pub origin_snap_m: f64,
    pub dest: NodeId,
    pub dest_snap_m: f64,
    pub current: CurrentRouteAnalysis,
    /// Feasible alternatives, cleanest first.
    pub alternatives: Vec<ScoredAlternative>,
    /// Feasible candidates dropped because no sample fell on the raster.
    pub unscored_candidates: usize,
    pub report: BenefitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredPackage {
    /// `project:route:vN`.
    pub id: String,
    pub route_id: String,
    pub participant_id: String,
    pub version: u32,
    pub package: InfoPackage,
}

pub fn package_id(route_key: &str, version: u32) -> String {
    format!("{route_key}:v{version}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessSummary {
    pub project_id: Option<String>,
    pub n_participants: usize,
    pub n_with_beneficial_alternative: usize,
    /// Positive answer to q2 among those with a beneficial alternative.
    pub n_switched: usize,
    /// Percent; `None` when nobody had a beneficial alternative.
    pub switch_rate: Option<f64>,
    pub n_feedback: usize,
    pub mean_rating: Option<f64>,
}
