//! Study workflow operations over the store.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cleanroute_core::benefit::{builtin_risk_models, compare};
use cleanroute_core::exposure::{
    load_raster, rank_alternatives, route_exposure, ConcentrationRaster, ExposureError,
    ExposureSummary, Scored, DEFAULT_HOUR,
};
use cleanroute_core::geometry::{polyline_length, Coord};
use cleanroute_core::netmodel::{
    load_network, snap_point, to_json, validate_graph, ValidationReport, GEOMETRY_LENGTH_TOLERANCE,
};
use cleanroute_core::package::{build_package, builtin_catalog, PackageRoute};
use cleanroute_core::routegen::{
    route_from_nodes, screen_candidates, Alternative, Route, TravelMode, DEFAULT_K,
};
use cleanroute_core::{NodeId, StreetGraph};

use crate::model::{
    package_id, Analysis, CurrentRouteAnalysis, EffectivenessSummary, FeedbackRecord, Participant,
    PlatformError, Result, RouteRecord, ScoredAlternative, StoredPackage,
};
use crate::store::StoreData;

/// Default distance allowed between a recorded trace's endpoints and the
/// declared home and school.
pub const DEFAULT_SNAP_TOLERANCE_M: f64 = 250.0;

/// A trace vertex this close to a node is taken to pass through it.
const MATCH_TOLERANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Config {
    pub snap_tolerance_m: f64,
    /// An alternative is beneficial when it lowers the mean by more than this.
    pub beneficial_threshold_ugm3: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            snap_tolerance_m: DEFAULT_SNAP_TOLERANCE_M,
            beneficial_threshold_ugm3: 0.0,
        }
    }
}

pub struct Platform {
    data: StoreData,
    graph: Option<Arc<StreetGraph>>,
    rasters: BTreeMap<u8, Arc<ConcentrationRaster>>,
    path: Option<PathBuf>,
    autosave: bool,
    config: Config,
}

fn invalid(e: impl std::fmt::Display) -> PlatformError {
    PlatformError::Invalid(e.to_string())
}

fn domain(e: impl std::fmt::Display) -> PlatformError {
    PlatformError::Domain(e.to_string())
}

fn check_id(what: &str, id: &str) -> Result<()> {
    if id.trim().is_empty() {
        return Err(PlatformError::Invalid(format!("{what} must be non-empty")));
    }
    if id.contains([':', '/']) {
        return Err(PlatformError::Invalid(format!(
            "{what} {id:?} must not contain ':' or '/'"
        )));
    }
    Ok(())
}

impl Platform {
    pub fn in_memory(config: Config) -> Self {
        Self {
            data: StoreData::default(),
            graph: None,
            rasters: BTreeMap::new(),
            path: None,
            autosave: true,
            config,
        }
    }

    /// Opens the store at `path`, creating an empty one on first save.
    pub fn open(path: &Path, config: Config) -> Result<Self> {
        let mut p = Self::from_data(StoreData::load(path)?, config)?;
        p.path = Some(path.to_path_buf());
        Ok(p)
    }

    pub fn from_data(data: StoreData, config: Config) -> Result<Self> {
        let corrupt = |e: String| PlatformError::Storage(format!("corrupt store: {e}"));
        let graph = match &data.network {
            Some(v) => {
                let bytes = serde_json::to_vec(v).map_err(|e| corrupt(e.to_string()))?;
                Some(Arc::new(
                    load_network(&bytes).map_err(|e| corrupt(e.to_string()))?,
                ))
            }
            None => None,
        };
        let mut rasters = BTreeMap::new();
        for (&hour, text) in &data.rasters {
            let r = load_raster(text.as_bytes(), hour).map_err(|e| corrupt(e.to_string()))?;
            rasters.insert(hour, Arc::new(r));
        }
        Ok(Self {
            data,
            graph,
            rasters,
            path: None,
            autosave: true,
            config,
        })
    }

    pub fn data(&self) -> &StoreData {
        &self.data
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    /// With autosave off, changes reach disk only on [`Platform::flush`].
    pub fn set_autosave(&mut self, on: bool) {
        self.autosave = on;
    }

    pub fn flush(&self) -> Result<()> {
        match &self.path {
            Some(p) => self.data.save(p),
            None => Ok(()),
        }
    }

    fn save(&self) -> Result<()> {
        if self.autosave {
            self.flush()
        } else {
            Ok(())
        }
    }

    // -- ingestion ----------------------------------------------------------

    /// Replaces the street network. Rejected when validation finds errors;
    /// warnings are returned.
    pub fn ingest_network(&mut self, source: &[u8]) -> Result<ValidationReport> {
        let graph = load_network(source).map_err(invalid)?;
        let report = validate_graph(&graph);
        if report.has_errors() {
            let msgs: Vec<String> = report
                .errors()
                .map(|v| format!("{}: {}", v.entity, v.message))
                .collect();
            return Err(PlatformError::Invalid(format!(
                "network failed validation: {}",
                msgs.join("; ")
            )));
        }
        let doc = serde_json::from_slice(&to_json(&graph))
            .map_err(|e| PlatformError::Storage(e.to_string()))?;
        self.data.network = Some(doc);
        self.graph = Some(Arc::new(graph));
        self.save()?;
        Ok(report)
    }

    /// Replaces the concentration raster for `hour`.
    pub fn ingest_raster(&mut self, hour: u8, source: &[u8]) -> Result<()> {
        if hour > 23 {
            return Err(PlatformError::Invalid(format!(
                "hour must be 0-23, got {hour}"
            )));
        }
        let raster = load_raster(source, hour).map_err(invalid)?;
        self.data.rasters.insert(hour, raster.to_ascii_grid());
        self.rasters.insert(hour, Arc::new(raster));
        self.save()
    }

    pub fn graph(&self) -> Option<&Arc<StreetGraph>> {
        self.graph.as_ref()
    }

    pub fn raster(&self, hour: u8) -> Option<&Arc<ConcentrationRaster>> {
        self.rasters.get(&hour)
    }

    // -- participants and routes ---------------------------------------------

    /// Creates or replaces a participant.
    pub fn create_participant(&mut self, participant: Participant) -> Result<()> {
        check_id("participant id", &participant.id)?;
        self.data
            .participants
            .insert(participant.id.clone(), participant);
        self.save()
    }

    pub fn participant(&self, id: &str) -> Result<&Participant> {
        self.data
            .participants
            .get(id)
            .ok_or_else(|| PlatformError::NotFound(format!("unknown participant {id}")))
    }

    fn validate_route(&self, rec: &RouteRecord) -> Result<()> {
        check_id("project_id", &rec.project_id)?;
        check_id("route_id", &rec.route_id)?;
        check_id("participant_id", &rec.participant_id)?;
        if rec.geometry.len() < 2 {
            return Err(invalid("geometry needs at least 2 points"));
        }
        if !rec.home.is_finite()
            || !rec.school.is_finite()
            || !rec.geometry.iter().all(Coord::is_finite)
        {
            return Err(invalid("coordinates must be finite"));
        }
        if polyline_length(&rec.geometry) <= 0.0 {
            return Err(invalid("geometry has zero length"));
        }
        let tol = self.config.snap_tolerance_m;
        let ends = [
            ("home", rec.home, rec.geometry[0]),
            ("school", rec.school, rec.geometry[rec.geometry.len() - 1]),
        ];
        for (what, declared, end) in ends {
            let d = declared.distance(&end);
            if d > tol {
                return Err(PlatformError::Invalid(format!(
                    "geometry endpoint is {d:.1} m from {what} (tolerance {tol} m)"
                )));
            }
        }
        Ok(())
    }

    /// Stores a route record, replacing any earlier record with the same
    /// project and route id. A replaced record's analysis is dropped.
    pub fn submit_route(&mut self, rec: RouteRecord) -> Result<String> {
        let participant = self.participant(&rec.participant_id)?;
        if !participant.consent {
            return Err(PlatformError::Conflict(format!(
                "participant {} has not given consent",
                rec.participant_id
            )));
        }
        self.validate_route(&rec)?;
        let key = rec.key();
        if self.data.routes.get(&key) != Some(&rec) {
            self.data.analyses.remove(&key);
        }
        self.data.routes.insert(key.clone(), rec);
        self.save()?;
        Ok(key)
    }

    pub fn route(&self, key: &str) -> Result<&RouteRecord> {
        self.data
            .routes
            .get(key)
            .ok_or_else(|| PlatformError::NotFound(format!("unknown route {key}")))
    }

    // -- analysis -------------------------------------------------------------

    /// Snapshots everything an analysis needs, so it can run without holding
    /// the platform.
    pub fn prepare_analysis(
        &self,
        key: &str,
        k: Option<usize>,
        hour: Option<u8>,
    ) -> Result<AnalysisJob> {
        let record = self.route(key)?.clone();
        let k = k.unwrap_or(DEFAULT_K);
        if k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        let hour = hour.unwrap_or(DEFAULT_HOUR);
        let graph = self
            .graph
            .clone()
            .ok_or_else(|| PlatformError::Conflict("no street network loaded".into()))?;
        let raster = self.rasters.get(&hour).cloned().ok_or_else(|| {
            PlatformError::Conflict(format!("no concentration raster loaded for hour {hour}"))
        })?;
        Ok(AnalysisJob {
            key: key.to_owned(),
            record,
            k,
            hour,
            graph,
            raster,
        })
    }

    /// Stores a finished analysis unless its route changed in the meantime.
    pub fn commit_analysis(&mut self, job: &AnalysisJob, analysis: Analysis) -> Result<&Analysis> {
        if self.data.routes.get(&job.key) != Some(&job.record) {
            return Err(PlatformError::Conflict(format!(
                "route {} changed while it was being analyzed",
                job.key
            )));
        }
        self.data.analyses.insert(job.key.clone(), analysis);
        self.save()?;
        Ok(&self.data.analyses[&job.key])
    }

    pub fn compute_alternatives(
        &mut self,
        key: &str,
        k: Option<usize>,
        hour: Option<u8>,
    ) -> Result<&Analysis> {
        let job = self.prepare_analysis(key, k, hour)?;
        let analysis = job.run()?;
        self.commit_analysis(&job, analysis)
    }

    pub fn analysis(&self, key: &str) -> Result<&Analysis> {
        self.route(key)?;
        self.data
            .analyses
            .get(key)
            .ok_or_else(|| PlatformError::NotFound(format!("route {key} has not been analyzed")))
    }

    // -- packages -------------------------------------------------------------

    /// Builds a new package version from the stored analysis.
    pub fn issue_package(&mut self, key: &str) -> Result<&StoredPackage> {
        let rec = self.route(key)?;
        let analysis = self
            .data
            .analyses
            .get(key)
            .ok_or_else(|| PlatformError::Conflict(format!("route {key} has no analysis")))?;
        let current = PackageRoute {
            mode: rec.mode.as_str().into(),
            length_m: analysis.current.length_m,
            geometry: rec.geometry.clone(),
            summary: analysis.current.summary,
        };
        let alternatives: Vec<PackageRoute> = analysis
            .alternatives
            .iter()
            .map(|a| PackageRoute {
                mode: a.route.mode.to_string(),
                length_m: a.route.length_m,
                geometry: a.route.geometry.clone(),
                summary: a.summary,
            })
            .collect();
        let package = build_package(
            &rec.participant_id,
            &current,
            &alternatives,
            &analysis.report,
            &builtin_catalog(),
        )
        .map_err(domain)?;
        let participant_id = rec.participant_id.clone();
        let versions = self.data.packages.entry(key.to_owned()).or_default();
        let version = versions.len() as u32 + 1;
        versions.push(StoredPackage {
            id: package_id(key, version),
            route_id: key.to_owned(),
            participant_id,
            version,
            package,
        });
        self.save()?;
        Ok(self.data.packages[key].last().expect("just pushed"))
    }

    pub fn package(&self, id: &str) -> Result<&StoredPackage> {
        let not_found = || PlatformError::NotFound(format!("unknown package {id}"));
        let (key, _) = id.rsplit_once(':').ok_or_else(not_found)?;
        self.data
            .packages
            .get(key)
            .and_then(|v| v.iter().find(|p| p.id == id))
            .ok_or_else(not_found)
    }

    // -- feedback -------------------------------------------------------------

    /// Stores a participant's questionnaire; a later submission replaces it.
    pub fn submit_feedback(&mut self, rec: FeedbackRecord) -> Result<()> {
        self.participant(&rec.participant_id)?;
        if !(1..=5).contains(&rec.q4_rating) {
            return Err(PlatformError::Invalid(format!(
                "q4_rating must be 1-5, got {}",
                rec.q4_rating
            )));
        }
        let has_package = self
            .data
            .packages
            .values()
            .flatten()
            .any(|p| p.participant_id == rec.participant_id);
        if !has_package {
            return Err(PlatformError::Conflict(format!(
                "participant {} has no issued package",
                rec.participant_id
            )));
        }
        self.data.feedback.insert(rec.participant_id.clone(), rec);
        self.save()
    }

    pub fn feedback(&self, participant_id: &str) -> Option<&FeedbackRecord> {
        self.data.feedback.get(participant_id)
    }

    // -- aggregation ----------------------------------------------------------

    /// Route records of `project` (all projects when `None`), in key order.
    pub fn routes_in(&self, project: Option<&str>) -> Vec<(&String, &RouteRecord)> {
        self.data
            .routes
            .iter()
            .filter(|(_, r)| project.is_none_or(|p| r.project_id == p))
            .collect()
    }

    /// Participants with at least one route in `project`.
    pub fn participants_in(&self, project: Option<&str>) -> Vec<&str> {
        let mut ids: Vec<&str> = self
            .routes_in(project)
            .into_iter()
            .map(|(_, r)| r.participant_id.as_str())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// One analyzed route per participant: the one with the highest current
    /// mean (ties to the smallest route key).
    pub fn participant_views(&self, project: Option<&str>) -> Vec<ParticipantView<'_>> {
        let mut best: BTreeMap<&str, ParticipantView<'_>> = BTreeMap::new();
        for (key, rec) in self.routes_in(project) {
            let Some(analysis) = self.data.analyses.get(key) else {
                continue;
            };
            let view = ParticipantView {
                participant_id: &rec.participant_id,
                route_key: key,
                record: rec,
                analysis,
            };
            match best.get(rec.participant_id.as_str()) {
                Some(v)
                    if v.analysis.current.summary.mean_no2_ugm3
                        >= analysis.current.summary.mean_no2_ugm3 => {}
                _ => {
                    best.insert(&rec.participant_id, view);
                }
            }
        }
        best.into_values().collect()
    }

    pub fn effectiveness(&self, project: Option<&str>) -> EffectivenessSummary {
        let participants = self.participants_in(project);
        let threshold = self.config.beneficial_threshold_ugm3;
        let beneficial: Vec<&str> = self
            .participant_views(project)
            .into_iter()
            .filter(|v| v.analysis.report.is_beneficial(threshold))
            .map(|v| v.participant_id)
            .collect();
        let n_switched = beneficial
            .iter()
            .filter(|p| self.feedback(p).is_some_and(|f| f.q2_will_change.answer))
            .count();
        let ratings: Vec<f64> = participants
            .iter()
            .filter_map(|p| self.feedback(p))
            .map(|f| f64::from(f.q4_rating))
            .collect();
        EffectivenessSummary {
            project_id: project.map(str::to_owned),
            n_participants: participants.len(),
            n_with_beneficial_alternative: beneficial.len(),
            n_switched,
            switch_rate: (!beneficial.is_empty())
                .then(|| 100.0 * n_switched as f64 / beneficial.len() as f64),
            n_feedback: ratings.len(),
            mean_rating: (!ratings.is_empty())
                .then(|| ratings.iter().sum::<f64>() / ratings.len() as f64),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParticipantView<'a> {
    pub participant_id: &'a str,
    pub route_key: &'a str,
    pub record: &'a RouteRecord,
    pub analysis: &'a Analysis,
}

/// Inputs of one analysis, detached from the platform.
#[derive(Debug, Clone)]
pub struct AnalysisJob {
    pub key: String,
    pub record: RouteRecord,
    pub k: usize,
    pub hour: u8,
    graph: Arc<StreetGraph>,
    raster: Arc<ConcentrationRaster>,
}

struct Candidate {
    alt: Alternative,
    summary: ExposureSummary,
}

impl Scored for Candidate {
    fn route(&self) -> &Route {
        &self.alt.route
    }

    fn summary(&self) -> &ExposureSummary {
        &self.summary
    }
}

/// Graph path through the nodes a recorded trace passes within
/// [`MATCH_TOLERANCE_M`] of, if those nodes form a path.
fn match_trace(graph: &StreetGraph, trace: &[Coord]) -> Option<Route> {
    let mut nodes: Vec<NodeId> = Vec::new();
    for p in trace {
        let (id, d) = snap_point(graph, *p).ok()?;
        if d <= MATCH_TOLERANCE_M && nodes.last() != Some(&id) {
            nodes.push(id);
        }
    }
    let route = route_from_nodes(graph, TravelMode::Walk, &nodes).ok()?;
    // A trace that cuts corners between matched nodes is not this path.
    let traced = polyline_length(trace);
    ((route.length_m - traced).abs() <= GEOMETRY_LENGTH_TOLERANCE * route.length_m).then_some(route)
}

impl AnalysisJob {
    /// Snap, generate and screen candidates, score and rank them, and compare
    /// the best with the recorded route.
    pub fn run(&self) -> Result<Analysis> {
        let g = &*self.graph;
        let rec = &self.record;
        let (origin, origin_snap_m) = snap_point(g, rec.home).map_err(domain)?;
        let (dest, dest_snap_m) = snap_point(g, rec.school).map_err(domain)?;
        if origin == dest {
            return Err(PlatformError::Domain(format!(
                "home and school both snap to node {origin}"
            )));
        }
        let length_m = polyline_length(&rec.geometry);
        let summary = route_exposure(&self.raster, &rec.geometry)
            .map_err(|e| PlatformError::Domain(format!("current route {}: {e}", self.key)))?;
        let matched = match_trace(g, &rec.geometry).map(|r| r.edges);

        let mut scored = Vec::new();
        let mut unscored = 0;
        for &mode in rec.mode.candidate_modes() {
            for alt in screen_candidates(
                g,
                &origin,
                &dest,
                length_m,
                matched.as_deref(),
                mode,
                self.k,
            )
            .map_err(domain)?
            {
                match route_exposure(&self.raster, &alt.route.geometry) {
                    Ok(summary) => scored.push(Candidate { alt, summary }),
                    Err(ExposureError::OutsideCoverage { .. }) => unscored += 1,
                    Err(e) => return Err(domain(e)),
                }
            }
        }
        let ranked = rank_alternatives(scored);
        let summaries: Vec<ExposureSummary> = ranked.iter().map(|c| c.summary).collect();
        let report = compare(&summary, &summaries, &builtin_risk_models());
        let alternatives = ranked
            .into_iter()
            .enumerate()
            .map(|(i, c)| ScoredAlternative {
                rank: i + 1,
                delta_ugm3: summary.mean_no2_ugm3 - c.summary.mean_no2_ugm3,
                route: c.alt.route,
                metrics: c.alt.metrics,
                feasibility: c.alt.feasibility,
                summary: c.summary,
            })
            .collect();
        Ok(Analysis {
            route_id: self.key.clone(),
            participant_id: rec.participant_id.clone(),
            k: self.k,
            hour: self.hour,
            origin,
            origin_snap_m,
            dest,
            dest_snap_m,
            current: CurrentRouteAnalysis {
                mode: rec.mode,
                length_m,
                summary,
                matched_edges: matched,
            },
            alternatives,
            unscored_candidates: unscored,
            report,
        })
    }
}
