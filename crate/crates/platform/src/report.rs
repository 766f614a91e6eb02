//! Cohort report: category distribution, shift matrix, within-category
//! delta statistics, effectiveness and one row per participant.

use std::fmt::Write as _;
use std::str::FromStr;

use cleanroute_core::benefit::{
    cohort_stats, shift_matrix, BenefitReport, DeltaStats, PerCategory, ShiftMatrix,
};
use cleanroute_core::exposure::ExposureCategory;
use cleanroute_core::EdgeId;
use serde::{Deserialize, Serialize};

use crate::model::{EffectivenessSummary, PlatformError};
use crate::service::Platform;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = PlatformError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(PlatformError::Invalid(format!(
                "unknown report format {other:?} (expected json or csv)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantRow {
    pub participant_id: String,
    /// The participant's worst analyzed route.
    pub route_id: String,
    pub mode: String,
    pub current_length_m: f64,
    pub current_mean_ugm3: f64,
    pub current_category: ExposureCategory,
    pub n_alternatives: usize,
    pub best_mode: Option<String>,
    pub best_length_m: Option<f64>,
    pub best_mean_ugm3: Option<f64>,
    pub best_category: Option<ExposureCategory>,
    pub best_edges: Option<Vec<EdgeId>>,
    pub delta_ugm3: Option<f64>,
    pub beneficial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub project_id: Option<String>,
    /// Participants with an analyzed route.
    pub n_analyzed: usize,
    /// Percent per current category; absent when nothing is analyzed.
    pub distribution: Option<PerCategory<f64>>,
    pub shift_matrix: Option<ShiftMatrix>,
    pub within_category: Option<PerCategory<Option<DeltaStats>>>,
    pub effectiveness: EffectivenessSummary,
    pub participants: Vec<ParticipantRow>,
}

pub fn build_report(platform: &Platform, project: Option<&str>) -> CohortReport {
    let threshold = platform.config().beneficial_threshold_ugm3;
    let views = platform.participant_views(project);
    let reports: Vec<BenefitReport> = views.iter().map(|v| v.analysis.report.clone()).collect();
    let stats = cohort_stats(&reports).ok();
    let rows = views
        .iter()
        .map(|v| {
            let a = v.analysis;
            let best = a.alternatives.first();
            ParticipantRow {
                participant_id: v.participant_id.to_owned(),
                route_id: v.route_key.to_owned(),
                mode: v.record.mode.as_str().to_owned(),
                current_length_m: a.current.length_m,
                current_mean_ugm3: a.current.summary.mean_no2_ugm3,
                current_category: a.current.summary.category,
                n_alternatives: a.alternatives.len(),
                best_mode: best.map(|b| b.route.mode.to_string()),
                best_length_m: best.map(|b| b.route.length_m),
                best_mean_ugm3: best.map(|b| b.summary.mean_no2_ugm3),
                best_category: best.map(|b| b.summary.category),
                best_edges: best.map(|b| b.route.edges.clone()),
                delta_ugm3: a.report.delta_ugm3,
                beneficial: a.report.is_beneficial(threshold),
            }
        })
        .collect();
    CohortReport {
        project_id: project.map(str::to_owned),
        n_analyzed: views.len(),
        distribution: stats.as_ref().map(|s| s.distribution),
        shift_matrix: shift_matrix(&reports).ok(),
        within_category: stats.map(|s| s.within_category),
        effectiveness: platform.effectiveness(project),
        participants: rows,
    }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// CSV field quoting for free-form ids.
fn field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

impl CohortReport {
    pub fn render(&self, format: ReportFormat) -> Vec<u8> {
        match format {
            ReportFormat::Json => {
                let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
                out.push(b'\n');
                out
            }
            ReportFormat::Csv => self.to_csv().into_bytes(),
        }
    }

    /// Several tables in one file, each introduced by a `# name` line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# distribution\ncategory,percent\n");
        if let Some(d) = &self.distribution {
            for (c, v) in d.iter() {
                let _ = writeln!(out, "{},{v:.1}", c.label());
            }
        }

        out.push_str("\n# shift_matrix\n");
        match &self.shift_matrix {
            Some(m) => out.push_str(&m.to_csv()),
            None => out.push_str("alternative,current_low,current_moderate,current_high\n"),
        }

        out.push_str("\n# within_category\ncategory,count,mean,min,max\n");
        if let Some(w) = &self.within_category {
            for (c, s) in w.iter() {
                match s {
                    Some(s) => {
                        let _ = writeln!(
                            out,
                            "{},{},{},{},{}",
                            c.label(),
                            s.count,
                            s.mean,
                            s.min,
                            s.max
                        );
                    }
                    None => {
                        let _ = writeln!(out, "{},0,,,", c.label());
                    }
                }
            }
        }

        let e = &self.effectiveness;
        out.push_str("\n# effectiveness\nn_participants,n_with_beneficial_alternative,n_switched,switch_rate,n_feedback,mean_rating\n");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.n_participants,
            e.n_with_beneficial_alternative,
            e.n_switched,
            opt(e.switch_rate),
            e.n_feedback,
            opt(e.mean_rating)
        );

        out.push_str(
            "\n# participants\nparticipant_id,route_id,mode,current_length_m,current_mean_ugm3,current_category,\
             n_alternatives,best_mode,best_length_m,best_mean_ugm3,best_category,delta_ugm3,beneficial,best_edges\n",
        );
        for r in &self.participants {
            let edges = r
                .best_edges
                .as_ref()
                .map(|e| e.iter().map(|x| x.as_str()).collect::<Vec<_>>().join(" "))
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                field(&r.participant_id),
                field(&r.route_id),
                r.mode,
                r.current_length_m,
                r.current_mean_ugm3,
                r.current_category.label(),
                r.n_alternatives,
                opt(r.best_mode.as_deref()),
                opt(r.best_length_m),
                opt(r.best_mean_ugm3),
                opt(r.best_category.map(|c| c.label())),
                opt(r.delta_ugm3),
                r.beneficial,
                field(&edges),
            );
        }
        out
    }
}
