//! The customized information package handed to a participant: context,
//! quantitative feedback on current and alternative routes, personal
//! benefits and general tips, plus a map payload.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benefit::{BenefitReport, CategoryShift};
use crate::exposure::{ExposureCategory, ExposureSummary};
use crate::geometry::Coord;

mod render;

pub use render::{render_package, RenderFormat};

const BUILTIN_CATALOG_EN: &str = include_str!("../../data/catalog_en.json");

/// Tolerance when checking a report's delta against its summaries.
const DELTA_CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum PackageError {
    #[error("invalid content catalog: {0}")]
    InvalidCatalog(String),
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
    #[error("unknown render format {0:?} (expected structured or hypertext)")]
    UnknownFormat(String),
    #[error("malformed package document: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionHeadings {
    pub title: String,
    pub context: String,
    pub feedback: String,
    pub benefits: String,
    pub tips: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Figure {
    pub id: String,
    pub caption: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentBlock {
    pub id: String,
    pub title: String,
    pub text: String,
    /// Id of an entry in the catalog's figure list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
}

/// Text templates with `{placeholder}` substitution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageTemplates {
    /// Placeholders: `{delta}`, `{from}`, `{to}`.
    pub benefit_summary: String,
    /// Placeholders: `{endpoint}`, `{delta}`, `{factor}`.
    pub benefit_statement: String,
    pub no_alternative: String,
    pub current_label: String,
    /// Placeholder: `{rank}`.
    pub alternative_label: String,
}

/// Locale-specific static content.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentCatalog {
    pub locale: String,
    pub headings: SectionHeadings,
    #[serde(default)]
    pub figures: Vec<Figure>,
    pub context: Vec<ContentBlock>,
    pub tips: Vec<ContentBlock>,
    pub templates: MessageTemplates,
}

impl ContentCatalog {
    pub fn validate(&self) -> Result<(), PackageError> {
        let bad = |m: String| Err(PackageError::InvalidCatalog(m));
        if self.tips.is_empty() {
            return bad("tip list is empty".into());
        }
        let figures: BTreeSet<&str> = self.figures.iter().map(|f| f.id.as_str()).collect();
        if figures.len() != self.figures.len() {
            return bad("duplicate figure id".into());
        }
        let mut ids = BTreeSet::new();
        for block in self.context.iter().chain(&self.tips) {
            if !ids.insert(block.id.as_str()) {
                return bad(format!("duplicate block id {}", block.id));
            }
            if let Some(fig) = &block.figure {
                if !figures.contains(fig.as_str()) {
                    return bad(format!(
                        "block {} references unknown figure {fig}",
                        block.id
                    ));
                }
            }
        }
        Ok(())
    }

    fn figure(&self, id: &str) -> Option<&Figure> {
        self.figures.iter().find(|f| f.id == id)
    }
}

pub fn load_catalog(source: &[u8]) -> Result<ContentCatalog, PackageError> {
    let catalog: ContentCatalog =
        serde_json::from_slice(source).map_err(|e| PackageError::InvalidCatalog(e.to_string()))?;
    catalog.validate()?;
    Ok(catalog)
}

/// The bundled English sample catalog.
pub fn builtin_catalog() -> ContentCatalog {
    load_catalog(BUILTIN_CATALOG_EN.as_bytes()).expect("bundled catalog is valid")
}

/// A route as it enters a package.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackageRoute {
    /// `walk`, `cycle` or `car`.
    pub mode: String,
    pub length_m: f64,
    pub geometry: Vec<Coord>,
    pub summary: ExposureSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextItem {
    pub id: String,
    pub title: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<Figure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteFeedback {
    pub label: String,
    pub mode: String,
    pub length_m: f64,
    pub mean_no2_ugm3: f64,
    pub category: ExposureCategory,
    /// Current mean minus this route's mean; absent for the current route.
    pub delta_ugm3: Option<f64>,
    /// Whole meters.
    pub length_display: String,
    /// One decimal, ug/m3.
    pub mean_display: String,
    pub delta_display: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSection {
    pub current: RouteFeedback,
    /// Cleanest first.
    pub alternatives: Vec<RouteFeedback>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenefitStatement {
    pub model_id: String,
    pub endpoint: String,
    pub rr_factor: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenefitSection {
    pub has_beneficial_alternative: bool,
    pub delta_ugm3: Option<f64>,
    pub category_shift: Option<CategoryShift>,
    pub summary: String,
    pub statements: Vec<BenefitStatement>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorToken {
    Green,
    Yellow,
    Red,
}

impl ColorToken {
    pub fn for_category(c: ExposureCategory) -> Self {
        match c {
            ExposureCategory::Low => ColorToken::Green,
            ExposureCategory::Moderate => ColorToken::Yellow,
            ExposureCategory::High => ColorToken::Red,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ColorToken::Green => "green",
            ColorToken::Yellow => "yellow",
            ColorToken::Red => "red",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteRole {
    Current,
    Alternative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRoute {
    pub label: String,
    pub role: RouteRole,
    /// 1-based exposure rank for alternatives.
    pub rank: Option<usize>,
    pub category: ExposureCategory,
    pub color: ColorToken,
    pub geometry: Vec<Coord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPayload {
    pub routes: Vec<MapRoute>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoPackage {
    pub participant_id: String,
    pub locale: String,
    pub headings: SectionHeadings,
    pub section_context: Vec<ContextItem>,
    pub section_feedback: FeedbackSection,
    pub section_benefits: BenefitSection,
    pub section_tips: Vec<ContentBlock>,
    pub map_payload: MapPayload,
}

pub fn format_concentration(v: f64) -> String {
    format!("{v:.1}")
}

pub fn format_length(v: f64) -> String {
    format!("{v:.0}")
}

/// RR factors are shown with four decimals.
pub fn format_factor(v: f64) -> String {
    format!("{v:.4}")
}

fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    vars.iter().fold(template.to_owned(), |acc, (k, v)| {
        acc.replace(&format!("{{{k}}}"), v)
    })
}

fn feedback_row(label: String, route: &PackageRoute, delta: Option<f64>) -> RouteFeedback {
    RouteFeedback {
        label,
        mode: route.mode.clone(),
        length_m: route.length_m,
        mean_no2_ugm3: route.summary.mean_no2_ugm3,
        category: route.summary.category,
        delta_ugm3: delta,
        length_display: format_length(route.length_m),
        mean_display: format_concentration(route.summary.mean_no2_ugm3),
        delta_display: delta.map(format_concentration),
    }
}

/// Assembles a participant's package from a stored analysis.
///
/// `alternatives` must be ranked cleanest first and `report` must have been
/// derived from `current` and `alternatives`.
pub fn build_package(
    participant_id: &str,
    current: &PackageRoute,
    alternatives: &[PackageRoute],
    report: &BenefitReport,
    catalog: &ContentCatalog,
) -> Result<InfoPackage, PackageError> {
    catalog.validate()?;
    check_consistency(current, alternatives, report)?;

    let t = &catalog.templates;
    let current_mean = current.summary.mean_no2_ugm3;

    let section_context = catalog
        .context
        .iter()
        .map(|b| ContextItem {
            id: b.id.clone(),
            title: b.title.clone(),
            text: b.text.clone(),
            figure: b.figure.as_deref().and_then(|f| catalog.figure(f)).cloned(),
        })
        .collect();

    let alt_labels: Vec<String> = (1..=alternatives.len())
        .map(|rank| fill(&t.alternative_label, &[("rank", &rank.to_string())]))
        .collect();

    let section_feedback = FeedbackSection {
        current: feedback_row(t.current_label.clone(), current, None),
        alternatives: alternatives
            .iter()
            .zip(&alt_labels)
            .map(|(a, label)| {
                feedback_row(
                    label.clone(),
                    a,
                    Some(current_mean - a.summary.mean_no2_ugm3),
                )
            })
            .collect(),
    };

    let beneficial = report.is_beneficial(0.0);
    let section_benefits = if beneficial {
        let delta = report.delta_ugm3.expect("beneficial implies a delta");
        let delta_s = format_concentration(delta);
        let shift = report.category_shift.expect("delta implies a shift");
        BenefitSection {
            has_beneficial_alternative: true,
            delta_ugm3: Some(delta),
            category_shift: Some(shift),
            summary: fill(
                &t.benefit_summary,
                &[
                    ("delta", &delta_s),
                    ("from", shift.from.label()),
                    ("to", shift.to.label()),
                ],
            ),
            statements: report
                .risk_ratios
                .iter()
                .map(|rr| BenefitStatement {
                    model_id: rr.model_id.clone(),
                    endpoint: rr.endpoint.clone(),
                    rr_factor: rr.factor,
                    text: fill(
                        &t.benefit_statement,
                        &[
                            ("endpoint", &rr.endpoint),
                            ("delta", &delta_s),
                            ("factor", &format_factor(rr.factor)),
                        ],
                    ),
                })
                .collect(),
        }
    } else {
        BenefitSection {
            has_beneficial_alternative: false,
            delta_ugm3: report.delta_ugm3,
            category_shift: report.category_shift,
            summary: t.no_alternative.clone(),
            statements: Vec::new(),
        }
    };

    let mut routes = vec![MapRoute {
        label: t.current_label.clone(),
        role: RouteRole::Current,
        rank: None,
        category: current.summary.category,
        color: ColorToken::for_category(current.summary.category),
        geometry: current.geometry.clone(),
    }];
    routes.extend(
        alternatives
            .iter()
            .zip(alt_labels)
            .enumerate()
            .map(|(i, (a, label))| MapRoute {
                label,
                role: RouteRole::Alternative,
                rank: Some(i + 1),
                category: a.summary.category,
                color: ColorToken::for_category(a.summary.category),
                geometry: a.geometry.clone(),
            }),
    );

    Ok(InfoPackage {
        participant_id: participant_id.to_owned(),
        locale: catalog.locale.clone(),
        headings: catalog.headings.clone(),
        section_context,
        section_feedback,
        section_benefits,
        section_tips: catalog.tips.clone(),
        map_payload: MapPayload { routes },
    })
}

fn check_consistency(
    current: &PackageRoute,
    alternatives: &[PackageRoute],
    report: &BenefitReport,
) -> Result<(), PackageError> {
    let bad = |m: &str| Err(PackageError::Inconsistent(m.to_owned()));
    if report.current != current.summary {
        return bad("report was built for a different current route");
    }
    if alternatives
        .windows(2)
        .any(|w| w[0].summary.mean_no2_ugm3 > w[1].summary.mean_no2_ugm3)
    {
        return bad("alternatives are not ranked by exposure");
    }
    if report.best_alternative != alternatives.first().map(|a| a.summary) {
        return bad("report's best alternative is not the rank-1 alternative");
    }
    match (report.delta_ugm3, report.best_alternative) {
        (None, None) => Ok(()),
        (Some(d), Some(best)) => {
            let expected = current.summary.mean_no2_ugm3 - best.mean_no2_ugm3;
            if (d - expected).abs() > DELTA_CONSISTENCY_TOL {
                bad("delta differs from current minus best mean")
            } else {
                Ok(())
            }
        }
        _ => bad("delta and best alternative must be both present or both absent"),
    }
}
