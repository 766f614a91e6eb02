//! Benefit of switching routes: per-participant exposure deltas, relative
//! risk scaling, the cohort category-shift matrix and within-category delta
//! statistics.

use std::fmt::Write as _;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exposure::{ExposureCategory, ExposureSummary};

const BUILTIN_RISK_MODELS: &str = include_str!("../data/risk_models.json");

#[derive(Debug, Error, PartialEq)]
pub enum BenefitError {
    #[error("no reports to aggregate")]
    Empty,
    #[error("invalid risk model {id}: {message}")]
    InvalidModel { id: String, message: String },
    #[error("malformed risk-model catalog: {0}")]
    Parse(String),
}

/// A relative risk quoted per `unit_delta_ugm3` increment of annual NO2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskModel {
    pub id: String,
    pub endpoint: String,
    pub rr_per_unit: f64,
    pub unit_delta_ugm3: f64,
    #[serde(default)]
    pub ci_low: Option<f64>,
    #[serde(default)]
    pub ci_high: Option<f64>,
}

impl RiskModel {
    pub fn validate(&self) -> Result<(), BenefitError> {
        let fail = |message: &str| {
            Err(BenefitError::InvalidModel {
                id: self.id.clone(),
                message: message.to_owned(),
            })
        };
        if self.id.is_empty() {
            return fail("empty id");
        }
        if !(self.rr_per_unit > 0.0) || !self.rr_per_unit.is_finite() {
            return fail("rr_per_unit must be positive");
        }
        if !(self.unit_delta_ugm3 > 0.0) || !self.unit_delta_ugm3.is_finite() {
            return fail("unit_delta_ugm3 must be positive");
        }
        if let (Some(lo), Some(hi)) = (self.ci_low, self.ci_high) {
            if lo > hi {
                return fail("ci_low exceeds ci_high");
            }
        }
        Ok(())
    }
}

/// Parses and validates a risk-model catalog (JSON array).
pub fn load_risk_models(source: &[u8]) -> Result<Vec<RiskModel>, BenefitError> {
    let models: Vec<RiskModel> =
        serde_json::from_slice(source).map_err(|e| BenefitError::Parse(e.to_string()))?;
    let mut ids = std::collections::BTreeSet::new();
    for m in &models {
        m.validate()?;
        if !ids.insert(m.id.as_str()) {
            return Err(BenefitError::InvalidModel {
                id: m.id.clone(),
                message: "duplicate id".into(),
            });
        }
    }
    Ok(models)
}

/// The bundled catalog (HRAPIE and Atkinson meta-analysis coefficients).
pub fn builtin_risk_models() -> Vec<RiskModel> {
    load_risk_models(BUILTIN_RISK_MODELS.as_bytes()).expect("bundled catalog is valid")
}

/// Log-linear scaling of the quoted RR: `rr_per_unit ^ (delta / unit_delta)`.
///
/// For a positive delta (exposure avoided) the factor is the relative risk
/// that switching avoids.
pub fn relative_risk(delta_ugm3: f64, model: &RiskModel) -> f64 {
    model.rr_per_unit.powf(delta_ugm3 / model.unit_delta_ugm3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRatio {
    pub model_id: String,
    pub endpoint: String,
    pub factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryShift {
    pub from: ExposureCategory,
    pub to: ExposureCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenefitReport {
    pub current: ExposureSummary,
    pub best_alternative: Option<ExposureSummary>,
    /// `current - best`, ug/m3; positive means the alternative is cleaner.
    pub delta_ugm3: Option<f64>,
    pub category_shift: Option<CategoryShift>,
    pub risk_ratios: Vec<RiskRatio>,
}

impl BenefitReport {
    /// True when an alternative lowers the mean by more than `threshold`.
    pub fn is_beneficial(&self, threshold_ugm3: f64) -> bool {
        self.delta_ugm3.is_some_and(|d| d > threshold_ugm3)
    }

    /// Category after switching; the current category when there is no
    /// alternative.
    pub fn resulting_category(&self) -> ExposureCategory {
        self.category_shift.map_or(self.current.category, |s| s.to)
    }
}

/// Compares the current route with the rank-1 alternative.
pub fn compare(
    current: &ExposureSummary,
    ranked_alternatives: &[ExposureSummary],
    models: &[RiskModel],
) -> BenefitReport {
    let best = ranked_alternatives.first().copied();
    let delta = best.map(|b| current.mean_no2_ugm3 - b.mean_no2_ugm3);
    BenefitReport {
        current: *current,
        best_alternative: best,
        delta_ugm3: delta,
        category_shift: best.map(|b| CategoryShift {
            from: current.category,
            to: b.category,
        }),
        risk_ratios: delta
            .map(|d| {
                models
                    .iter()
                    .map(|m| RiskRatio {
                        model_id: m.id.clone(),
                        endpoint: m.endpoint.clone(),
                        factor: relative_risk(d, m),
                    })
                    .collect()
            })
            .unwrap_or_default(),
    }
}

/// One value per exposure category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerCategory<T> {
    pub low: T,
    pub moderate: T,
    pub high: T,
}

impl<T> PerCategory<T> {
    pub fn from_fn(mut f: impl FnMut(ExposureCategory) -> T) -> Self {
        Self {
            low: f(ExposureCategory::Low),
            moderate: f(ExposureCategory::Moderate),
            high: f(ExposureCategory::High),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ExposureCategory, &T)> {
        ExposureCategory::ALL
            .into_iter()
            .map(move |c| (c, &self[c]))
    }
}

impl<T> Index<ExposureCategory> for PerCategory<T> {
    type Output = T;

    fn index(&self, c: ExposureCategory) -> &T {
        match c {
            ExposureCategory::Low => &self.low,
            ExposureCategory::Moderate => &self.moderate,
            ExposureCategory::High => &self.high,
        }
    }
}

impl<T> IndexMut<ExposureCategory> for PerCategory<T> {
    fn index_mut(&mut self, c: ExposureCategory) -> &mut T {
        match c {
            ExposureCategory::Low => &mut self.low,
            ExposureCategory::Moderate => &mut self.moderate,
            ExposureCategory::High => &mut self.high,
        }
    }
}

/// Percentages are kept at one decimal.
pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn percent(count: usize, total: usize) -> f64 {
    round1(100.0 * count as f64 / total as f64)
}

/// Cross-tabulation of current against best-alternative categories, as
/// percentages of all participants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftMatrix {
    pub participants: usize,
    /// `counts[alternative][current]`.
    pub counts: PerCategory<PerCategory<usize>>,
    /// `cells[alternative][current]`, percent.
    pub cells: PerCategory<PerCategory<f64>>,
    /// Percent of participants per current category.
    pub column_totals: PerCategory<f64>,
    pub grand_total: f64,
}

/// Participants without an alternative count on the diagonal.
pub fn shift_matrix(reports: &[BenefitReport]) -> Result<ShiftMatrix, BenefitError> {
    if reports.is_empty() {
        return Err(BenefitError::Empty);
    }
    let n = reports.len();
    let mut counts: PerCategory<PerCategory<usize>> = PerCategory::default();
    let mut columns: PerCategory<usize> = PerCategory::default();
    for r in reports {
        counts[r.resulting_category()][r.current.category] += 1;
        columns[r.current.category] += 1;
    }
    let cells =
        PerCategory::from_fn(|alt| PerCategory::from_fn(|cur| percent(counts[alt][cur], n)));
    let grand_total = round1(
        ExposureCategory::ALL
            .iter()
            .flat_map(|&a| ExposureCategory::ALL.map(|c| cells[a][c]))
            .sum(),
    );
    Ok(ShiftMatrix {
        participants: n,
        counts,
        cells,
        column_totals: PerCategory::from_fn(|c| percent(columns[c], n)),
        grand_total,
    })
}

impl ShiftMatrix {
    /// A matrix given directly as percentages (e.g. a published table).
    /// Column totals are column sums.
    pub fn from_percentages(cells: PerCategory<PerCategory<f64>>) -> Self {
        let column_totals = PerCategory::from_fn(|cur| {
            round1(
                ExposureCategory::ALL
                    .iter()
                    .map(|&alt| cells[alt][cur])
                    .sum(),
            )
        });
        let grand_total = round1(column_totals.iter().map(|(_, v)| *v).sum());
        Self {
            participants: 0,
            counts: PerCategory::default(),
            cells,
            column_totals,
            grand_total,
        }
    }

    /// Fixed-width text table with integer percentages.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "% participants: exposure category shift from current to alternative routes"
        );
        let _ = writeln!(
            out,
            "{:<20}{:>10}{:>10}{:>10}",
            "Alternative\\Current", "Low", "Moderate", "High"
        );
        for alt in ExposureCategory::ALL {
            let row = &self.cells[alt];
            let _ = writeln!(
                out,
                "{:<20}{:>10}{:>10}{:>10}",
                alt.label(),
                display_int(row.low),
                display_int(row.moderate),
                display_int(row.high)
            );
        }
        let _ = writeln!(
            out,
            "{:<20}{:>10}{:>10}{:>10}",
            "Grand Total",
            display_int(self.column_totals.low),
            display_int(self.column_totals.moderate),
            display_int(self.column_totals.high)
        );
        out
    }

    /// CSV with one row per alternative category plus a grand-total row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alternative,current_low,current_moderate,current_high\n");
        for alt in ExposureCategory::ALL {
            let row = &self.cells[alt];
            let _ = writeln!(
                out,
                "{},{:.1},{:.1},{:.1}",
                alt.label(),
                row.low,
                row.moderate,
                row.high
            );
        }
        let t = &self.column_totals;
        let _ = writeln!(
            out,
            "Grand Total,{:.1},{:.1},{:.1}",
            t.low, t.moderate, t.high
        );
        out
    }
}

fn display_int(v: f64) -> String {
    format!("{}", v.round() as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaStats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl DeltaStats {
    fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        // Summing in sorted order makes the mean independent of input order.
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let sum: f64 = sorted.iter().sum();
        Some(Self {
            count: sorted.len(),
            mean: sum / sorted.len() as f64,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortStats {
    pub participants: usize,
    /// Percent of participants per current-route category.
    pub distribution: PerCategory<f64>,
    /// Deltas of participants whose category does not change, by category.
    pub within_category: PerCategory<Option<DeltaStats>>,
}

pub fn cohort_stats(reports: &[BenefitReport]) -> Result<CohortStats, BenefitError> {
    if reports.is_empty() {
        return Err(BenefitError::Empty);
    }
    let n = reports.len();
    let mut counts: PerCategory<usize> = PerCategory::default();
    let mut deltas: PerCategory<Vec<f64>> = PerCategory::default();
    for r in reports {
        counts[r.current.category] += 1;
        if let (Some(shift), Some(d)) = (r.category_shift, r.delta_ugm3) {
            if shift.from == shift.to {
                deltas[shift.from].push(d);
            }
        }
    }
    Ok(CohortStats {
        participants: n,
        distribution: PerCategory::from_fn(|c| percent(counts[c], n)),
        within_category: PerCategory::from_fn(|c| DeltaStats::from_values(&deltas[c])),
    })
}
