//! Route exposure: concentration rasters, 10 m route resampling,
//! nearest-neighbour lookup, per-route mean concentration, categories and
//! ranking.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Coord;
use crate::routegen::Route;

mod raster;
mod resample;

pub use raster::{load_raster, ConcentrationRaster, DEFAULT_NODATA};
pub use resample::{resample_route, DEFAULT_INTERVAL_M};

/// Hour-of-day field used for school runs unless a request says otherwise.
pub const DEFAULT_HOUR: u8 = 8;

/// Upper bound (inclusive) of the Low band, ug/m3.
pub const LOW_MAX_UGM3: f64 = 40.0;
/// Upper bound (inclusive) of the Moderate band, ug/m3.
pub const MODERATE_MAX_UGM3: f64 = 50.0;

#[derive(Debug, Error, PartialEq)]
pub enum ExposureError {
    #[error("raster parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid raster: {0}")]
    InvalidRaster(String),
    #[error("route geometry has zero length")]
    DegenerateGeometry,
    #[error("sampling interval must be positive, got {0}")]
    InvalidInterval(f64),
    #[error("route outside raster coverage ({samples} samples, all missing)")]
    OutsideCoverage { samples: usize },
    #[error("concentration must be finite and non-negative, got {0}")]
    InvalidConcentration(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExposureCategory {
    Low,
    Moderate,
    High,
}

impl ExposureCategory {
    pub const ALL: [ExposureCategory; 3] = [
        ExposureCategory::Low,
        ExposureCategory::Moderate,
        ExposureCategory::High,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            ExposureCategory::Low => "Low",
            ExposureCategory::Moderate => "Moderate",
            ExposureCategory::High => "High",
        }
    }
}

/// Low <= 40 < Moderate <= 50 < High.
pub fn categorize(mean_ugm3: f64) -> Result<ExposureCategory, ExposureError> {
    if !mean_ugm3.is_finite() || mean_ugm3 < 0.0 {
        return Err(ExposureError::InvalidConcentration(mean_ugm3));
    }
    Ok(if mean_ugm3 <= LOW_MAX_UGM3 {
        ExposureCategory::Low
    } else if mean_ugm3 <= MODERATE_MAX_UGM3 {
        ExposureCategory::Moderate
    } else {
        ExposureCategory::High
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub position: Coord,
    /// `None` outside the raster or on NODATA.
    pub concentration: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureSummary {
    /// Mean over non-missing samples, ug/m3.
    pub mean_no2_ugm3: f64,
    pub category: ExposureCategory,
    /// All samples, including missing ones.
    pub sample_count: usize,
    pub missing_count: usize,
}

/// Samples `geometry` every `interval` meters and looks each point up.
pub fn sample_route(
    raster: &ConcentrationRaster,
    geometry: &[Coord],
    interval: f64,
) -> Result<Vec<SamplePoint>, ExposureError> {
    Ok(resample_route(geometry, interval)?
        .into_iter()
        .map(|position| SamplePoint {
            position,
            concentration: raster.lookup(position),
        })
        .collect())
}

/// Mean concentration along a route at the default 10 m spacing.
pub fn route_exposure(
    raster: &ConcentrationRaster,
    geometry: &[Coord],
) -> Result<ExposureSummary, ExposureError> {
    route_exposure_with_interval(raster, geometry, DEFAULT_INTERVAL_M)
}

/// Every sample point carries equal weight; missing points are counted but
/// excluded from the mean.
pub fn route_exposure_with_interval(
    raster: &ConcentrationRaster,
    geometry: &[Coord],
    interval: f64,
) -> Result<ExposureSummary, ExposureError> {
    let samples = sample_route(raster, geometry, interval)?;
    summarize(&samples)
}

pub fn summarize(samples: &[SamplePoint]) -> Result<ExposureSummary, ExposureError> {
    let mut sum = 0.0;
    let mut present = 0usize;
    for c in samples.iter().filter_map(|s| s.concentration) {
        sum += c;
        present += 1;
    }
    if present == 0 {
        return Err(ExposureError::OutsideCoverage {
            samples: samples.len(),
        });
    }
    let mean = sum / present as f64;
    Ok(ExposureSummary {
        mean_no2_ugm3: mean,
        category: categorize(mean)?,
        sample_count: samples.len(),
        missing_count: samples.len() - present,
    })
}

/// Anything that pairs a route with its exposure summary.
pub trait Scored {
    fn route(&self) -> &Route;
    fn summary(&self) -> &ExposureSummary;
}

impl Scored for (Route, ExposureSummary) {
    fn route(&self) -> &Route {
        &self.0
    }

    fn summary(&self) -> &ExposureSummary {
        &self.1
    }
}

/// Ranking order: mean concentration, then length, then edge-id sequence,
/// then mode.
pub fn compare_scored<T: Scored>(a: &T, b: &T) -> Ordering {
    a.summary()
        .mean_no2_ugm3
        .total_cmp(&b.summary().mean_no2_ugm3)
        .then_with(|| a.route().length_m.total_cmp(&b.route().length_m))
        .then_with(|| a.route().edges.cmp(&b.route().edges))
        .then_with(|| a.route().mode.cmp(&b.route().mode))
}

/// Sorts from cleanest to most polluted.
pub fn rank_alternatives<T: Scored>(mut items: Vec<T>) -> Vec<T> {
    items.sort_by(compare_scored);
    items
}
