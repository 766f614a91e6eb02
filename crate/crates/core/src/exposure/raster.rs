//! Hour-indexed concentration rasters in ESRI ASCII grid layout.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ExposureError;
use crate::geometry::Coord;

pub const DEFAULT_NODATA: f64 = -9999.0;

/// A north-up grid of NO2 concentrations (ug/m3) for one hour of the day.
///
/// `values` is row-major with row 0 the northernmost row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRaster {
    pub hour: u8,
    /// Lower-left corner of the lower-left cell.
    pub origin: Coord,
    pub cell_size: f64,
    pub ncols: usize,
    pub nrows: usize,
    pub nodata: f64,
    values: Vec<f64>,
}

impl ConcentrationRaster {
    pub fn new(
        hour: u8,
        origin: Coord,
        cell_size: f64,
        ncols: usize,
        nrows: usize,
        nodata: f64,
        values: Vec<f64>,
    ) -> Result<Self, ExposureError> {
        if hour > 23 {
            return Err(ExposureError::InvalidRaster(format!(
                "hour {hour} outside 0..=23"
            )));
        }
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(ExposureError::InvalidRaster(format!(
                "cellsize must be positive, got {cell_size}"
            )));
        }
        if ncols == 0 || nrows == 0 {
            return Err(ExposureError::InvalidRaster("raster has no cells".into()));
        }
        if !origin.is_finite() {
            return Err(ExposureError::InvalidRaster("origin is not finite".into()));
        }
        if values.len() != ncols * nrows {
            return Err(ExposureError::InvalidRaster(format!(
                "expected {} values, got {}",
                ncols * nrows,
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| v != nodata && !(v.is_finite() && v >= 0.0))
        {
            return Err(ExposureError::InvalidRaster(format!(
                "cell (row {}, col {}) has invalid concentration {v}",
                i / ncols,
                i % ncols
            )));
        }
        Ok(Self {
            hour,
            origin,
            cell_size,
            ncols,
            nrows,
            nodata,
            values,
        })
    }

    /// Raster filled with a function of the cell centre.
    pub fn from_fn(
        hour: u8,
        origin: Coord,
        cell_size: f64,
        ncols: usize,
        nrows: usize,
        mut f: impl FnMut(Coord) -> f64,
    ) -> Result<Self, ExposureError> {
        let mut values = Vec::with_capacity(ncols * nrows);
        for row in 0..nrows {
            for col in 0..ncols {
                values.push(f(Self::center_of(origin, cell_size, nrows, row, col)));
            }
        }
        Self::new(
            hour,
            origin,
            cell_size,
            ncols,
            nrows,
            DEFAULT_NODATA,
            values,
        )
    }

    fn center_of(origin: Coord, cell_size: f64, nrows: usize, row: usize, col: usize) -> Coord {
        Coord::new(
            origin.x + (col as f64 + 0.5) * cell_size,
            origin.y + ((nrows - 1 - row) as f64 + 0.5) * cell_size,
        )
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Coord {
        Self::center_of(self.origin, self.cell_size, self.nrows, row, col)
    }

    /// Raw cell value, `None` for NODATA. Panics if out of range.
    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        assert!(row < self.nrows && col < self.ncols);
        let v = self.values[row * self.ncols + col];
        (v != self.nodata).then_some(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn width(&self) -> f64 {
        self.ncols as f64 * self.cell_size
    }

    pub fn height(&self) -> f64 {
        self.nrows as f64 * self.cell_size
    }

    /// Cell containing `p` as `(row, col)`, or `None` outside the extent.
    ///
    /// The extent is closed. A point on an internal cell boundary belongs to
    /// the cell with the larger row/column index (rows count from the north);
    /// points on the outer east or south edge belong to the edge cell.
    pub fn cell_of(&self, p: Coord) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.cell_size;
        let fy = (self.origin.y + self.height() - p.y) / self.cell_size;
        if !(fx >= 0.0 && fy >= 0.0 && fx <= self.ncols as f64 && fy <= self.nrows as f64) {
            return None;
        }
        let col = (fx.floor() as usize).min(self.ncols - 1);
        let row = (fy.floor() as usize).min(self.nrows - 1);
        Some((row, col))
    }

    /// Nearest-neighbour concentration at `p`; `None` outside or on NODATA.
    pub fn lookup(&self, p: Coord) -> Option<f64> {
        self.cell_of(p).and_then(|(r, c)| self.value(r, c))
    }

    /// Writes the raster as an ESRI ASCII grid.
    pub fn to_ascii_grid(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ncols {}", self.ncols);
        let _ = writeln!(out, "nrows {}", self.nrows);
        let _ = writeln!(out, "xllcorner {}", self.origin.x);
        let _ = writeln!(out, "yllcorner {}", self.origin.y);
        let _ = writeln!(out, "cellsize {}", self.cell_size);
        let _ = writeln!(out, "NODATA_value {}", self.nodata);
        for row in self.values.chunks(self.ncols) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Parses an ESRI ASCII grid.
///
/// Header keys are case-insensitive; `xllcenter`/`yllcenter` are accepted
/// in place of the corner keys, and `NODATA_value` defaults to -9999.
/// Body values may wrap across lines but their total must be
/// `nrows * ncols`.
pub fn load_raster(source: &[u8], hour: u8) -> Result<ConcentrationRaster, ExposureError> {
    let text = std::str::from_utf8(source).map_err(|e| ExposureError::Parse {
        line: 1 + source[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count(),
        message: "not valid UTF-8".into(),
    })?;

    let mut ncols = None;
    let mut nrows = None;
    let mut xll = None;
    let mut yll = None;
    let mut center_registered = (false, false);
    let mut cellsize = None;
    let mut nodata = None;

    let mut lines = text.lines().enumerate().peekable();
    while let Some(&(idx, line)) = lines.peek() {
        let mut parts = line.split_whitespace();
        let Some(key) = parts.next() else {
            lines.next();
            continue;
        };
        if !key.starts_with(|c: char| c.is_ascii_alphabetic()) {
            break;
        }
        let lineno = idx + 1;
        let value = parts.next().ok_or_else(|| ExposureError::Parse {
            line: lineno,
            message: format!("header key {key} has no value"),
        })?;
        let parse_f = |v: &str| {
            v.parse::<f64>().map_err(|_| ExposureError::Parse {
                line: lineno,
                message: format!("invalid number {v:?} for {key}"),
            })
        };
        let parse_u = |v: &str| {
            v.parse::<usize>().map_err(|_| ExposureError::Parse {
                line: lineno,
                message: format!("invalid count {v:?} for {key}"),
            })
        };
        match key.to_ascii_lowercase().as_str() {
            "ncols" => ncols = Some(parse_u(value)?),
            "nrows" => nrows = Some(parse_u(value)?),
            "xllcorner" => xll = Some(parse_f(value)?),
            "yllcorner" => yll = Some(parse_f(value)?),
            "xllcenter" => {
                xll = Some(parse_f(value)?);
                center_registered.0 = true;
            }
            "yllcenter" => {
                yll = Some(parse_f(value)?);
                center_registered.1 = true;
            }
            "cellsize" => cellsize = Some(parse_f(value)?),
            "nodata_value" => nodata = Some(parse_f(value)?),
            other => {
                return Err(ExposureError::Parse {
                    line: lineno,
                    message: format!("unknown header key {other:?}"),
                })
            }
        }
        lines.next();
    }

    let header_line = lines.peek().map_or(text.lines().count(), |(i, _)| *i) + 1;
    let missing = |name: &str| ExposureError::Parse {
        line: header_line,
        message: format!("header is missing {name}"),
    };
    let ncols = ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = nrows.ok_or_else(|| missing("nrows"))?;
    let cellsize = cellsize.ok_or_else(|| missing("cellsize"))?;
    let mut xll = xll.ok_or_else(|| missing("xllcorner"))?;
    let mut yll = yll.ok_or_else(|| missing("yllcorner"))?;
    if !(cellsize > 0.0) {
        return Err(ExposureError::InvalidRaster(format!(
            "cellsize must be positive, got {cellsize}"
        )));
    }
    if center_registered.0 {
        xll -= 0.5 * cellsize;
    }
    if center_registered.1 {
        yll -= 0.5 * cellsize;
    }
    let nodata = nodata.unwrap_or(DEFAULT_NODATA);

    let expected = ncols * nrows;
    let mut values = Vec::with_capacity(expected);
    let mut last_line = header_line;
    for (idx, line) in lines {
        let lineno = idx + 1;
        for tok in line.split_whitespace() {
            if values.len() == expected {
                return Err(ExposureError::Parse {
                    line: lineno,
                    message: format!("more than nrows*ncols = {expected} values"),
                });
            }
            let v = tok.parse::<f64>().map_err(|_| ExposureError::Parse {
                line: lineno,
                message: format!("invalid value {tok:?}"),
            })?;
            values.push(v);
        }
        if !line.trim().is_empty() {
            last_line = lineno;
        }
    }
    if values.len() != expected {
        return Err(ExposureError::Parse {
            line: last_line,
            message: format!(
                "expected nrows*ncols = {expected} values, found {}",
                values.len()
            ),
        });
    }

    ConcentrationRaster::new(
        hour,
        Coord::new(xll, yll),
        cellsize,
        ncols,
        nrows,
        nodata,
        values,
    )
}
