//! Synthetic networks and rasters with known answers, used by tests, the
//! acceptance suite and the `demo-fixture` command.

use crate::exposure::{ConcentrationRaster, ExposureError, DEFAULT_HOUR};
use crate::geometry::Coord;
use crate::netmodel::{self, NodeId, StreetEdge, StreetGraph, StreetNode};
use crate::routegen::TravelMode;

/// A `rows x cols` lattice with `block` meter spacing.
///
/// Node `n{r}_{c}` sits at `(c * block, r * block)`, so row 0 is the
/// southernmost. Edge `h{r}_{c}` joins `(r, c)` to `(r, c + 1)` and edge
/// `v{r}_{c}` joins `(r, c)` to `(r + 1, c)`. Every edge is flat, has a
/// footpath and a segregated bike lane, and no crossings.
#[derive(Debug, Clone)]
pub struct GridCity {
    pub rows: usize,
    pub cols: usize,
    pub block: f64,
    pub nodes: Vec<StreetNode>,
    pub edges: Vec<StreetEdge>,
}

pub fn node_id(r: usize, c: usize) -> NodeId {
    NodeId(format!("n{r}_{c}"))
}

pub fn grid_city(rows: usize, cols: usize, block: f64) -> GridCity {
    let pos = |r: usize, c: usize| Coord::new(c as f64 * block, r as f64 * block);
    let mut nodes = Vec::with_capacity(rows * cols);
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            nodes.push(StreetNode {
                id: node_id(r, c),
                position: pos(r, c),
            });
            let mut add = |id: String, to: (usize, usize)| {
                edges.push(StreetEdge {
                    id: id.into(),
                    from: node_id(r, c),
                    to: node_id(to.0, to.1),
                    length: block,
                    gradient: 0.0,
                    has_footpath: true,
                    has_segregated_bike_lane: true,
                    crossing_count: 0,
                    geometry: vec![pos(r, c), pos(to.0, to.1)],
                });
            };
            if c + 1 < cols {
                add(format!("h{r}_{c}"), (r, c + 1));
            }
            if r + 1 < rows {
                add(format!("v{r}_{c}"), (r + 1, c));
            }
        }
    }
    GridCity {
        rows,
        cols,
        block,
        nodes,
        edges,
    }
}

impl GridCity {
    pub fn graph(&self) -> StreetGraph {
        StreetGraph::new("local", self.nodes.clone(), self.edges.clone())
            .expect("grid ids are unique and edges reference grid nodes")
    }

    pub fn to_json(&self) -> Vec<u8> {
        netmodel::to_json(&self.graph())
    }

    /// Applies `f` to every edge, e.g. to remove bike lanes on one street.
    pub fn map_edges(mut self, mut f: impl FnMut(&mut StreetEdge)) -> Self {
        self.edges.iter_mut().for_each(&mut f);
        self
    }

    pub fn position(&self, r: usize, c: usize) -> Coord {
        Coord::new(c as f64 * self.block, r as f64 * self.block)
    }
}

/// Cell size of the corridor raster. Cell centres fall on multiples of it.
pub const CORRIDOR_CELL_M: f64 = 10.0;
/// Cells whose centre is within this distance of the band street are elevated.
pub const CORRIDOR_HALF_WIDTH_M: f64 = 10.0;
const CORRIDOR_BLOCK_M: f64 = 100.0;

/// A trip along the corridor city's east-west streets.
#[derive(Debug, Clone, PartialEq)]
pub struct CorridorPair {
    pub id: String,
    pub mode: TravelMode,
    pub origin: NodeId,
    pub dest: NodeId,
    /// Recorded trace: the straight street between origin and destination.
    pub geometry: Vec<Coord>,
    pub length_m: f64,
    /// Exposure reduction of the cleanest feasible alternative.
    pub expected_delta_ugm3: f64,
    /// Minimum k for the cleanest alternative to be among the candidates.
    pub min_k: usize,
}

/// A grid with one polluted east-west street (the band) and uniform
/// background elsewhere.
///
/// For a trip of `L` meters along the band, the cleanest feasible detour
/// leaves the band immediately, runs along a neighbouring street and rejoins
/// the band at the destination. Sampled every 10 m, it has
/// `N = (L + 2 * block) / 10 + 1` samples of which exactly 4 lie in band
/// cells, so its mean is `(4E + (N - 4)B) / N` against `E` for the trip
/// itself.
#[derive(Debug, Clone)]
pub struct CorridorCity {
    pub grid: GridCity,
    pub raster: ConcentrationRaster,
    pub band_row: usize,
    pub elevated_ugm3: f64,
    pub background_ugm3: f64,
    pub pairs: Vec<CorridorPair>,
}

impl CorridorCity {
    pub fn new(
        rows: usize,
        cols: usize,
        band_row: usize,
        elevated_ugm3: f64,
        background_ugm3: f64,
    ) -> Result<Self, ExposureError> {
        assert!(band_row < rows, "band row outside grid");
        let grid = grid_city(rows, cols, CORRIDOR_BLOCK_M);
        let band_y = band_row as f64 * CORRIDOR_BLOCK_M;
        let raster = corridor_raster(
            &grid,
            DEFAULT_HOUR,
            |c| (c.y - band_y).abs() <= CORRIDOR_HALF_WIDTH_M,
            elevated_ugm3,
            background_ugm3,
        )?;
        Ok(Self {
            grid,
            raster,
            band_row,
            elevated_ugm3,
            background_ugm3,
            pairs: Vec::new(),
        })
    }

    /// Seven columns, five rows, band along row 2 at 60 vs 20 ug/m3, with
    /// four band trips and one control trip along the clean row 0.
    pub fn standard() -> Self {
        let mut city = Self::new(5, 7, 2, 60.0, 20.0).expect("valid corridor raster");
        city.add_pair(2, 0, 3, TravelMode::Walk);
        city.add_pair(2, 1, 5, TravelMode::Cycle);
        city.add_pair(2, 0, 6, TravelMode::Walk);
        city.add_pair(2, 5, 3, TravelMode::Cycle);
        city.add_pair(0, 1, 4, TravelMode::Walk);
        city
    }

    /// Adds a trip along row `row` from column `from` to column `to`.
    pub fn add_pair(&mut self, row: usize, from: usize, to: usize, mode: TravelMode) {
        assert!(from != to && from < self.grid.cols && to < self.grid.cols);
        let cols: Vec<usize> = if from < to {
            (from..=to).collect()
        } else {
            (to..=from).rev().collect()
        };
        let blocks = cols.len() - 1;
        let length_m = blocks as f64 * CORRIDOR_BLOCK_M;
        let expected_delta_ugm3 = if row == self.band_row {
            corridor_delta(
                length_m,
                CORRIDOR_BLOCK_M,
                self.elevated_ugm3,
                self.background_ugm3,
            )
        } else {
            assert!(
                row.abs_diff(self.band_row) >= 2,
                "control trips must stay clear of the band"
            );
            0.0
        };
        self.pairs.push(CorridorPair {
            id: format!("trip{:02}", self.pairs.len() + 1),
            mode,
            origin: node_id(row, from),
            dest: node_id(row, to),
            geometry: cols.iter().map(|&c| self.grid.position(row, c)).collect(),
            length_m,
            expected_delta_ugm3,
            // The straight trip plus one single-block excursion to either
            // side for each pair of columns.
            min_k: 1 + 2 * (blocks + 1) * blocks / 2,
        });
    }

    pub fn network_json(&self) -> Vec<u8> {
        self.grid.to_json()
    }
}

/// Closed-form reduction for a band trip of `length_m`.
pub fn corridor_delta(length_m: f64, block: f64, elevated: f64, background: f64) -> f64 {
    let n = ((length_m + 2.0 * block) / CORRIDOR_CELL_M).round() + 1.0;
    elevated - (4.0 * elevated + (n - 4.0) * background) / n
}

/// A 10 m raster covering `grid` with a 55 m margin, so that cell centres
/// lie on multiples of 10 m. Cells whose centre satisfies `in_band` get
/// `elevated`, the rest `background`.
pub fn corridor_raster(
    grid: &GridCity,
    hour: u8,
    in_band: impl Fn(Coord) -> bool,
    elevated: f64,
    background: f64,
) -> Result<ConcentrationRaster, ExposureError> {
    let margin = 5.5 * CORRIDOR_CELL_M;
    let span = |n: usize| ((n - 1) as f64 * grid.block / CORRIDOR_CELL_M).ceil() as usize + 11;
    ConcentrationRaster::from_fn(
        hour,
        Coord::new(-margin, -margin),
        CORRIDOR_CELL_M,
        span(grid.cols),
        span(grid.rows),
        |c| if in_band(c) { elevated } else { background },
    )
}
