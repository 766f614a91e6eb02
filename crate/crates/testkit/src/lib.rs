//! Brute-force oracles and random instance generators.
//!
//! Everything here is written against the public types only and avoids the
//! library's own algorithms, so agreement between the two is evidence.

use std::collections::BTreeMap;

use cleanroute_core::benefit::{compare, BenefitReport};
use cleanroute_core::exposure::{categorize, ConcentrationRaster, ExposureSummary, DEFAULT_NODATA};
use cleanroute_core::geometry::Coord;
use cleanroute_core::netmodel::{EdgeId, NodeId, StreetEdge, StreetGraph, StreetNode};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct OraclePath {
    pub length: f64,
    pub edges: Vec<EdgeId>,
    pub nodes: Vec<NodeId>,
}

/// Every simple path from `origin` to `dest` no longer than `max_length`,
/// sorted by (length, edge-id sequence). Lengths are summed in travel order.
pub fn enumerate_simple_paths(
    graph: &StreetGraph,
    origin: &NodeId,
    dest: &NodeId,
    max_length: f64,
) -> Vec<OraclePath> {
    let mut adj: BTreeMap<&NodeId, Vec<(&StreetEdge, &NodeId)>> = BTreeMap::new();
    for e in graph.edges() {
        if e.from == e.to {
            continue;
        }
        adj.entry(&e.from).or_default().push((e, &e.to));
        adj.entry(&e.to).or_default().push((e, &e.from));
    }

    struct Dfs<'a> {
        adj: BTreeMap<&'a NodeId, Vec<(&'a StreetEdge, &'a NodeId)>>,
        dest: &'a NodeId,
        max_length: f64,
        nodes: Vec<&'a NodeId>,
        edges: Vec<&'a StreetEdge>,
        out: Vec<OraclePath>,
    }

    impl<'a> Dfs<'a> {
        fn go(&mut self, at: &'a NodeId, length: f64) {
            if at == self.dest {
                self.out.push(OraclePath {
                    length,
                    edges: self.edges.iter().map(|e| e.id.clone()).collect(),
                    nodes: self.nodes.iter().map(|n| (*n).clone()).collect(),
                });
                return;
            }
            let Some(next) = self.adj.get(at).cloned() else {
                return;
            };
            for (e, v) in next {
                if self.nodes.contains(&v) {
                    continue;
                }
                let l = length + e.length;
                if l > self.max_length {
                    continue;
                }
                self.nodes.push(v);
                self.edges.push(e);
                self.go(v, l);
                self.nodes.pop();
                self.edges.pop();
            }
        }
    }

    let mut dfs = Dfs {
        adj,
        dest,
        max_length,
        nodes: vec![origin],
        edges: Vec::new(),
        out: Vec::new(),
    };
    dfs.go(origin, 0.0);
    let mut out = dfs.out;
    out.sort_by(|a, b| {
        a.length
            .total_cmp(&b.length)
            .then_with(|| a.edges.cmp(&b.edges))
    });
    out
}

fn seg_len(a: Coord, b: Coord) -> f64 {
    ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt()
}

/// Arc-length walk: samples at `0, interval, 2*interval, ...`, endpoint
/// appended when more than `interval / 100` past the last sample, exact
/// duplicates dropped.
pub fn resample_oracle(geometry: &[Coord], interval: f64) -> Vec<Coord> {
    let mut cum = vec![0.0];
    for w in geometry.windows(2) {
        cum.push(cum.last().unwrap() + seg_len(w[0], w[1]));
    }
    let total = *cum.last().unwrap();
    let mut out: Vec<Coord> = Vec::new();
    let push = |p: Coord, out: &mut Vec<Coord>| {
        if !out.iter().any(|q| q.x == p.x && q.y == p.y) {
            out.push(p);
        }
    };
    let mut last = 0.0;
    let mut i = 0u32;
    while f64::from(i) * interval <= total {
        let s = f64::from(i) * interval;
        // First segment whose end reaches s; zero-length segments are skipped
        // unless nothing else is left.
        let j = (0..geometry.len() - 1)
            .find(|&j| cum[j + 1] >= s)
            .unwrap_or(geometry.len() - 2);
        let (a, b) = (geometry[j], geometry[j + 1]);
        let len = cum[j + 1] - cum[j];
        let p = if len > 0.0 {
            let t = ((s - cum[j]) / seg_len(a, b)).clamp(0.0, 1.0);
            Coord::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
        } else {
            a
        };
        push(p, &mut out);
        last = s;
        i += 1;
    }
    if total - last > interval / 100.0 {
        push(*geometry.last().unwrap(), &mut out);
    }
    out
}

/// Value of the cell whose centre is nearest to `p`, by scanning every
/// cell. Ties go to the larger (row, col). `None` outside the closed extent
/// or on NODATA.
pub fn nearest_center_scan(raster: &ConcentrationRaster, p: Coord) -> Option<f64> {
    let x1 = raster.origin.x + raster.ncols as f64 * raster.cell_size;
    let y1 = raster.origin.y + raster.nrows as f64 * raster.cell_size;
    if !(p.x >= raster.origin.x && p.x <= x1 && p.y >= raster.origin.y && p.y <= y1) {
        return None;
    }
    let mut best = (f64::INFINITY, 0, 0);
    for row in 0..raster.nrows {
        for col in 0..raster.ncols {
            let c = raster.cell_center(row, col);
            let d = (c.x - p.x).powi(2) + (c.y - p.y).powi(2);
            if d <= best.0 {
                best = (d, row, col);
            }
        }
    }
    raster.value(best.1, best.2)
}

/// Direct index arithmetic from the south-west corner.
pub fn direct_lookup(raster: &ConcentrationRaster, p: Coord) -> Option<f64> {
    let cs = raster.cell_size;
    let cx = (p.x - raster.origin.x) / cs;
    let cy = (p.y - raster.origin.y) / cs;
    if cx < 0.0 || cy < 0.0 || cx > raster.ncols as f64 || cy > raster.nrows as f64 {
        return None;
    }
    let col = (cx.floor() as usize).min(raster.ncols - 1);
    // Counting from the south, a point on a horizontal boundary belongs to
    // the cell below it.
    let from_south = (cy.ceil() as usize).saturating_sub(1).min(raster.nrows - 1);
    raster.value(raster.nrows - 1 - from_south, col)
}

/// (mean, sample count, missing count) by resample oracle + direct lookup.
/// `None` when every sample is missing.
pub fn route_mean_oracle(
    raster: &ConcentrationRaster,
    geometry: &[Coord],
    interval: f64,
) -> Option<(f64, usize, usize)> {
    let pts = resample_oracle(geometry, interval);
    let vals: Vec<f64> = pts
        .iter()
        .filter_map(|p| direct_lookup(raster, *p))
        .collect();
    if vals.is_empty() {
        return None;
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    Some((mean, pts.len(), pts.len() - vals.len()))
}

/// An `n x n` raster with 10 m cells, smooth background plus random hot
/// spots, and roughly `nodata_fraction` NODATA cells.
pub fn random_raster(rng: &mut impl Rng, n: usize, nodata_fraction: f64) -> ConcentrationRaster {
    let origin = Coord::new(
        rng.gen_range(-1_000.0..1_000.0),
        rng.gen_range(-1_000.0..1_000.0),
    );
    let cs = 10.0;
    let mut values = Vec::with_capacity(n * n);
    let base = rng.gen_range(10.0..40.0);
    let gx = rng.gen_range(-0.2..0.2);
    let gy = rng.gen_range(-0.2..0.2);
    for row in 0..n {
        for col in 0..n {
            let v = if rng.gen_bool(nodata_fraction) {
                DEFAULT_NODATA
            } else {
                let smooth = base + gx * col as f64 + gy * row as f64;
                (smooth + rng.gen_range(0.0..30.0)).max(0.0)
            };
            values.push(v);
        }
    }
    ConcentrationRaster::new(8, origin, cs, n, n, DEFAULT_NODATA, values).expect("valid raster")
}

/// A polyline of 2 to 8 vertices, mostly inside `raster`, sometimes
/// poking out of it.
pub fn random_route(rng: &mut impl Rng, raster: &ConcentrationRaster) -> Vec<Coord> {
    let w = raster.ncols as f64 * raster.cell_size;
    let h = raster.nrows as f64 * raster.cell_size;
    let margin = 0.05;
    let vertices = rng.gen_range(2..=8);
    let mut pts: Vec<Coord> = Vec::with_capacity(vertices);
    while pts.len() < vertices {
        let p = Coord::new(
            raster.origin.x + w * rng.gen_range(-margin..1.0 + margin),
            raster.origin.y + h * rng.gen_range(-margin..1.0 + margin),
        );
        if pts.last().is_none_or(|q| q.distance(&p) > 1.0) {
            pts.push(p);
        }
    }
    pts
}

/// A random multigraph on at most `max_nodes` nodes with shuffled ids and
/// lengths drawn from a small set, so equal-length paths are common.
pub fn random_small_graph(rng: &mut impl Rng, max_nodes: usize) -> StreetGraph {
    let n = rng.gen_range(2..=max_nodes);
    let mut names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    names.shuffle(rng);
    let nodes: Vec<StreetNode> = names
        .iter()
        .map(|id| StreetNode {
            id: id.as_str().into(),
            position: Coord::new(rng.gen_range(0.0..500.0), rng.gen_range(0.0..500.0)),
        })
        .collect();
    let mut edges = Vec::new();
    let mut edge_ids: Vec<String> = (0..n * n).map(|i| format!("e{i:02}")).collect();
    edge_ids.shuffle(rng);
    for a in 0..n {
        for b in a + 1..n {
            let copies = match rng.gen_range(0..10) {
                0..=4 => 0,
                5..=8 => 1,
                _ => 2,
            };
            for _ in 0..copies {
                let (from, to) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
                edges.push(StreetEdge {
                    id: edge_ids.pop().unwrap().into(),
                    from: nodes[from].id.clone(),
                    to: nodes[to].id.clone(),
                    length: [100.0, 150.0, 200.0, 250.0][rng.gen_range(0..4)],
                    gradient: 0.0,
                    has_footpath: true,
                    has_segregated_bike_lane: true,
                    crossing_count: 0,
                    geometry: vec![nodes[from].position, nodes[to].position],
                });
            }
        }
    }
    StreetGraph::new("local", nodes, edges).expect("generated ids are unique")
}

/// An exposure summary with the given mean.
pub fn summary(mean: f64) -> ExposureSummary {
    ExposureSummary {
        mean_no2_ugm3: mean,
        category: categorize(mean).expect("finite non-negative mean"),
        sample_count: 10,
        missing_count: 0,
    }
}

/// `n` reports with current means in 25..65 µg/m3; about one in five has
/// no alternative.
pub fn random_cohort(rng: &mut impl Rng, n: usize) -> Vec<BenefitReport> {
    (0..n)
        .map(|_| {
            let current = summary(rng.gen_range(25.0..65.0));
            let alts: Vec<ExposureSummary> = if rng.gen_bool(0.2) {
                Vec::new()
            } else {
                let mut means: Vec<f64> = (0..rng.gen_range(1..4))
                    .map(|_| (current.mean_no2_ugm3 + rng.gen_range(-15.0..5.0)).max(0.0))
                    .collect();
                means.sort_by(f64::total_cmp);
                means.into_iter().map(summary).collect()
            };
            compare(&current, &alts, &[])
        })
        .collect()
}
