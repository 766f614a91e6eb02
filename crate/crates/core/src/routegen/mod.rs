//! Candidate route generation: loopless k-shortest paths between two nodes,
//! per-route infrastructure metrics, and feasibility screening.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Coord;
use crate::netmodel::{EdgeId, NodeId, StreetGraph};

mod feasibility;
mod ksp;

pub use feasibility::{screen_feasible, FeasibilityReport, RuleId, Verdict};
pub use ksp::k_shortest_paths;

/// Number of path candidates requested when the caller does not say.
pub const DEFAULT_K: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TravelMode {
    Walk,
    Cycle,
}

impl TravelMode {
    pub const ALL: [TravelMode; 2] = [TravelMode::Walk, TravelMode::Cycle];
}

impl std::fmt::Display for TravelMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TravelMode::Walk => "walk",
            TravelMode::Cycle => "cycle",
        })
    }
}

/// A simple path through the street graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub mode: TravelMode,
    pub edges: Vec<EdgeId>,
    /// One more entry than `edges`.
    pub nodes: Vec<NodeId>,
    /// Sum of edge lengths, accumulated in path order.
    pub length_m: f64,
    /// Edge geometries oriented in travel direction and concatenated.
    pub geometry: Vec<Coord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteMetrics {
    pub length_m: f64,
    /// Length-weighted mean of edge gradients, percent.
    pub mean_gradient_pct: f64,
    pub total_crossings: u32,
    /// Share of length with a footpath, in [0, 1].
    pub footpath_fraction: f64,
    /// Share of length with a segregated bike lane, in [0, 1].
    pub bike_lane_fraction: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum RouteError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("origin and destination are the same node {0}")]
    SameEndpoints(NodeId),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("edge {edge} is not incident to node {node}")]
    NotConnected { edge: EdgeId, node: NodeId },
    #[error("route revisits node {0}")]
    NotSimple(NodeId),
    #[error("route has no edges")]
    Empty,
}

/// Builds a [`Route`] from edge indices walked from `start`.
pub(crate) fn assemble_route(
    graph: &StreetGraph,
    mode: TravelMode,
    start: usize,
    edge_path: &[usize],
) -> Route {
    let mut current = start;
    let mut nodes = vec![graph.nodes()[start].id.clone()];
    let mut edges = Vec::with_capacity(edge_path.len());
    let mut geometry: Vec<Coord> = Vec::new();
    let mut length_m = 0.0;
    for &ei in edge_path {
        let edge = &graph.edges()[ei];
        let (a, b) = graph.endpoints(ei);
        let forward = a == current;
        let next = if forward { b } else { a };
        let skip = usize::from(!geometry.is_empty());
        if forward {
            geometry.extend(edge.geometry.iter().skip(skip).copied());
        } else {
            geometry.extend(edge.geometry.iter().rev().skip(skip).copied());
        }
        length_m += edge.length;
        edges.push(edge.id.clone());
        nodes.push(graph.nodes()[next].id.clone());
        current = next;
    }
    Route {
        mode,
        edges,
        nodes,
        length_m,
        geometry,
    }
}

/// Builds a route by walking `edges` from `start`, checking connectivity
/// and simplicity.
pub fn route_from_edges(
    graph: &StreetGraph,
    mode: TravelMode,
    start: &NodeId,
    edges: &[EdgeId],
) -> Result<Route, RouteError> {
    if edges.is_empty() {
        return Err(RouteError::Empty);
    }
    let start_idx = graph
        .node_idx(start)
        .ok_or_else(|| RouteError::UnknownNode(start.clone()))?;
    let mut seen = vec![false; graph.node_count()];
    seen[start_idx] = true;
    let mut current = start_idx;
    let mut path = Vec::with_capacity(edges.len());
    for id in edges {
        let ei = graph
            .edge_idx(id)
            .ok_or_else(|| RouteError::UnknownEdge(id.clone()))?;
        let (a, b) = graph.endpoints(ei);
        let next = if a == current {
            b
        } else if b == current {
            a
        } else {
            return Err(RouteError::NotConnected {
                edge: id.clone(),
                node: graph.nodes()[current].id.clone(),
            });
        };
        if seen[next] {
            return Err(RouteError::NotSimple(graph.nodes()[next].id.clone()));
        }
        seen[next] = true;
        path.push(ei);
        current = next;
    }
    Ok(assemble_route(graph, mode, start_idx, &path))
}

/// Builds a route through consecutive `nodes`, taking the shortest edge
/// between each pair (smallest edge id on equal length).
pub fn route_from_nodes(
    graph: &StreetGraph,
    mode: TravelMode,
    nodes: &[NodeId],
) -> Result<Route, RouteError> {
    if nodes.len() < 2 {
        return Err(RouteError::Empty);
    }
    let mut edges = Vec::with_capacity(nodes.len() - 1);
    for pair in nodes.windows(2) {
        let a = graph
            .node_idx(&pair[0])
            .ok_or_else(|| RouteError::UnknownNode(pair[0].clone()))?;
        let b = graph
            .node_idx(&pair[1])
            .ok_or_else(|| RouteError::UnknownNode(pair[1].clone()))?;
        // Adjacency lists are in edge-id order, so the first minimum wins ties.
        let best = graph
            .neighbours(a)
            .iter()
            .filter(|&&(_, nb)| nb == b)
            .map(|&(ei, _)| ei)
            .fold(None::<usize>, |best, ei| match best {
                Some(bi) if graph.edges()[bi].length <= graph.edges()[ei].length => Some(bi),
                _ => Some(ei),
            })
            .ok_or_else(|| RouteError::NotConnected {
                edge: EdgeId(format!("{}->{}", pair[0], pair[1])),
                node: pair[0].clone(),
            })?;
        edges.push(graph.edges()[best].id.clone());
    }
    route_from_edges(graph, mode, &nodes[0], &edges)
}

/// Length-weighted infrastructure metrics of a route.
pub fn route_metrics(graph: &StreetGraph, route: &Route) -> Result<RouteMetrics, RouteError> {
    let mut length = 0.0;
    let mut gradient_weighted = 0.0;
    let mut crossings = 0u32;
    let mut footpath = 0.0;
    let mut bike_lane = 0.0;
    for id in &route.edges {
        let e = graph
            .edge(id)
            .ok_or_else(|| RouteError::UnknownEdge(id.clone()))?;
        length += e.length;
        gradient_weighted += e.length * e.gradient;
        crossings += e.crossing_count;
        if e.has_footpath {
            footpath += e.length;
        }
        if e.has_segregated_bike_lane {
            bike_lane += e.length;
        }
    }
    if route.edges.is_empty() {
        return Err(RouteError::Empty);
    }
    Ok(RouteMetrics {
        length_m: length,
        mean_gradient_pct: gradient_weighted / length,
        total_crossings: crossings,
        footpath_fraction: footpath / length,
        bike_lane_fraction: bike_lane / length,
    })
}

/// A screened candidate route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternative {
    pub route: Route,
    pub metrics: RouteMetrics,
    pub feasibility: FeasibilityReport,
}

/// Feasible alternatives to `current`, in k-shortest-path order.
pub fn generate_alternatives(
    graph: &StreetGraph,
    origin: &NodeId,
    dest: &NodeId,
    current: &Route,
    mode: TravelMode,
    k: usize,
) -> Result<Vec<Alternative>, RouteError> {
    screen_candidates(
        graph,
        origin,
        dest,
        current.length_m,
        Some(&current.edges),
        mode,
        k,
    )
}

/// Like [`generate_alternatives`] for a current route known only by its
/// length (e.g. a recorded trace that is not a graph path). Candidates whose
/// edge sequence equals `exclude` are dropped.
pub fn screen_candidates(
    graph: &StreetGraph,
    origin: &NodeId,
    dest: &NodeId,
    current_length_m: f64,
    exclude: Option<&[EdgeId]>,
    mode: TravelMode,
    k: usize,
) -> Result<Vec<Alternative>, RouteError> {
    let mut out = Vec::new();
    for route in k_shortest_paths(graph, origin, dest, k, mode)? {
        if exclude.is_some_and(|ex| ex == route.edges.as_slice()) {
            continue;
        }
        let metrics = route_metrics(graph, &route)?;
        let feasibility = screen_feasible(current_length_m, mode, &metrics);
        if feasibility.overall {
            out.push(Alternative {
                route,
                metrics,
                feasibility,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{StreetEdge, StreetNode};

    fn edge(
        id: &str,
        from: &str,
        to: &str,
        len: f64,
        grad: f64,
        foot: bool,
        bike: bool,
        cross: u32,
        geom: Vec<Coord>,
    ) -> StreetEdge {
        StreetEdge {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            length: len,
            gradient: grad,
            has_footpath: foot,
            has_segregated_bike_lane: bike,
            crossing_count: cross,
            geometry: geom,
        }
    }

    fn node(id: &str, x: f64, y: f64) -> StreetNode {
        StreetNode {
            id: id.into(),
            position: Coord::new(x, y),
        }
    }

    fn path_abc() -> StreetGraph {
        StreetGraph::new(
            "local",
            vec![
                node("A", 0.0, 0.0),
                node("B", 100.0, 0.0),
                node("C", 200.0, 0.0),
            ],
            vec![
                edge(
                    "ab",
                    "A",
                    "B",
                    100.0,
                    0.0,
                    true,
                    true,
                    0,
                    vec![Coord::new(0.0, 0.0), Coord::new(100.0, 0.0)],
                ),
                // Stored C -> B to exercise reversed traversal.
                edge(
                    "bc",
                    "C",
                    "B",
                    100.0,
                    10.0,
                    false,
                    true,
                    2,
                    vec![Coord::new(200.0, 0.0), Coord::new(100.0, 0.0)],
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn route_geometry_follows_travel_direction() {
        let g = path_abc();
        let r = route_from_edges(
            &g,
            TravelMode::Walk,
            &"A".into(),
            &["ab".into(), "bc".into()],
        )
        .unwrap();
        assert_eq!(r.nodes, vec![NodeId::from("A"), "B".into(), "C".into()]);
        assert_eq!(r.length_m, 200.0);
        assert_eq!(
            r.geometry,
            vec![
                Coord::new(0.0, 0.0),
                Coord::new(100.0, 0.0),
                Coord::new(200.0, 0.0)
            ]
        );
    }

    #[test]
    fn route_from_edges_rejects_gaps_and_loops() {
        let g = path_abc();
        assert!(matches!(
            route_from_edges(&g, TravelMode::Walk, &"A".into(), &["bc".into()]),
            Err(RouteError::NotConnected { .. })
        ));
        assert!(matches!(
            route_from_edges(
                &g,
                TravelMode::Walk,
                &"A".into(),
                &["ab".into(), "ab".into()]
            ),
            Err(RouteError::NotSimple(_))
        ));
        assert!(matches!(
            route_from_edges(&g, TravelMode::Walk, &"A".into(), &["zz".into()]),
            Err(RouteError::UnknownEdge(_))
        ));
    }

    #[test]
    fn metrics_single_edge_identity() {
        let g = StreetGraph::new(
            "local",
            vec![node("A", 0.0, 0.0), node("B", 100.0, 0.0)],
            vec![edge(
                "e",
                "A",
                "B",
                100.0,
                5.0,
                true,
                false,
                1,
                vec![Coord::new(0.0, 0.0), Coord::new(100.0, 0.0)],
            )],
        )
        .unwrap();
        let r = route_from_nodes(&g, TravelMode::Walk, &["A".into(), "B".into()]).unwrap();
        let m = route_metrics(&g, &r).unwrap();
        assert_eq!(m.length_m, 100.0);
        assert_eq!(m.mean_gradient_pct, 5.0);
        assert_eq!(m.total_crossings, 1);
        assert_eq!(m.footpath_fraction, 1.0);
        assert_eq!(m.bike_lane_fraction, 0.0);
    }

    #[test]
    fn metrics_weight_by_length() {
        let g = path_abc();
        let r =
            route_from_nodes(&g, TravelMode::Cycle, &["A".into(), "B".into(), "C".into()]).unwrap();
        let m = route_metrics(&g, &r).unwrap();
        assert_eq!(m.mean_gradient_pct, 5.0);
        assert_eq!(m.total_crossings, 2);
        assert_eq!(m.footpath_fraction, 0.5);
        assert_eq!(m.bike_lane_fraction, 1.0);
    }

    #[test]
    fn metrics_unknown_edge() {
        let g = path_abc();
        let mut r = route_from_nodes(&g, TravelMode::Walk, &["A".into(), "B".into()]).unwrap();
        r.edges[0] = "nope".into();
        assert_eq!(
            route_metrics(&g, &r),
            Err(RouteError::UnknownEdge("nope".into()))
        );
    }

    #[test]
    fn route_from_nodes_prefers_shorter_parallel_edge() {
        let g = StreetGraph::new(
            "local",
            vec![node("A", 0.0, 0.0), node("B", 100.0, 0.0)],
            vec![
                edge(
                    "long",
                    "A",
                    "B",
                    120.0,
                    0.0,
                    true,
                    true,
                    0,
                    vec![
                        Coord::new(0.0, 0.0),
                        Coord::new(50.0, 33.166247903554),
                        Coord::new(100.0, 0.0),
                    ],
                ),
                edge(
                    "short",
                    "B",
                    "A",
                    100.0,
                    0.0,
                    true,
                    true,
                    0,
                    vec![Coord::new(100.0, 0.0), Coord::new(0.0, 0.0)],
                ),
            ],
        )
        .unwrap();
        let r = route_from_nodes(&g, TravelMode::Walk, &["A".into(), "B".into()]).unwrap();
        assert_eq!(r.edges, vec![EdgeId::from("short")]);
    }
}
