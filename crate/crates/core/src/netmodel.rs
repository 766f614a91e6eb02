//! Street network model: nodes, edges with walking/cycling attributes,
//! JSON ingestion and point snapping.
//!
//! The graph is undirected for both travel modes. Once built it is
//! immutable and can be shared freely between threads.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::polyline_length;
pub use crate::geometry::{BoundingBox, Coord, LocalProjection};

/// Relative tolerance between an edge's declared length and its polyline length.
pub const GEOMETRY_LENGTH_TOLERANCE: f64 = 0.005;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(
    /// Case-sensitive node identifier.
    NodeId
);
string_id!(
    /// Case-sensitive edge identifier.
    EdgeId
);

#[derive(Debug, Clone, PartialEq)]
pub struct StreetNode {
    pub id: NodeId,
    pub position: Coord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreetEdge {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    /// Meters.
    pub length: f64,
    /// Absolute mean slope, percent.
    pub gradient: f64,
    pub has_footpath: bool,
    pub has_segregated_bike_lane: bool,
    /// Signalized or marked crossings along the edge.
    pub crossing_count: u32,
    /// Polyline from `from` to `to`.
    pub geometry: Vec<Coord>,
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("malformed network document at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("edge {edge} references unknown node {node}")]
    Integrity { edge: EdgeId, node: NodeId },
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("invalid {entity}: {message}")]
    Validation { entity: String, message: String },
    #[error("graph has no nodes")]
    EmptyGraph,
}

#[derive(Debug, Clone)]
pub struct StreetGraph {
    crs: String,
    nodes: Vec<StreetNode>,
    edges: Vec<StreetEdge>,
    node_index: HashMap<NodeId, usize>,
    edge_index: HashMap<EdgeId, usize>,
    /// Per node: (edge index, neighbour node index), in edge-id order.
    adjacency: Vec<Vec<(usize, usize)>>,
    /// Edge endpoints as node indices.
    endpoints: Vec<(usize, usize)>,
    /// Rank of each edge's id in lexicographic order of all edge ids.
    edge_rank: Vec<u32>,
    bbox: Option<BoundingBox>,
}

impl StreetGraph {
    /// Builds a graph, enforcing id uniqueness and referential integrity.
    ///
    /// Attribute invariants (lengths, gradients, geometry) are not checked
    /// here; see [`validate_graph`].
    pub fn new(
        crs: impl Into<String>,
        nodes: Vec<StreetNode>,
        edges: Vec<StreetEdge>,
    ) -> Result<Self, NetworkError> {
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if node_index.insert(n.id.clone(), i).is_some() {
                return Err(NetworkError::DuplicateId {
                    kind: "node",
                    id: n.id.0.clone(),
                });
            }
        }
        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut endpoints = Vec::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            if edge_index.insert(e.id.clone(), i).is_some() {
                return Err(NetworkError::DuplicateId {
                    kind: "edge",
                    id: e.id.0.clone(),
                });
            }
            let resolve = |node: &NodeId| {
                node_index
                    .get(node)
                    .copied()
                    .ok_or_else(|| NetworkError::Integrity {
                        edge: e.id.clone(),
                        node: node.clone(),
                    })
            };
            endpoints.push((resolve(&e.from)?, resolve(&e.to)?));
        }

        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_by(|&a, &b| edges[a].id.cmp(&edges[b].id));
        let mut edge_rank = vec![0u32; edges.len()];
        for (rank, &i) in order.iter().enumerate() {
            edge_rank[i] = rank as u32;
        }

        let mut adjacency = vec![Vec::new(); nodes.len()];
        for &i in &order {
            let (a, b) = endpoints[i];
            if a == b {
                // Self loops can never be part of a simple path.
                continue;
            }
            adjacency[a].push((i, b));
            adjacency[b].push((i, a));
        }

        let bbox = BoundingBox::enclosing(
            nodes
                .iter()
                .map(|n| &n.position)
                .chain(edges.iter().flat_map(|e| e.geometry.iter())),
        );

        Ok(Self {
            crs: crs.into(),
            nodes,
            edges,
            node_index,
            edge_index,
            adjacency,
            endpoints,
            edge_rank,
            bbox,
        })
    }

    pub fn crs(&self) -> &str {
        &self.crs
    }

    pub fn nodes(&self) -> &[StreetNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[StreetEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &NodeId) -> Option<&StreetNode> {
        self.node_index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn edge(&self, id: &EdgeId) -> Option<&StreetEdge> {
        self.edge_index.get(id).map(|&i| &self.edges[i])
    }

    pub fn bounding_box(&self) -> Option<BoundingBox> {
        self.bbox
    }

    pub(crate) fn node_idx(&self, id: &NodeId) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub(crate) fn edge_idx(&self, id: &EdgeId) -> Option<usize> {
        self.edge_index.get(id).copied()
    }

    pub(crate) fn neighbours(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub(crate) fn endpoints(&self, edge: usize) -> (usize, usize) {
        self.endpoints[edge]
    }

    pub(crate) fn edge_rank(&self, edge: usize) -> u32 {
        self.edge_rank[edge]
    }
}

// ---------------------------------------------------------------------------
// JSON interchange

#[derive(Debug, Serialize, Deserialize)]
struct NetworkDocument {
    crs: String,
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRecord {
    id: NodeId,
    x: f64,
    y: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRecord {
    id: EdgeId,
    from: NodeId,
    to: NodeId,
    length_m: f64,
    gradient_pct: f64,
    footpath: bool,
    segregated_bike_lane: bool,
    crossings: u32,
    geometry: Vec<Coord>,
}

/// CRS labels treated as geographic longitude/latitude degrees.
fn is_geographic(crs: &str) -> bool {
    matches!(
        crs.to_ascii_uppercase().as_str(),
        "EPSG:4326" | "WGS84" | "WGS 84" | "LONLAT" | "CRS:84" | "OGC:CRS84"
    )
}

/// Label assigned to networks that were projected from lon/lat on load.
pub fn projected_crs_label(proj: &LocalProjection) -> String {
    format!("local-equirectangular:{},{}", proj.lon0, proj.lat0)
}

/// Converts a serde_json (line, column) position into a byte offset.
fn byte_offset(source: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, l) in source.split(|&b| b == b'\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(source.len());
        }
        offset += l.len() + 1;
    }
    source.len()
}

/// Parses and validates a network JSON document.
///
/// Documents whose `crs` is a geographic label (`EPSG:4326`, `WGS84`, ...)
/// carry `x` = longitude and `y` = latitude; they are projected to local
/// meters around the centre of their node extent. Declared edge lengths
/// must already be meters.
pub fn load_network(source: &[u8]) -> Result<StreetGraph, NetworkError> {
    let doc: NetworkDocument = serde_json::from_slice(source).map_err(|e| NetworkError::Parse {
        offset: byte_offset(source, e.line(), e.column()),
        message: e.to_string(),
    })?;

    let mut crs = doc.crs;
    let mut nodes: Vec<StreetNode> = doc
        .nodes
        .into_iter()
        .map(|n| StreetNode {
            id: n.id,
            position: Coord::new(n.x, n.y),
        })
        .collect();
    let mut edges: Vec<StreetEdge> = doc
        .edges
        .into_iter()
        .map(|e| StreetEdge {
            id: e.id,
            from: e.from,
            to: e.to,
            length: e.length_m,
            gradient: e.gradient_pct,
            has_footpath: e.footpath,
            has_segregated_bike_lane: e.segregated_bike_lane,
            crossing_count: e.crossings,
            geometry: e.geometry,
        })
        .collect();

    if is_geographic(&crs) {
        if let Some(bbox) = BoundingBox::enclosing(nodes.iter().map(|n| &n.position)) {
            let c = bbox.center();
            let proj = LocalProjection::new(c.x, c.y);
            for n in &mut nodes {
                n.position = proj.project(n.position.x, n.position.y);
            }
            for e in &mut edges {
                for p in &mut e.geometry {
                    *p = proj.project(p.x, p.y);
                }
            }
            crs = projected_crs_label(&proj);
        }
    }

    let graph = StreetGraph::new(crs, nodes, edges)?;
    let report = validate_graph(&graph);
    if let Some(v) = report.errors().next() {
        return Err(NetworkError::Validation {
            entity: v.entity.clone(),
            message: v.message.clone(),
        });
    }
    Ok(graph)
}

/// Serializes a graph in the network JSON format.
pub fn to_json(graph: &StreetGraph) -> Vec<u8> {
    let doc = NetworkDocument {
        crs: graph.crs.clone(),
        nodes: graph
            .nodes
            .iter()
            .map(|n| NodeRecord {
                id: n.id.clone(),
                x: n.position.x,
                y: n.position.y,
            })
            .collect(),
        edges: graph
            .edges
            .iter()
            .map(|e| EdgeRecord {
                id: e.id.clone(),
                from: e.from.clone(),
                to: e.to.clone(),
                length_m: e.length,
                gradient_pct: e.gradient,
                footpath: e.has_footpath,
                segregated_bike_lane: e.has_segregated_bike_lane,
                crossings: e.crossing_count,
                geometry: e.geometry.clone(),
            })
            .collect(),
    };
    serde_json::to_vec(&doc).expect("network document serializes")
}

// ---------------------------------------------------------------------------
// Snapping

/// Nearest node to `p`. Ties go to the lexicographically smallest node id.
pub fn snap_point(graph: &StreetGraph, p: Coord) -> Result<(NodeId, f64), NetworkError> {
    let mut best: Option<(&StreetNode, f64)> = None;
    for node in &graph.nodes {
        let d2 = node.position.distance_squared(&p);
        best = match best {
            Some((b, bd2)) if bd2 < d2 || (bd2 == d2 && b.id <= node.id) => Some((b, bd2)),
            _ => Some((node, d2)),
        };
    }
    let (node, _) = best.ok_or(NetworkError::EmptyGraph)?;
    Ok((node.id.clone(), node.position.distance(&p)))
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonFiniteCoordinate,
    NonPositiveLength,
    InvalidGradient,
    DegenerateGeometry,
    GeometryLengthMismatch,
    SelfLoop,
    IsolatedNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub severity: Severity,
    pub kind: ViolationKind,
    /// `node <id>` or `edge <id>`.
    pub entity: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations
            .iter()
            .filter(|v| v.severity == Severity::Error)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    fn push(&mut self, severity: Severity, kind: ViolationKind, entity: String, message: String) {
        self.violations.push(Violation {
            severity,
            kind,
            entity,
            message,
        });
    }
}

/// Checks every node and edge invariant. Isolated nodes are warnings.
pub fn validate_graph(graph: &StreetGraph) -> ValidationReport {
    use Severity::*;
    use ViolationKind::*;

    let mut report = ValidationReport::default();
    for n in &graph.nodes {
        if !n.position.is_finite() {
            report.push(
                Error,
                NonFiniteCoordinate,
                format!("node {}", n.id),
                "position is not finite".into(),
            );
        }
    }
    for e in &graph.edges {
        let entity = format!("edge {}", e.id);
        if !(e.length > 0.0) || !e.length.is_finite() {
            report.push(
                Error,
                NonPositiveLength,
                entity.clone(),
                format!("length must be positive, got {}", e.length),
            );
        }
        if !e.gradient.is_finite() || e.gradient < 0.0 {
            report.push(
                Error,
                InvalidGradient,
                entity.clone(),
                format!(
                    "gradient must be finite and non-negative, got {}",
                    e.gradient
                ),
            );
        }
        if e.from == e.to {
            report.push(
                Warning,
                SelfLoop,
                entity.clone(),
                "edge starts and ends at the same node".into(),
            );
        }
        if e.geometry.len() < 2 {
            report.push(
                Error,
                DegenerateGeometry,
                entity.clone(),
                format!("geometry needs at least 2 points, got {}", e.geometry.len()),
            );
            continue;
        }
        if !e.geometry.iter().all(Coord::is_finite) {
            report.push(
                Error,
                NonFiniteCoordinate,
                entity.clone(),
                "geometry contains a non-finite coordinate".into(),
            );
            continue;
        }
        let geom_len = polyline_length(&e.geometry);
        if e.length > 0.0 && ((geom_len - e.length).abs() > GEOMETRY_LENGTH_TOLERANCE * e.length) {
            report.push(
                Error,
                GeometryLengthMismatch,
                entity,
                format!(
                    "geometry/length mismatch: polyline {:.3} m vs declared {:.3} m",
                    geom_len, e.length
                ),
            );
        }
    }
    for (i, n) in graph.nodes.iter().enumerate() {
        let touched = graph.adjacency[i].len()
            + graph
                .endpoints
                .iter()
                .filter(|&&(a, b)| a == i && b == i)
                .count();
        if touched == 0 {
            report.push(
                Warning,
                IsolatedNode,
                format!("node {}", n.id),
                "node has no incident edges".into(),
            );
        }
    }
    report
}
