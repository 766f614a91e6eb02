//! Loopless k-shortest paths (Yen's algorithm) with a total, deterministic
//! order on paths: total length first, then the lexicographic order of the
//! edge-id sequence.
//!
//! Yen's method only enumerates paths in exact key order if every spur
//! search returns the key-minimal spur path, so the inner search is a
//! Dijkstra whose labels are `(distance, edge-rank sequence)` pairs rather
//! than bare distances. Because edge lengths are positive, extending two
//! labels by the same edge preserves their order, which is all Dijkstra
//! needs.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};

use super::{assemble_route, Route, RouteError, TravelMode};
use crate::netmodel::{NodeId, StreetGraph};

#[derive(Debug, Clone)]
struct Label {
    dist: f64,
    /// Edge-id ranks from the search source.
    ranks: Vec<u32>,
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then_with(|| self.ranks.cmp(&other.ranks))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    /// Full-path key; orders candidates.
    key: Label,
    edges: Vec<usize>,
    nodes: Vec<usize>,
}

struct SpurSearch<'a> {
    graph: &'a StreetGraph,
    blocked_nodes: Vec<bool>,
    blocked_edges: Vec<bool>,
}

impl<'a> SpurSearch<'a> {
    fn new(graph: &'a StreetGraph) -> Self {
        Self {
            graph,
            blocked_nodes: vec![false; graph.node_count()],
            blocked_edges: vec![false; graph.edge_count()],
        }
    }

    fn reset(&mut self) {
        self.blocked_nodes.iter_mut().for_each(|b| *b = false);
        self.blocked_edges.iter_mut().for_each(|b| *b = false);
    }

    /// Key-minimal path from `source` to `target` avoiding blocked nodes and
    /// edges. `start` seeds the label so distances accumulate exactly as a
    /// left-to-right sum over the whole path would.
    fn run(
        &self,
        source: usize,
        target: usize,
        start: &Label,
    ) -> Option<(Label, Vec<usize>, Vec<usize>)> {
        let n = self.graph.node_count();
        let mut best: Vec<Option<Label>> = vec![None; n];
        let mut pred: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut settled = vec![false; n];
        let mut heap = BinaryHeap::new();
        best[source] = Some(start.clone());
        heap.push(Reverse((start.clone(), source)));

        while let Some(Reverse((label, u))) = heap.pop() {
            if settled[u] {
                continue;
            }
            settled[u] = true;
            if u == target {
                let mut edges = Vec::new();
                let mut nodes = vec![u];
                let mut v = u;
                while let Some((e, p)) = pred[v] {
                    edges.push(e);
                    nodes.push(p);
                    v = p;
                }
                edges.reverse();
                nodes.reverse();
                return Some((label, edges, nodes));
            }
            for &(e, v) in self.graph.neighbours(u) {
                if settled[v] || self.blocked_nodes[v] || self.blocked_edges[e] {
                    continue;
                }
                let mut ranks = Vec::with_capacity(label.ranks.len() + 1);
                ranks.extend_from_slice(&label.ranks);
                ranks.push(self.graph.edge_rank(e));
                let next = Label {
                    dist: label.dist + self.graph.edges()[e].length,
                    ranks,
                };
                if best[v].as_ref().is_none_or(|b| next < *b) {
                    best[v] = Some(next.clone());
                    pred[v] = Some((e, u));
                    heap.push(Reverse((next, v)));
                }
            }
        }
        None
    }
}

/// Up to `k` loopless paths from `origin` to `dest`, shortest first.
///
/// Equal-length paths are ordered by their edge-id sequences, so the output
/// is fully deterministic. An empty list means the endpoints are not
/// connected.
pub fn k_shortest_paths(
    graph: &StreetGraph,
    origin: &NodeId,
    dest: &NodeId,
    k: usize,
    mode: TravelMode,
) -> Result<Vec<Route>, RouteError> {
    let source = graph
        .node_idx(origin)
        .ok_or_else(|| RouteError::UnknownNode(origin.clone()))?;
    let target = graph
        .node_idx(dest)
        .ok_or_else(|| RouteError::UnknownNode(dest.clone()))?;
    if source == target {
        return Err(RouteError::SameEndpoints(origin.clone()));
    }
    if k == 0 {
        return Err(RouteError::InvalidK);
    }

    let mut search = SpurSearch::new(graph);
    let empty = Label {
        dist: 0.0,
        ranks: Vec::new(),
    };
    let Some((key, edges, nodes)) = search.run(source, target, &empty) else {
        return Ok(Vec::new());
    };
    let mut accepted = vec![Candidate { key, edges, nodes }];
    let mut pending: BTreeSet<Candidate> = BTreeSet::new();

    while accepted.len() < k {
        let last = accepted.last().expect("at least one accepted path");
        let mut root = empty.clone();
        for i in 0..last.edges.len() {
            let spur = last.nodes[i];
            let root_edges = &last.edges[..i];

            search.reset();
            for p in &accepted {
                if p.edges.len() > i && p.edges[..i] == *root_edges {
                    search.blocked_edges[p.edges[i]] = true;
                }
            }
            for &n in &last.nodes[..i] {
                search.blocked_nodes[n] = true;
            }

            if let Some((key, spur_edges, spur_nodes)) = search.run(spur, target, &root) {
                let mut edges = root_edges.to_vec();
                edges.extend(spur_edges);
                let mut nodes = last.nodes[..i].to_vec();
                nodes.extend(spur_nodes);
                pending.insert(Candidate { key, edges, nodes });
            }

            let e = last.edges[i];
            root.dist += graph.edges()[e].length;
            root.ranks.push(graph.edge_rank(e));
        }

        match pending.pop_first() {
            Some(next) => accepted.push(next),
            None => break,
        }
    }

    Ok(accepted
        .into_iter()
        .map(|c| assemble_route(graph, mode, source, &c.edges))
        .collect())
}
