//! Point-pair graph data model: an ordered junction list plus a symmetric
//! boolean adjacency matrix, and conversions to and from endpoint segments.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Deserialize;

use crate::cluster;
use crate::error::{Error, Result};
use crate::geometry::perpendicular_and_param;

/// Default perpendicular tolerance used when collapsing collinear edges.
pub const DEFAULT_COLLINEAR_TOL: f64 = 2.0;

/// Graphs with more junctions than this store their edges as a sparse set.
pub const DENSE_LIMIT: usize = 1024;

/// A subpixel image point, `x` to the right and `y` down.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Junction {
    pub x: f64,
    pub y: f64,
}

impl Junction {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Junction) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_squared(self, other: Junction) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        dx * dx + dy * dy
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Canonical order: ascending `y`, then ascending `x`.
    pub fn canonical_cmp(&self, other: &Junction) -> Ordering {
        self.y
            .total_cmp(&other.y)
            .then_with(|| self.x.total_cmp(&other.x))
    }

    /// Rounds both coordinates to the 4-decimal grid used by the JSON format.
    pub fn quantized(self) -> Junction {
        Junction::new(quantize(self.x), quantize(self.y))
    }
}

pub(crate) fn quantize(v: f64) -> f64 {
    let q = (v * 1e4).round() / 1e4;
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Adjacency {
    Dense { k: usize, bits: Vec<bool> },
    Sparse(BTreeSet<(usize, usize)>),
}

impl Adjacency {
    fn empty(k: usize) -> Self {
        if k <= DENSE_LIMIT {
            Adjacency::Dense {
                k,
                bits: vec![false; k * k],
            }
        } else {
            Adjacency::Sparse(BTreeSet::new())
        }
    }

    fn set(&mut self, i: usize, j: usize) {
        match self {
            Adjacency::Dense { k, bits } => {
                bits[i * *k + j] = true;
                bits[j * *k + i] = true;
            }
            Adjacency::Sparse(set) => {
                set.insert((i.min(j), i.max(j)));
            }
        }
    }

    fn get(&self, i: usize, j: usize) -> bool {
        match self {
            Adjacency::Dense { k, bits } => bits[i * *k + j],
            Adjacency::Sparse(set) => set.contains(&(i.min(j), i.max(j))),
        }
    }
}

/// A line segment graph over an image frame.
///
/// Junctions are always held in canonical order (ascending `y`, then `x`),
/// the adjacency is symmetric with an empty diagonal, no two junctions
/// coincide, and every junction lies inside `[0, width) x [0, height)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineGraph {
    width: u32,
    height: u32,
    junctions: Vec<Junction>,
    adjacency: Adjacency,
}

impl LineGraph {
    pub fn empty(width: u32, height: u32) -> Result<Self> {
        Self::from_edges(width, height, Vec::new(), &[])
    }

    /// Builds a graph from junctions and an undirected edge list. Junctions
    /// are reordered canonically and the edges remapped accordingly.
    pub fn from_edges(
        width: u32,
        height: u32,
        junctions: Vec<Junction>,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGraph(format!(
                "frame must be positive, got {width}x{height}"
            )));
        }
        let k = junctions.len();
        for (idx, j) in junctions.iter().enumerate() {
            if !j.is_finite() {
                return Err(Error::InvalidGraph(format!("junction {idx} is not finite")));
            }
            if j.x < 0.0 || j.y < 0.0 || j.x >= width as f64 || j.y >= height as f64 {
                return Err(Error::InvalidGraph(format!(
                    "junction {idx} ({}, {}) outside {width}x{height} frame",
                    j.x, j.y
                )));
            }
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| junctions[a].canonical_cmp(&junctions[b]));
        let mut rank = vec![0; k];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }
        let sorted: Vec<Junction> = order.iter().map(|&i| junctions[i]).collect();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "duplicate junction at ({}, {})",
                w[0].x, w[0].y
            )));
        }
        let mut adjacency = Adjacency::empty(k);
        for &(i, j) in edges {
            if i >= k || j >= k {
                return Err(Error::IndexOutOfRange {
                    index: i.max(j),
                    len: k,
                });
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self loop on junction {i}")));
            }
            adjacency.set(rank[i], rank[j]);
        }
        Ok(Self {
            width,
            height,
            junctions: sorted,
            adjacency,
        })
    }

    /// Builds a graph from a full boolean matrix, rejecting asymmetric
    /// matrices and non-empty diagonals.
    pub fn from_matrix(
        width: u32,
        height: u32,
        junctions: Vec<Junction>,
        matrix: &[Vec<bool>],
    ) -> Result<Self> {
        let k = junctions.len();
        if matrix.len() != k || matrix.iter().any(|row| row.len() != k) {
            return Err(Error::ShapeMismatch(format!(
                "adjacency must be {k}x{k} for {k} junctions"
            )));
        }
        let mut edges = Vec::new();
        for i in 0..k {
            if matrix[i][i] {
                return Err(Error::InvalidGraph(format!("diagonal entry {i} is set")));
            }
            for j in i + 1..k {
                if matrix[i][j] != matrix[j][i] {
                    return Err(Error::InvalidGraph(format!(
                        "adjacency not symmetric at ({i}, {j})"
                    )));
                }
                if matrix[i][j] {
                    edges.push((i, j));
                }
            }
        }
        Self::from_edges(width, height, junctions, &edges)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn junctions(&self) -> &[Junction] {
        &self.junctions
    }

    pub fn len(&self) -> usize {
        self.junctions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.junctions.is_empty()
    }

    pub fn is_connected(&self, i: usize, j: usize) -> bool {
        i < self.len() && j < self.len() && self.adjacency.get(i, j)
    }

    /// Undirected edges as `(i, j)` with `i < j`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        match &self.adjacency {
            Adjacency::Dense { k, bits } => {
                let mut out = Vec::new();
                for i in 0..*k {
                    for j in i + 1..*k {
                        if bits[i * k + j] {
                            out.push((i, j));
                        }
                    }
                }
                out
            }
            Adjacency::Sparse(set) => set.iter().copied().collect(),
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    pub fn degree(&self, i: usize) -> Result<usize> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            });
        }
        Ok((0..self.len()).filter(|&j| self.adjacency.get(i, j)).count())
    }

    /// Dense copy of the adjacency matrix.
    pub fn adjacency_matrix(&self) -> Vec<Vec<bool>> {
        let k = self.len();
        (0..k)
            .map(|i| (0..k).map(|j| self.adjacency.get(i, j)).collect())
            .collect()
    }

    /// Rechecks symmetry and the empty diagonal.
    pub fn validate(&self) -> Result<()> {
        let k = self.len();
        if let Adjacency::Dense { bits, .. } = &self.adjacency {
            for i in 0..k {
                if bits[i * k + i] {
                    return Err(Error::InvalidGraph(format!("diagonal entry {i} is set")));
                }
                for j in i + 1..k {
                    if bits[i * k + j] != bits[j * k + i] {
                        return Err(Error::InvalidGraph(format!(
                            "adjacency not symmetric at ({i}, {j})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Serializes to the compact graph JSON format: junctions with four
    /// decimals, edges as sorted `[i, j]` pairs with `i < j`.
    pub fn to_json(&self) -> String {
        let mut out = String::with_capacity(64 + self.len() * 24);
        write!(
            out,
            "{{\"version\":1,\"width\":{},\"height\":{},\"junctions\":[",
            self.width, self.height
        )
        .unwrap();
        for (idx, j) in self.junctions.iter().enumerate() {
            if idx > 0 {
                out.push(',');
            }
            write!(out, "[{},{}]", fmt4(j.x), fmt4(j.y)).unwrap();
        }
        out.push_str("],\"edges\":[");
        for (idx, (i, j)) in self.edges().into_iter().enumerate() {
            if idx > 0 {
                out.push(',');
            }
            write!(out, "[{i},{j}]").unwrap();
        }
        out.push_str("]}");
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Wire {
            version: u32,
            width: u32,
            height: u32,
            junctions: Vec<[f64; 2]>,
            edges: Vec<[usize; 2]>,
        }
        let wire: Wire = serde_json::from_str(text)?;
        if wire.version != 1 {
            return Err(Error::invalid(format!(
                "unsupported graph version {}",
                wire.version
            )));
        }
        let junctions = wire
            .junctions
            .iter()
            .map(|&[x, y]| Junction::new(x, y))
            .collect();
        let edges: Vec<(usize, usize)> = wire.edges.iter().map(|&[i, j]| (i, j)).collect();
        Self::from_edges(wire.width, wire.height, junctions, &edges)
    }
}

fn fmt4(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".to_string()
    } else {
        s
    }
}

/// An ordered pair of distinct endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Junction,
    pub b: Junction,
}

impl Segment {
    pub fn new(a: Junction, b: Junction) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid("segment endpoints must be finite"));
        }
        if a == b {
            return Err(Error::invalid(format!(
                "degenerate segment at ({}, {})",
                a.x, a.y
            )));
        }
        Ok(Self { a, b })
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    /// Endpoints in canonical order, identifying the segment up to direction.
    pub fn key(&self) -> (Junction, Junction) {
        if self.a.canonical_cmp(&self.b) == Ordering::Greater {
            (self.b, self.a)
        } else {
            (self.a, self.b)
        }
    }

    pub fn same_as(&self, other: &Segment) -> bool {
        self.key() == other.key()
    }
}

/// Endpoint representation: an unordered set of segments in a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSet {
    pub width: u32,
    pub height: u32,
    segments: Vec<Segment>,
}

impl SegmentSet {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            segments: Vec::new(),
        }
    }

    pub fn from_segments(width: u32, height: u32, segments: impl IntoIterator<Item = Segment>) -> Self {
        let mut set = Self::new(width, height);
        for s in segments {
            set.insert(s);
        }
        set
    }

    /// Inserts `s` unless an identical segment (either direction) is present.
    pub fn insert(&mut self, s: Segment) -> bool {
        if self.segments.iter().any(|t| t.same_as(&s)) {
            return false;
        }
        self.segments.push(s);
        true
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Converts a graph to its maximal segments: every edge except those whose
/// two endpoints both lie within `collinear_tol` of a strictly longer edge
/// and inside its extent.
pub fn graph_to_segments(g: &LineGraph, collinear_tol: f64) -> Result<SegmentSet> {
    g.validate()?;
    let js = g.junctions();
    let edges = g.edges();
    let lengths: Vec<f64> = edges.iter().map(|&(i, j)| js[i].distance(js[j])).collect();

    // covering[v] lists the edges whose tolerance band contains junction v
    let mut covering: Vec<Vec<usize>> = vec![Vec::new(); js.len()];
    for (e, &(p, q)) in edges.iter().enumerate() {
        let (a, b) = (js[p], js[q]);
        let (lo_x, hi_x) = (a.x.min(b.x) - collinear_tol, a.x.max(b.x) + collinear_tol);
        let (lo_y, hi_y) = (a.y.min(b.y) - collinear_tol, a.y.max(b.y) + collinear_tol);
        for (v, pt) in js.iter().enumerate() {
            if pt.x < lo_x || pt.x > hi_x || pt.y < lo_y || pt.y > hi_y {
                continue;
            }
            let (dist, t) = perpendicular_and_param(*pt, a, b);
            if dist <= collinear_tol && (0.0..=1.0).contains(&t) {
                covering[v].push(e);
            }
        }
    }
    let mut in_band = vec![false; edges.len()];
    let mut out = SegmentSet::new(g.width(), g.height());
    for (e, &(i, j)) in edges.iter().enumerate() {
        for &f in &covering[j] {
            in_band[f] = true;
        }
        let subsumed = covering[i]
            .iter()
            .any(|&f| f != e && in_band[f] && lengths[f] > lengths[e]);
        for &f in &covering[j] {
            in_band[f] = false;
        }
        if !subsumed {
            out.insert(Segment::new(js[i], js[j])?);
        }
    }
    Ok(out)
}

/// Builds a graph from segments by merging endpoints under single linkage
/// at `merge_tol`; each segment becomes one edge. Collinear transitive
/// edges are not inferred.
pub fn segments_to_graph(s: &SegmentSet, merge_tol: f64) -> Result<LineGraph> {
    let mut points = Vec::with_capacity(s.len() * 2);
    for seg in s.segments() {
        points.push(seg.a);
        points.push(seg.b);
    }
    let labels = cluster::single_linkage(&points, merge_tol);
    let members = cluster::groups(&labels);
    let junctions: Vec<Junction> = members
        .iter()
        .map(|m| {
            let first = points[m[0]];
            if m.iter().all(|&i| points[i] == first) {
                first
            } else {
                let n = m.len() as f64;
                Junction::new(
                    m.iter().map(|&i| points[i].x).sum::<f64>() / n,
                    m.iter().map(|&i| points[i].y).sum::<f64>() / n,
                )
            }
        })
        .collect();
    let edges: Vec<(usize, usize)> = (0..s.len())
        .map(|k| (labels[2 * k], labels[2 * k + 1]))
        .filter(|(a, b)| a != b)
        .collect();
    LineGraph::from_edges(s.width, s.height, junctions, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j(x: f64, y: f64) -> Junction {
        Junction::new(x, y)
    }

    #[test]
    fn collinear_chain_keeps_only_longest() {
        let g = LineGraph::from_edges(
            200,
            200,
            vec![j(0.0, 0.0), j(50.0, 0.0), j(100.0, 0.0)],
            &[(0, 1), (1, 2), (0, 2)],
        )
        .unwrap();
        let s = graph_to_segments(&g, 2.0).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.segments()[0].same_as(&Segment::new(j(0.0, 0.0), j(100.0, 0.0)).unwrap()));
    }

    #[test]
    fn triangle_keeps_all_edges() {
        let g = LineGraph::from_edges(
            200,
            200,
            vec![j(0.0, 0.0), j(100.0, 0.0), j(0.0, 100.0)],
            &[(0, 1), (1, 2), (0, 2)],
        )
        .unwrap();
        assert_eq!(graph_to_segments(&g, 2.0).unwrap().len(), 3);
    }

    #[test]
    fn rejects_bad_matrices() {
        let js = vec![j(1.0, 1.0), j(5.0, 5.0)];
        let asym = vec![vec![false, true], vec![false, false]];
        assert!(LineGraph::from_matrix(10, 10, js.clone(), &asym).is_err());
        let diag = vec![vec![true, false], vec![false, false]];
        assert!(LineGraph::from_matrix(10, 10, js, &diag).is_err());
    }

    #[test]
    fn junction_outside_frame_rejected() {
        assert!(LineGraph::from_edges(10, 10, vec![j(10.0, 1.0)], &[]).is_err());
        assert!(LineGraph::from_edges(10, 10, vec![j(-0.5, 1.0)], &[]).is_err());
    }

    #[test]
    fn shared_endpoint_yields_three_junctions() {
        let s = SegmentSet::from_segments(
            200,
            200,
            [
                Segment::new(j(10.0, 10.0), j(50.0, 50.0)).unwrap(),
                Segment::new(j(50.0, 50.0), j(90.0, 10.0)).unwrap(),
            ],
        );
        let g = segments_to_graph(&s, 1.0).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn nearby_endpoints_merge() {
        let s = SegmentSet::from_segments(
            200,
            200,
            [
                Segment::new(j(10.0, 10.0), j(50.0, 50.0)).unwrap(),
                Segment::new(j(50.5, 50.2), j(90.0, 10.0)).unwrap(),
            ],
        );
        let g = segments_to_graph(&s, 1.0).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.edge_count(), 2);
        assert!(segments_to_graph(&SegmentSet::new(5, 5), 1.0).unwrap().is_empty());
    }

    #[test]
    fn degree_and_bounds() {
        let g = LineGraph::from_edges(
            200,
            200,
            vec![j(0.0, 0.0), j(100.0, 0.0), j(0.0, 100.0), j(150.0, 150.0)],
            &[(0, 1), (1, 2), (0, 2)],
        )
        .unwrap();
        assert_eq!(g.degree(0).unwrap(), 2);
        assert_eq!(g.degree(3).unwrap(), 0);
        assert!(matches!(g.degree(4), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn json_layout_is_exact() {
        let g = LineGraph::from_edges(
            64,
            48,
            vec![j(10.0, 20.5), j(3.25, 1.0), j(0.00004, 2.0)],
            &[(0, 1), (2, 0)],
        )
        .unwrap();
        assert_eq!(
            g.to_json(),
            "{\"version\":1,\"width\":64,\"height\":48,\
             \"junctions\":[[3.2500,1.0000],[0.0000,2.0000],[10.0000,20.5000]],\
             \"edges\":[[0,2],[1,2]]}"
        );
        let back = LineGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(back.to_json(), g.to_json());
    }

    #[test]
    fn json_errors_carry_location() {
        let err = LineGraph::from_json("{\"version\":1,\"width\":").unwrap_err();
        assert!(matches!(err, Error::Json { line: 1, .. }));
    }

    #[test]
    fn sparse_adjacency_beyond_dense_limit() {
        let k = DENSE_LIMIT + 8;
        let js: Vec<Junction> = (0..k).map(|i| j((i % 100) as f64, (i / 100) as f64)).collect();
        let edges: Vec<(usize, usize)> = (0..k - 1).map(|i| (i, i + 1)).collect();
        let g = LineGraph::from_edges(200, 200, js, &edges).unwrap();
        assert_eq!(g.edge_count(), k - 1);
        assert!(g.is_connected(1, 0));
        assert_eq!(g.degree(5).unwrap(), 2);
    }
}
