//! Conversion of raw endpoint annotations into a complete point-pair graph.
//!
//! The pass runs seven steps in a fixed order: drop isolated junctions,
//! extend every segment to its longest collinear chain, drop chains whose
//! inner junctions are covered by another chain, refit each chain, snap
//! junctions shared by crossing chains to the least-squares intersection,
//! insert junctions at unannotated crossings, and assemble the graph.
//! [`canonicalize`] repeats the pass until the output reproduces itself.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cluster;
use crate::error::{Error, Result};
use crate::geometry::{acute_angle_deg, fit_tls, perpendicular_and_param, segment_crossing, solve_stacked_lines, FittedLine};
use crate::graph::{Junction, LineGraph, Segment};

/// Refined positions closer than this to the input position keep the input.
pub const SNAP_DEADBAND: f64 = 0.01;

const MAX_PASSES: usize = 256;
const MAX_REFINE_ITERS: usize = 1000;
const EXTENT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonConfig {
    /// Perpendicular tolerance when chaining and connecting along a line.
    pub belt_width: f64,
    /// Perpendicular distance deciding inner-junction membership.
    pub inner_dist: f64,
    /// Minimum crossing angle for intersection refinement and insertion.
    pub min_angle_deg: f64,
    /// Junctions closer than this are the same junction.
    pub merge_tol: f64,
}

impl Default for CanonConfig {
    fn default() -> Self {
        Self {
            belt_width: 2.0,
            inner_dist: 2.0,
            min_angle_deg: 5.0,
            merge_tol: 3.0,
        }
    }
}

impl CanonConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("belt_width", self.belt_width),
            ("inner_dist", self.inner_dist),
            ("merge_tol", self.merge_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.min_angle_deg > 0.0 && self.min_angle_deg <= 90.0) {
            return Err(Error::invalid(format!(
                "min_angle_deg must be in (0, 90], got {}",
                self.min_angle_deg
            )));
        }
        Ok(())
    }
}

/// Endpoint annotation as found in line segment datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAnnotation {
    pub width: u32,
    pub height: u32,
    pub junctions: Vec<Junction>,
    pub segments: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct RawWire {
    width: u32,
    height: u32,
    junctions: Vec<[f64; 2]>,
    segments: Vec<[usize; 2]>,
}

impl RawAnnotation {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("annotation frame must be positive"));
        }
        if let Some(i) = self.junctions.iter().position(|j| !j.is_finite()) {
            return Err(Error::invalid(format!("junction {i} is not finite")));
        }
        let k = self.junctions.len();
        for &(i, j) in &self.segments {
            if i >= k || j >= k {
                return Err(Error::IndexOutOfRange { index: i.max(j), len: k });
            }
            if i == j {
                return Err(Error::invalid(format!("segment ({i}, {j}) has identical endpoints")));
            }
        }
        Ok(())
    }

    /// Treats every graph edge as an annotated segment.
    pub fn from_graph(g: &LineGraph) -> Self {
        Self {
            width: g.width(),
            height: g.height(),
            junctions: g.junctions().to_vec(),
            segments: g.edges(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: RawWire = serde_json::from_str(text)?;
        let a = Self {
            width: wire.width,
            height: wire.height,
            junctions: wire.junctions.iter().map(|&[x, y]| Junction::new(x, y)).collect(),
            segments: wire.segments.iter().map(|&[i, j]| (i, j)).collect(),
        };
        a.validate()?;
        Ok(a)
    }

    pub fn to_json(&self) -> String {
        let wire = RawWire {
            width: self.width,
            height: self.height,
            junctions: self.junctions.iter().map(|j| [j.x, j.y]).collect(),
            segments: self.segments.iter().map(|&(i, j)| [i, j]).collect(),
        };
        serde_json::to_string(&wire).expect("annotation serialization cannot fail")
    }
}

/// A maximal collinear chain: its fitted line, the two extreme junctions,
/// and the junctions lying on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub line: FittedLine,
    pub ends: (usize, usize),
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connectivity {
    pub chains: Vec<Chain>,
    /// Connected junction pairs `(i, j)` with `i < j`.
    pub pairs: BTreeSet<(usize, usize)>,
}

/// Step 1: drops junctions used by no segment and remaps indices.
pub fn remove_isolated(a: &RawAnnotation) -> RawAnnotation {
    let mut used = vec![false; a.junctions.len()];
    for &(i, j) in &a.segments {
        used[i] = true;
        used[j] = true;
    }
    let mut remap = vec![usize::MAX; a.junctions.len()];
    let mut junctions = Vec::new();
    for (i, j) in a.junctions.iter().enumerate() {
        if used[i] {
            remap[i] = junctions.len();
            junctions.push(*j);
        }
    }
    RawAnnotation {
        width: a.width,
        height: a.height,
        junctions,
        segments: a.segments.iter().map(|&(i, j)| (remap[i], remap[j])).collect(),
    }
}

fn extent(line: &FittedLine, junctions: &[Junction], members: &[usize]) -> (f64, f64) {
    members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &m| {
        let t = line.project(junctions[m]);
        (lo.min(t), hi.max(t))
    })
}

fn extreme_pair(line: &FittedLine, junctions: &[Junction], members: &[usize]) -> (usize, usize) {
    let key = |m: &usize| (line.project(junctions[*m]), *m);
    let lo = members
        .iter()
        .min_by(|a, b| key(a).0.total_cmp(&key(b).0).then(a.cmp(b)))
        .copied()
        .expect("chain has members");
    let hi = members
        .iter()
        .max_by(|a, b| key(a).0.total_cmp(&key(b).0).then(b.cmp(a)))
        .copied()
        .expect("chain has members");
    (lo, hi)
}

fn on_line(line: &FittedLine, junctions: &[Junction], dist: f64, range: (f64, f64)) -> Vec<usize> {
    junctions
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            let t = line.project(**p);
            line.distance(**p) <= dist && t >= range.0 - EXTENT_SLACK && t <= range.1 + EXTENT_SLACK
        })
        .map(|(i, _)| i)
        .collect()
}

fn all_pairs(members: &[usize], out: &mut BTreeSet<(usize, usize)>) {
    for (x, &a) in members.iter().enumerate() {
        for &b in &members[x + 1..] {
            out.insert((a.min(b), a.max(b)));
        }
    }
}

/// Step 2: grows each segment into its longest collinear chain.
///
/// A segment joins the chain when both endpoints lie within `belt_width`
/// of the chain's current total-least-squares line and its projection
/// overlaps the chain extent (widened by `belt_width`). The line is refit
/// after every merge, until no segment joins. Every junction within the
/// belt and inside the final extent is connected to every other one.
pub fn extend_to_longest(a: &RawAnnotation, cfg: &CanonConfig) -> Connectivity {
    let js = &a.junctions;
    let mut absorbed = vec![false; a.segments.len()];
    let mut chains: Vec<Chain> = Vec::new();
    let mut pairs = BTreeSet::new();
    let mut seen_ends = BTreeSet::new();
    for (s, &(u, v)) in a.segments.iter().enumerate() {
        if absorbed[s] {
            continue;
        }
        let mut in_chain = vec![false; a.segments.len()];
        in_chain[s] = true;
        let mut points: BTreeSet<usize> = [u, v].into_iter().collect();
        let Some(mut line) = FittedLine::through(js[u], js[v]) else {
            continue;
        };
        loop {
            let mut grew = false;
            for (c, &(p, q)) in a.segments.iter().enumerate() {
                if in_chain[c] {
                    continue;
                }
                if line.distance(js[p]) > cfg.belt_width || line.distance(js[q]) > cfg.belt_width {
                    continue;
                }
                let members: Vec<usize> = points.iter().copied().collect();
                let (lo, hi) = extent(&line, js, &members);
                let (tp, tq) = (line.project(js[p]), line.project(js[q]));
                if tp.max(tq) < lo - cfg.belt_width || tp.min(tq) > hi + cfg.belt_width {
                    continue;
                }
                in_chain[c] = true;
                points.insert(p);
                points.insert(q);
                let pts: Vec<Junction> = points.iter().map(|&i| js[i]).collect();
                if let Some(refit) = fit_tls(&pts) {
                    line = refit;
                }
                grew = true;
            }
            if !grew {
                break;
            }
        }
        for (c, flag) in in_chain.iter().enumerate() {
            if *flag {
                absorbed[c] = true;
            }
        }
        let chain_points: Vec<usize> = points.into_iter().collect();
        let (lo, hi) = extreme_pair(&line, js, &chain_points);
        let range = extent(&line, js, &[lo, hi]);
        let members = on_line(&line, js, cfg.belt_width, range);
        all_pairs(&members, &mut pairs);
        if seen_ends.insert((lo.min(hi), lo.max(hi))) {
            chains.push(Chain {
                line,
                ends: (lo, hi),
                members,
            });
        }
    }
    Connectivity { chains, pairs }
}

/// Junctions within `inner_dist` of the chain line and inside the extent
/// spanned by its two ends (inclusive).
pub fn inner_junctions(chain: &Chain, junctions: &[Junction], inner_dist: f64) -> Vec<usize> {
    let range = extent(&chain.line, junctions, &[chain.ends.0, chain.ends.1]);
    on_line(&chain.line, junctions, inner_dist, range)
}

fn chain_length(chain: &Chain, junctions: &[Junction]) -> f64 {
    junctions[chain.ends.0].distance(junctions[chain.ends.1])
}

/// Step 3: drops a chain when its inner junctions are a subset of those of
/// another surviving chain. Chains are visited shortest first, so of two
/// chains with equal inner sets the longer one survives. Surviving chains
/// come back with `members` set to their inner junctions.
pub fn remove_subsumed(chains: Vec<Chain>, junctions: &[Junction], cfg: &CanonConfig) -> Vec<Chain> {
    let inner: Vec<BTreeSet<usize>> = chains
        .iter()
        .map(|c| inner_junctions(c, junctions, cfg.inner_dist).into_iter().collect())
        .collect();
    let mut order: Vec<usize> = (0..chains.len()).collect();
    order.sort_by(|&a, &b| {
        chain_length(&chains[a], junctions)
            .total_cmp(&chain_length(&chains[b], junctions))
            .then(a.cmp(&b))
    });
    let mut alive = vec![true; chains.len()];
    for &s in &order {
        let covered = (0..chains.len()).any(|t| t != s && alive[t] && inner[s].is_subset(&inner[t]));
        if covered {
            alive[s] = false;
        }
    }
    chains
        .into_iter()
        .zip(inner)
        .zip(alive)
        .filter(|(_, keep)| *keep)
        .map(|((mut c, inner), _)| {
            c.members = inner.into_iter().collect();
            c
        })
        .collect()
}

/// Outcome of refitting a segment to its inner junctions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refit {
    pub segment: Segment,
    pub line: Option<FittedLine>,
    /// Set when the inner junctions coincide and the input was kept.
    pub degenerate: bool,
}

/// Step 4: total-least-squares fit through the inner junctions; the new
/// endpoints are the projections of the two extreme inner junctions.
pub fn refit_segment(seg: &Segment, inner: &[Junction]) -> Refit {
    match fit_tls(inner) {
        Some(line) => {
            let (mut lo, mut hi) = (inner[0], inner[0]);
            for &p in inner {
                if line.project(p) < line.project(lo) {
                    lo = p;
                }
                if line.project(p) > line.project(hi) {
                    hi = p;
                }
            }
            let (a, b) = (line.foot(lo), line.foot(hi));
            match Segment::new(a, b) {
                Ok(segment) => Refit {
                    segment,
                    line: Some(line),
                    degenerate: false,
                },
                Err(_) => degenerate(seg),
            }
        }
        None => degenerate(seg),
    }
}

fn degenerate(seg: &Segment) -> Refit {
    log::warn!(
        "refit: inner junctions of ({}, {})-({}, {}) coincide, keeping the segment",
        seg.a.x,
        seg.a.y,
        seg.b.x,
        seg.b.y
    );
    Refit {
        segment: *seg,
        line: None,
        degenerate: true,
    }
}

fn max_pairwise_angle(lines: &[FittedLine]) -> f64 {
    let mut best: f64 = 0.0;
    for (i, a) in lines.iter().enumerate() {
        for b in &lines[i + 1..] {
            best = best.max(acute_angle_deg(a.dir, b.dir));
        }
    }
    best
}

/// Step 5: moves every junction incident to two or more lines that cross
/// at `min_angle_deg` or more to the least-squares solution of their
/// stacked equations. Other junctions are returned unchanged.
pub fn refine_intersections(
    junctions: &[Junction],
    incident: &[Vec<usize>],
    lines: &[FittedLine],
    cfg: &CanonConfig,
) -> Vec<Junction> {
    junctions
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let own: Vec<FittedLine> = incident.get(i).map_or(Vec::new(), |ls| ls.iter().map(|&l| lines[l]).collect());
            if own.len() < 2 || max_pairwise_angle(&own) < cfg.min_angle_deg {
                return p;
            }
            solve_stacked_lines(&own).unwrap_or(p)
        })
        .collect()
}

/// Result of inserting junctions at unannotated crossings.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrieved {
    pub junctions: Vec<Junction>,
    /// Indices of the inserted junctions.
    pub inserted: Vec<usize>,
    /// Connectivity along every segment after insertion.
    pub pairs: BTreeSet<(usize, usize)>,
}

/// Pairs connected along `segments` (end indices): all junctions within
/// `belt` of a segment and inside its extent are mutually connected.
pub fn belt_pairs(segments: &[(usize, usize)], junctions: &[Junction], belt: f64) -> BTreeSet<(usize, usize)> {
    let mut pairs = BTreeSet::new();
    for &(a, b) in segments {
        if junctions[a] == junctions[b] {
            continue;
        }
        let members: Vec<usize> = junctions
            .iter()
            .enumerate()
            .filter(|(_, p)| {
                let (d, t) = perpendicular_and_param(**p, junctions[a], junctions[b]);
                d <= belt && t >= -EXTENT_SLACK && t <= 1.0 + EXTENT_SLACK
            })
            .map(|(i, _)| i)
            .collect();
        all_pairs(&members, &mut pairs);
    }
    pairs
}

/// Step 6: inserts a junction wherever two segments cross strictly inside
/// both extents at `min_angle_deg` or more and no junction is already
/// within `merge_tol` of the crossing.
pub fn retrieve_missing(segments: &[(usize, usize)], junctions: &[Junction], cfg: &CanonConfig) -> Retrieved {
    let mut out = junctions.to_vec();
    let mut inserted = Vec::new();
    for (x, &(a, b)) in segments.iter().enumerate() {
        for &(c, d) in &segments[x + 1..] {
            let (pa, pb, pc, pd) = (junctions[a], junctions[b], junctions[c], junctions[d]);
            let angle = acute_angle_deg((pb.x - pa.x, pb.y - pa.y), (pd.x - pc.x, pd.y - pc.y));
            if !(angle >= cfg.min_angle_deg) {
                continue;
            }
            let Some((t, u, p)) = segment_crossing(pa, pb, pc, pd) else {
                continue;
            };
            if !(t > 0.0 && t < 1.0 && u > 0.0 && u < 1.0) {
                continue;
            }
            if out.iter().any(|q| q.distance(p) <= cfg.merge_tol) {
                continue;
            }
            inserted.push(out.len());
            out.push(p);
        }
    }
    let pairs = belt_pairs(segments, &out, cfg.belt_width);
    Retrieved {
        junctions: out,
        inserted,
        pairs,
    }
}

fn clamp_to_frame(p: Junction, width: u32, height: u32) -> Junction {
    let max_x = width as f64 - 1e-4;
    let max_y = height as f64 - 1e-4;
    Junction::new(p.x.clamp(0.0, max_x), p.y.clamp(0.0, max_y))
}

/// Merges junctions under single linkage at `merge_tol`. Returns the merged
/// positions and the old-to-new index map.
fn merge_close(junctions: &[Junction], merge_tol: f64) -> (Vec<Junction>, Vec<usize>) {
    let labels = cluster::single_linkage(junctions, merge_tol);
    let merged = cluster::groups(&labels)
        .into_iter()
        .map(|m| {
            let first = junctions[m[0]];
            if m.iter().all(|&i| junctions[i] == first) {
                first
            } else {
                let n = m.len() as f64;
                Junction::new(
                    m.iter().map(|&i| junctions[i].x).sum::<f64>() / n,
                    m.iter().map(|&i| junctions[i].y).sum::<f64>() / n,
                )
            }
        })
        .collect();
    (merged, labels)
}

/// Step 1 plus the input cleanup the later steps rely on: clamps junctions
/// into the frame, merges junctions closer than `merge_tol`, drops
/// collapsed and duplicate segments, then drops isolated junctions.
fn prepare(a: &RawAnnotation, cfg: &CanonConfig) -> RawAnnotation {
    let a = remove_isolated(a);
    let clamped: Vec<Junction> = a
        .junctions
        .iter()
        .map(|&p| clamp_to_frame(p, a.width, a.height))
        .collect();
    let (junctions, map) = merge_close(&clamped, cfg.merge_tol);
    let mut seen = BTreeSet::new();
    let segments = a
        .segments
        .iter()
        .map(|&(i, j)| (map[i], map[j]))
        .filter(|&(i, j)| i != j && seen.insert((i.min(j), i.max(j))))
        .collect();
    remove_isolated(&RawAnnotation {
        width: a.width,
        height: a.height,
        junctions,
        segments,
    })
}

/// Steps 4 and 5 iterated to a fixed point over fixed chain membership.
/// Single-line junctions are projected onto their refit line so that every
/// junction ends up on all of its lines.
fn refine(chains: &[Chain], junctions: &[Junction], cfg: &CanonConfig) -> (Vec<Junction>, Vec<FittedLine>) {
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); junctions.len()];
    for (c, chain) in chains.iter().enumerate() {
        for &m in &chain.members {
            incident[m].push(c);
        }
    }
    let mut pos = junctions.to_vec();
    let mut lines: Vec<FittedLine> = chains.iter().map(|c| c.line).collect();
    for _ in 0..MAX_REFINE_ITERS {
        for (c, chain) in chains.iter().enumerate() {
            let inner: Vec<Junction> = chain.members.iter().map(|&m| pos[m]).collect();
            let seg = match Segment::new(pos[chain.ends.0], pos[chain.ends.1]) {
                Ok(s) => s,
                Err(_) => continue,
            };
            if let Some(line) = refit_segment(&seg, &inner).line {
                lines[c] = line;
            }
        }
        let mut next = refine_intersections(&pos, &incident, &lines, cfg);
        for (i, p) in next.iter_mut().enumerate() {
            if incident[i].len() == 1 {
                *p = lines[incident[i][0]].foot(pos[i]);
            }
        }
        let moved = pos
            .iter()
            .zip(&next)
            .map(|(a, b)| a.distance(*b))
            .fold(0.0, f64::max);
        pos = next;
        if moved < 1e-10 {
            break;
        }
    }
    for (p, orig) in pos.iter_mut().zip(junctions) {
        if p.distance(*orig) <= SNAP_DEADBAND {
            *p = *orig;
        }
    }
    (pos, lines)
}

fn single_pass(a: &RawAnnotation, cfg: &CanonConfig) -> Result<LineGraph> {
    let a = prepare(a, cfg);
    if a.segments.is_empty() {
        return LineGraph::empty(a.width, a.height);
    }
    let conn = extend_to_longest(&a, cfg);
    let chains = remove_subsumed(conn.chains, &a.junctions, cfg);
    let (refined, lines) = refine(&chains, &a.junctions, cfg);

    let segments: Vec<(usize, usize)> = chains
        .iter()
        .zip(&lines)
        .map(|(c, line)| extreme_pair(line, &refined, &c.members))
        .filter(|(lo, hi)| lo != hi)
        .collect();
    let retrieved = retrieve_missing(&segments, &refined, cfg);

    let placed: Vec<Junction> = retrieved
        .junctions
        .iter()
        .map(|&p| clamp_to_frame(p, a.width, a.height).quantized())
        .collect();
    let (merged, map) = merge_close(&placed, cfg.merge_tol);
    let merged: Vec<Junction> = merged.into_iter().map(Junction::quantized).collect();
    let segments: Vec<(usize, usize)> = segments
        .iter()
        .map(|&(i, j)| (map[i], map[j]))
        .filter(|(i, j)| i != j)
        .collect();
    let pairs = belt_pairs(&segments, &merged, cfg.belt_width);

    let mut used = vec![false; merged.len()];
    for &(i, j) in &pairs {
        used[i] = true;
        used[j] = true;
    }
    let mut remap = vec![usize::MAX; merged.len()];
    let mut kept = Vec::new();
    for (i, p) in merged.iter().enumerate() {
        if used[i] {
            remap[i] = kept.len();
            kept.push(*p);
        }
    }
    let edges: Vec<(usize, usize)> = pairs.iter().map(|&(i, j)| (remap[i], remap[j])).collect();
    LineGraph::from_edges(a.width, a.height, kept, &edges)
        .map_err(|e| Error::Internal(format!("canonical graph construction failed: {e}")))
}

/// Runs the full conversion and repeats it on its own output until the
/// graph reproduces itself, so the result is a fixed point. Should the
/// passes revisit an earlier graph instead, the cycle's smallest member
/// (by JSON text) is returned; it maps back onto the same cycle, so the
/// result is still stable under another call.
pub fn canonicalize(a: &RawAnnotation, cfg: &CanonConfig) -> Result<LineGraph> {
    cfg.validate()?;
    a.validate()?;
    let mut g = single_pass(a, cfg)?;
    let mut history: Vec<(String, LineGraph)> = Vec::new();
    for _ in 0..MAX_PASSES {
        let next = single_pass(&RawAnnotation::from_graph(&g), cfg)?;
        if next == g {
            return Ok(g);
        }
        history.push((g.to_json(), g));
        let text = next.to_json();
        if let Some(start) = history.iter().position(|(h, _)| *h == text) {
            let (_, rep) = history
                .drain(start..)
                .min_by(|x, y| x.0.cmp(&y.0))
                .expect("cycle is non-empty");
            return Ok(rep);
        }
        g = next;
    }
    log::warn!("canonicalize: no fixed point after {MAX_PASSES} passes");
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j(x: f64, y: f64) -> Junction {
        Junction::new(x, y)
    }

    fn raw(junctions: Vec<Junction>, segments: Vec<(usize, usize)>) -> RawAnnotation {
        RawAnnotation {
            width: 200,
            height: 200,
            junctions,
            segments,
        }
    }

    #[test]
    fn isolated_junctions_removed() {
        let a = raw(vec![j(1.0, 1.0), j(50.0, 50.0), j(90.0, 10.0)], vec![(0, 2)]);
        let out = remove_isolated(&a);
        assert_eq!(out.junctions, vec![j(1.0, 1.0), j(90.0, 10.0)]);
        assert_eq!(out.segments, vec![(0, 1)]);
        let same = raw(vec![j(1.0, 1.0), j(90.0, 10.0)], vec![(0, 1)]);
        assert_eq!(remove_isolated(&same), same);
    }

    #[test]
    fn collinear_segments_extend() {
        let a = raw(vec![j(10.0, 10.0), j(60.0, 10.0), j(110.0, 10.0)], vec![(0, 1), (1, 2)]);
        let conn = extend_to_longest(&a, &CanonConfig::default());
        assert_eq!(conn.pairs, [(0, 1), (0, 2), (1, 2)].into_iter().collect());
        assert_eq!(conn.chains.len(), 1);
    }

    #[test]
    fn perpendicular_segments_do_not_extend() {
        let a = raw(vec![j(10.0, 10.0), j(60.0, 10.0), j(60.0, 60.0)], vec![(0, 1), (1, 2)]);
        let conn = extend_to_longest(&a, &CanonConfig::default());
        assert_eq!(conn.pairs, [(0, 1), (1, 2)].into_iter().collect());
    }

    #[test]
    fn subsumed_chain_dropped_crossing_kept() {
        let cfg = CanonConfig::default();
        let js = vec![j(10.0, 10.0), j(60.0, 10.0), j(110.0, 10.0)];
        let ac = Chain {
            line: FittedLine::through(js[0], js[2]).unwrap(),
            ends: (0, 2),
            members: vec![0, 1, 2],
        };
        let ab = Chain {
            line: FittedLine::through(js[0], js[1]).unwrap(),
            ends: (0, 1),
            members: vec![0, 1],
        };
        let kept = remove_subsumed(vec![ab, ac], &js, &cfg);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].ends, (0, 2));

        let xs = vec![j(0.0, 0.0), j(100.0, 100.0), j(0.0, 100.0), j(100.0, 0.0)];
        let c1 = Chain {
            line: FittedLine::through(xs[0], xs[1]).unwrap(),
            ends: (0, 1),
            members: vec![0, 1],
        };
        let c2 = Chain {
            line: FittedLine::through(xs[2], xs[3]).unwrap(),
            ends: (2, 3),
            members: vec![2, 3],
        };
        assert_eq!(remove_subsumed(vec![c1, c2], &xs, &cfg).len(), 2);
    }

    #[test]
    fn refit_examples() {
        let seg = Segment::new(j(0.0, 0.0), j(100.0, 0.0)).unwrap();
        let r = refit_segment(&seg, &[j(0.0, 0.0), j(50.0, 1.0), j(100.0, 0.0)]);
        assert!(!r.degenerate);
        assert!((r.segment.a.y - 1.0 / 3.0).abs() < 1e-9);
        assert!((r.segment.b.y - 1.0 / 3.0).abs() < 1e-9);
        assert!((r.segment.a.x - 0.0).abs() < 1e-9 && (r.segment.b.x - 100.0).abs() < 1e-9);

        let exact = refit_segment(&seg, &[j(0.0, 0.0), j(30.0, 0.0), j(100.0, 0.0)]);
        assert!(exact.segment.a.distance(j(0.0, 0.0)) < 1e-9);
        assert!(exact.segment.b.distance(j(100.0, 0.0)) < 1e-9);

        let two = refit_segment(&seg, &[j(3.0, 4.0), j(40.0, 77.0)]);
        assert!(two.segment.a.distance(j(3.0, 4.0)) < 1e-9);
        assert!(two.segment.b.distance(j(40.0, 77.0)) < 1e-9);

        let degenerate = refit_segment(&seg, &[j(5.0, 5.0), j(5.0, 5.0)]);
        assert!(degenerate.degenerate);
        assert_eq!(degenerate.segment, seg);
    }

    #[test]
    fn refine_snaps_perpendicular_crossing() {
        let cfg = CanonConfig::default();
        let h = FittedLine::through(j(0.0, 50.0), j(100.0, 50.0)).unwrap();
        let v = FittedLine::through(j(50.0, 0.0), j(50.0, 100.0)).unwrap();
        let out = refine_intersections(
            &[j(50.7, 49.2), j(10.0, 50.3)],
            &[vec![0, 1], vec![0]],
            &[h, v],
            &cfg,
        );
        assert!(out[0].distance(j(50.0, 50.0)) < 1e-12);
        assert_eq!(out[1], j(10.0, 50.3));
    }

    #[test]
    fn refine_skips_near_parallel() {
        let cfg = CanonConfig::default();
        let a = FittedLine::through(j(0.0, 50.0), j(100.0, 50.0)).unwrap();
        let b = FittedLine::through(j(0.0, 50.0), j(100.0, 53.0)).unwrap();
        let out = refine_intersections(&[j(1.0, 51.0)], &[vec![0, 1]], &[a, b], &cfg);
        assert_eq!(out[0], j(1.0, 51.0));
    }

    #[test]
    fn x_crossing_gains_center_junction() {
        let js = vec![j(0.0, 0.0), j(100.0, 100.0), j(0.0, 100.0), j(100.0, 0.0)];
        let r = retrieve_missing(&[(0, 1), (2, 3)], &js, &CanonConfig::default());
        assert_eq!(r.inserted, vec![4]);
        assert!(r.junctions[4].distance(j(50.0, 50.0)) < 1e-12);
        let expected: BTreeSet<(usize, usize)> =
            [(0, 4), (1, 4), (0, 1), (2, 4), (3, 4), (2, 3)].into_iter().collect();
        assert_eq!(r.pairs, expected);
    }

    #[test]
    fn parallel_and_annotated_crossings_insert_nothing() {
        let cfg = CanonConfig::default();
        let par = vec![j(0.0, 0.0), j(100.0, 0.0), j(0.0, 10.0), j(100.0, 10.0)];
        assert!(retrieve_missing(&[(0, 1), (2, 3)], &par, &cfg).inserted.is_empty());
        let mut xs = vec![j(0.0, 0.0), j(100.0, 100.0), j(0.0, 100.0), j(100.0, 0.0)];
        xs.push(j(50.5, 49.5));
        assert!(retrieve_missing(&[(0, 1), (2, 3)], &xs, &cfg).inserted.is_empty());
    }

    #[test]
    fn canonicalize_x_crossing() {
        let a = RawAnnotation {
            width: 101,
            height: 101,
            junctions: vec![j(0.0, 0.0), j(100.0, 100.0), j(0.0, 100.0), j(100.0, 0.0)],
            segments: vec![(0, 1), (2, 3)],
        };
        let g = canonicalize(&a, &CanonConfig::default()).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.edge_count(), 6);
        assert!(g.junctions().contains(&j(50.0, 50.0)));
    }

    #[test]
    fn dense_collinear_chain() {
        let a = raw(
            vec![j(10.0, 20.0), j(40.0, 20.0), j(80.0, 20.0), j(150.0, 20.0)],
            vec![(0, 1), (1, 2), (2, 3)],
        );
        let g = canonicalize(&a, &CanonConfig::default()).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn empty_annotation_gives_empty_graph() {
        let a = raw(vec![j(3.0, 3.0)], vec![]);
        let g = canonicalize(&a, &CanonConfig::default()).unwrap();
        assert!(g.is_empty());
    }

    #[test]
    fn invalid_inputs() {
        let cfg = CanonConfig::default();
        assert!(canonicalize(&raw(vec![j(1.0, 1.0)], vec![(0, 0)]), &cfg).is_err());
        assert!(canonicalize(&raw(vec![j(1.0, 1.0)], vec![(0, 3)]), &cfg).is_err());
        let bad = CanonConfig {
            min_angle_deg: 95.0,
            ..cfg
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn annotation_json_round_trip() {
        let a = raw(vec![j(1.5, 2.0), j(90.0, 10.25)], vec![(0, 1)]);
        assert_eq!(RawAnnotation::from_json(&a.to_json()).unwrap(), a);
        assert!(RawAnnotation::from_json("{\"width\":3").is_err());
    }
}
