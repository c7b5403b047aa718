//! Generators and independent reference implementations shared by the
//! integration tests. Nothing here calls into the routines it checks.

#![allow(dead_code)]

use std::collections::BTreeSet;

use ppgraph::canon::RawAnnotation;
use ppgraph::extract::Peak;
use ppgraph::graph::{Junction, LineGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A messy endpoint annotation: free segments, segments split into
/// collinear pieces with jittered joints, near-duplicate endpoints and
/// crossings.
pub fn random_annotation(seed: u64) -> RawAnnotation {
    let mut r = rng(seed);
    let width = r.random_range(128..=640u32);
    let height = r.random_range(128..=640u32);
    let (w, h) = (width as f64, height as f64);
    let mut js: Vec<Junction> = Vec::new();
    let mut segs: Vec<(usize, usize)> = Vec::new();
    let point = |r: &mut ChaCha8Rng| Junction::new(r.random_range(0.0..w - 1.0), r.random_range(0.0..h - 1.0));
    let n = r.random_range(2..=14);
    for _ in 0..n {
        let a = point(&mut r);
        let b = point(&mut r);
        if a.distance(b) < 8.0 {
            continue;
        }
        match r.random_range(0..4) {
            0 => {
                // split into pieces along the line, joints jittered
                let pieces = r.random_range(2..=4);
                let mut prev = a;
                for k in 1..=pieces {
                    let t = k as f64 / pieces as f64;
                    let mut next = Junction::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
                    if k < pieces {
                        next.x += r.random_range(-0.8..0.8);
                        next.y += r.random_range(-0.8..0.8);
                    }
                    js.push(prev);
                    js.push(next);
                    segs.push((js.len() - 2, js.len() - 1));
                    prev = next;
                }
            }
            1 if !js.is_empty() => {
                // start near an existing junction
                let base = js[r.random_range(0..js.len())];
                let near = Junction::new(
                    (base.x + r.random_range(-1.5..1.5)).clamp(0.0, w - 1.0),
                    (base.y + r.random_range(-1.5..1.5)).clamp(0.0, h - 1.0),
                );
                if near.distance(b) < 8.0 {
                    continue;
                }
                js.push(near);
                js.push(b);
                segs.push((js.len() - 2, js.len() - 1));
            }
            _ => {
                js.push(a);
                js.push(b);
                segs.push((js.len() - 2, js.len() - 1));
            }
        }
    }
    // a few isolated junctions
    for _ in 0..r.random_range(0..3) {
        js.push(point(&mut r));
    }
    RawAnnotation {
        width,
        height,
        junctions: js,
        segments: segs,
    }
}

/// Random graph on distinct junctions; `grid` snaps coordinates to
/// integers in a small frame so collinear and boundary cases are common.
pub fn random_graph(seed: u64, max_k: usize, grid: bool) -> LineGraph {
    let mut r = rng(seed);
    let k = r.random_range(0..=max_k);
    let (w, h) = if grid { (24u32, 24u32) } else { (200, 200) };
    let mut set = BTreeSet::new();
    let mut js = Vec::new();
    while js.len() < k {
        let p = if grid {
            (r.random_range(0..w as i64), r.random_range(0..h as i64))
        } else {
            (r.random_range(0..(w as i64 * 1000)), r.random_range(0..(h as i64 * 1000)))
        };
        if set.insert(p) {
            // division keeps the value equal to its parsed decimal
            let s = if grid { 1.0 } else { 1000.0 };
            js.push(Junction::new(p.0 as f64 / s, p.1 as f64 / s));
        }
    }
    let density = r.random_range(0.2..0.9);
    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if r.random_bool(density) {
                edges.push((i, j));
            }
        }
    }
    LineGraph::from_edges(w, h, js, &edges).unwrap()
}

/// Maximal segments by exhaustive comparison of every edge with every
/// other edge. Squared-distance arithmetic throughout.
pub fn brute_force_segments(g: &LineGraph, tol: f64) -> BTreeSet<(usize, usize)> {
    let js = g.junctions();
    let edges = g.edges();
    let len2 = |(i, j): (usize, usize)| {
        let (dx, dy) = (js[j].x - js[i].x, js[j].y - js[i].y);
        dx * dx + dy * dy
    };
    let on = |v: usize, (p, q): (usize, usize)| {
        let (dx, dy) = (js[q].x - js[p].x, js[q].y - js[p].y);
        let (vx, vy) = (js[v].x - js[p].x, js[v].y - js[p].y);
        let l2 = dx * dx + dy * dy;
        let cross = dx * vy - dy * vx;
        let dot = dx * vx + dy * vy;
        cross * cross <= tol * tol * l2 && dot >= 0.0 && dot <= l2
    };
    let mut out = BTreeSet::new();
    for &e in &edges {
        let subsumed = edges
            .iter()
            .any(|&f| f != e && len2(f) > len2(e) && on(e.0, f) && on(e.1, f));
        if !subsumed {
            out.insert(e);
        }
    }
    out
}

/// Connected components of the `<= cutoff` proximity graph by repeated
/// flood fill; labels are the smallest member index.
pub fn naive_single_linkage(points: &[Junction], cutoff: f64) -> Vec<usize> {
    let n = points.len();
    let mut label = vec![usize::MAX; n];
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = s;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let (dx, dy) = (points[u].x - points[v].x, points[u].y - points[v].y);
                if label[v] == usize::MAX && (dx * dx + dy * dy).sqrt() <= cutoff {
                    label[v] = s;
                    stack.push(v);
                }
            }
        }
    }
    label
}

/// Clusters from a kodama single-linkage dendrogram cut at `cutoff`
/// (merges at dissimilarity `<= cutoff` kept).
pub fn kodama_single_linkage(points: &[Junction], cutoff: f64) -> Vec<usize> {
    let n = points.len();
    if n < 2 {
        return (0..n).collect();
    }
    let mut condensed = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n - 1 {
        for j in i + 1..n {
            let (dx, dy) = (points[i].x - points[j].x, points[i].y - points[j].y);
            condensed.push((dx * dx + dy * dy).sqrt());
        }
    }
    let dendro = kodama::linkage(&mut condensed, n, kodama::Method::Single);
    // dendrogram cluster ids: 0..n are leaves, n + k is the k-th merge;
    // single-linkage merge heights never decrease, so stop at the cut
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for step in dendro.steps() {
        if step.dissimilarity > cutoff {
            break;
        }
        let mut merged = std::mem::take(&mut members[step.cluster1]);
        merged.extend(std::mem::take(&mut members[step.cluster2]));
        members.push(merged);
    }
    let mut label = vec![usize::MAX; n];
    for group in members.iter().filter(|g| !g.is_empty()) {
        let min = *group.iter().min().unwrap();
        for &i in group {
            label[i] = min;
        }
    }
    label
}

/// Canonical partition form: sorted list of sorted member lists.
pub fn partition(labels: &[usize]) -> Vec<Vec<usize>> {
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

/// Bilinear value from the four surrounding grid values, written in
/// weight form.
pub fn four_corner(grid: &[f32], rows: usize, cols: usize, gx: f64, gy: f64) -> f64 {
    let gx = gx.clamp(0.0, (cols - 1) as f64);
    let gy = gy.clamp(0.0, (rows - 1) as f64);
    let x0 = (gx.floor() as usize).min(cols - 1);
    let y0 = (gy.floor() as usize).min(rows - 1);
    let x1 = (x0 + 1).min(cols - 1);
    let y1 = (y0 + 1).min(rows - 1);
    let (fx, fy) = (gx - x0 as f64, gy - y0 as f64);
    let at = |r: usize, c: usize| grid[r * cols + c] as f64;
    at(y0, x0) * (1.0 - fx) * (1.0 - fy)
        + at(y0, x1) * fx * (1.0 - fy)
        + at(y1, x0) * (1.0 - fx) * fy
        + at(y1, x1) * fx * fy
}

/// Maximum bipartite matching between pixel sets under a Euclidean
/// tolerance, by augmenting paths.
pub fn max_matching(gt: &[(i64, i64)], pred: &[(i64, i64)], tol: f64) -> usize {
    let adj: Vec<Vec<usize>> = gt
        .iter()
        .map(|g| {
            pred.iter()
                .enumerate()
                .filter(|(_, p)| {
                    let (dx, dy) = ((g.0 - p.0) as f64, (g.1 - p.1) as f64);
                    dx * dx + dy * dy <= tol * tol
                })
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; pred.len()];
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none() || augment(owner[v].unwrap(), adj, seen, owner) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    let mut count = 0;
    for u in 0..gt.len() {
        let mut seen = vec![false; pred.len()];
        if augment(u, &adj, &mut seen, &mut owner) {
            count += 1;
        }
    }
    count
}

/// Trapezoid area over points sorted by recall (ties: higher precision
/// first), no extension past the observed recalls.
pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.1.partial_cmp(&a.1).unwrap()));
    let mut area = 0.0;
    for k in 1..pts.len() {
        area += (pts[k].0 - pts[k - 1].0) * 0.5 * (pts[k].1 + pts[k - 1].1);
    }
    area
}

/// Peaks on a half-pixel lattice so distances of exactly 3 occur, with
/// coarse responses so ties are common.
pub fn random_peaks(seed: u64, max_n: usize) -> Vec<Peak> {
    let mut r = rng(seed);
    let n = r.random_range(0..=max_n);
    let span = r.random_range(10.0..80.0f64);
    (0..n)
        .map(|_| Peak {
            position: Junction::new(
                (r.random_range(0.0..span) * 2.0).round() / 2.0,
                (r.random_range(0.0..span) * 2.0).round() / 2.0,
            ),
            response: (r.random_range(0.3..1.0f64) * 8.0).round() / 8.0,
        })
        .collect()
}

/// One representative per cluster: highest response, then smallest
/// `(y, x)`; sorted by `(y, x)`.
pub fn reference_reps(points: &[Peak], labels: &[usize]) -> Vec<Junction> {
    let mut reps: Vec<Junction> = partition(labels)
        .into_iter()
        .map(|members| {
            let best = members
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    let (pa, pb) = (&points[a], &points[b]);
                    pa.response
                        .partial_cmp(&pb.response)
                        .unwrap()
                        .then((pb.position.y, pb.position.x).partial_cmp(&(pa.position.y, pa.position.x)).unwrap())
                })
                .unwrap();
            points[best].position
        })
        .collect();
    reps.sort_by(|a, b| (a.y, a.x).partial_cmp(&(b.y, b.x)).unwrap());
    reps
}
