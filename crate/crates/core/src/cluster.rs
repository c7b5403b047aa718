//! Single-linkage clustering with a distance cutoff.
//!
//! Two points share a cluster iff they are joined by a chain of points with
//! consecutive distances `<= cutoff`. Cutting a single-linkage dendrogram at
//! `cutoff` yields exactly these connected components, so the clustering is
//! computed with a union-find over a uniform grid instead of building the
//! full dendrogram.

use std::collections::HashMap;

use crate::graph::Junction;

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller index as root so labels are order-stable
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Cluster labels for `points`: label `k` is the index of the first point of
/// its cluster, so labels are dense in first-appearance order after
/// [`relabel`].
pub fn single_linkage(points: &[Junction], cutoff: f64) -> Vec<usize> {
    let n = points.len();
    let mut set = DisjointSet::new(n);
    if n == 0 {
        return Vec::new();
    }
    if cutoff > 0.0 {
        let cell = cutoff;
        let key = |p: &Junction| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            grid.entry(key(p)).or_default().push(i);
        }
        let cutoff2 = cutoff * cutoff;
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = key(p);
            for gx in cx - 1..=cx + 1 {
                for gy in cy - 1..=cy + 1 {
                    let Some(bucket) = grid.get(&(gx, gy)) else {
                        continue;
                    };
                    for &j in bucket {
                        if j > i && p.distance_squared(points[j]) <= cutoff2 {
                            set.union(i, j);
                        }
                    }
                }
            }
        }
    } else {
        // zero cutoff: only exact duplicates merge
        for i in 0..n {
            for j in i + 1..n {
                if points[i] == points[j] {
                    set.union(i, j);
                }
            }
        }
    }
    relabel(&(0..n).map(|i| set.find(i)).collect::<Vec<_>>())
}

/// Maps arbitrary cluster ids to `0..k` in order of first appearance.
pub fn relabel(raw: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    raw.iter()
        .map(|&r| {
            let next = map.len();
            *map.entry(r).or_insert(next)
        })
        .collect()
}

/// Groups member indices by label; `labels` must be dense.
pub fn groups(labels: &[usize]) -> Vec<Vec<usize>> {
    let k = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
    let mut out = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        out[l].push(i);
    }
    out
}
