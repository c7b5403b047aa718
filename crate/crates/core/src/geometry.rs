//! Planar primitives shared by the canonicalizer, graph conversion and
//! synthetic scene generation.

use crate::graph::Junction;

/// An infinite line through `origin` with unit direction `dir`.
///
/// Directions are kept in a canonical half-plane (`dx > 0`, or `dx == 0`
/// and `dy > 0`) so that two fits of the same point set agree bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedLine {
    pub origin: Junction,
    pub dir: (f64, f64),
}

impl FittedLine {
    pub fn through(a: Junction, b: Junction) -> Option<Self> {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len = dx.hypot(dy);
        if len <= f64::EPSILON {
            return None;
        }
        Some(Self {
            origin: a,
            dir: canonical_dir(dx / len, dy / len),
        })
    }

    /// Signed coordinate of the orthogonal projection of `p` along the line.
    pub fn project(&self, p: Junction) -> f64 {
        (p.x - self.origin.x) * self.dir.0 + (p.y - self.origin.y) * self.dir.1
    }

    pub fn point_at(&self, t: f64) -> Junction {
        Junction::new(self.origin.x + t * self.dir.0, self.origin.y + t * self.dir.1)
    }

    pub fn foot(&self, p: Junction) -> Junction {
        self.point_at(self.project(p))
    }

    /// Unit normal, rotated +90 degrees from the direction.
    pub fn normal(&self) -> (f64, f64) {
        (-self.dir.1, self.dir.0)
    }

    /// Constant `c` of the implicit form `n . p = c`.
    pub fn offset(&self) -> f64 {
        let n = self.normal();
        n.0 * self.origin.x + n.1 * self.origin.y
    }

    pub fn distance(&self, p: Junction) -> f64 {
        let n = self.normal();
        (n.0 * (p.x - self.origin.x) + n.1 * (p.y - self.origin.y)).abs()
    }
}

fn canonical_dir(dx: f64, dy: f64) -> (f64, f64) {
    if dx < 0.0 || (dx == 0.0 && dy < 0.0) {
        (-dx, -dy)
    } else {
        (dx, dy)
    }
}

/// Total-least-squares line through `points`: the centroid plus the
/// principal axis of the 2x2 scatter matrix. `None` when all points coincide.
pub fn fit_tls(points: &[Junction]) -> Option<FittedLine> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p.x - cx, p.y - cy);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let spread = sxx + syy;
    if spread <= 1e-18 {
        return None;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some(FittedLine {
        origin: Junction::new(cx, cy),
        dir: canonical_dir(theta.cos(), theta.sin()),
    })
}

/// Euclidean distance from `p` to the closed segment `a`-`b`.
pub fn point_segment_distance(p: Junction, a: Junction, b: Junction) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(Junction::new(a.x + t * dx, a.y + t * dy))
}

/// Perpendicular distance of `p` to the line through `a`, `b` and the
/// normalized projection parameter (0 at `a`, 1 at `b`).
pub fn perpendicular_and_param(p: Junction, a: Junction, b: Junction) -> (f64, f64) {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let (px, py) = (p.x - a.x, p.y - a.y);
    let cross = dx * py - dy * px;
    (cross.abs() / len2.sqrt(), (px * dx + py * dy) / len2)
}

/// Acute angle in degrees between two directions.
pub fn acute_angle_deg(u: (f64, f64), v: (f64, f64)) -> f64 {
    let nu = u.0.hypot(u.1);
    let nv = v.0.hypot(v.1);
    let cos = ((u.0 * v.0 + u.1 * v.1) / (nu * nv)).abs().min(1.0);
    cos.acos().to_degrees()
}

/// Crossing of segments `a`-`b` and `c`-`d`: parameters along each segment
/// and the crossing point. `None` for parallel segments.
pub fn segment_crossing(
    a: Junction,
    b: Junction,
    c: Junction,
    d: Junction,
) -> Option<(f64, f64, Junction)> {
    let r = (b.x - a.x, b.y - a.y);
    let s = (d.x - c.x, d.y - c.y);
    let denom = r.0 * s.1 - r.1 * s.0;
    let scale = r.0.hypot(r.1) * s.0.hypot(s.1);
    if scale == 0.0 || denom.abs() <= 1e-12 * scale {
        return None;
    }
    let q = (c.x - a.x, c.y - a.y);
    let t = (q.0 * s.1 - q.1 * s.0) / denom;
    let u = (q.0 * r.1 - q.1 * r.0) / denom;
    Some((t, u, Junction::new(a.x + t * r.0, a.y + t * r.1)))
}

/// Least-squares point for the stacked line equations `n_k . p = c_k`.
/// Solves the 2x2 normal equations; `None` when they are singular.
pub fn solve_stacked_lines(lines: &[FittedLine]) -> Option<Junction> {
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for line in lines {
        let n = line.normal();
        let c = line.offset();
        a11 += n.0 * n.0;
        a12 += n.0 * n.1;
        a22 += n.1 * n.1;
        b1 += n.0 * c;
        b2 += n.1 * c;
    }
    let det = a11 * a22 - a12 * a12;
    if det.abs() <= 1e-12 {
        return None;
    }
    Some(Junction::new(
        (a22 * b1 - a12 * b2) / det,
        (a11 * b2 - a12 * b1) / det,
    ))
}
