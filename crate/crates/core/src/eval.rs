//! Pixel-level precision and recall with a localization tolerance, and
//! precision-recall sweeps over connectivity thresholds.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{graph_to_segments, Junction, SegmentSet};
use crate::scorer::{threshold_to_graph, ScoreMatrix};

pub const DEFAULT_TOL_FRAC: f64 = 0.01;

/// The connectivity thresholds swept for precision-recall curves.
pub const DEFAULT_THRESHOLDS: [f64; 10] = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.7];

/// Integer pixel; ordered by row then column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pixel {
    pub y: i64,
    pub x: i64,
}

impl Pixel {
    pub fn new(x: i64, y: i64) -> Self {
        Self { y, x }
    }

    fn distance2(self, other: Pixel) -> i64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        dx * dx + dy * dy
    }
}

pub type PixelSet = BTreeSet<Pixel>;

/// 8-connected Bresenham trace between two integer points, inclusive.
pub fn bresenham(from: Pixel, to: Pixel) -> Vec<Pixel> {
    let dx = (to.x - from.x).abs();
    let dy = -(to.y - from.y).abs();
    let sx = if from.x < to.x { 1 } else { -1 };
    let sy = if from.y < to.y { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (from.x, from.y);
    let mut out = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        out.push(Pixel::new(x, y));
        if x == to.x && y == to.y {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

fn round_pixel(j: Junction) -> Pixel {
    Pixel::new(j.x.round() as i64, j.y.round() as i64)
}

/// Union of the 8-connected traces of all segments, endpoints rounded to
/// the nearest pixel. Pixels outside the frame are dropped with a warning.
pub fn rasterize(s: &SegmentSet) -> PixelSet {
    let mut out = PixelSet::new();
    let mut clipped = 0usize;
    for seg in s.segments() {
        for p in bresenham(round_pixel(seg.a), round_pixel(seg.b)) {
            if p.x < 0 || p.y < 0 || p.x >= s.width as i64 || p.y >= s.height as i64 {
                clipped += 1;
                continue;
            }
            out.insert(p);
        }
    }
    if clipped > 0 {
        log::warn!("rasterize: clipped {clipped} pixels outside the {}x{} frame", s.width, s.height);
    }
    out
}

/// One-to-one matching: candidate pairs within `tol` are accepted greedily
/// by ascending distance (ties by the lexicographically ordered pixel
/// pair), each pixel used at most once. Returns the number of matches.
pub fn match_pixels(gt: &PixelSet, pred: &PixelSet, tol: f64) -> usize {
    if gt.is_empty() || pred.is_empty() || !(tol >= 0.0) {
        return 0;
    }
    let reach = tol.floor() as i64;
    let tol2 = tol * tol;
    let cell = reach.max(1);
    let mut grid: HashMap<(i64, i64), Vec<Pixel>> = HashMap::new();
    for &q in pred {
        grid.entry((q.x.div_euclid(cell), q.y.div_euclid(cell)))
            .or_default()
            .push(q);
    }
    let mut candidates: Vec<(i64, Pixel, Pixel, Pixel, Pixel)> = Vec::new();
    for &g in gt {
        let (cx, cy) = (g.x.div_euclid(cell), g.y.div_euclid(cell));
        for gx in cx - 1..=cx + 1 {
            for gy in cy - 1..=cy + 1 {
                let Some(bucket) = grid.get(&(gx, gy)) else {
                    continue;
                };
                for &q in bucket {
                    let d2 = g.distance2(q);
                    if (d2 as f64) <= tol2 {
                        candidates.push((d2, g.min(q), g.max(q), g, q));
                    }
                }
            }
        }
    }
    candidates.sort_unstable_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    let mut used_g: BTreeSet<Pixel> = BTreeSet::new();
    let mut used_q: BTreeSet<Pixel> = BTreeSet::new();
    let mut matches = 0;
    for (_, _, _, g, q) in candidates {
        if used_g.contains(&g) || used_q.contains(&q) {
            continue;
        }
        used_g.insert(g);
        used_q.insert(q);
        matches += 1;
    }
    matches
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matches: usize,
    pub gt_pixels: usize,
    pub pred_pixels: usize,
    pub tolerance_px: f64,
}

impl EvalReport {
    /// Builds a report from raw counts. Precision is 1 when nothing was
    /// predicted; F1 is 0 when precision and recall are both 0.
    pub fn from_counts(matches: usize, gt_pixels: usize, pred_pixels: usize, tolerance_px: f64) -> Self {
        let precision = if pred_pixels == 0 {
            1.0
        } else {
            matches as f64 / pred_pixels as f64
        };
        let recall = if gt_pixels == 0 {
            0.0
        } else {
            matches as f64 / gt_pixels as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
            matches,
            gt_pixels,
            pred_pixels,
            tolerance_px,
        }
    }

    /// Micro average: sums counts across reports and recomputes the ratios.
    pub fn micro(reports: &[EvalReport]) -> Option<EvalReport> {
        let first = reports.first()?;
        let (m, g, q) = reports.iter().fold((0, 0, 0), |acc, r| {
            (acc.0 + r.matches, acc.1 + r.gt_pixels, acc.2 + r.pred_pixels)
        });
        Some(Self::from_counts(m, g, q, first.tolerance_px))
    }

    /// Macro average: averages precision, recall and F1; counts are summed.
    pub fn macro_average(reports: &[EvalReport]) -> Option<EvalReport> {
        let n = reports.len() as f64;
        let mut out = Self::micro(reports)?;
        out.precision = reports.iter().map(|r| r.precision).sum::<f64>() / n;
        out.recall = reports.iter().map(|r| r.recall).sum::<f64>() / n;
        out.f1 = reports.iter().map(|r| r.f1).sum::<f64>() / n;
        Some(out)
    }

    /// JSON with every real formatted to six decimals.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"precision\":{:.6},\"recall\":{:.6},\"f1\":{:.6},\"matches\":{},\"gt_pixels\":{},\"pred_pixels\":{},\"tolerance_px\":{:.6}}}",
            self.precision, self.recall, self.f1, self.matches, self.gt_pixels, self.pred_pixels, self.tolerance_px
        )
    }
}

/// Compares two segment sets on the same frame with a tolerance of
/// `tol_frac` times the frame diagonal.
pub fn evaluate(gt: &SegmentSet, pred: &SegmentSet, tol_frac: f64) -> Result<EvalReport> {
    if (gt.width, gt.height) != (pred.width, pred.height) {
        return Err(Error::ShapeMismatch(format!(
            "ground truth frame {}x{} differs from prediction frame {}x{}",
            gt.width, gt.height, pred.width, pred.height
        )));
    }
    if !(tol_frac >= 0.0 && tol_frac.is_finite()) {
        return Err(Error::invalid(format!("tolerance fraction must be >= 0, got {tol_frac}")));
    }
    let gt_px = rasterize(gt);
    if gt_px.is_empty() {
        return Err(Error::invalid("ground truth has no line pixels; metric undefined"));
    }
    let pred_px = rasterize(pred);
    let tol = tol_frac * (gt.width as f64).hypot(gt.height as f64);
    let matches = match_pixels(&gt_px, &pred_px, tol);
    Ok(EvalReport::from_counts(matches, gt_px.len(), pred_px.len(), tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub auc: f64,
    pub tolerance_px: f64,
}

impl PrCurve {
    pub fn to_json(&self) -> String {
        let mut out = format!("{{\"tolerance_px\":{:.6},\"points\":[", self.tolerance_px);
        for (i, p) in self.points.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "[{:.6},{:.6},{:.6}]", p.threshold, p.precision, p.recall).unwrap();
        }
        write!(out, "],\"auc\":{:.6}}}", self.auc).unwrap();
        out
    }
}

/// Trapezoidal area under precision over recall, restricted to the observed
/// recall span. Points are ordered by recall, equal recalls by descending
/// precision.
pub fn pr_auc(points: &[PrPoint]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p.recall, p.precision)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// Sweeps `thresholds` (strictly increasing): threshold the scores, reduce
/// to maximal segments, evaluate against `gt`.
pub fn pr_curve(
    gt: &SegmentSet,
    scores: &ScoreMatrix,
    junctions: &[Junction],
    thresholds: &[f64],
    tol_frac: f64,
    collinear_tol: f64,
) -> Result<PrCurve> {
    if thresholds.is_empty() {
        return Err(Error::invalid("threshold list is empty"));
    }
    if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("thresholds must be strictly increasing"));
    }
    let mut points = Vec::with_capacity(thresholds.len());
    let mut tolerance_px = 0.0;
    for &t in thresholds {
        let g = threshold_to_graph(scores, junctions, gt.width, gt.height, t)?;
        let pred = graph_to_segments(&g, collinear_tol)?;
        let report = evaluate(gt, &pred, tol_frac)?;
        tolerance_px = report.tolerance_px;
        points.push(PrPoint {
            threshold: t,
            precision: report.precision,
            recall: report.recall,
        });
    }
    Ok(PrCurve {
        auc: pr_auc(&points),
        points,
        tolerance_px,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Segment;

    fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> Segment {
        Segment::new(Junction::new(ax, ay), Junction::new(bx, by)).unwrap()
    }

    fn set(w: u32, h: u32, segs: &[Segment]) -> SegmentSet {
        SegmentSet::from_segments(w, h, segs.iter().copied())
    }

    #[test]
    fn axis_and_diagonal_counts() {
        assert_eq!(rasterize(&set(200, 200, &[seg(0.0, 0.0, 100.0, 0.0)])).len(), 101);
        assert_eq!(rasterize(&set(200, 200, &[seg(0.0, 0.0, 100.0, 100.0)])).len(), 101);
    }

    #[test]
    fn bresenham_is_8_connected_every_octant() {
        for &(x, y) in &[(7, 3), (3, 7), (-3, 7), (-7, 3), (-7, -3), (-3, -7), (3, -7), (7, -3)] {
            let trace = bresenham(Pixel::new(0, 0), Pixel::new(x, y));
            assert_eq!(trace.len() as i64, x.abs().max(y.abs()) + 1);
            assert_eq!(*trace.last().unwrap(), Pixel::new(x, y));
            for w in trace.windows(2) {
                assert!((w[0].x - w[1].x).abs() <= 1 && (w[0].y - w[1].y).abs() <= 1);
            }
        }
    }

    #[test]
    fn out_of_frame_pixels_are_clipped() {
        let px = rasterize(&set(50, 50, &[seg(0.0, 10.0, 80.0, 10.0)]));
        assert_eq!(px.len(), 50);
    }

    #[test]
    fn identical_and_disjoint_matching() {
        let a = rasterize(&set(200, 200, &[seg(0.0, 0.0, 100.0, 0.0)]));
        assert_eq!(match_pixels(&a, &a, 0.0), a.len());
        let far = rasterize(&set(200, 200, &[seg(0.0, 50.0, 100.0, 50.0)]));
        assert_eq!(match_pixels(&a, &far, 5.0), 0);
    }

    #[test]
    fn half_length_prediction() {
        let gt = set(200, 200, &[seg(0.0, 0.0, 100.0, 0.0)]);
        let pred = set(200, 200, &[seg(0.0, 0.0, 50.0, 0.0)]);
        let r = evaluate(&gt, &pred, 0.01).unwrap();
        assert_eq!(r.precision, 1.0);
        assert_eq!(r.recall, 51.0 / 101.0);
        assert_eq!((r.matches, r.gt_pixels, r.pred_pixels), (51, 101, 51));
    }

    #[test]
    fn evaluation_conventions() {
        let gt = set(100, 100, &[seg(10.0, 10.0, 60.0, 10.0)]);
        let none = SegmentSet::new(100, 100);
        let r = evaluate(&gt, &none, 0.01).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 0.0, 0.0));
        assert!(evaluate(&none, &gt, 0.01).is_err());
        assert!(evaluate(&gt, &SegmentSet::new(100, 99), 0.01).is_err());
    }

    #[test]
    fn report_json_layout() {
        let r = EvalReport::from_counts(51, 101, 51, 2.0);
        assert_eq!(
            r.to_json(),
            "{\"precision\":1.000000,\"recall\":0.504950,\"f1\":0.671053,\"matches\":51,\"gt_pixels\":101,\"pred_pixels\":51,\"tolerance_px\":2.000000}"
        );
    }

    #[test]
    fn micro_and_macro() {
        let a = EvalReport::from_counts(10, 10, 20, 1.0);
        let b = EvalReport::from_counts(30, 60, 30, 1.0);
        let micro = EvalReport::micro(&[a, b]).unwrap();
        assert_eq!((micro.matches, micro.gt_pixels, micro.pred_pixels), (40, 70, 50));
        assert_eq!(micro.precision, 40.0 / 50.0);
        let mac = EvalReport::macro_average(&[a, b]).unwrap();
        assert_eq!(mac.precision, (0.5 + 1.0) / 2.0);
        assert!(EvalReport::micro(&[]).is_none());
    }

    #[test]
    fn auc_degenerate_cases() {
        let one = [PrPoint { threshold: 0.5, precision: 0.8, recall: 0.6 }];
        assert_eq!(pr_auc(&one), 0.0);
        let flat = [
            PrPoint { threshold: 0.1, precision: 1.0, recall: 1.0 },
            PrPoint { threshold: 0.2, precision: 1.0, recall: 1.0 },
        ];
        assert_eq!(pr_auc(&flat), 0.0);
        let two = [
            PrPoint { threshold: 0.1, precision: 0.5, recall: 0.9 },
            PrPoint { threshold: 0.2, precision: 0.9, recall: 0.5 },
        ];
        assert!((pr_auc(&two) - 0.4 * 0.7).abs() < 1e-12);
    }
}
