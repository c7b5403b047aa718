//! Random synthetic scenes with known ground truth: a canonical truth graph
//! plus rendered junction and line heatmaps.
//!
//! Scenes are drawn from a ChaCha8 stream seeded with [`SceneConfig::seed`],
//! so a configuration reproduces the same bytes on every platform.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::canon::{canonicalize, CanonConfig, RawAnnotation};
use crate::error::{Error, Result};
use crate::eval::rasterize;
use crate::field::PlanarField;
use crate::geometry::{acute_angle_deg, perpendicular_and_param, point_segment_distance, segment_crossing};
use crate::graph::{graph_to_segments, Junction, LineGraph, DEFAULT_COLLINEAR_TOL};

const ATTEMPTS_PER_SEGMENT: usize = 2000;
const BORDER_MARGIN: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub width: u32,
    pub height: u32,
    pub n_segments: usize,
    /// Minimum segment length as a fraction of the frame diagonal.
    pub min_len_frac: f64,
    pub max_len_frac: f64,
    /// Gaussian radius of junction blobs, image pixels.
    pub junction_sigma: f64,
    /// Gaussian cross-section radius of line profiles, image pixels.
    pub line_sigma: f64,
    pub noise_amp: f64,
    pub seed: u64,
    /// Probability that a segment is split by a dark gap.
    pub gap_prob: f64,
    pub stride: f64,
    /// Minimum distance between any two truth junctions.
    pub min_separation: f64,
    /// Minimum distance between segments that do not cross.
    pub clearance: f64,
    pub min_crossing_angle_deg: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width: 512,
            height: 512,
            n_segments: 6,
            min_len_frac: 0.10,
            max_len_frac: 0.45,
            junction_sigma: 4.0,
            line_sigma: 4.0,
            noise_amp: 0.05,
            seed: 0,
            gap_prob: 0.0,
            stride: 4.0,
            min_separation: 16.0,
            clearance: 16.0,
            min_crossing_angle_deg: 30.0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("scene frame must be positive"));
        }
        if !(self.min_len_frac > 0.0 && self.min_len_frac <= self.max_len_frac) {
            return Err(Error::invalid(format!(
                "need 0 < min_len_frac <= max_len_frac, got {} and {}",
                self.min_len_frac, self.max_len_frac
            )));
        }
        for (name, v) in [
            ("junction_sigma", self.junction_sigma),
            ("line_sigma", self.line_sigma),
            ("stride", self.stride),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("noise_amp", self.noise_amp), ("gap_prob", self.gap_prob)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        let (gw, gh) = (self.width as f64 / self.stride, self.height as f64 / self.stride);
        if gw.fract() != 0.0 || gh.fract() != 0.0 {
            return Err(Error::invalid(format!(
                "frame {}x{} is not a multiple of stride {}",
                self.width, self.height, self.stride
            )));
        }
        Ok(())
    }

    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }

    fn grid(&self) -> (usize, usize) {
        (
            (self.height as f64 / self.stride) as usize,
            (self.width as f64 / self.stride) as usize,
        )
    }
}

/// One drawn stroke: the full segment and the visible pieces it renders as.
#[derive(Debug, Clone, PartialEq)]
pub struct Stroke {
    pub a: Junction,
    pub b: Junction,
    /// A single piece, or two collinear pieces around a gap.
    pub pieces: Vec<(Junction, Junction)>,
    /// The dark stretch between the pieces of a gapped stroke.
    pub gap: Option<(Junction, Junction)>,
}

impl Stroke {
    pub fn is_gapped(&self) -> bool {
        self.pieces.len() > 1
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub truth: LineGraph,
    pub junction_map: PlanarField,
    pub line_map: PlanarField,
    pub strokes: Vec<Stroke>,
    pub config: SceneConfig,
}

fn lerp(a: Junction, b: Junction, t: f64) -> Junction {
    Junction::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
}

struct Layout<'a> {
    cfg: &'a SceneConfig,
    pieces: Vec<(Junction, Junction)>,
    gaps: Vec<(Junction, Junction)>,
    junctions: Vec<Junction>,
}

fn segment_gap(a: Junction, b: Junction, c: Junction, d: Junction) -> f64 {
    if let Some((t, u, _)) = segment_crossing(a, b, c, d) {
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            return 0.0;
        }
    }
    [
        point_segment_distance(a, c, d),
        point_segment_distance(b, c, d),
        point_segment_distance(c, a, b),
        point_segment_distance(d, a, b),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

/// `p` projects beyond an end of `c d` and lies within `margin` of its
/// line. Exactly collinear points belong to the same stroke and pass.
fn near_extension(p: Junction, c: Junction, d: Junction, margin: f64) -> bool {
    let (perp, t) = perpendicular_and_param(p, c, d);
    perp > 1e-6 && perp < margin && !(0.0..=1.0).contains(&t)
}

impl Layout<'_> {
    /// Checks the pieces of a candidate stroke against everything placed so
    /// far; returns the junctions the stroke would add.
    fn admit(&self, stroke: &Stroke) -> Option<Vec<Junction>> {
        let cfg = self.cfg;
        let candidate = &stroke.pieces;
        // nothing may light up a gap, nor come near one
        for &(a, b) in candidate {
            if self.gaps.iter().any(|&(c, d)| segment_gap(a, b, c, d) < cfg.clearance) {
                return None;
            }
        }
        if let Some((a, b)) = stroke.gap {
            if self.pieces.iter().any(|&(c, d)| segment_gap(a, b, c, d) < cfg.clearance) {
                return None;
            }
        }
        let mut added: Vec<Junction> = Vec::new();
        for &(a, b) in candidate {
            added.push(a);
            added.push(b);
            for &(c, d) in &self.pieces {
                match segment_crossing(a, b, c, d) {
                    Some((t, u, p)) if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) => {
                        let angle = acute_angle_deg((b.x - a.x, b.y - a.y), (d.x - c.x, d.y - c.y));
                        if angle < cfg.min_crossing_angle_deg {
                            return None;
                        }
                        if [a, b, c, d].iter().any(|e| e.distance(p) < cfg.clearance) {
                            return None;
                        }
                        added.push(p);
                    }
                    _ => {
                        if segment_gap(a, b, c, d) < cfg.clearance {
                            return None;
                        }
                    }
                }
            }
        }
        for (i, p) in added.iter().enumerate() {
            if self.junctions.iter().chain(&added[i + 1..]).any(|q| q.distance(*p) < cfg.min_separation) {
                return None;
            }
        }
        // a junction just past a piece's end, close to its line, would make
        // the extension look like part of the line
        let old_near_new = candidate
            .iter()
            .any(|&(c, d)| self.junctions.iter().any(|&p| near_extension(p, c, d, cfg.clearance)));
        let new_near_any = self
            .pieces
            .iter()
            .chain(candidate)
            .any(|&(c, d)| added.iter().any(|&p| near_extension(p, c, d, cfg.clearance)));
        if old_near_new || new_near_any {
            return None;
        }
        Some(added)
    }
}

fn draw_stroke(rng: &mut ChaCha8Rng, cfg: &SceneConfig) -> Option<Stroke> {
    let diag = cfg.diagonal();
    let len = rng.random_range(cfg.min_len_frac * diag..=cfg.max_len_frac * diag);
    let theta = rng.random_range(0.0..std::f64::consts::PI);
    let (dx, dy) = (0.5 * len * theta.cos(), 0.5 * len * theta.sin());
    let lo_x = BORDER_MARGIN + dx.abs();
    let hi_x = cfg.width as f64 - 1.0 - BORDER_MARGIN - dx.abs();
    let lo_y = BORDER_MARGIN + dy.abs();
    let hi_y = cfg.height as f64 - 1.0 - BORDER_MARGIN - dy.abs();
    if lo_x >= hi_x || lo_y >= hi_y {
        return None;
    }
    let cx = rng.random_range(lo_x..hi_x);
    let cy = rng.random_range(lo_y..hi_y);
    let a = Junction::new(cx - dx, cy - dy);
    let b = Junction::new(cx + dx, cy + dy);
    let gapped = rng.random_bool(cfg.gap_prob);
    let mut gap_span = None;
    let pieces = if gapped {
        // the dark band must stay dark for at least 15% of the length, so
        // widen it by the profile's 3-sigma reach on both sides
        let gap = 0.15 * len + 6.0 * cfg.line_sigma;
        let min_piece = 0.2 * len;
        if len - gap < 2.0 * min_piece {
            return None;
        }
        let start = rng.random_range(min_piece..=len - gap - min_piece);
        gap_span = Some((lerp(a, b, start / len), lerp(a, b, (start + gap) / len)));
        vec![
            (a, lerp(a, b, start / len)),
            (lerp(a, b, (start + gap) / len), b),
        ]
    } else {
        vec![(a, b)]
    };
    Some(Stroke {
        a,
        b,
        pieces,
        gap: gap_span,
    })
}

fn render_junctions(cfg: &SceneConfig, junctions: &[Junction]) -> Vec<f64> {
    let (rows, cols) = cfg.grid();
    let two_s2 = 2.0 * cfg.junction_sigma * cfg.junction_sigma;
    let reach = 4.0 * cfg.junction_sigma;
    let mut out = vec![0.0f64; rows * cols];
    for j in junctions {
        let (c0, c1) = cell_span(j.x - reach, j.x + reach, cfg.stride, cols);
        let (r0, r1) = cell_span(j.y - reach, j.y + reach, cfg.stride, rows);
        for r in r0..r1 {
            for c in c0..c1 {
                let p = Junction::new(c as f64 * cfg.stride, r as f64 * cfg.stride);
                let v = (-p.distance_squared(*j) / two_s2).exp();
                let cell = &mut out[r * cols + c];
                *cell = cell.max(v);
            }
        }
    }
    out
}

fn render_lines(cfg: &SceneConfig, pieces: &[(Junction, Junction)]) -> Vec<f64> {
    let (rows, cols) = cfg.grid();
    let two_s2 = 2.0 * cfg.line_sigma * cfg.line_sigma;
    let reach = 4.0 * cfg.line_sigma;
    let mut out = vec![0.0f64; rows * cols];
    for &(a, b) in pieces {
        let (c0, c1) = cell_span(a.x.min(b.x) - reach, a.x.max(b.x) + reach, cfg.stride, cols);
        let (r0, r1) = cell_span(a.y.min(b.y) - reach, a.y.max(b.y) + reach, cfg.stride, rows);
        for r in r0..r1 {
            for c in c0..c1 {
                let p = Junction::new(c as f64 * cfg.stride, r as f64 * cfg.stride);
                let d = point_segment_distance(p, a, b);
                let v = (-d * d / two_s2).exp();
                let cell = &mut out[r * cols + c];
                *cell = cell.max(v);
            }
        }
    }
    out
}

fn cell_span(lo: f64, hi: f64, stride: f64, n: usize) -> (usize, usize) {
    let a = (lo / stride).floor().max(0.0) as usize;
    let b = ((hi / stride).ceil() as usize + 1).min(n);
    (a.min(n), b)
}

fn add_noise(rng: &mut ChaCha8Rng, values: Vec<f64>, amp: f64) -> Vec<f32> {
    values
        .into_iter()
        .map(|v| {
            let n = if amp > 0.0 { rng.random_range(-amp..=amp) } else { 0.0 };
            (v + n).clamp(0.0, 1.0) as f32
        })
        .collect()
}

/// Draws a scene: strokes of at least `min_len_frac` of the diagonal with
/// clearance and junction separation constraints, a canonical truth graph
/// (crossings gain junctions), and max-composited heatmaps with uniform
/// noise clipped to `[0, 1]`.
pub fn generate(cfg: &SceneConfig) -> Result<SyntheticScene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut layout = Layout {
        cfg,
        pieces: Vec::new(),
        gaps: Vec::new(),
        junctions: Vec::new(),
    };
    let mut strokes = Vec::with_capacity(cfg.n_segments);
    for n in 0..cfg.n_segments {
        let mut placed = false;
        for _ in 0..ATTEMPTS_PER_SEGMENT {
            let Some(stroke) = draw_stroke(&mut rng, cfg) else {
                continue;
            };
            if let Some(added) = layout.admit(&stroke) {
                layout.pieces.extend(stroke.pieces.iter().copied());
                layout.gaps.extend(stroke.gap);
                layout.junctions.extend(added);
                strokes.push(stroke);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Infeasible(format!(
                "could not place segment {} of {} after {ATTEMPTS_PER_SEGMENT} attempts",
                n + 1,
                cfg.n_segments
            )));
        }
    }

    let mut raw = RawAnnotation {
        width: cfg.width,
        height: cfg.height,
        junctions: Vec::new(),
        segments: Vec::new(),
    };
    for &(a, b) in &layout.pieces {
        let base = raw.junctions.len();
        raw.junctions.push(a);
        raw.junctions.push(b);
        raw.segments.push((base, base + 1));
    }
    let truth = canonicalize(&raw, &CanonConfig::default())?;

    let (rows, cols) = cfg.grid();
    let junction_values = add_noise(&mut rng, render_junctions(cfg, truth.junctions()), cfg.noise_amp);
    let line_values = add_noise(&mut rng, render_lines(cfg, &layout.pieces), cfg.noise_amp);
    Ok(SyntheticScene {
        truth,
        junction_map: PlanarField::new(1, rows, cols, cfg.stride, junction_values)?,
        line_map: PlanarField::new(1, rows, cols, cfg.stride, line_values)?,
        strokes,
        config: cfg.clone(),
    })
}

pub const OVERLAY_TRUTH: usize = 0;
pub const OVERLAY_PREDICTED: usize = 1;
pub const OVERLAY_JUNCTIONS: usize = 2;

/// RGB overlay: truth segments in red, predicted segments in green,
/// junctions of both graphs in blue. Overlap shows as yellow.
pub fn render_overlay(scene: &SyntheticScene, predicted: &LineGraph) -> Result<RgbImage> {
    let (w, h) = (scene.truth.width(), scene.truth.height());
    if (predicted.width(), predicted.height()) != (w, h) {
        return Err(Error::ShapeMismatch(format!(
            "prediction frame {}x{} differs from scene frame {w}x{h}",
            predicted.width(),
            predicted.height()
        )));
    }
    let mut img = RgbImage::new(w, h);
    let mut paint = |graph: &LineGraph, channel: usize| -> Result<()> {
        for p in rasterize(&graph_to_segments(graph, DEFAULT_COLLINEAR_TOL)?) {
            img.get_pixel_mut(p.x as u32, p.y as u32).0[channel] = 255;
        }
        Ok(())
    };
    paint(&scene.truth, OVERLAY_TRUTH)?;
    paint(predicted, OVERLAY_PREDICTED)?;
    for j in scene.truth.junctions().iter().chain(predicted.junctions()) {
        let (x, y) = (j.x.round() as u32, j.y.round() as u32);
        if x < w && y < h {
            let px: &mut Rgb<u8> = img.get_pixel_mut(x, y);
            px.0[OVERLAY_JUNCTIONS] = 255;
        }
    }
    Ok(img)
}
