//! Pair connectivity scoring: equidistant bilinear sampling along a junction
//! pair, order-symmetrized confidences, and the blocked all-pairs sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{PlanarField, PpgfData};
use crate::graph::{Junction, LineGraph};

pub const DEFAULT_SAMPLES: usize = 64;
pub const DEFAULT_QUANTILE: f64 = 0.10;
pub const DEFAULT_THRESHOLD: f64 = 0.25;
pub const DEFAULT_BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorerConfig {
    /// Samples per candidate, both endpoints included.
    pub samples: usize,
    pub quantile: f64,
    pub threshold: f64,
    /// Side of the square tiles the pair matrix is processed in.
    pub block: usize,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            quantile: DEFAULT_QUANTILE,
            threshold: DEFAULT_THRESHOLD,
            block: DEFAULT_BLOCK,
        }
    }
}

impl ScorerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::invalid(format!("samples must be >= 2, got {}", self.samples)));
        }
        if !(0.0..=1.0).contains(&self.quantile) {
            return Err(Error::invalid(format!("quantile must be in [0, 1], got {}", self.quantile)));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid(format!(
                "threshold must be in (0, 1), got {}",
                self.threshold
            )));
        }
        if self.block == 0 {
            return Err(Error::invalid("block size must be positive"));
        }
        Ok(())
    }
}

/// `channels x length` samples, ordered from the first junction to the second.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStrip {
    channels: usize,
    length: usize,
    values: Vec<f64>,
}

impl FeatureStrip {
    pub fn new(channels: usize, length: usize, values: Vec<f64>) -> Result<Self> {
        if length < 2 {
            return Err(Error::invalid("a strip needs at least two samples"));
        }
        if values.len() != channels * length {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {channels}x{length} strip",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("strip values must be finite"));
        }
        Ok(Self {
            channels,
            length,
            values,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.values[c * self.length..(c + 1) * self.length]
    }

    pub fn get(&self, c: usize, k: usize) -> f64 {
        self.values[c * self.length + k]
    }
}

/// Bilinear lookup at grid coordinates, clamped to the border.
pub(crate) fn bilinear(f: &PlanarField, channel: usize, gx: f64, gy: f64) -> f64 {
    let max_x = (f.width() - 1) as f64;
    let max_y = (f.height() - 1) as f64;
    let gx = gx.clamp(0.0, max_x);
    let gy = gy.clamp(0.0, max_y);
    let x0 = gx.floor() as usize;
    let y0 = gy.floor() as usize;
    let x1 = (x0 + 1).min(f.width() - 1);
    let y1 = (y0 + 1).min(f.height() - 1);
    let fx = gx - x0 as f64;
    let fy = gy - y0 as f64;
    let v00 = f.get(channel, y0, x0) as f64;
    let v01 = f.get(channel, y0, x1) as f64;
    let v10 = f.get(channel, y1, x0) as f64;
    let v11 = f.get(channel, y1, x1) as f64;
    let top = v00 + fx * (v01 - v00);
    let bottom = v10 + fx * (v11 - v10);
    top + fy * (bottom - top)
}

/// Samples `samples` equidistant points from `a` to `b` inclusive.
///
/// Point `k` is `((n - k) a + k b) / n` with `n = samples - 1`; the
/// expression is symmetric under swapping the endpoints, so reversing the
/// pair reverses the strip bit-for-bit.
pub fn lsam_sample(f: &PlanarField, a: Junction, b: Junction, samples: usize) -> Result<FeatureStrip> {
    if samples < 2 {
        return Err(Error::invalid(format!("samples must be >= 2, got {samples}")));
    }
    if a == b {
        return Err(Error::invalid("cannot sample between coincident junctions"));
    }
    let n = (samples - 1) as f64;
    let stride = f.stride();
    let points: Vec<(f64, f64)> = (0..samples)
        .map(|k| {
            let (wa, wb) = ((samples - 1 - k) as f64, k as f64);
            let x = (wa * a.x + wb * b.x) / n;
            let y = (wa * a.y + wb * b.y) / n;
            (x / stride, y / stride)
        })
        .collect();
    let mut values = Vec::with_capacity(f.channels() * samples);
    for c in 0..f.channels() {
        values.extend(points.iter().map(|&(gx, gy)| bilinear(f, c, gx, gy)));
    }
    FeatureStrip::new(f.channels(), samples, values)
}

/// Order-symmetrized confidence: a pair is only as connected as its weaker
/// direction.
pub fn symmetrize(conf_ab: f64, conf_ba: f64) -> Result<f64> {
    for c in [conf_ab, conf_ba] {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::invalid(format!("confidence {c} outside [0, 1]")));
        }
    }
    Ok(conf_ab.min(conf_ba))
}

/// Lower `q`-quantile of a single-channel strip: the sorted sample at index
/// `floor(q * (L - 1))`.
pub fn heuristic_score(strip: &FeatureStrip, q: f64) -> Result<f64> {
    if strip.channels() != 1 {
        return Err(Error::invalid(format!(
            "heuristic scorer needs a 1-channel strip, got {}",
            strip.channels()
        )));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("quantile must be in [0, 1], got {q}")));
    }
    let mut sorted = strip.channel(0).to_vec();
    sorted.sort_by(f64::total_cmp);
    let idx = (q * (sorted.len() - 1) as f64).floor() as usize;
    Ok(sorted[idx])
}

/// Maps a sampled strip to a connectivity confidence in `[0, 1]`.
///
/// Implementations must be pure: the pair sweep may call them from many
/// threads in any order.
pub trait PairScorer: Sync {
    fn score(&self, strip: &FeatureStrip) -> Result<f64>;
}

/// Stand-in scorer over a line heatmap: a low quantile of the samples, so a
/// gap anywhere along the candidate drags the score down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileScorer {
    pub quantile: f64,
}

impl PairScorer for QuantileScorer {
    fn score(&self, strip: &FeatureStrip) -> Result<f64> {
        heuristic_score(strip, self.quantile)
    }
}

impl<F> PairScorer for F
where
    F: Fn(&FeatureStrip) -> Result<f64> + Sync,
{
    fn score(&self, strip: &FeatureStrip) -> Result<f64> {
        self(strip)
    }
}

/// Symmetric `K x K` pair confidences with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    size: usize,
    values: Vec<f64>,
}

impl ScoreMatrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            values: vec![0.0; size * size],
        }
    }

    /// Builds from a dense row-major matrix, checking symmetry, the zero
    /// diagonal and the `[0, 1]` range.
    pub fn from_values(size: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != size * size {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {size}x{size} score matrix",
                values.len()
            )));
        }
        for i in 0..size {
            if values[i * size + i] != 0.0 {
                return Err(Error::invalid(format!("score diagonal {i} is non-zero")));
            }
            for j in 0..size {
                let v = values[i * size + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!("score ({i}, {j}) = {v} outside [0, 1]")));
                }
                if v != values[j * size + i] {
                    return Err(Error::invalid(format!("score matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { size, values })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    fn set_pair(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.size + j] = v;
        self.values[j * self.size + i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// PPGF form: one channel, `K x K`, stride 0 marking a non-spatial grid.
    /// Values are narrowed to `f32`.
    pub fn to_ppgf(&self) -> PpgfData {
        PpgfData {
            channels: 1,
            height: self.size as u32,
            width: self.size as u32,
            stride: 0.0,
            values: self.values.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn from_ppgf(data: &PpgfData) -> Result<Self> {
        if data.channels != 1 || data.height != data.width || data.stride != 0.0 {
            return Err(Error::Format(format!(
                "score matrix must be 1xKxK with stride 0, got {}x{}x{} stride {}",
                data.channels, data.height, data.width, data.stride
            )));
        }
        Self::from_values(
            data.width as usize,
            data.values.iter().map(|&v| v as f64).collect(),
        )
    }
}

fn score_pair(
    f: &PlanarField,
    junctions: &[Junction],
    i: usize,
    j: usize,
    samples: usize,
    scorer: &dyn PairScorer,
) -> Result<f64> {
    let wrap = |e: Error| Error::Scorer {
        i,
        j,
        message: e.to_string(),
    };
    let (a, b) = (junctions[i], junctions[j]);
    let forward = scorer.score(&lsam_sample(f, a, b, samples).map_err(wrap)?).map_err(wrap)?;
    let backward = scorer.score(&lsam_sample(f, b, a, samples).map_err(wrap)?).map_err(wrap)?;
    symmetrize(forward, backward).map_err(wrap)
}

/// Scores every unordered junction pair in both orders and keeps the
/// minimum.
pub fn score_all_pairs(
    f: &PlanarField,
    junctions: &[Junction],
    cfg: &ScorerConfig,
    scorer: &dyn PairScorer,
) -> Result<ScoreMatrix> {
    score_all_pairs_with_progress(f, junctions, cfg, scorer, |_, _| {})
}

/// As [`score_all_pairs`], reporting `(finished_tiles, total_tiles)` after
/// each `block x block` tile. Tiles run in parallel; the result does not
/// depend on scheduling or block size.
pub fn score_all_pairs_with_progress(
    f: &PlanarField,
    junctions: &[Junction],
    cfg: &ScorerConfig,
    scorer: &dyn PairScorer,
    progress: impl Fn(usize, usize) + Sync,
) -> Result<ScoreMatrix> {
    cfg.validate()?;
    let k = junctions.len();
    let mut out = ScoreMatrix::zeros(k);
    if k < 2 {
        return Ok(out);
    }
    let blocks = k.div_ceil(cfg.block);
    let tiles: Vec<(usize, usize)> = (0..blocks)
        .flat_map(|bi| (bi..blocks).map(move |bj| (bi, bj)))
        .collect();
    let total = tiles.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<Result<Vec<(usize, usize, f64)>>> = tiles
        .par_iter()
        .map(|&(bi, bj)| {
            let rows = bi * cfg.block..((bi + 1) * cfg.block).min(k);
            let mut tile = Vec::new();
            for i in rows {
                let start = (bj * cfg.block).max(i + 1);
                for j in start..((bj + 1) * cfg.block).min(k) {
                    tile.push((i, j, score_pair(f, junctions, i, j, cfg.samples, scorer)?));
                }
            }
            let finished = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            progress(finished, total);
            Ok(tile)
        })
        .collect();
    for tile in results {
        for (i, j, v) in tile? {
            out.set_pair(i, j, v);
        }
    }
    Ok(out)
}

/// Adjacency from scores: `i ~ j` iff `score(i, j) >= threshold`.
pub fn threshold_to_graph(
    scores: &ScoreMatrix,
    junctions: &[Junction],
    width: u32,
    height: u32,
    threshold: f64,
) -> Result<LineGraph> {
    let k = junctions.len();
    if scores.size() != k {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} scores for {k} junctions",
            scores.size(),
            scores.size()
        )));
    }
    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if scores.get(i, j) >= threshold {
                edges.push((i, j));
            }
        }
    }
    LineGraph::from_edges(width, height, junctions.to_vec(), &edges)
}
