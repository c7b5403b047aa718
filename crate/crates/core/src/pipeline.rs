//! End-to-end detection: junction extraction, pair scoring on the line
//! heatmap, thresholding.

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::extract::extract_junctions;
use crate::field::PlanarField;
use crate::eval::{evaluate, pr_curve, EvalReport, PrCurve};
use crate::graph::{graph_to_segments, Junction, LineGraph};
use crate::scorer::{score_all_pairs, threshold_to_graph, QuantileScorer, ScoreMatrix};

/// Junctions and their pair scores, before any threshold is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub width: u32,
    pub height: u32,
    pub junctions: Vec<Junction>,
    pub scores: ScoreMatrix,
}

impl Scored {
    pub fn graph(&self, threshold: f64) -> Result<LineGraph> {
        threshold_to_graph(&self.scores, &self.junctions, self.width, self.height, threshold)
    }
}

fn check_pair(junction_map: &PlanarField, line_map: &PlanarField) -> Result<()> {
    if junction_map.stride() != line_map.stride() {
        return Err(Error::ShapeMismatch(format!(
            "junction map stride {} differs from line map stride {}",
            junction_map.stride(),
            line_map.stride()
        )));
    }
    if junction_map.image_size() != line_map.image_size() {
        return Err(Error::ShapeMismatch(format!(
            "junction map frame {:?} differs from line map frame {:?}",
            junction_map.image_size(),
            line_map.image_size()
        )));
    }
    Ok(())
}

/// Collinear tolerance for reducing a detected graph. Detected junctions
/// sit on the heatmap grid, each up to `stride / sqrt(2)` from its true
/// position; an interior junction can then be `stride * sqrt(2)` off the
/// line through two detected ends.
pub fn prediction_collinear_tol(cfg: &PipelineConfig, stride: f64) -> f64 {
    cfg.collinear_tol.max(stride * std::f64::consts::SQRT_2)
}

/// Evaluates a detected graph against ground truth; the prediction is
/// reduced with [`prediction_collinear_tol`].
pub fn evaluate_detection(
    truth: &LineGraph,
    predicted: &LineGraph,
    stride: f64,
    cfg: &PipelineConfig,
) -> Result<EvalReport> {
    let gt = graph_to_segments(truth, cfg.collinear_tol)?;
    let pred = graph_to_segments(predicted, prediction_collinear_tol(cfg, stride))?;
    evaluate(&gt, &pred, cfg.tol_frac)
}

/// PR curve of a scored scene over `cfg.thresholds`.
pub fn sweep(truth: &LineGraph, scored: &Scored, stride: f64, cfg: &PipelineConfig) -> Result<PrCurve> {
    if (truth.width(), truth.height()) != (scored.width, scored.height) {
        return Err(Error::ShapeMismatch(format!(
            "truth frame {}x{} differs from heatmap frame {}x{}",
            truth.width(),
            truth.height(),
            scored.width,
            scored.height
        )));
    }
    pr_curve(
        &graph_to_segments(truth, cfg.collinear_tol)?,
        &scored.scores,
        &scored.junctions,
        &cfg.thresholds,
        cfg.tol_frac,
        prediction_collinear_tol(cfg, stride),
    )
}

pub fn score(junction_map: &PlanarField, line_map: &PlanarField, cfg: &PipelineConfig) -> Result<Scored> {
    check_pair(junction_map, line_map)?;
    let junctions = extract_junctions(junction_map, &cfg.extractor)?;
    let scorer = QuantileScorer {
        quantile: cfg.scorer.quantile,
    };
    let scores = score_all_pairs(line_map, &junctions, &cfg.scorer, &scorer)?;
    let (width, height) = junction_map.image_size();
    Ok(Scored {
        width,
        height,
        junctions,
        scores,
    })
}

pub fn detect(junction_map: &PlanarField, line_map: &PlanarField, cfg: &PipelineConfig) -> Result<LineGraph> {
    score(junction_map, line_map, cfg)?.graph(cfg.scorer.threshold)
}
