//! Binary cross-entropy losses for the junction heatmap and the adjacency
//! matrix, with hand-derived gradients for external training code.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Predictions are clamped into `[CLAMP_EPS, 1 - CLAMP_EPS]` before the log.
pub const CLAMP_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Reduction {
    #[default]
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_junc: f64,
    pub lambda_adj: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_junc: 1.0,
            lambda_adj: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("lambda_junc", self.lambda_junc), ("lambda_adj", self.lambda_adj)] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {w}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub total: f64,
    pub junc_term: f64,
    pub adj_term: f64,
    /// d total / d pred_heatmap
    pub grad_junc: Vec<f64>,
    /// d total / d pred_adj
    pub grad_adj: Vec<f64>,
}

/// Summed binary cross-entropy and its gradient with respect to `pred`.
pub fn bce_sum(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    bce(pred, target, Reduction::Sum)
}

pub fn bce(pred: &[f64], target: &[f64], reduction: Reduction) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} targets",
            pred.len(),
            target.len()
        )));
    }
    if let Some(t) = target.iter().find(|&&t| t != 0.0 && t != 1.0) {
        return Err(Error::invalid(format!("target {t} is not binary")));
    }
    if let Some(p) = pred.iter().find(|p| !p.is_finite()) {
        return Err(Error::invalid(format!("prediction {p} is not finite")));
    }
    let scale = match reduction {
        Reduction::Sum => 1.0,
        Reduction::Mean if pred.is_empty() => 1.0,
        Reduction::Mean => 1.0 / pred.len() as f64,
    };
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(pred.len());
    for (&p, &t) in pred.iter().zip(target) {
        let p = p.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
        loss -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        grad.push(scale * (-(t / p) + (1.0 - t) / (1.0 - p)));
    }
    Ok((loss * scale, grad))
}

/// `lambda_junc * BCE(heatmap) + lambda_adj * BCE(adjacency)`, sum-reduced.
pub fn total_loss(
    pred_heatmap: &[f64],
    gt_heatmap: &[f64],
    pred_adj: &[f64],
    gt_adj: &[f64],
    w: &LossWeights,
) -> Result<LossResult> {
    w.validate()?;
    check_square_symmetric(gt_adj)?;
    let (junc_term, gj) = bce_sum(pred_heatmap, gt_heatmap)?;
    let (adj_term, ga) = bce_sum(pred_adj, gt_adj)?;
    Ok(LossResult {
        total: w.lambda_junc * junc_term + w.lambda_adj * adj_term,
        junc_term,
        adj_term,
        grad_junc: gj.into_iter().map(|g| g * w.lambda_junc).collect(),
        grad_adj: ga.into_iter().map(|g| g * w.lambda_adj).collect(),
    })
}

fn check_square_symmetric(adj: &[f64]) -> Result<()> {
    let k = (adj.len() as f64).sqrt().round() as usize;
    if k * k != adj.len() {
        return Err(Error::ShapeMismatch(format!(
            "adjacency with {} entries is not square",
            adj.len()
        )));
    }
    for i in 0..k {
        for j in i + 1..k {
            if adj[i * k + j] != adj[j * k + i] {
                return Err(Error::invalid(format!("ground-truth adjacency asymmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}
