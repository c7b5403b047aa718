//! Junction extraction from a heatmap: response threshold, 8-neighbour
//! local maxima, then single-linkage clustering NMS keeping the strongest
//! member of each cluster.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::cluster;
use crate::error::{Error, Result};
use crate::field::PlanarField;
use crate::graph::Junction;

pub const DEFAULT_TAU: f64 = 0.25;
pub const DEFAULT_EPSILON: f64 = 3.0;
pub const DEFAULT_MAX_JUNCTIONS: usize = 512;

/// How a cell compares against equal-valued neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlateauMode {
    /// Strictly greater than every neighbour; flat plateaus yield nothing.
    #[default]
    Strict,
    /// Greater than or equal to every neighbour.
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractorConfig {
    pub tau: f64,
    /// Cluster cutoff in image pixels.
    pub epsilon: f64,
    pub max_junctions: usize,
    pub plateau_mode: PlateauMode,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            epsilon: DEFAULT_EPSILON,
            max_junctions: DEFAULT_MAX_JUNCTIONS,
            plateau_mode: PlateauMode::Strict,
        }
    }
}

impl ExtractorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::invalid(format!("tau must be in (0, 1), got {}", self.tau)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_junctions == 0 {
            return Err(Error::invalid("max_junctions must be at least 1"));
        }
        Ok(())
    }
}

/// A candidate junction with its heatmap response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub position: Junction,
    pub response: f64,
}

/// Strongest first; ties broken by canonical position.
fn strength_order(a: &Peak, b: &Peak) -> Ordering {
    b.response
        .total_cmp(&a.response)
        .then_with(|| a.position.canonical_cmp(&b.position))
}

/// Cells above `tau` that beat all existing 8-neighbours, in row-major
/// order, with image coordinates `(col * stride, row * stride)`.
pub fn local_maxima(h: &PlanarField, cfg: &ExtractorConfig) -> Result<Vec<Peak>> {
    if !h.is_heatmap() {
        return Err(Error::invalid(format!(
            "junction extraction needs a 1-channel heatmap, got {} channels",
            h.channels()
        )));
    }
    let (rows, cols) = (h.height(), h.width());
    let stride = h.stride();
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = h.get(0, r, c);
            if (v as f64) <= cfg.tau {
                continue;
            }
            let mut is_max = true;
            'scan: for nr in r.saturating_sub(1)..=(r + 1).min(rows - 1) {
                for nc in c.saturating_sub(1)..=(c + 1).min(cols - 1) {
                    if nr == r && nc == c {
                        continue;
                    }
                    let n = h.get(0, nr, nc);
                    let beaten = match cfg.plateau_mode {
                        PlateauMode::Strict => n >= v,
                        PlateauMode::Ge => n > v,
                    };
                    if beaten {
                        is_max = false;
                        break 'scan;
                    }
                }
            }
            if is_max {
                out.push(Peak {
                    position: Junction::new(c as f64 * stride, r as f64 * stride),
                    response: v as f64,
                });
            }
        }
    }
    Ok(out)
}

/// Single-linkage clustering at `cfg.epsilon`; one representative per
/// cluster (highest response, then smallest `(y, x)`), canonically sorted.
pub fn cluster_nms(points: &[Peak], cfg: &ExtractorConfig) -> Vec<Peak> {
    let positions: Vec<Junction> = points.iter().map(|p| p.position).collect();
    let labels = cluster::single_linkage(&positions, cfg.epsilon);
    let mut reps: Vec<Peak> = cluster::groups(&labels)
        .into_iter()
        .map(|members| {
            members
                .into_iter()
                .map(|i| points[i])
                .min_by(strength_order)
                .expect("clusters are non-empty")
        })
        .collect();
    reps.sort_by(|a, b| a.position.canonical_cmp(&b.position));
    reps
}

/// Full extraction: maxima, clustering NMS, then the strongest
/// `max_junctions` survivors in canonical order.
pub fn extract(h: &PlanarField, cfg: &ExtractorConfig) -> Result<Vec<Peak>> {
    cfg.validate()?;
    let maxima = local_maxima(h, cfg)?;
    let mut reps = cluster_nms(&maxima, cfg);
    if reps.len() > cfg.max_junctions {
        reps.sort_by(strength_order);
        reps.truncate(cfg.max_junctions);
        reps.sort_by(|a, b| a.position.canonical_cmp(&b.position));
    }
    Ok(reps)
}

pub fn extract_junctions(h: &PlanarField, cfg: &ExtractorConfig) -> Result<Vec<Junction>> {
    Ok(extract(h, cfg)?.into_iter().map(|p| p.position).collect())
}
