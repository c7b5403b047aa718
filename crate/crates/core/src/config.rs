//! Pipeline-wide configuration and dataset manifests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::canon::CanonConfig;
use crate::error::{Error, Result};
use crate::eval::{DEFAULT_THRESHOLDS, DEFAULT_TOL_FRAC};
use crate::extract::ExtractorConfig;
use crate::graph::DEFAULT_COLLINEAR_TOL;
use crate::scorer::ScorerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub extractor: ExtractorConfig,
    pub scorer: ScorerConfig,
    pub canon: CanonConfig,
    pub tol_frac: f64,
    pub thresholds: Vec<f64>,
    /// Subsumption tolerance when reducing graphs to maximal segments.
    pub collinear_tol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            extractor: ExtractorConfig::default(),
            scorer: ScorerConfig::default(),
            canon: CanonConfig::default(),
            tol_frac: DEFAULT_TOL_FRAC,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            collinear_tol: DEFAULT_COLLINEAR_TOL,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.extractor.validate()?;
        self.scorer.validate()?;
        self.canon.validate()?;
        if !(self.tol_frac > 0.0 && self.tol_frac.is_finite()) {
            return Err(Error::invalid(format!("tol_frac must be positive, got {}", self.tol_frac)));
        }
        if !(self.collinear_tol >= 0.0 && self.collinear_tol.is_finite()) {
            return Err(Error::invalid(format!(
                "collinear_tol must be non-negative, got {}",
                self.collinear_tol
            )));
        }
        if self.thresholds.is_empty() || self.thresholds.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("thresholds must be a non-empty increasing list"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub annotation: PathBuf,
    pub junction_map: Option<PathBuf>,
    pub line_map: Option<PathBuf>,
}

/// A list of images with their annotation and heatmap files. Relative paths
/// resolve against `root`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Parses a manifest and checks that every referenced file exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: DatasetManifest = serde_json::from_str(&text)?;
        if m.root.is_relative() {
            if let Some(dir) = path.parent() {
                m.root = dir.join(&m.root);
            }
        }
        for e in &m.entries {
            let files = std::iter::once(&e.annotation)
                .chain(e.junction_map.as_ref())
                .chain(e.line_map.as_ref());
            for f in files {
                let full = m.resolve(f);
                if !full.is_file() {
                    return Err(Error::invalid(format!(
                        "manifest entry {} references missing file {}",
                        e.id,
                        full.display()
                    )));
                }
            }
        }
        Ok(m)
    }
}
