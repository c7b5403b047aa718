//! Line segments as point-pair graphs.
//!
//! A scene's line segments are held as an ordered junction list plus a
//! symmetric adjacency matrix ([`LineGraph`]). The crate converts endpoint
//! annotations into complete graphs ([`canon`]), extracts junctions from
//! heatmaps ([`extract`]), scores junction pairs by sampling along them
//! ([`scorer`]), evaluates predictions with pixel-level precision and recall
//! ([`eval`]), and generates synthetic scenes with known ground truth
//! ([`synth`]).

pub mod canon;
pub mod cli;
pub mod cluster;
pub mod config;
pub mod error;
pub mod eval;
pub mod extract;
pub mod field;
pub mod geometry;
pub mod graph;
pub mod import;
pub mod loss;
pub mod pipeline;
pub mod scorer;
pub mod synth;

pub use canon::{canonicalize, CanonConfig, RawAnnotation};
pub use config::PipelineConfig;

pub use error::{Error, Result};
pub use eval::{evaluate, EvalReport, PrCurve};
pub use extract::{ExtractorConfig, PlateauMode};
pub use field::PlanarField;
pub use graph::{graph_to_segments, segments_to_graph, Junction, LineGraph, Segment, SegmentSet};
pub use scorer::{PairScorer, QuantileScorer, ScoreMatrix, ScorerConfig};

pub use synth::{SceneConfig, SyntheticScene};
