//! The `ppgraph` command line.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::canon::{canonicalize, CanonConfig, RawAnnotation};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::eval::{evaluate, DEFAULT_TOL_FRAC};
use crate::extract::{PlateauMode, DEFAULT_EPSILON, DEFAULT_MAX_JUNCTIONS, DEFAULT_TAU};
use crate::field::PlanarField;
use crate::graph::{graph_to_segments, LineGraph, DEFAULT_COLLINEAR_TOL};
use crate::import;
use crate::pipeline;
use crate::scorer::{DEFAULT_QUANTILE, DEFAULT_SAMPLES, DEFAULT_THRESHOLD};
use crate::synth::{self, SceneConfig};

#[derive(Debug, Parser)]
#[command(name = "ppgraph", version, about = "Line segments as point-pair graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub shared: Shared,
}

#[derive(Debug, Clone, Args)]
pub struct Shared {
    /// Junction heatmap response threshold.
    #[arg(long, global = true, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    /// Junction clustering cutoff in image pixels.
    #[arg(long, global = true, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_JUNCTIONS)]
    pub max_junctions: usize,
    #[arg(long, global = true, value_enum, default_value_t = Plateau::Strict)]
    pub plateau: Plateau,
    /// Samples per junction pair.
    #[arg(long, global = true, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_QUANTILE)]
    pub quantile: f64,
    /// Connectivity score threshold.
    #[arg(long, global = true, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Matching tolerance as a fraction of the image diagonal.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL_FRAC)]
    pub tolerance_frac: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_COLLINEAR_TOL)]
    pub collinear_tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for batch work; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Plateau {
    Strict,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImportFormat {
    WireframeJson,
    York,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert endpoint annotations into canonical graph JSON. A directory
    /// input converts every `*.json` file into the output directory.
    Canonicalize {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = CanonConfig::default().belt_width)]
        belt_width: f64,
        #[arg(long, default_value_t = CanonConfig::default().inner_dist)]
        inner_dist: f64,
        #[arg(long, default_value_t = CanonConfig::default().min_angle_deg)]
        min_angle_deg: f64,
        #[arg(long, default_value_t = CanonConfig::default().merge_tol)]
        merge_tol: f64,
    },
    /// Detect a graph from junction and line heatmaps; prints graph JSON.
    Detect {
        #[arg(long)]
        junction_map: PathBuf,
        #[arg(long)]
        line_map: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare two graph JSON files; prints the report JSON.
    Eval {
        gt: PathBuf,
        pred: PathBuf,
        /// Heatmap stride the prediction was detected at; widens its
        /// collinear tolerance to cover grid snapping.
        #[arg(long)]
        pred_stride: Option<f64>,
    },
    /// Precision/recall curves over score thresholds, one per tau.
    Sweep {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        junction_map: PathBuf,
        #[arg(long)]
        line_map: PathBuf,
        /// Junction thresholds to sweep; defaults to --tau.
        #[arg(long, value_delimiter = ',')]
        taus: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        thresholds: Vec<f64>,
    },
    /// Write synthetic scenes with ground truth.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(short, long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = SceneConfig::default().width)]
        width: u32,
        #[arg(long, default_value_t = SceneConfig::default().height)]
        height: u32,
        #[arg(long, default_value_t = SceneConfig::default().n_segments)]
        segments: usize,
        #[arg(long, default_value_t = SceneConfig::default().noise_amp)]
        noise_amp: f64,
        #[arg(long, default_value_t = SceneConfig::default().gap_prob)]
        gap_prob: f64,
        #[arg(long, default_value_t = SceneConfig::default().min_len_frac)]
        min_len_frac: f64,
        #[arg(long, default_value_t = SceneConfig::default().stride)]
        stride: f64,
        /// Also write an RGB overlay of the truth per scene.
        #[arg(long)]
        overlay: bool,
    },
    /// Convert dataset annotations to endpoint annotation JSON.
    Import {
        #[arg(long, value_enum)]
        format: ImportFormat,
        input: PathBuf,
        /// Output file, or directory when the input holds several records.
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        width: Option<u32>,
        #[arg(long)]
        height: Option<u32>,
    },
}

impl Shared {
    pub fn pipeline(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        cfg.extractor.tau = self.tau;
        cfg.extractor.epsilon = self.epsilon;
        cfg.extractor.max_junctions = self.max_junctions;
        cfg.extractor.plateau_mode = match self.plateau {
            Plateau::Strict => PlateauMode::Strict,
            Plateau::Ge => PlateauMode::Ge,
        };
        cfg.scorer.samples = self.samples;
        cfg.scorer.quantile = self.quantile;
        cfg.scorer.threshold = self.threshold;
        cfg.tol_frac = self.tolerance_frac;
        cfg.collinear_tol = self.collinear_tol;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_graph(path: &Path) -> Result<LineGraph> {
    LineGraph::from_json(&read_text(path)?)
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Endpoint annotation JSON, or graph JSON (every edge taken as a segment).
fn read_annotation(text: &str) -> Result<RawAnnotation> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    if v.get("edges").is_some() {
        Ok(RawAnnotation::from_graph(&LineGraph::from_json(text)?))
    } else {
        RawAnnotation::from_json(text)
    }
}

fn canonicalize_file(input: &Path, output: &Path, cfg: &CanonConfig) -> Result<()> {
    let raw = read_annotation(&read_text(input)?).map_err(|e| match e {
        Error::Json { line, column, message } => Error::Json {
            line,
            column,
            message: format!("{}: {message}", input.display()),
        },
        other => other,
    })?;
    let g = canonicalize(&raw, cfg)?;
    write_atomic(output, g.to_json().as_bytes())
}

fn cmd_canonicalize(input: &Path, output: &Path, cfg: &CanonConfig) -> Result<()> {
    cfg.validate()?;
    if !input.is_dir() {
        return canonicalize_file(input, output, cfg);
    }
    std::fs::create_dir_all(output).map_err(|e| Error::io(output, e))?;
    let files = json_files(input)?;
    log::info!("canonicalizing {} files", files.len());
    files.par_iter().try_for_each(|f| {
        let name = f.file_name().expect("listed files have names");
        canonicalize_file(f, &output.join(name), cfg)
    })
}

fn read_maps(junction_map: &Path, line_map: &Path) -> Result<(PlanarField, PlanarField)> {
    Ok((PlanarField::read_ppgf(junction_map)?, PlanarField::read_ppgf(line_map)?))
}

fn cmd_detect(junction_map: &Path, line_map: &Path, output: Option<&Path>, cfg: &PipelineConfig) -> Result<String> {
    let (jm, lm) = read_maps(junction_map, line_map)?;
    let g = pipeline::detect(&jm, &lm, cfg)?;
    log::info!("detected {} junctions, {} edges", g.len(), g.edge_count());
    let text = g.to_json();
    if let Some(path) = output {
        write_atomic(path, text.as_bytes())?;
    }
    Ok(text)
}

fn cmd_eval(gt: &Path, pred: &Path, pred_stride: Option<f64>, cfg: &PipelineConfig) -> Result<String> {
    let truth = read_graph(gt)?;
    let predicted = read_graph(pred)?;
    let report = match pred_stride {
        Some(stride) if stride > 0.0 => pipeline::evaluate_detection(&truth, &predicted, stride, cfg)?,
        Some(stride) => return Err(Error::invalid(format!("stride must be positive, got {stride}"))),
        None => evaluate(
            &graph_to_segments(&truth, cfg.collinear_tol)?,
            &graph_to_segments(&predicted, cfg.collinear_tol)?,
            cfg.tol_frac,
        )?,
    };
    Ok(report.to_json())
}

fn cmd_sweep(
    gt: &Path,
    junction_map: &Path,
    line_map: &Path,
    taus: &[f64],
    thresholds: &[f64],
    cfg: &PipelineConfig,
) -> Result<String> {
    let truth = read_graph(gt)?;
    let (jm, lm) = read_maps(junction_map, line_map)?;
    let mut cfg = cfg.clone();
    if !thresholds.is_empty() {
        cfg.thresholds = thresholds.to_vec();
    }
    let taus = if taus.is_empty() { vec![cfg.extractor.tau] } else { taus.to_vec() };
    let mut curves = Vec::with_capacity(taus.len());
    for tau in taus {
        cfg.extractor.tau = tau;
        cfg.validate()?;
        let scored = pipeline::score(&jm, &lm, &cfg)?;
        let curve = pipeline::sweep(&truth, &scored, lm.stride(), &cfg)?;
        log::info!("tau {tau}: {} junctions, auc {:.4}", scored.junctions.len(), curve.auc);
        let body = curve.to_json();
        curves.push(format!("{{\"tau\":{tau:.6},{}", &body[1..]));
    }
    Ok(format!("[{}]", curves.join(",")))
}

/// File stem for scene `seed` in a synth output directory.
pub fn scene_stem(seed: u64) -> String {
    format!("scene_{seed:06}")
}

fn cmd_synth(out_dir: &Path, n: usize, base: &SceneConfig, overlay: bool) -> Result<()> {
    base.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    (0..n as u64).into_par_iter().try_for_each(|k| {
        let cfg = SceneConfig {
            seed: base.seed + k,
            ..base.clone()
        };
        let scene = synth::generate(&cfg)?;
        let stem = out_dir.join(scene_stem(cfg.seed));
        let with = |ext: &str| PathBuf::from(format!("{}.{ext}", stem.display()));
        write_atomic(&with("graph.json"), scene.truth.to_json().as_bytes())?;
        write_atomic(&with("junctions.ppgf"), &scene.junction_map.to_ppgf().to_bytes())?;
        write_atomic(&with("lines.ppgf"), &scene.line_map.to_ppgf().to_bytes())?;
        let sidecar = serde_json::to_string_pretty(&cfg).map_err(|e| Error::Internal(e.to_string()))?;
        write_atomic(&with("scene.json"), sidecar.as_bytes())?;
        if overlay {
            let img = synth::render_overlay(&scene, &scene.truth)?;
            let path = with("overlay.png");
            img.save(&path)
                .map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
        }
        Ok(())
    })
}

fn cmd_import(
    format: ImportFormat,
    input: &Path,
    output: &Path,
    size: (Option<u32>, Option<u32>),
) -> Result<()> {
    let text = read_text(input)?;
    let records = match format {
        ImportFormat::WireframeJson => {
            let size = match size {
                (Some(w), Some(h)) => Some((w, h)),
                _ => None,
            };
            import::wireframe_json(&text, size)?
        }
        ImportFormat::York => {
            let (Some(w), Some(h)) = size else {
                return Err(Error::invalid("york format needs --width and --height"));
            };
            vec![import::york_lines(&text, w, h)?]
        }
    };
    for r in &records {
        if r.skipped > 0 {
            log::warn!("{}: skipped {} zero-length lines", r.name.as_deref().unwrap_or("record"), r.skipped);
        }
    }
    if records.len() == 1 && !output.is_dir() {
        return write_atomic(output, records[0].annotation.to_json().as_bytes());
    }
    std::fs::create_dir_all(output).map_err(|e| Error::io(output, e))?;
    for (n, r) in records.iter().enumerate() {
        let stem = r
            .name
            .as_deref()
            .and_then(|f| Path::new(f).file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("record_{n:06}"));
        write_atomic(&output.join(format!("{stem}.json")), r.annotation.to_json().as_bytes())?;
    }
    Ok(())
}

fn print(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

pub fn execute(cli: &Cli) -> Result<()> {
    let shared = &cli.shared;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(shared.jobs)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Canonicalize {
            input,
            output,
            belt_width,
            inner_dist,
            min_angle_deg,
            merge_tol,
        } => {
            let cfg = CanonConfig {
                belt_width: *belt_width,
                inner_dist: *inner_dist,
                min_angle_deg: *min_angle_deg,
                merge_tol: *merge_tol,
            };
            cmd_canonicalize(input, output, &cfg)
        }
        Command::Detect {
            junction_map,
            line_map,
            output,
        } => {
            let text = cmd_detect(junction_map, line_map, output.as_deref(), &shared.pipeline()?)?;
            if output.is_none() {
                print(&text)?;
            }
            Ok(())
        }
        Command::Eval { gt, pred, pred_stride } => print(&cmd_eval(gt, pred, *pred_stride, &shared.pipeline()?)?),
        Command::Sweep {
            gt,
            junction_map,
            line_map,
            taus,
            thresholds,
        } => print(&cmd_sweep(gt, junction_map, line_map, taus, thresholds, &shared.pipeline()?)?),
        Command::Synth {
            out_dir,
            n,
            width,
            height,
            segments,
            noise_amp,
            gap_prob,
            min_len_frac,
            stride,
            overlay,
        } => {
            let cfg = SceneConfig {
                width: *width,
                height: *height,
                n_segments: *segments,
                noise_amp: *noise_amp,
                gap_prob: *gap_prob,
                min_len_frac: *min_len_frac,
                stride: *stride,
                seed: shared.seed,
                ..SceneConfig::default()
            };
            cmd_synth(out_dir, *n, &cfg, *overlay)
        }
        Command::Import {
            format,
            input,
            output,
            width,
            height,
        } => cmd_import(*format, input, output, (*width, *height)),
    })
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
