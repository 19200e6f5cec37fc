//! End-to-end orchestration: features, superpixel dictionaries, initial mattes, AKNN
//! fields, temporal smoothing, metrics.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::error::{MatteError, Result};
use crate::eval::{flicker_report, MetricsReport};
use crate::features::{compute_feature_map, FeatureMap};
use crate::imaging::{load_sequence, save_matte, AlphaMatte, Frame, Label, MatteStage, SequenceLayout, Trimap};
use crate::sparse_matte::{matte_from_segments, segment_known_regions, KnownSegments};
use crate::temporal_nlm::{build_neighbor_fields, smooth_with_fields};

pub const INITIAL_DIR: &str = "initial";
pub const SMOOTHED_DIR: &str = "smoothed";
pub const METRICS_FILE: &str = "metrics.txt";
pub const REPORT_FILE: &str = "report.txt";

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub initial: Vec<AlphaMatte>,
    pub smoothed: Vec<AlphaMatte>,
    pub metrics: MetricsReport,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| MatteError::Stage {
        stage: name,
        source: Box::new(e),
    })
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| MatteError::Config(format!("thread pool: {e}")))?;
    pool.install(f)
}

/// Runs every stage on in-memory frames and trimaps.
pub fn run_sequence(frames: &[Frame], trimaps: &[Trimap], config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    if frames.is_empty() || frames.len() != trimaps.len() {
        return Err(MatteError::SequenceLength(format!(
            "{} frames, {} trimaps",
            frames.len(),
            trimaps.len()
        )));
    }
    with_threads(config.threads, || {
        let params = config.matte_params();
        let features: Vec<FeatureMap> = frames.par_iter().map(compute_feature_map).collect();
        let segments: Vec<KnownSegments> = stage(
            "dictionaries",
            frames
                .par_iter()
                .zip(trimaps)
                .map(|(f, t)| segment_known_regions(f, t, &params))
                .collect(),
        )?;
        let initial: Vec<AlphaMatte> = stage(
            "initial mattes",
            (0..frames.len())
                .into_par_iter()
                .map(|t| matte_from_segments(frames[t].index(), &features[t], &trimaps[t], &segments[t], &params))
                .collect(),
        )?;
        let smoothed = if config.skip_nlm {
            initial.iter().map(|m| m.clone().with_stage(MatteStage::Smoothed)).collect()
        } else {
            let nlm = config.nlm_config();
            let fields = stage("aknn", build_neighbor_fields(frames, &nlm.geometry(), &nlm.csh))?;
            stage("nlm", smooth_with_fields(&initial, &fields, &nlm))?
        };
        let metrics = stage("metrics", sequence_metrics(&initial, &smoothed, frames, trimaps))?;
        Ok(PipelineOutput {
            initial,
            smoothed,
            metrics,
        })
    })
}

fn sequence_metrics(initial: &[AlphaMatte], smoothed: &[AlphaMatte], frames: &[Frame], trimaps: &[Trimap]) -> Result<MetricsReport> {
    let mut report = MetricsReport::default();
    report.push("frames", None, frames.len() as f64);
    let unknown: usize = trimaps.iter().map(|t| t.count(Label::Unknown)).sum();
    let total: usize = trimaps.iter().map(|t| t.width() * t.height()).sum();
    report.push("unknown_fraction", None, unknown as f64 / total as f64);
    let first = frames[0].index();
    report.push_flicker("initial", &flicker_report(initial, frames, trimaps)?, first);
    report.push_flicker("smoothed", &flicker_report(smoothed, frames, trimaps)?, first);
    Ok(report)
}

/// Loads `input`, runs the pipeline, and writes `output/initial/`, `output/smoothed/`,
/// `metrics.txt` and `report.txt`.
pub fn run_pipeline(input: &Path, output: &Path, config: &PipelineConfig) -> Result<PipelineOutput> {
    run_pipeline_with(input, output, config, &SequenceLayout::default())
}

pub fn run_pipeline_with(input: &Path, output: &Path, config: &PipelineConfig, layout: &SequenceLayout) -> Result<PipelineOutput> {
    config.validate()?;
    let (frames, trimaps): (Vec<Frame>, Vec<Trimap>) = stage("load", load_sequence(input, layout))?.into_iter().unzip();
    let out = run_sequence(&frames, &trimaps, config)?;
    stage("write", write_outputs(output, &out, config, layout))?;
    Ok(out)
}

pub fn write_outputs(output: &Path, out: &PipelineOutput, config: &PipelineConfig, layout: &SequenceLayout) -> Result<()> {
    for (sub, mattes) in [(INITIAL_DIR, &out.initial), (SMOOTHED_DIR, &out.smoothed)] {
        let dir = output.join(sub);
        mattes
            .par_iter()
            .try_for_each(|m| save_matte(m, &dir.join(layout.alpha.format(m.index()))))?;
    }
    write_text(&output.join(METRICS_FILE), &out.metrics.to_key_values())?;
    let report = format!(
        "matte report\n\nconfiguration\n{}\nmetrics\n{}",
        config.to_key_values(),
        out.metrics.to_table()
    );
    write_text(&output.join(REPORT_FILE), &report)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let io = |source| MatteError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, text).map_err(|source| MatteError::Io {
        path: path.to_path_buf(),
        source,
    })
}
