use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use matte_core::eval::{flicker_report, mse_error, sad_error, synth_sequence, AlphaSchedule, MetricsReport, Pattern};
use matte_core::imaging::{load_matte, load_sequence, save_frame, save_matte, save_trimap, FilenameTemplate, SequenceLayout};
use matte_core::{run_pipeline, AlphaMatte, Label, MatteStage, PipelineConfig, Result};

const GT_PATTERN: &str = "gt_%04d.png";

#[derive(Parser)]
#[command(name = "matte", version, about = "Video matting with sparse-coded alpha and temporal smoothing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate initial and smoothed mattes for a frame/trimap sequence.
    Run(RunArgs),
    /// Score existing mattes: temporal flicker, and SAD/MSE against ground truth if given.
    Eval(EvalArgs),
    /// Write a synthetic composited sequence with trimaps and ground-truth mattes.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Directory with frame_NNNN.png and trimap_NNNN.png
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    radius: Option<f64>,
    #[arg(long)]
    patch: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Superpixels per known region, or `auto`
    #[arg(long)]
    superpixels: Option<String>,
    #[arg(long)]
    skip_nlm: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        put("lambda", self.lambda.map(|v| v.to_string()));
        put("radius", self.radius.map(|v| v.to_string()));
        put("patch", self.patch.map(|v| v.to_string()));
        put("k", self.k.map(|v| v.to_string()));
        put("gamma", self.gamma.map(|v| v.to_string()));
        put("superpixels", self.superpixels.clone());
        put("seed", self.seed.map(|v| v.to_string()));
        put("threads", self.threads.map(|v| v.to_string()));
        put("skip_nlm", self.skip_nlm.then(|| "true".to_string()));
        out
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Directory with the frames and trimaps the mattes were computed from
    #[arg(long)]
    input: PathBuf,
    /// Directory with alpha_NNNN.png mattes
    #[arg(long)]
    mattes: PathBuf,
    /// Directory with ground-truth mattes
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    #[arg(long, default_value = GT_PATTERN)]
    gt_pattern: String,
    /// Write metrics here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 5)]
    frames: usize,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    /// Column where the alpha ramp starts in frame 0
    #[arg(long, default_value_t = 24.0)]
    ramp_start: f64,
    #[arg(long, default_value_t = 8.0)]
    ramp_width: f64,
    /// Ramp displacement per frame, in pixels
    #[arg(long, default_value_t = 1.0)]
    shift: f64,
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Foreground color as r,g,b in [0, 1]
    #[arg(long, default_value = "0.8,0.3,0.2", value_parser = parse_rgb)]
    fg: [f64; 3],
    #[arg(long, default_value = "0.2,0.3,0.8", value_parser = parse_rgb)]
    bg: [f64; 3],
}

fn parse_rgb(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts.as_slice() {
        [r, g, b] if parts.iter().all(|c| (0.0..=1.0).contains(c)) => Ok([*r, *g, *b]),
        _ => Err(format!("expected three comma-separated values in [0, 1], got `{s}`")),
    }
}

fn run(args: &RunArgs) -> Result<()> {
    let config = PipelineConfig::load(args.config.as_deref(), &args.overrides())?;
    let out = run_pipeline(&args.input, &args.output, &config)?;
    println!(
        "{} frames; flicker {:.4} -> {:.4}; wrote {}",
        out.initial.len(),
        out.metrics.get("initial_flicker_mean", None).unwrap_or(f64::NAN),
        out.metrics.get("smoothed_flicker_mean", None).unwrap_or(f64::NAN),
        args.output.display()
    );
    Ok(())
}

fn load_mattes(dir: &Path, template: &FilenameTemplate, indices: &[usize]) -> Result<Vec<AlphaMatte>> {
    indices
        .iter()
        .map(|&i| load_matte(&dir.join(template.format(i)), i, MatteStage::Smoothed))
        .collect()
}

fn eval(args: &EvalArgs) -> Result<()> {
    let layout = SequenceLayout::default();
    let (frames, trimaps): (Vec<_>, Vec<_>) = load_sequence(&args.input, &layout)?.into_iter().unzip();
    let indices: Vec<usize> = frames.iter().map(|f| f.index()).collect();
    let mattes = load_mattes(&args.mattes, &layout.alpha, &indices)?;
    let mut report = MetricsReport::default();
    report.push_flicker("matte", &flicker_report(&mattes, &frames, &trimaps)?, indices[0]);
    if let Some(gt_dir) = &args.ground_truth {
        let gt = load_mattes(gt_dir, &FilenameTemplate::parse(&args.gt_pattern)?, &indices)?;
        let (mut sad_sum, mut mse_sum) = (0.0, 0.0);
        for ((m, g), t) in mattes.iter().zip(&gt).zip(&trimaps) {
            let mask = t.mask(Label::Unknown);
            if !mask.contains(&true) {
                continue;
            }
            let (sad, mse) = (sad_error(m, g, &mask)?, mse_error(m, g, &mask)?);
            report.push("sad", Some(m.index()), sad);
            report.push("mse", Some(m.index()), mse);
            sad_sum += sad;
            mse_sum += mse;
        }
        let n = report.metrics.iter().filter(|m| m.name == "sad").count().max(1) as f64;
        report.push("sad_mean", None, sad_sum / n);
        report.push("mse_mean", None, mse_sum / n);
    }
    let text = report.to_key_values();
    match &args.output {
        Some(path) => std::fs::write(path, text).map_err(|source| matte_core::MatteError::Io {
            path: path.clone(),
            source,
        })?,
        None => print!("{text}"),
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let fg = Pattern::flat(args.width, args.height, args.fg);
    let bg = Pattern::flat(args.width, args.height, args.bg);
    let schedule = AlphaSchedule::HorizontalRamp {
        start: args.ramp_start,
        width: args.ramp_width,
        shift_per_frame: args.shift,
    };
    let seq = synth_sequence(&fg, &bg, &schedule, args.frames, args.noise, args.seed)?;
    let layout = SequenceLayout::default();
    let gt_template = FilenameTemplate::parse(GT_PATTERN)?;
    for ((frame, trimap), gt) in seq.frames.iter().zip(&seq.trimaps).zip(&seq.ground_truth) {
        let i = frame.index();
        save_frame(frame, &args.output.join(layout.frame.format(i)))?;
        save_trimap(trimap, &args.output.join(layout.trimap.format(i)))?;
        save_matte(gt, &args.output.join(gt_template.format(i)))?;
    }
    println!("wrote {} frames to {}", args.frames, args.output.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
