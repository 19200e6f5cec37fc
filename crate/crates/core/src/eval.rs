//! Temporal flicker and accuracy metrics, plus synthetic composited sequences with ground truth.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{MatteError, Result};
use crate::imaging::{AlphaMatte, Frame, Label, MatteStage, Trimap};

const COLOR_FLOOR: f64 = 1.0 / 255.0;

fn check_dims(w: usize, h: usize, other_w: usize, other_h: usize) -> Result<()> {
    if w != other_w || h != other_h {
        return Err(MatteError::DimensionMismatch {
            expected_w: w,
            expected_h: h,
            got_w: other_w,
            got_h: other_h,
        });
    }
    Ok(())
}

/// Mean over unknown pixels of `|alpha(t+1) - alpha(t)| / max(|I(t+1) - I(t)|, 1/255)`,
/// where the color difference is the Euclidean RGB distance. Returns 0 when no pixel is unknown.
pub fn temporal_flicker(
    matte_t: &AlphaMatte,
    matte_next: &AlphaMatte,
    frame_t: &Frame,
    frame_next: &Frame,
    trimap_t: &Trimap,
) -> Result<f64> {
    let (w, h) = (matte_t.width(), matte_t.height());
    check_dims(w, h, matte_next.width(), matte_next.height())?;
    check_dims(w, h, frame_t.width(), frame_t.height())?;
    check_dims(w, h, frame_next.width(), frame_next.height())?;
    check_dims(w, h, trimap_t.width(), trimap_t.height())?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..w * h {
        if trimap_t.labels()[i] != Label::Unknown {
            continue;
        }
        let (a, b) = (frame_t.rgb()[i], frame_next.rgb()[i]);
        let color = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        sum += (matte_next.alpha()[i] - matte_t.alpha()[i]).abs() / color.max(COLOR_FLOOR);
        count += 1;
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlickerReport {
    /// `per_frame[t]` measures the change from frame `t` to `t + 1`.
    pub per_frame: Vec<f64>,
    pub mean: f64,
}

pub fn flicker_report(mattes: &[AlphaMatte], frames: &[Frame], trimaps: &[Trimap]) -> Result<FlickerReport> {
    if mattes.len() != frames.len() || frames.len() != trimaps.len() {
        return Err(MatteError::SequenceLength(format!(
            "{} mattes, {} frames, {} trimaps",
            mattes.len(),
            frames.len(),
            trimaps.len()
        )));
    }
    let per_frame = (0..mattes.len().saturating_sub(1))
        .map(|t| temporal_flicker(&mattes[t], &mattes[t + 1], &frames[t], &frames[t + 1], &trimaps[t]))
        .collect::<Result<Vec<_>>>()?;
    let mean = if per_frame.is_empty() {
        0.0
    } else {
        per_frame.iter().sum::<f64>() / per_frame.len() as f64
    };
    Ok(FlickerReport { per_frame, mean })
}

/// Mean absolute alpha difference over `mask`.
pub fn sad_error(matte: &AlphaMatte, ground_truth: &AlphaMatte, mask: &[bool]) -> Result<f64> {
    check_dims(matte.width(), matte.height(), ground_truth.width(), ground_truth.height())?;
    if mask.len() != matte.alpha().len() {
        return Err(MatteError::BufferLength {
            width: matte.width(),
            height: matte.height(),
            got: mask.len(),
        });
    }
    let (sum, n) = matte
        .alpha()
        .iter()
        .zip(ground_truth.alpha())
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), ((a, g), _)| (s + (a - g).abs(), n + 1));
    if n == 0 {
        return Err(MatteError::EmptyMask);
    }
    Ok(sum / n as f64)
}

/// Mean squared alpha difference over `mask`.
pub fn mse_error(matte: &AlphaMatte, ground_truth: &AlphaMatte, mask: &[bool]) -> Result<f64> {
    check_dims(matte.width(), matte.height(), ground_truth.width(), ground_truth.height())?;
    let (sum, n) = matte
        .alpha()
        .iter()
        .zip(ground_truth.alpha())
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), ((a, g), _)| (s + (a - g).powi(2), n + 1));
    if n == 0 {
        return Err(MatteError::EmptyMask);
    }
    Ok(sum / n as f64)
}

/// Row-major RGB image used as a foreground or background layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f64; 3]>,
}

impl Pattern {
    pub fn flat(width: usize, height: usize, color: [f64; 3]) -> Self {
        Self {
            width,
            height,
            pixels: vec![color; width * height],
        }
    }
}

/// Ground-truth alpha for each frame.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaSchedule {
    Constant(f64),
    /// Vertical edge: alpha is 1 left of `start`, falls linearly to 0 over `width` pixels,
    /// and the edge moves `shift_per_frame` pixels right each frame.
    HorizontalRamp {
        start: f64,
        width: f64,
        shift_per_frame: f64,
    },
    /// Explicit per-frame maps.
    Maps(Vec<Vec<f64>>),
}

impl AlphaSchedule {
    fn alpha(&self, t: usize, w: usize, h: usize) -> Result<Vec<f64>> {
        let out = match self {
            AlphaSchedule::Constant(a) => vec![*a; w * h],
            AlphaSchedule::HorizontalRamp {
                start,
                width,
                shift_per_frame,
            } => {
                if !(*width > 0.0) {
                    return Err(MatteError::InvalidSchedule("ramp width must be positive".into()));
                }
                let edge = start + shift_per_frame * t as f64;
                (0..w * h)
                    .map(|i| {
                        let x = (i % w) as f64;
                        (1.0 - (x - edge) / width).clamp(0.0, 1.0)
                    })
                    .collect()
            }
            AlphaSchedule::Maps(maps) => {
                let m = maps
                    .get(t)
                    .ok_or_else(|| MatteError::InvalidSchedule(format!("no alpha map for frame {t}")))?;
                if m.len() != w * h {
                    return Err(MatteError::InvalidSchedule(format!(
                        "alpha map {t} has {} values, expected {}",
                        m.len(),
                        w * h
                    )));
                }
                m.clone()
            }
        };
        if out.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(MatteError::InvalidSchedule("alpha outside [0, 1]".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub frames: Vec<Frame>,
    pub trimaps: Vec<Trimap>,
    pub ground_truth: Vec<AlphaMatte>,
}

pub const TRIMAP_DILATION: usize = 4;

/// Thresholds ground-truth alpha (> 0.98 foreground, < 0.02 background) and widens the
/// unknown band by `dilation` pixels (Euclidean disk).
pub fn trimap_from_alpha(alpha: &[f64], width: usize, height: usize, dilation: usize) -> Result<Trimap> {
    let base: Vec<Label> = alpha
        .iter()
        .map(|&a| {
            if a > 0.98 {
                Label::ForegroundKnown
            } else if a < 0.02 {
                Label::BackgroundKnown
            } else {
                Label::Unknown
            }
        })
        .collect();
    let r = dilation as isize;
    let mut labels = base.clone();
    for y in 0..height as isize {
        for x in 0..width as isize {
            if base[(y as usize) * width + x as usize] != Label::Unknown {
                continue;
            }
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx * dx + dy * dy > r * r {
                        continue;
                    }
                    let (nx, ny) = (x + dx, y + dy);
                    if nx >= 0 && ny >= 0 && nx < width as isize && ny < height as isize {
                        labels[ny as usize * width + nx as usize] = Label::Unknown;
                    }
                }
            }
        }
    }
    Trimap::from_labels(width, height, labels)
}

/// Composites `I = alpha F + (1 - alpha) B` per frame, adds clamped Gaussian noise of
/// standard deviation `noise`, and derives trimaps from the ground truth.
pub fn synth_sequence(
    fg: &Pattern,
    bg: &Pattern,
    schedule: &AlphaSchedule,
    n_frames: usize,
    noise: f64,
    seed: u64,
) -> Result<SyntheticSequence> {
    check_dims(fg.width, fg.height, bg.width, bg.height)?;
    let (w, h) = (fg.width, fg.height);
    if fg.pixels.len() != w * h || bg.pixels.len() != w * h {
        return Err(MatteError::BufferLength {
            width: w,
            height: h,
            got: fg.pixels.len().min(bg.pixels.len()),
        });
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(MatteError::InvalidSchedule(format!("noise level {noise}")));
    }
    let normal = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).expect("finite deviation");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SyntheticSequence {
        frames: Vec::with_capacity(n_frames),
        trimaps: Vec::with_capacity(n_frames),
        ground_truth: Vec::with_capacity(n_frames),
    };
    for t in 0..n_frames {
        let alpha = schedule.alpha(t, w, h)?;
        let rgb: Vec<[f64; 3]> = (0..w * h)
            .map(|i| {
                let (f, b, a) = (fg.pixels[i], bg.pixels[i], alpha[i]);
                let mut p = [0.0; 3];
                for c in 0..3 {
                    p[c] = a * f[c] + (1.0 - a) * b[c];
                    if noise > 0.0 {
                        p[c] = (p[c] + normal.sample(&mut rng)).clamp(0.0, 1.0);
                    }
                }
                p
            })
            .collect();
        out.frames.push(Frame::from_rgb(w, h, t, rgb)?);
        out.trimaps.push(trimap_from_alpha(&alpha, w, h, TRIMAP_DILATION)?);
        out.ground_truth.push(AlphaMatte::new(w, h, t, MatteStage::Initial, alpha)?);
    }
    Ok(out)
}

/// A named metric with one value per frame (or a single aggregate).
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub name: String,
    pub frame: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub metrics: Vec<Metric>,
}

impl MetricsReport {
    pub fn push(&mut self, name: &str, frame: Option<usize>, value: f64) {
        self.metrics.push(Metric {
            name: name.to_string(),
            frame,
            value,
        });
    }

    pub fn push_flicker(&mut self, prefix: &str, report: &FlickerReport, first_index: usize) {
        for (t, v) in report.per_frame.iter().enumerate() {
            self.push(&format!("{prefix}_flicker"), Some(first_index + t), *v);
        }
        self.push(&format!("{prefix}_flicker_mean"), None, report.mean);
    }

    pub fn get(&self, name: &str, frame: Option<usize>) -> Option<f64> {
        self.metrics
            .iter()
            .find(|m| m.name == name && m.frame == frame)
            .map(|m| m.value)
    }

    /// One `name=value` line per metric; per-frame metrics are keyed `name.NNNN`.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        for m in &self.metrics {
            match m.frame {
                Some(f) => writeln!(s, "{}.{:04}={}", m.name, f, m.value),
                None => writeln!(s, "{}={}", m.name, m.value),
            }
            .expect("writing to a String");
        }
        s
    }

    pub fn parse_key_values(text: &str) -> Result<Self> {
        let mut report = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| MatteError::Config(format!("metrics line {}: missing `=`", n + 1)))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| MatteError::Config(format!("metrics line {}: bad value", n + 1)))?;
            let (name, frame) = match key.rsplit_once('.') {
                Some((name, f)) if f.bytes().all(|b| b.is_ascii_digit()) && !f.is_empty() => {
                    (name, Some(f.parse().expect("digits")))
                }
                _ => (key, None),
            };
            report.push(name.trim(), frame, value);
        }
        Ok(report)
    }

    /// Plain-text table, one row per metric.
    pub fn to_table(&self) -> String {
        let width = self.metrics.iter().map(|m| m.name.len()).max().unwrap_or(6).max(6);
        let mut s = String::new();
        writeln!(s, "{:<width$}  {:>5}  {:>12}", "metric", "frame", "value").unwrap();
        writeln!(s, "{}", "-".repeat(width + 21)).unwrap();
        for m in &self.metrics {
            let frame = m.frame.map_or_else(|| "-".to_string(), |f| f.to_string());
            writeln!(s, "{:<width$}  {:>5}  {:>12.6}", m.name, frame, m.value).unwrap();
        }
        s
    }
}
