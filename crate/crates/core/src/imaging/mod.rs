//! Frames, trimaps and alpha mattes, plus PNG sequence I/O.

mod color;
mod io;

pub use color::{lab_to_rgb, luminance, rgb_to_lab};
pub use io::{
    list_indices, load_frame, load_matte, load_sequence, load_trimap, save_frame, save_matte, save_trimap,
    FilenameTemplate, SequenceLayout,
};

use crate::error::{MatteError, Result};

/// One video frame: sRGB pixels in `[0, 1]` with their CIELAB values.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    index: usize,
    rgb: Vec<[f64; 3]>,
    lab: Vec<[f64; 3]>,
}

impl Frame {
    /// Builds a frame from row-major RGB pixels. Components are clamped to `[0, 1]`.
    pub fn from_rgb(width: usize, height: usize, index: usize, rgb: Vec<[f64; 3]>) -> Result<Self> {
        if rgb.len() != width * height || width == 0 || height == 0 {
            return Err(MatteError::BufferLength {
                width,
                height,
                got: rgb.len(),
            });
        }
        let rgb: Vec<[f64; 3]> = rgb.into_iter().map(|p| p.map(|c| c.clamp(0.0, 1.0))).collect();
        let lab = rgb.iter().map(|&p| rgb_to_lab(p)).collect();
        Ok(Self {
            width,
            height,
            index,
            rgb,
            lab,
        })
    }

    /// A frame of a single color.
    pub fn filled(width: usize, height: usize, index: usize, color: [f64; 3]) -> Result<Self> {
        Self::from_rgb(width, height, index, vec![color; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn rgb(&self) -> &[[f64; 3]] {
        &self.rgb
    }

    pub fn lab(&self) -> &[[f64; 3]] {
        &self.lab
    }

    #[inline]
    pub fn rgb_at(&self, x: usize, y: usize) -> [f64; 3] {
        self.rgb[y * self.width + x]
    }

    #[inline]
    pub fn lab_at(&self, x: usize, y: usize) -> [f64; 3] {
        self.lab[y * self.width + x]
    }

    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }
}

/// Per-pixel trimap label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    ForegroundKnown,
    BackgroundKnown,
    Unknown,
}

impl Label {
    /// 0 is known background, 255 known foreground, anything else unknown.
    pub fn from_gray(value: u8) -> Self {
        match value {
            0 => Label::BackgroundKnown,
            255 => Label::ForegroundKnown,
            _ => Label::Unknown,
        }
    }

    pub fn to_gray(self) -> u8 {
        match self {
            Label::BackgroundKnown => 0,
            Label::ForegroundKnown => 255,
            Label::Unknown => 128,
        }
    }
}

/// Three-way labeling of a frame.
///
/// Construction only checks dimensions; [`Trimap::check_known_regions`] enforces
/// that both known regions are present, which every matting stage requires.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trimap {
    width: usize,
    height: usize,
    labels: Vec<Label>,
}

impl Trimap {
    pub fn from_labels(width: usize, height: usize, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(MatteError::BufferLength {
                width,
                height,
                got: labels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn from_gray(width: usize, height: usize, values: &[u8]) -> Result<Self> {
        Self::from_labels(width, height, values.iter().map(|&v| Label::from_gray(v)).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn label_at(&self, x: usize, y: usize) -> Label {
        self.labels[y * self.width + x]
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Returns an error unless at least one known-foreground and one known-background pixel exist.
    pub fn check_known_regions(&self) -> Result<()> {
        let has_f = self.labels.contains(&Label::ForegroundKnown);
        let has_b = self.labels.contains(&Label::BackgroundKnown);
        match (has_f, has_b) {
            (true, true) => Ok(()),
            (false, _) => Err(MatteError::InvalidTrimap("no known-foreground pixels".into())),
            (_, false) => Err(MatteError::InvalidTrimap("no known-background pixels".into())),
        }
    }

    pub fn check_matches(&self, frame: &Frame) -> Result<()> {
        if self.width != frame.width() || self.height != frame.height() {
            return Err(MatteError::DimensionMismatch {
                expected_w: frame.width(),
                expected_h: frame.height(),
                got_w: self.width,
                got_h: self.height,
            });
        }
        Ok(())
    }

    pub fn mask(&self, label: Label) -> Vec<bool> {
        self.labels.iter().map(|&l| l == label).collect()
    }
}

/// Which stage produced a matte.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatteStage {
    Initial,
    Smoothed,
}

/// Per-pixel opacity in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMatte {
    width: usize,
    height: usize,
    index: usize,
    stage: MatteStage,
    alpha: Vec<f64>,
}

impl AlphaMatte {
    pub fn new(width: usize, height: usize, index: usize, stage: MatteStage, alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() != width * height {
            return Err(MatteError::BufferLength {
                width,
                height,
                got: alpha.len(),
            });
        }
        if let Some(bad) = alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(MatteError::AlphaOutOfRange(*bad));
        }
        Ok(Self {
            width,
            height,
            index,
            stage,
            alpha,
        })
    }

    /// Known foreground -> 1, known background -> 0, unknown -> 0.5.
    pub fn from_trimap(trimap: &Trimap, index: usize) -> Self {
        let alpha = trimap
            .labels()
            .iter()
            .map(|l| match l {
                Label::ForegroundKnown => 1.0,
                Label::BackgroundKnown => 0.0,
                Label::Unknown => 0.5,
            })
            .collect();
        Self {
            width: trimap.width(),
            height: trimap.height(),
            index,
            stage: MatteStage::Initial,
            alpha,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn stage(&self) -> MatteStage {
        self.stage
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.alpha[y * self.width + x]
    }

    pub fn with_stage(mut self, stage: MatteStage) -> Self {
        self.stage = stage;
        self
    }

    /// 8-bit quantization, `round(alpha * 255)` with halves rounded up.
    pub fn to_gray8(&self) -> Vec<u8> {
        self.alpha.iter().map(|&a| quantize(a)).collect()
    }
}

#[inline]
fn quantize(alpha: f64) -> u8 {
    (alpha.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trimap_gray_mapping() {
        assert_eq!(Label::from_gray(0), Label::BackgroundKnown);
        assert_eq!(Label::from_gray(255), Label::ForegroundKnown);
        assert_eq!(Label::from_gray(128), Label::Unknown);
        assert_eq!(Label::from_gray(1), Label::Unknown);
        assert_eq!(Label::from_gray(254), Label::Unknown);
    }

    #[test]
    fn trimap_requires_both_known_regions() {
        let t = Trimap::from_gray(2, 1, &[255, 128]).unwrap();
        assert!(matches!(t.check_known_regions(), Err(MatteError::InvalidTrimap(_))));
        let t = Trimap::from_gray(2, 1, &[0, 128]).unwrap();
        assert!(t.check_known_regions().is_err());
        let t = Trimap::from_gray(2, 1, &[0, 255]).unwrap();
        assert!(t.check_known_regions().is_ok());
    }

    #[test]
    fn quantization_rule() {
        assert_eq!(quantize(1.0), 255);
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(0.5), 128);
    }

    #[test]
    fn matte_rejects_out_of_range() {
        assert!(AlphaMatte::new(1, 1, 0, MatteStage::Initial, vec![1.5]).is_err());
        assert!(AlphaMatte::new(2, 1, 0, MatteStage::Initial, vec![0.5]).is_err());
    }

    #[test]
    fn frame_lab_is_derived_from_rgb() {
        let f = Frame::from_rgb(2, 1, 0, vec![[1.0, 1.0, 1.0], [0.5, 0.5, 0.5]]).unwrap();
        assert_eq!(f.lab()[1], rgb_to_lab([0.5, 0.5, 0.5]));
        assert_eq!(f.lab().len(), f.rgb().len());
    }
}
