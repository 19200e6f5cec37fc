use std::fs;
use std::path::Path;

use image::{GrayImage, RgbImage};
use rayon::prelude::*;

use super::{AlphaMatte, Frame, Label, MatteStage, Trimap};
use crate::error::{MatteError, Result};

/// A printf-style filename with a single integer field, e.g. `frame_%04d.png`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilenameTemplate {
    prefix: String,
    suffix: String,
    pad: usize,
}

impl FilenameTemplate {
    pub fn parse(template: &str) -> Result<Self> {
        let invalid = || MatteError::InvalidTemplate(template.to_string());
        let start = template.find('%').ok_or_else(invalid)?;
        let rest = &template[start + 1..];
        let end = rest.find('d').ok_or_else(invalid)?;
        let spec = &rest[..end];
        let pad = if spec.is_empty() {
            0
        } else {
            if !spec.starts_with('0') {
                return Err(invalid());
            }
            spec[1..].parse().map_err(|_| invalid())?
        };
        let suffix = &rest[end + 1..];
        if suffix.contains('%') {
            return Err(invalid());
        }
        Ok(Self {
            prefix: template[..start].to_string(),
            suffix: suffix.to_string(),
            pad,
        })
    }

    pub fn format(&self, index: usize) -> String {
        format!("{}{:0pad$}{}", self.prefix, index, self.suffix, pad = self.pad)
    }

    /// Extracts the index from a filename produced by this template.
    pub fn match_name(&self, name: &str) -> Option<usize> {
        let digits = name.strip_prefix(&self.prefix)?.strip_suffix(&self.suffix)?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if self.pad > 0 && digits.len() < self.pad {
            return None;
        }
        digits.parse().ok()
    }
}

/// Filename templates for the three image kinds in a sequence directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceLayout {
    pub frame: FilenameTemplate,
    pub trimap: FilenameTemplate,
    pub alpha: FilenameTemplate,
}

impl Default for SequenceLayout {
    fn default() -> Self {
        Self {
            frame: FilenameTemplate::parse("frame_%04d.png").unwrap(),
            trimap: FilenameTemplate::parse("trimap_%04d.png").unwrap(),
            alpha: FilenameTemplate::parse("alpha_%04d.png").unwrap(),
        }
    }
}

/// Lists the frame indices present in `dir`, sorted ascending.
pub fn list_indices(dir: &Path, template: &FilenameTemplate) -> Result<Vec<usize>> {
    let entries = fs::read_dir(dir).map_err(|source| MatteError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut indices = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| MatteError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        if let Some(i) = entry.file_name().to_str().and_then(|n| template.match_name(n)) {
            indices.push(i);
        }
    }
    indices.sort_unstable();
    indices.dedup();
    Ok(indices)
}

fn open_image(path: &Path) -> Result<image::DynamicImage> {
    image::open(path).map_err(|source| MatteError::ImageRead {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_frame(path: &Path, index: usize) -> Result<Frame> {
    let img = open_image(path)?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let rgb = img
        .pixels()
        .map(|p| p.0.map(|c| f64::from(c) / 255.0))
        .collect();
    Frame::from_rgb(w, h, index, rgb)
}

pub fn load_trimap(path: &Path) -> Result<Trimap> {
    let img = open_image(path)?.to_luma8();
    Trimap::from_gray(img.width() as usize, img.height() as usize, img.as_raw())
}

/// Loads every frame/trimap pair in `dir`, ordered by index.
pub fn load_sequence(dir: &Path, layout: &SequenceLayout) -> Result<Vec<(Frame, Trimap)>> {
    let indices = list_indices(dir, &layout.frame)?;
    if indices.is_empty() {
        return Err(MatteError::NoFrames {
            dir: dir.to_path_buf(),
            pattern: layout.frame.format(0),
        });
    }
    indices
        .par_iter()
        .map(|&index| {
            let trimap_path = dir.join(layout.trimap.format(index));
            if !trimap_path.is_file() {
                return Err(MatteError::MissingTrimap {
                    index,
                    path: trimap_path,
                });
            }
            let frame = load_frame(&dir.join(layout.frame.format(index)), index)?;
            let trimap = load_trimap(&trimap_path)?;
            trimap.check_matches(&frame)?;
            Ok((frame, trimap))
        })
        .collect()
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| MatteError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

fn write_error(path: &Path) -> impl FnOnce(image::ImageError) -> MatteError + '_ {
    move |source| MatteError::ImageWrite {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the matte as an 8-bit grayscale PNG.
pub fn save_matte(matte: &AlphaMatte, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    let img = GrayImage::from_raw(matte.width() as u32, matte.height() as u32, matte.to_gray8())
        .expect("buffer sized from matte dimensions");
    img.save(path).map_err(write_error(path))
}

pub fn load_matte(path: &Path, index: usize, stage: MatteStage) -> Result<AlphaMatte> {
    let img = open_image(path)?.to_luma8();
    let alpha = img.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect();
    AlphaMatte::new(img.width() as usize, img.height() as usize, index, stage, alpha)
}

pub fn save_frame(frame: &Frame, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    let raw: Vec<u8> = frame
        .rgb()
        .iter()
        .flat_map(|p| p.map(|c| (c * 255.0 + 0.5).floor() as u8))
        .collect();
    let img = RgbImage::from_raw(frame.width() as u32, frame.height() as u32, raw)
        .expect("buffer sized from frame dimensions");
    img.save(path).map_err(write_error(path))
}

pub fn save_trimap(trimap: &Trimap, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    let raw: Vec<u8> = trimap.labels().iter().map(|&l| Label::to_gray(l)).collect();
    let img = GrayImage::from_raw(trimap.width() as u32, trimap.height() as u32, raw)
        .expect("buffer sized from trimap dimensions");
    img.save(path).map_err(write_error(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_round_trip() {
        let t = FilenameTemplate::parse("frame_%04d.png").unwrap();
        assert_eq!(t.format(7), "frame_0007.png");
        assert_eq!(t.match_name("frame_0007.png"), Some(7));
        assert_eq!(t.match_name("frame_12345.png"), Some(12345));
        assert_eq!(t.match_name("frame_7.png"), None);
        assert_eq!(t.match_name("trimap_0007.png"), None);
        assert_eq!(t.match_name("frame_00a7.png"), None);
    }

    #[test]
    fn template_rejects_garbage() {
        assert!(FilenameTemplate::parse("frame.png").is_err());
        assert!(FilenameTemplate::parse("f_%4d.png").is_err());
        assert!(FilenameTemplate::parse("f_%d_%d.png").is_err());
        assert!(FilenameTemplate::parse("f_%d.png").is_ok());
    }
}
