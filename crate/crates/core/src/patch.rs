//! Square patches and the Gaussian-weighted SSD between them.
//!
//! A patch of width `s` centered at `(x, y)` covers offsets `u` in `[-s/2, s/2)^2`, so an
//! 8x8 patch has its center at offset 4 from its top-left pixel.

use crate::error::{MatteError, Result};
use crate::imaging::Frame;

/// A patch in frame `frame` centered at `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Patch {
    pub frame: usize,
    pub x: usize,
    pub y: usize,
}

/// Offsets and spatial weights `exp(-||u||^2 / (2 sigma_p^2))` for one patch width.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGeometry {
    width: usize,
    half: usize,
    sigma_p: f64,
    weights: Vec<f64>,
}

impl PatchGeometry {
    /// Geometry with `sigma_p = width / 2`.
    pub fn new(width: usize) -> Self {
        Self::with_sigma(width, width as f64 / 2.0)
    }

    pub fn with_sigma(width: usize, sigma_p: f64) -> Self {
        assert!(width > 0, "patch width must be positive");
        let half = width / 2;
        let denom = 2.0 * sigma_p * sigma_p;
        let mut weights = Vec::with_capacity(width * width);
        for dy in 0..width {
            for dx in 0..width {
                let ux = dx as f64 - half as f64;
                let uy = dy as f64 - half as f64;
                weights.push((-(ux * ux + uy * uy) / denom).exp());
            }
        }
        Self {
            width,
            half,
            sigma_p,
            weights,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn half(&self) -> usize {
        self.half
    }

    pub fn sigma_p(&self) -> f64 {
        self.sigma_p
    }

    /// Row-major weights over the `width x width` offsets, top-left first.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of valid centers along an axis of length `dim`.
    pub fn centers_along(&self, dim: usize) -> usize {
        (dim + 1).saturating_sub(self.width)
    }

    pub fn grid(&self, width: usize, height: usize) -> Result<CenterGrid> {
        let (cw, ch) = (self.centers_along(width), self.centers_along(height));
        if cw == 0 || ch == 0 {
            return Err(MatteError::PatchTooLarge {
                patch: self.width,
                width,
                height,
            });
        }
        Ok(CenterGrid {
            cols: cw,
            rows: ch,
            offset: self.half,
        })
    }

    #[inline]
    pub fn contains(&self, frame: &Frame, x: usize, y: usize) -> bool {
        x >= self.half
            && y >= self.half
            && x + self.width - self.half <= frame.width()
            && y + self.width - self.half <= frame.height()
    }
}

/// The dense stride-1 grid of valid patch centers of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CenterGrid {
    pub cols: usize,
    pub rows: usize,
    /// Coordinate of the first center along each axis.
    pub offset: usize,
}

impl CenterGrid {
    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn center(&self, i: usize) -> (usize, usize) {
        (self.offset + i % self.cols, self.offset + i / self.cols)
    }

    /// Grid index of center `(x, y)`, if valid.
    #[inline]
    pub fn index_of(&self, x: usize, y: usize) -> Option<usize> {
        let gx = x.checked_sub(self.offset)?;
        let gy = y.checked_sub(self.offset)?;
        (gx < self.cols && gy < self.rows).then_some(gy * self.cols + gx)
    }

    /// Grid index of `(x + dx, y + dy)`, if valid.
    #[inline]
    pub fn shifted(&self, x: usize, y: usize, dx: isize, dy: isize) -> Option<usize> {
        let nx = x.checked_add_signed(dx)?;
        let ny = y.checked_add_signed(dy)?;
        self.index_of(nx, ny)
    }
}

/// Weighted SSD over RGB between the patches at `a` in `fa` and `b` in `fb`, without bounds checks
/// beyond slice indexing.
#[inline]
pub fn weighted_ssd(geom: &PatchGeometry, fa: &Frame, a: (usize, usize), fb: &Frame, b: (usize, usize)) -> f64 {
    let s = geom.width;
    let (ax, ay) = (a.0 - geom.half, a.1 - geom.half);
    let (bx, by) = (b.0 - geom.half, b.1 - geom.half);
    let (wa, wb) = (fa.width(), fb.width());
    let (ra, rb) = (fa.rgb(), fb.rgb());
    let mut total = 0.0;
    for dy in 0..s {
        let row_a = &ra[(ay + dy) * wa + ax..][..s];
        let row_b = &rb[(by + dy) * wb + bx..][..s];
        let row_w = &geom.weights[dy * s..][..s];
        for ((pa, pb), &wgt) in row_a.iter().zip(row_b).zip(row_w) {
            let d0 = pa[0] - pb[0];
            let d1 = pa[1] - pb[1];
            let d2 = pa[2] - pb[2];
            total += (d0 * d0 + d1 * d1 + d2 * d2) * wgt;
        }
    }
    total
}

/// Weighted SSD with bounds checking.
pub fn patch_distance(geom: &PatchGeometry, fa: &Frame, a: (usize, usize), fb: &Frame, b: (usize, usize)) -> Result<f64> {
    for (f, (x, y)) in [(fa, a), (fb, b)] {
        if !geom.contains(f, x, y) {
            return Err(MatteError::PatchOutOfBounds { x, y });
        }
    }
    Ok(weighted_ssd(geom, fa, a, fb, b))
}
