//! Walsh-Hadamard projections of luminance patches, in sequency order.

use crate::error::{MatteError, Result};
use crate::imaging::{luminance, Frame};
use crate::patch::{CenterGrid, PatchGeometry};

/// Projection vectors for every valid patch center of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Projections {
    pub grid: CenterGrid,
    pub dims: usize,
    data: Vec<f64>,
}

impl Projections {
    #[inline]
    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Natural (Hadamard) row index of the Walsh function with `sequency` sign changes.
fn natural_index(sequency: usize, bits: u32) -> usize {
    let gray = sequency ^ (sequency >> 1);
    if bits == 0 {
        0
    } else {
        gray.reverse_bits() >> (usize::BITS - bits)
    }
}

/// 2-D kernel order: increasing total sequency, ties by vertical sequency.
pub fn kernel_order(width: usize) -> Vec<(usize, usize)> {
    let mut order: Vec<(usize, usize)> = (0..width).flat_map(|v| (0..width).map(move |h| (v, h))).collect();
    order.sort_by_key(|&(v, h)| (v + h, v));
    order
}

/// In-place unnormalized fast Walsh-Hadamard transform, natural order.
fn fwht(data: &mut [f64]) {
    let n = data.len();
    let mut len = 1;
    while len < n {
        for start in (0..n).step_by(len * 2) {
            for i in start..start + len {
                let (a, b) = (data[i], data[i + len]);
                data[i] = a + b;
                data[i + len] = a - b;
            }
        }
        len *= 2;
    }
}

/// First `n_kernels` Walsh-Hadamard coefficients of each luminance patch.
pub fn wh_project(frame: &Frame, width: usize, n_kernels: usize) -> Result<Projections> {
    if !width.is_power_of_two() {
        return Err(MatteError::PatchNotPowerOfTwo(width));
    }
    if n_kernels > width * width {
        return Err(MatteError::TooManyKernels {
            requested: n_kernels,
            available: width * width,
        });
    }
    let geom = PatchGeometry::new(width);
    let grid = geom.grid(frame.width(), frame.height())?;
    let bits = width.trailing_zeros();
    let picks: Vec<usize> = kernel_order(width)
        .into_iter()
        .take(n_kernels)
        .map(|(v, h)| natural_index(v, bits) * width + natural_index(h, bits))
        .collect();

    let fw = frame.width();
    let lum: Vec<f64> = frame.rgb().iter().map(|&p| luminance(p)).collect();
    let mut data = Vec::with_capacity(grid.len() * n_kernels);
    let mut block = vec![0.0; width * width];
    let mut column = vec![0.0; width];
    for i in 0..grid.len() {
        let (cx, cy) = grid.center(i);
        let (x0, y0) = (cx - geom.half(), cy - geom.half());
        for dy in 0..width {
            let row = &mut block[dy * width..(dy + 1) * width];
            row.copy_from_slice(&lum[(y0 + dy) * fw + x0..][..width]);
            fwht(row);
        }
        for dx in 0..width {
            for dy in 0..width {
                column[dy] = block[dy * width + dx];
            }
            fwht(&mut column);
            for dy in 0..width {
                block[dy * width + dx] = column[dy];
            }
        }
        data.extend(picks.iter().map(|&p| block[p]));
    }
    Ok(Projections {
        grid,
        dims: n_kernels,
        data,
    })
}
