//! SLIC superpixels over the known regions and per-pixel F/B dictionary assembly.

use crate::error::{MatteError, Result};
use crate::features::{pixel_feature, FeatureVector, FEATURE_DIM};
use crate::imaging::Frame;

/// Which known region a superpixel or dictionary was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Foreground,
    Background,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Superpixel {
    pub region: Region,
    /// Row-major pixel indices.
    pub members: Vec<usize>,
    pub centroid: (f64, f64),
    pub mean_feature: FeatureVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicParams {
    pub target_count: usize,
    pub compactness: f64,
    pub iterations: usize,
}

impl SlicParams {
    pub fn new(target_count: usize, compactness: f64) -> Self {
        Self {
            target_count,
            compactness,
            iterations: 10,
        }
    }

    /// `max(25, area / 400)` superpixels with compactness 10.
    pub fn for_mask_area(area: usize) -> Self {
        Self::new((area / 400).max(25), 10.0)
    }
}

/// Picks an `nx * ny <= k` grid whose cells are closest to square.
fn grid_dims(box_w: usize, box_h: usize, k: usize) -> (usize, usize) {
    let k = k.max(1);
    let mut best = (1, 1);
    let mut best_score = f64::INFINITY;
    for ny in 1..=k.min(box_h) {
        for nx in 1..=(k / ny).min(box_w) {
            let aspect = (box_w as f64 / nx as f64) / (box_h as f64 / ny as f64);
            let score = aspect.ln().abs() + 2.0 * (k as f64 / (nx * ny) as f64).ln();
            if score < best_score - 1e-12 {
                best_score = score;
                best = (nx, ny);
            }
        }
    }
    best
}

struct MaskBox {
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
}

/// One seed per non-empty grid cell: the masked pixel closest to the cell center.
fn grid_seeds(
    frame_w: usize,
    mask: &[bool],
    bbox: &MaskBox,
    k: usize,
) -> Vec<usize> {
    let (nx, ny) = grid_dims(bbox.w, bbox.h, k);
    let cell_w = bbox.w as f64 / nx as f64;
    let cell_h = bbox.h as f64 / ny as f64;
    let mut seeds = Vec::with_capacity(nx * ny);
    for cy in 0..ny {
        let ya = bbox.y0 + (cy as f64 * cell_h).floor() as usize;
        let yb = bbox.y0 + ((cy + 1) as f64 * cell_h).floor() as usize;
        let center_y = bbox.y0 as f64 + (cy as f64 + 0.5) * cell_h - 0.5;
        for cx in 0..nx {
            let xa = bbox.x0 + (cx as f64 * cell_w).floor() as usize;
            let xb = bbox.x0 + ((cx + 1) as f64 * cell_w).floor() as usize;
            let center_x = bbox.x0 as f64 + (cx as f64 + 0.5) * cell_w - 0.5;
            let mut best: Option<(f64, usize)> = None;
            for y in ya..yb {
                for x in xa..xb {
                    let idx = y * frame_w + x;
                    if !mask[idx] {
                        continue;
                    }
                    let d = (x as f64 - center_x).powi(2) + (y as f64 - center_y).powi(2);
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, idx));
                    }
                }
            }
            if let Some((_, idx)) = best {
                seeds.push(idx);
            }
        }
    }
    seeds
}

/// Grows the grid until the number of non-empty cells is as close to `target` as possible
/// without exceeding it.
fn choose_seeds(frame_w: usize, mask: &[bool], bbox: &MaskBox, target: usize, area: usize) -> Vec<usize> {
    let mut k = target;
    let mut best = grid_seeds(frame_w, mask, bbox, 1);
    loop {
        let seeds = grid_seeds(frame_w, mask, bbox, k);
        if seeds.len() > target {
            break;
        }
        let count = seeds.len();
        best = seeds;
        if count == target || k >= area.max(bbox.w * bbox.h) {
            break;
        }
        k = (k + 1).max(k * target / count.max(1));
    }
    best
}

/// SLIC local k-means over `[L, a, b, x, y]` restricted to `mask`.
///
/// Every masked pixel ends up in exactly one superpixel and at most
/// `params.target_count` superpixels are returned.
pub fn slic_segment(frame: &Frame, mask: &[bool], region: Region, params: &SlicParams) -> Result<Vec<Superpixel>> {
    let (w, h) = (frame.width(), frame.height());
    if mask.len() != w * h {
        return Err(MatteError::BufferLength {
            width: w,
            height: h,
            got: mask.len(),
        });
    }
    let masked: Vec<usize> = (0..w * h).filter(|&i| mask[i]).collect();
    if masked.is_empty() {
        return Err(MatteError::EmptyMask);
    }
    let (mut x0, mut y0, mut x1, mut y1) = (w, h, 0, 0);
    for &i in &masked {
        let (x, y) = (i % w, i / w);
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let bbox = MaskBox {
        x0,
        y0,
        w: x1 - x0 + 1,
        h: y1 - y0 + 1,
    };

    let seeds = choose_seeds(w, mask, &bbox, params.target_count.max(1), masked.len());
    let step = (masked.len() as f64 / seeds.len() as f64).sqrt().max(1.0);
    let spatial = (params.compactness / step).powi(2);

    let point = |idx: usize| -> [f64; 5] {
        let lab = frame.lab()[idx];
        [lab[0], lab[1], lab[2], (idx % w) as f64, (idx / w) as f64]
    };
    let dist = |c: &[f64; 5], p: &[f64; 5]| -> f64 {
        let dc = (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2) + (c[2] - p[2]).powi(2);
        let ds = (c[3] - p[3]).powi(2) + (c[4] - p[4]).powi(2);
        dc + ds * spatial
    };

    let mut centers: Vec<[f64; 5]> = seeds.iter().map(|&i| point(i)).collect();
    let mut labels = vec![usize::MAX; w * h];
    let mut best_d = vec![f64::INFINITY; w * h];
    let reach = step.ceil() as isize;

    for _ in 0..params.iterations.max(1) {
        for &i in &masked {
            labels[i] = usize::MAX;
            best_d[i] = f64::INFINITY;
        }
        for (ci, c) in centers.iter().enumerate() {
            let (cx, cy) = (c[3].round() as isize, c[4].round() as isize);
            let ya = (cy - reach).max(0) as usize;
            let yb = ((cy + reach) as usize).min(h - 1);
            let xa = (cx - reach).max(0) as usize;
            let xb = ((cx + reach) as usize).min(w - 1);
            for y in ya..=yb {
                for x in xa..=xb {
                    let idx = y * w + x;
                    if !mask[idx] {
                        continue;
                    }
                    let d = dist(c, &point(idx));
                    if d < best_d[idx] {
                        best_d[idx] = d;
                        labels[idx] = ci;
                    }
                }
            }
        }
        // pixels outside every search window go to the globally nearest center
        for &i in &masked {
            if labels[i] == usize::MAX {
                let p = point(i);
                let (ci, _) = centers
                    .iter()
                    .enumerate()
                    .map(|(ci, c)| (ci, dist(c, &p)))
                    .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
                labels[i] = ci;
            }
        }
        let mut sums = vec![[0.0f64; 5]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for &i in &masked {
            let p = point(i);
            let s = &mut sums[labels[i]];
            for k in 0..5 {
                s[k] += p[k];
            }
            counts[labels[i]] += 1;
        }
        for (c, (s, &n)) in centers.iter_mut().zip(sums.iter().zip(&counts)) {
            if n > 0 {
                *c = s.map(|v| v / n as f64);
            }
        }
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); centers.len()];
    for &i in &masked {
        members[labels[i]].push(i);
    }
    Ok(members
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|m| build_superpixel(frame, region, m))
        .collect())
}

fn build_superpixel(frame: &Frame, region: Region, members: Vec<usize>) -> Superpixel {
    let w = frame.width();
    let n = members.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    let mut feat = [0.0; FEATURE_DIM];
    for &i in &members {
        let (x, y) = (i % w, i / w);
        sx += x as f64;
        sy += y as f64;
        let f = pixel_feature(frame, x, y);
        for k in 0..FEATURE_DIM {
            feat[k] += f.0[k];
        }
    }
    Superpixel {
        region,
        members,
        centroid: (sx / n, sy / n),
        mean_feature: FeatureVector(feat.map(|v| (v / n).clamp(0.0, 1.0))),
    }
}

/// Reconstruction basis for one unknown pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    pub region: Region,
    pub atoms: Vec<FeatureVector>,
    /// Index of each atom's superpixel in the list it was drawn from.
    pub sources: Vec<usize>,
}

impl Dictionary {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

pub const DEFAULT_MIN_ATOMS: usize = 3;

/// Indices of superpixels whose centroid lies within `radius` of `pixel`, doubling
/// the radius until `min_atoms` are found or every superpixel is included.
pub fn select_atoms(pixel: (usize, usize), superpixels: &[Superpixel], radius: f64, min_atoms: usize) -> Vec<usize> {
    let (px, py) = (pixel.0 as f64, pixel.1 as f64);
    let dist_sq: Vec<f64> = superpixels
        .iter()
        .map(|s| (s.centroid.0 - px).powi(2) + (s.centroid.1 - py).powi(2))
        .collect();
    let wanted = min_atoms.max(1).min(superpixels.len());
    let mut r = radius.max(f64::MIN_POSITIVE);
    loop {
        let r_sq = r * r;
        let chosen: Vec<usize> = (0..superpixels.len()).filter(|&i| dist_sq[i] <= r_sq).collect();
        if chosen.len() >= wanted {
            return chosen;
        }
        r *= 2.0;
    }
}

fn assemble(region: Region, pixel: (usize, usize), superpixels: &[Superpixel], radius: f64, min_atoms: usize) -> Dictionary {
    let sources = select_atoms(pixel, superpixels, radius, min_atoms);
    Dictionary {
        region,
        atoms: sources.iter().map(|&i| superpixels[i].mean_feature).collect(),
        sources,
    }
}

/// Foreground and background dictionaries for `pixel`. Both superpixel lists must be non-empty.
pub fn build_dictionaries(
    pixel: (usize, usize),
    superpixels_f: &[Superpixel],
    superpixels_b: &[Superpixel],
    radius: f64,
    min_atoms: usize,
) -> (Dictionary, Dictionary) {
    assert!(
        !superpixels_f.is_empty() && !superpixels_b.is_empty(),
        "dictionaries need superpixels in both known regions"
    );
    (
        assemble(Region::Foreground, pixel, superpixels_f, radius, min_atoms),
        assemble(Region::Background, pixel, superpixels_b, radius, min_atoms),
    )
}
